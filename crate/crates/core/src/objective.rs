//! Utility, error-probability and reliability formulas, their gradients,
//! and the log-domain transform that keeps the problem concave.
//!
//! Per-source utility: `W = γφ·U_rate(x) + γ(1−φ)·U_rel(R) − (1−γ)·(ϖ/(β−1))·z^{β−1}`
//! with normalized α-fair rate and reliability terms mapping their box
//! domains onto [0, 1]. The log transform substitutes `x = exp(x′)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{DerivedSets, NetworkInstance, SensorId};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parameter document parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ParamError {
    ParamError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Error model and reliability
// ---------------------------------------------------------------------------

/// Per-link error probability of a code rate: `E(r) = ½·exp(−κ(1−r))`,
/// increasing and convex on [0, 1].
pub fn error_prob(r: f64, kappa: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&r),
        "code rate {r} outside [0, 1]"
    );
    0.5 * (-kappa * (1.0 - r)).exp()
}

/// dE/dr = (κ/2)·exp(−κ(1−r)).
pub fn error_prob_deriv(r: f64, kappa: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&r),
        "code rate {r} outside [0, 1]"
    );
    0.5 * kappa * (-kappa * (1.0 - r)).exp()
}

/// End-to-end reliability of a route in the linearized form
/// `1 − Σ_l E(r_l)` used throughout the optimization.
pub fn flow_reliability(code_rates: &[f64], kappa: f64) -> f64 {
    assert!(!code_rates.is_empty(), "route has no links");
    1.0 - code_rates.iter().map(|&r| error_prob(r, kappa)).sum::<f64>()
}

/// Exact product form `Π_l (1 − E(r_l))`, kept for diagnostics; close to
/// [`flow_reliability`] whenever the per-link error probabilities are small.
pub fn flow_reliability_exact(code_rates: &[f64], kappa: f64) -> f64 {
    assert!(!code_rates.is_empty(), "route has no links");
    code_rates
        .iter()
        .map(|&r| 1.0 - error_prob(r, kappa))
        .product()
}

/// Lifetime utility `V^β`: `log T` at β=1, else `T^{1−β}/(1−β)`;
/// strictly increasing in T for every β ≥ 1.
pub fn lifetime_utility_beta(t: f64, beta: f64) -> f64 {
    assert!(t > 0.0, "lifetime must be positive");
    assert!(beta >= 1.0, "beta must be at least 1");
    if beta == 1.0 {
        t.ln()
    } else {
        t.powf(1.0 - beta) / (1.0 - beta)
    }
}

// ---------------------------------------------------------------------------
// Tradeoff parameters
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(untagged)]
enum PerSourceDoc {
    Scalar(f64),
    Map(BTreeMap<String, f64>),
}

fn default_gamma() -> PerSourceDoc {
    PerSourceDoc::Scalar(0.8)
}
fn default_phi() -> PerSourceDoc {
    PerSourceDoc::Scalar(0.8)
}
fn default_varpi() -> f64 {
    3.2768e32
}
fn default_alpha() -> f64 {
    1.1
}
fn default_beta() -> f64 {
    9.0
}
fn default_kappa() -> f64 {
    20.0
}
fn default_x_min() -> f64 {
    0.1
}
fn default_x_max() -> f64 {
    2.0
}
fn default_r_min() -> f64 {
    0.9
}
fn default_r_max() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    #[serde(default = "default_gamma")]
    gamma: PerSourceDoc,
    #[serde(default = "default_phi")]
    phi: PerSourceDoc,
    #[serde(default = "default_varpi")]
    varpi: f64,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default = "default_kappa")]
    kappa: f64,
    #[serde(default = "default_x_min")]
    x_min_mbps: f64,
    #[serde(default = "default_x_max")]
    x_max_mbps: f64,
    #[serde(default = "default_r_min")]
    r_min: f64,
    #[serde(default = "default_r_max")]
    r_max: f64,
}

const MBPS: f64 = 1.0e6;

/// Weights, exponents and box bounds of the tradeoff objective, resolved
/// per source. Rates are carried in bit/s internally.
#[derive(Debug, Clone)]
pub struct TradeoffParams {
    pub gamma: Vec<f64>,
    pub phi: Vec<f64>,
    pub varpi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub rel_min: f64,
    pub rel_max: f64,
}

impl TradeoffParams {
    /// Uniform weights with the shipped defaults for everything else.
    pub fn uniform(sensor_count: usize, gamma: f64, phi: f64) -> Self {
        TradeoffParams {
            gamma: vec![gamma; sensor_count],
            phi: vec![phi; sensor_count],
            varpi: default_varpi(),
            alpha: default_alpha(),
            beta: default_beta(),
            kappa: default_kappa(),
            x_min: default_x_min() * MBPS,
            x_max: default_x_max() * MBPS,
            rel_min: default_r_min(),
            rel_max: default_r_max(),
        }
    }

    pub fn from_toml_str(text: &str, inst: &NetworkInstance) -> Result<Self, ParamError> {
        let doc: ParamsDoc = toml::from_str(text)?;
        let resolve = |field: &str, doc: &PerSourceDoc| -> Result<Vec<f64>, ParamError> {
            match doc {
                PerSourceDoc::Scalar(v) => Ok(vec![*v; inst.sensor_count()]),
                PerSourceDoc::Map(map) => {
                    for key in map.keys() {
                        if inst.sensor_by_id(key).is_none() {
                            return Err(invalid(
                                format!("{field}.{key}"),
                                "not a sensor node of the instance",
                            ));
                        }
                    }
                    (0..inst.sensor_count())
                        .map(|i| {
                            let id = &inst.sensor_node(SensorId(i)).id;
                            map.get(id).copied().ok_or_else(|| {
                                invalid(format!("{field}.{id}"), "missing per-source value")
                            })
                        })
                        .collect()
                }
            }
        };
        let params = TradeoffParams {
            gamma: resolve("gamma", &doc.gamma)?,
            phi: resolve("phi", &doc.phi)?,
            varpi: doc.varpi,
            alpha: doc.alpha,
            beta: doc.beta,
            kappa: doc.kappa,
            x_min: doc.x_min_mbps * MBPS,
            x_max: doc.x_max_mbps * MBPS,
            rel_min: doc.r_min,
            rel_max: doc.r_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_path(path: impl AsRef<Path>, inst: &NetworkInstance) -> Result<Self, ParamError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ParamError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, inst)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (i, &g) in self.gamma.iter().enumerate() {
            if !(0.0..=1.0).contains(&g) {
                return Err(invalid(format!("gamma[{i}]"), "must lie in [0, 1]"));
            }
        }
        for (i, &p) in self.phi.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("phi[{i}]"), "must lie in [0, 1]"));
            }
        }
        if self.varpi <= 0.0 {
            return Err(invalid("varpi", "must be strictly positive"));
        }
        if self.alpha <= 0.0 || self.alpha == 1.0 {
            return Err(invalid("alpha", "must be positive and different from 1"));
        }
        if self.beta <= 1.0 {
            return Err(invalid("beta", "must exceed 1"));
        }
        if self.kappa <= 0.0 {
            return Err(invalid("kappa", "must be strictly positive"));
        }
        if !(self.x_min > 0.0 && self.x_min < self.x_max) {
            return Err(invalid("x_min_mbps/x_max_mbps", "need 0 < x_min < x_max"));
        }
        if !(0.0 <= self.rel_min && self.rel_min < self.rel_max && self.rel_max <= 1.0) {
            return Err(invalid("r_min/r_max", "need 0 <= r_min < r_max <= 1"));
        }
        Ok(())
    }

    /// Solvers additionally need the log-domain objective concave: α > 1
    /// (the transformed α-fair term) and β ≥ 2 (the z power).
    pub fn validate_for_solver(&self) -> Result<(), ParamError> {
        self.validate()?;
        if self.alpha <= 1.0 {
            return Err(invalid(
                "alpha",
                "must exceed 1 for the log-domain transform to stay concave",
            ));
        }
        if self.beta < 2.0 {
            return Err(invalid(
                "beta",
                "must be at least 2 for a concave lifetime term",
            ));
        }
        Ok(())
    }

    pub fn sensor_count(&self) -> usize {
        self.gamma.len()
    }

    /// Copy with uniform weights replaced; used by weight sweeps.
    pub fn with_uniform_weights(&self, gamma: f64, phi: f64) -> Self {
        let mut p = self.clone();
        p.gamma = vec![gamma; p.gamma.len()];
        p.phi = vec![phi; p.phi.len()];
        p
    }

    /// Apply a `key=value` override from the CLI. Scalar keys mirror the
    /// parameter document; `gamma`/`phi` set uniform weights.
    pub fn set_scalar(&mut self, key: &str, value: f64) -> Result<(), ParamError> {
        match key {
            "gamma" => self.gamma.iter_mut().for_each(|g| *g = value),
            "phi" => self.phi.iter_mut().for_each(|p| *p = value),
            "varpi" => self.varpi = value,
            "alpha" => self.alpha = value,
            "beta" => self.beta = value,
            "kappa" => self.kappa = value,
            "x_min_mbps" => self.x_min = value * MBPS,
            "x_max_mbps" => self.x_max = value * MBPS,
            "r_min" => self.rel_min = value,
            "r_max" => self.rel_max = value,
            _ => return Err(invalid(key.to_string(), "unknown parameter")),
        }
        self.validate()
    }

    /// Per-source view with the normalization constants precomputed.
    pub fn source_objective(&self, s: SensorId) -> SourceObjective {
        let a1 = 1.0 - self.alpha;
        SourceObjective {
            gamma: self.gamma[s.0],
            phi: self.phi[s.0],
            varpi: self.varpi,
            alpha: self.alpha,
            beta: self.beta,
            x_min: self.x_min,
            x_max: self.x_max,
            rel_min: self.rel_min,
            rel_max: self.rel_max,
            x_min_pow: self.x_min.powf(a1),
            dx: self.x_max.powf(a1) - self.x_min.powf(a1),
            rel_min_pow: self.rel_min.powf(a1),
            drel: self.rel_max.powf(a1) - self.rel_min.powf(a1),
        }
    }

    /// Total utility Σ_s W(x_s, R_s, z_s).
    pub fn total_utility(&self, x: &[f64], rel: &[f64], z: &[f64]) -> f64 {
        (0..self.sensor_count())
            .map(|i| {
                self.source_objective(SensorId(i))
                    .combined(x[i], rel[i], z[i])
            })
            .sum()
    }
}

/// Per-node normalized-power box `[z_lo, z_hi] = [p_s(all x_min), p_s(all x_max)]/e_s`,
/// the only dissipation levels attainable under the energy equality.
pub fn z_bounds(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
) -> Vec<(f64, f64)> {
    (0..inst.sensor_count())
        .map(|i| {
            let s = SensorId(i);
            let coeff_sum: f64 = sets.power_coeff[i].iter().map(|&(_, c)| c).sum();
            let e = inst.sensor_energy(s);
            (params.x_min * coeff_sum / e, params.x_max * coeff_sum / e)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Per-source objective
// ---------------------------------------------------------------------------

/// One source's weights and normalization constants.
#[derive(Debug, Clone, Copy)]
pub struct SourceObjective {
    pub gamma: f64,
    pub phi: f64,
    pub varpi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub rel_min: f64,
    pub rel_max: f64,
    x_min_pow: f64,
    dx: f64,
    rel_min_pow: f64,
    drel: f64,
}

impl SourceObjective {
    /// Normalized α-fair rate utility, mapping [x_min, x_max] onto [0, 1].
    pub fn rate_utility(&self, x: f64) -> f64 {
        assert!(
            x >= self.x_min * (1.0 - 1e-12) && x <= self.x_max * (1.0 + 1e-12),
            "rate {x} outside box"
        );
        (x.powf(1.0 - self.alpha) - self.x_min_pow) / self.dx
    }

    pub fn rate_utility_from_log(&self, x_log: f64) -> f64 {
        (((1.0 - self.alpha) * x_log).exp() - self.x_min_pow) / self.dx
    }

    /// d/dx′ of the rate utility in the log domain.
    pub fn rate_utility_dlog(&self, x_log: f64) -> f64 {
        (1.0 - self.alpha) * ((1.0 - self.alpha) * x_log).exp() / self.dx
    }

    /// Normalized reliability utility, mapping [rel_min, rel_max] onto [0, 1].
    pub fn reliability_utility(&self, rel: f64) -> f64 {
        assert!(
            rel >= self.rel_min * (1.0 - 1e-12) && rel <= self.rel_max * (1.0 + 1e-12),
            "reliability {rel} outside box"
        );
        (rel.powf(1.0 - self.alpha) - self.rel_min_pow) / self.drel
    }

    /// dU_rel/dR.
    pub fn reliability_utility_deriv(&self, rel: f64) -> f64 {
        (1.0 - self.alpha) * rel.powf(-self.alpha) / self.drel
    }

    /// Reliability utility extended below `rel_min` by its tangent there,
    /// so centralized solvers keep a globally concave objective while the
    /// extension never matters at feasible optima.
    pub fn reliability_utility_ext(&self, rel: f64) -> f64 {
        if rel >= self.rel_min {
            self.reliability_utility(rel.min(self.rel_max))
        } else {
            self.reliability_utility_deriv(self.rel_min) * (rel - self.rel_min)
        }
    }

    pub fn reliability_utility_ext_deriv(&self, rel: f64) -> f64 {
        self.reliability_utility_deriv(rel.clamp(self.rel_min, self.rel_max))
    }

    /// Lifetime penalty `(ϖ/(β−1))·z^{β−1}` of the normalized power z = 1/T.
    pub fn lifetime_penalty(&self, z: f64) -> f64 {
        assert!(z > 0.0, "normalized power must be positive");
        self.varpi / (self.beta - 1.0) * z.powf(self.beta - 1.0)
    }

    /// d/dz of the lifetime penalty: `ϖ·z^{β−2}`.
    pub fn lifetime_penalty_deriv(&self, z: f64) -> f64 {
        self.varpi * z.powf(self.beta - 2.0)
    }

    /// W(x, R, z) = γφ·U_rate + γ(1−φ)·U_rel − (1−γ)·penalty.
    pub fn combined(&self, x: f64, rel: f64, z: f64) -> f64 {
        self.gamma * self.phi * self.rate_utility(x)
            + self.gamma * (1.0 - self.phi) * self.reliability_utility(rel)
            - (1.0 - self.gamma) * self.lifetime_penalty(z)
    }

    /// W′(x′, R, z) = W(e^{x′}, R, z).
    pub fn combined_log(&self, x_log: f64, rel: f64, z: f64) -> f64 {
        self.gamma * self.phi * self.rate_utility_from_log(x_log)
            + self.gamma * (1.0 - self.phi) * self.reliability_utility(rel)
            - (1.0 - self.gamma) * self.lifetime_penalty(z)
    }

    /// Closed-form partials (∂W′/∂x′, ∂W′/∂R, ∂W′/∂z).
    pub fn gradient_log(&self, x_log: f64, rel: f64, z: f64) -> (f64, f64, f64) {
        (
            self.gamma * self.phi * self.rate_utility_dlog(x_log),
            self.gamma * (1.0 - self.phi) * self.reliability_utility_deriv(rel),
            -(1.0 - self.gamma) * self.lifetime_penalty_deriv(z),
        )
    }
}

// ---------------------------------------------------------------------------
// Primal state
// ---------------------------------------------------------------------------

/// Primal variables of the convex problem: per-source rate (plain and
/// log-domain), reliability, normalized power, and per-(link, source) code
/// rates and capacity allocations.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalState {
    pub x: Vec<f64>,
    pub x_log: Vec<f64>,
    pub reliability: Vec<f64>,
    pub z: Vec<f64>,
    /// Per pair (see `DerivedSets::pairs`).
    pub code_rate: Vec<f64>,
    /// Per pair, bit/s.
    pub alloc: Vec<f64>,
}

impl PrimalState {
    /// Box-midpoint state: x′ at the middle of its log box (so x at the
    /// geometric mean), reliability and z mid-box, code rates at 1/2,
    /// allocations at an equal split of each link budget.
    pub fn box_midpoint(
        inst: &NetworkInstance,
        sets: &DerivedSets,
        params: &TradeoffParams,
    ) -> Self {
        let zb = z_bounds(inst, sets, params);
        let x_log: Vec<f64> = (0..inst.sensor_count())
            .map(|_| 0.5 * (params.x_min.ln() + params.x_max.ln()))
            .collect();
        let x: Vec<f64> = x_log.iter().map(|&v| v.exp()).collect();
        let reliability = vec![0.5 * (params.rel_min + params.rel_max); inst.sensor_count()];
        let z = zb.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        let mut alloc = vec![0.0; sets.pair_count()];
        for (li, range) in sets.link_pair_range.iter().enumerate() {
            let n = range.len().max(1) as f64;
            for p in range.clone() {
                alloc[p] = inst.links[li].capacity_bps / n;
            }
        }
        PrimalState {
            x,
            x_log,
            reliability,
            z,
            code_rate: vec![0.5; sets.pair_count()],
            alloc,
        }
    }

    /// x and x_log must describe the same rates.
    pub fn check_consistent(&self) -> bool {
        self.x
            .iter()
            .zip(&self.x_log)
            .all(|(&x, &xl)| (x - xl.exp()).abs() <= 1e-12 * x.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    fn demo_obj(gamma: f64, phi: f64) -> SourceObjective {
        TradeoffParams::uniform(1, gamma, phi).source_objective(SensorId(0))
    }

    #[test]
    fn error_prob_values() {
        assert_eq!(error_prob(1.0, 20.0), 0.5);
        assert_eq!(error_prob(1.0, 7.0), 0.5);
        assert!(close(error_prob(0.8, 20.0), 9.157_819_444_367_09e-3, 1e-12));
        assert!(close(error_prob(0.9, 20.0), 6.766764161830635e-2, 1e-12));
        assert!(close(error_prob_deriv(0.8, 20.0), 20.0 * 9.157_819_444_367_09e-3, 1e-12));
    }

    #[test]
    #[should_panic(expected = "outside [0, 1]")]
    fn error_prob_rejects_out_of_range() {
        error_prob(1.2, 20.0);
    }

    #[test]
    fn error_prob_increasing_and_convex() {
        let k = 20.0;
        let n = 400;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        for w in grid.windows(3) {
            assert!(error_prob_deriv(w[1], k) > 0.0);
            let second = error_prob(w[0], k) - 2.0 * error_prob(w[1], k) + error_prob(w[2], k);
            assert!(second >= -1e-15);
        }
    }

    #[test]
    fn flow_reliability_forms() {
        assert!(close(flow_reliability(&[1.0], 20.0), 0.5, 1e-15));
        // three links with E = 0.02 each: r = 1 + ln(0.04)/kappa
        let k = 20.0;
        let r = 1.0 + (0.04f64).ln() / k;
        let rs = [r, r, r];
        assert!(close(flow_reliability(&rs, k), 0.94, 1e-12));
        assert!(close(flow_reliability_exact(&rs, k), 0.941192, 1e-12));
        // vanishing error limit
        let rs = [0.0, 0.0];
        assert!(flow_reliability(&rs, 1e4) > 1.0 - 1e-12);
    }

    #[test]
    fn linearized_reliability_error_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = 20.0;
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let rs: Vec<f64> = (0..n)
                .map(|_| 1.0 + (rng.gen_range(1e-4..0.05f64) * 2.0).ln() / k)
                .collect();
            let es: Vec<f64> = rs.iter().map(|&r| error_prob(r, k)).collect();
            let mut cross = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    cross += es[i] * es[j];
                }
            }
            let diff =
                (flow_reliability_exact(&rs, k) - flow_reliability(&rs, k)).abs();
            assert!(diff <= cross + 1e-15);
        }
    }

    #[test]
    fn rate_utility_endpoints_and_value() {
        let obj = demo_obj(0.8, 0.8);
        assert!(close(obj.rate_utility(obj.x_min), 0.0, 1e-12));
        assert!((obj.rate_utility(obj.x_min)).abs() < 1e-12);
        assert!(close(obj.rate_utility(obj.x_max), 1.0, 1e-12));
        assert!(close(obj.rate_utility(1.0e6), 0.7945119177355883, 1e-12));
    }

    #[test]
    fn utilities_map_box_to_unit_interval_for_any_alpha() {
        for alpha in [0.3, 0.5, 1.1, 2.0, 3.0] {
            let mut params = TradeoffParams::uniform(1, 0.8, 0.8);
            params.alpha = alpha;
            let obj = params.source_objective(SensorId(0));
            let mut prev = -1e-12;
            for i in 0..=200 {
                let x = obj.x_min + (obj.x_max - obj.x_min) * i as f64 / 200.0;
                let u = obj.rate_utility(x);
                assert!((-1e-12..=1.0 + 1e-12).contains(&u), "alpha {alpha}: {u}");
                assert!(u >= prev - 1e-12);
                prev = u;
            }
            let mut prev = -1e-12;
            for i in 0..=200 {
                let r = obj.rel_min + (obj.rel_max - obj.rel_min) * i as f64 / 200.0;
                let u = obj.reliability_utility(r);
                assert!((-1e-12..=1.0 + 1e-12).contains(&u));
                assert!(u >= prev - 1e-12);
                prev = u;
            }
        }
    }

    #[test]
    fn log_domain_rate_utility_is_concave() {
        let obj = demo_obj(0.8, 0.8);
        let lo = obj.x_min.ln();
        let hi = obj.x_max.ln();
        let n = 1000;
        let h = (hi - lo) / n as f64;
        for i in 1..n {
            let s = lo + i as f64 * h;
            let second = obj.rate_utility_from_log(s - h) - 2.0 * obj.rate_utility_from_log(s)
                + obj.rate_utility_from_log(s + h);
            assert!(second <= 1e-9, "second difference {second} at {s}");
        }
    }

    #[test]
    fn lifetime_penalty_value() {
        let obj = demo_obj(0.8, 0.8);
        assert!(close(obj.lifetime_penalty(1e-4), 0.4096, 1e-12));
    }

    #[test]
    fn lifetime_utility_values_and_monotonicity() {
        assert_eq!(lifetime_utility_beta(1.0, 1.0), 0.0);
        assert!(close(lifetime_utility_beta(2.0, 9.0), -4.8828125e-4, 1e-15));
        for beta in [1.0, 2.0, 5.0, 9.0] {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..50 {
                let v = lifetime_utility_beta(i as f64 * 100.0, beta);
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn combined_objective_weighting() {
        let x = 1.0e6;
        let rel = 0.95;
        let z = 1e-4;
        // gamma=1, phi=1: rate utility alone
        let obj = demo_obj(1.0, 1.0);
        assert!(close(obj.combined(x, rel, z), obj.rate_utility(x), 1e-12));
        // gamma=0: lifetime penalty alone
        let obj = demo_obj(0.0, 0.8);
        assert!(close(obj.combined(x, rel, z), -obj.lifetime_penalty(z), 1e-12));
        // gamma=phi=0.8: weighted composition of the frozen component values
        let obj = demo_obj(0.8, 0.8);
        let want = 0.64 * 0.7945119177355883 + 0.16 * 0.5144800070075482 - 0.2 * 0.4096;
        assert!(close(obj.combined(x, rel, z), want, 1e-12));
        assert!(close(obj.combined(x, rel, z), 0.5088844284719842, 1e-12));
    }

    #[test]
    fn log_form_matches_plain_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let obj = demo_obj(0.7, 0.4);
        for _ in 0..500 {
            let x = rng.gen_range(obj.x_min..obj.x_max);
            let rel = rng.gen_range(obj.rel_min..obj.rel_max);
            let z = rng.gen_range(1e-5..1e-3);
            let a = obj.combined(x, rel, z);
            let b = obj.combined_log(x.ln(), rel, z);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(6, 0.8, 0.8);
        let zb = z_bounds(&inst, &sets, &params);
        let obj = demo_obj(0.8, 0.8);
        let (xl_lo, xl_hi) = (obj.x_min.ln(), obj.x_max.ln());
        for _ in 0..200 {
            let (z_lo, z_hi) = zb[rng.gen_range(0..zb.len())];
            let xl = rng.gen_range(xl_lo + 0.1..xl_hi - 0.1);
            let rel = rng.gen_range(0.905..0.995);
            let z = rng.gen_range(z_lo * 1.01..z_hi * 0.99);
            let (gx, gr, gz) = obj.gradient_log(xl, rel, z);
            let hx = 1e-6 * (xl_hi - xl_lo);
            let fd_x =
                (obj.combined_log(xl + hx, rel, z) - obj.combined_log(xl - hx, rel, z)) / (2.0 * hx);
            let hr = 1e-6 * (obj.rel_max - obj.rel_min);
            let fd_r =
                (obj.combined_log(xl, rel + hr, z) - obj.combined_log(xl, rel - hr, z)) / (2.0 * hr);
            let hz = 1e-6 * (z_hi - z_lo);
            let fd_z =
                (obj.combined_log(xl, rel, z + hz) - obj.combined_log(xl, rel, z - hz)) / (2.0 * hz);
            let err = ((fd_x - gx).powi(2) + (fd_r - gr).powi(2) + (fd_z - gz).powi(2)).sqrt();
            let norm = (gx * gx + gr * gr + gz * gz).sqrt();
            assert!(
                err <= 1e-5 * norm,
                "gradient mismatch: ({fd_x},{fd_r},{fd_z}) vs ({gx},{gr},{gz})"
            );
        }
    }

    use crate::model::NetworkInstance;

    #[test]
    fn degenerate_weight_gradients() {
        let obj = demo_obj(1.0, 1.0);
        let (_, gr, gz) = obj.gradient_log(13.0, 0.95, 1e-4);
        assert_eq!(gr, 0.0);
        assert_eq!(gz, 0.0);
    }

    #[test]
    fn loads_param_document() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let params = TradeoffParams::from_toml_str(instances::PARAMS_DEFAULT, &inst).unwrap();
        assert_eq!(params.gamma, vec![0.8; 6]);
        assert_eq!(params.x_max, 2.0e6);
        assert_eq!(params.kappa, 20.0);
        params.validate_for_solver().unwrap();
    }

    #[test]
    fn loads_per_source_weights() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let text = r#"
            phi = 0.5
            [gamma]
            n1 = 0.1
            n2 = 0.2
            n3 = 0.3
            n4 = 0.4
            n5 = 0.5
            n6 = 0.6
        "#;
        let params = TradeoffParams::from_toml_str(text, &inst).unwrap();
        assert_eq!(params.gamma, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(params.phi, vec![0.5; 6]);
    }

    #[test]
    fn rejects_bad_params() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        for (text, needle) in [
            ("gamma = 1.5", "gamma"),
            ("alpha = 1.0", "alpha"),
            ("beta = 1.0", "beta"),
            ("x_min_mbps = 3.0", "x_min"),
            ("r_min = 1.0", "r_min"),
            ("unknown_knob = 1.0", "unknown"),
        ] {
            let err = TradeoffParams::from_toml_str(text, &inst).unwrap_err();
            assert!(err.to_string().contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn midpoint_state_is_consistent() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(6, 0.8, 0.8);
        let state = PrimalState::box_midpoint(&inst, &sets, &params);
        assert!(state.check_consistent());
        let zb = z_bounds(&inst, &sets, &params);
        for (i, &(lo, hi)) in zb.iter().enumerate() {
            assert!(lo > 0.0 && lo < hi);
            assert!(state.z[i] > lo && state.z[i] < hi);
        }
    }
}
