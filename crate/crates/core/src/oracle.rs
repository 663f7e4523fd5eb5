//! Centralized reference solver for the convex tradeoff problem, used to
//! verify the distributed algorithm: ground-truth optima, duality-gap
//! measurement, and a brute-force max-min lifetime comparison on tiny
//! instances.
//!
//! The solver is deliberately algorithm-independent from the dual
//! decomposition: it eliminates the auxiliary variables (z via the energy
//! equality, R via the reliability bound, c via the aggregate capacity
//! form) and runs projected-gradient ascent over (x′, r) inside an
//! augmented-Lagrangian loop on the per-link capacity constraints, so
//! agreement between the two solvers is evidence rather than tautology.

use thiserror::Error;

use crate::model::{DerivedSets, NetworkInstance, SensorId};
use crate::objective::{
    error_prob, error_prob_deriv, z_bounds, ParamError, PrimalState, SourceObjective,
    TradeoffParams,
};
use crate::sdd::DualState;
use crate::subproblems::{
    node_lagrangian_value, solve_code_rate, solve_link_allocation, solve_node_subproblem,
    NodeSubproblemInput, EPS_CODE_RATE,
};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("infeasible instance: {report}")]
    Infeasible { report: String },
    #[error("primal point infeasible: {report}")]
    InfeasiblePrimal { report: String },
    #[error("instance too large for grid search: {sources} sources (limit {limit})")]
    TooLarge { sources: usize, limit: usize },
}

/// Solution of the centralized solver with multiplier estimates and
/// weak-duality certificate.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub primal: PrimalState,
    /// Total utility at the restored (feasible) primal point.
    pub value: f64,
    /// Dual function value at the multiplier estimates; upper bound on
    /// the optimum by weak duality.
    pub dual_bound: f64,
    /// Per-pair congestion multiplier estimates.
    pub lambda: Vec<f64>,
    /// Per-link aggregate capacity multipliers (normalized constraint).
    pub sigma: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub final_pg_norm: f64,
    /// Max normalized capacity violation before restoration.
    pub max_violation: f64,
    pub stalled: bool,
}

// ---------------------------------------------------------------------------
// Problem view after elimination
// ---------------------------------------------------------------------------

struct Eliminated<'a> {
    inst: &'a NetworkInstance,
    sets: &'a DerivedSets,
    params: &'a TradeoffParams,
    objectives: Vec<SourceObjective>,
    /// For each source j: the sensors that carry its flow with the J/bit
    /// coefficient (itself via the first hop, plus each relay).
    carriers_of: Vec<Vec<(usize, f64)>>,
    energies: Vec<f64>,
    x_lo: f64,
    x_hi: f64,
}

impl<'a> Eliminated<'a> {
    fn new(inst: &'a NetworkInstance, sets: &'a DerivedSets, params: &'a TradeoffParams) -> Self {
        let ns = inst.sensor_count();
        let mut carriers_of: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ns];
        for (s, coeffs) in sets.power_coeff.iter().enumerate() {
            for &(src, coeff) in coeffs {
                carriers_of[src.0].push((s, coeff));
            }
        }
        Eliminated {
            inst,
            sets,
            params,
            objectives: (0..ns).map(|i| params.source_objective(SensorId(i))).collect(),
            carriers_of,
            energies: (0..ns).map(|i| inst.sensor_energy(SensorId(i))).collect(),
            x_lo: params.x_min.ln(),
            x_hi: params.x_max.ln(),
        }
    }

    fn rates(&self, x_log: &[f64]) -> Vec<f64> {
        x_log.iter().map(|&v| v.exp()).collect()
    }

    fn z_of(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|s| self.sets.node_power_from_coeff(x, SensorId(s)) / self.energies[s])
            .collect()
    }

    /// 1 − Σ E(r) along the route of s, before clipping at rel_max.
    fn route_reliability(&self, r: &[f64], s: usize) -> f64 {
        1.0 - self.sets.route_pairs[s]
            .iter()
            .map(|&p| error_prob(r[p], self.params.kappa))
            .sum::<f64>()
    }

    fn objective(&self, x_log: &[f64], r: &[f64]) -> f64 {
        let x = self.rates(x_log);
        let z = self.z_of(&x);
        (0..x.len())
            .map(|s| {
                let obj = &self.objectives[s];
                let rel = self.route_reliability(r, s).min(obj.rel_max);
                obj.gamma * obj.phi * obj.rate_utility_from_log(x_log[s])
                    + obj.gamma * (1.0 - obj.phi) * obj.reliability_utility_ext(rel)
                    - (1.0 - obj.gamma) * obj.lifetime_penalty(z[s])
            })
            .sum()
    }

    fn objective_gradient(&self, x_log: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x = self.rates(x_log);
        let z = self.z_of(&x);
        let gx: Vec<f64> = (0..x.len())
            .map(|j| {
                let obj = &self.objectives[j];
                let mut g = obj.gamma * obj.phi * obj.rate_utility_dlog(x_log[j]);
                for &(s, coeff) in &self.carriers_of[j] {
                    let o = &self.objectives[s];
                    g -= (1.0 - o.gamma) * o.lifetime_penalty_deriv(z[s]) * coeff * x[j]
                        / self.energies[s];
                }
                g
            })
            .collect();
        let mut gr = vec![0.0; r.len()];
        for s in 0..x.len() {
            let obj = &self.objectives[s];
            let rel = self.route_reliability(r, s);
            if rel >= obj.rel_max {
                continue;
            }
            let w = obj.gamma * (1.0 - obj.phi) * obj.reliability_utility_ext_deriv(rel);
            for &p in &self.sets.route_pairs[s] {
                gr[p] = -w * error_prob_deriv(r[p], self.params.kappa);
            }
        }
        (gx, gr)
    }

    /// Normalized capacity constraint of link l: load/C − 1 ≤ 0.
    fn constraint(&self, l: usize, x: &[f64], r: &[f64]) -> f64 {
        let cap = self.inst.links[l].capacity_bps;
        self.sets.link_pair_range[l]
            .clone()
            .map(|p| {
                let (_, s) = self.sets.pairs[p];
                x[s.0] / r[p]
            })
            .sum::<f64>()
            / cap
            - 1.0
    }

    /// Per-hop error budget of source s: the reliability box is nonempty
    /// only while Σ E(r) ≤ 1 − rel_min.
    fn rel_budget(&self) -> f64 {
        1.0 - self.params.rel_min
    }

    /// Normalized reliability-budget constraint of source s:
    /// ΣE/(1 − rel_min) − 1 ≤ 0.
    fn rel_constraint(&self, s: usize, r: &[f64]) -> f64 {
        (1.0 - self.route_reliability(r, s)) / self.rel_budget() - 1.0
    }
}

// ---------------------------------------------------------------------------
// Projected-gradient + augmented-Lagrangian solve
// ---------------------------------------------------------------------------

const R_FLOOR: f64 = EPS_CODE_RATE;
const INNER_CAP: usize = 4000;
const OUTER_CAP: usize = 50;

fn clamp_state(prob: &Eliminated, x_log: &mut [f64], r: &mut [f64]) {
    for v in x_log.iter_mut() {
        *v = v.clamp(prob.x_lo, prob.x_hi);
    }
    for v in r.iter_mut() {
        *v = v.clamp(R_FLOOR, 1.0);
    }
}

struct AugmentedState {
    x_log: Vec<f64>,
    r: Vec<f64>,
    inner_iterations: usize,
    pg_norm: f64,
    stalled: bool,
}

fn augmented_value(
    prob: &Eliminated,
    x_log: &[f64],
    r: &[f64],
    sigma: &[f64],
    tau: &[f64],
    rho: f64,
) -> f64 {
    let x = prob.rates(x_log);
    let mut v = prob.objective(x_log, r);
    let penalty = |mult: f64, h: f64| {
        let m = (mult + rho * h).max(0.0);
        (m * m - mult * mult) / (2.0 * rho)
    };
    for l in 0..prob.inst.link_count() {
        v -= penalty(sigma[l], prob.constraint(l, &x, r));
    }
    for s in 0..prob.inst.sensor_count() {
        v -= penalty(tau[s], prob.rel_constraint(s, r));
    }
    v
}

fn augmented_gradient(
    prob: &Eliminated,
    x_log: &[f64],
    r: &[f64],
    sigma: &[f64],
    tau: &[f64],
    rho: f64,
) -> (Vec<f64>, Vec<f64>) {
    let x = prob.rates(x_log);
    let (mut gx, mut gr) = prob.objective_gradient(x_log, r);
    for l in 0..prob.inst.link_count() {
        let h = prob.constraint(l, &x, r);
        let m = (sigma[l] + rho * h).max(0.0);
        if m == 0.0 {
            continue;
        }
        let cap = prob.inst.links[l].capacity_bps;
        for p in prob.sets.link_pair_range[l].clone() {
            let (_, s) = prob.sets.pairs[p];
            gx[s.0] -= m * x[s.0] / (r[p] * cap);
            gr[p] += m * x[s.0] / (r[p] * r[p] * cap);
        }
    }
    for s in 0..prob.inst.sensor_count() {
        let m = (tau[s] + rho * prob.rel_constraint(s, r)).max(0.0);
        if m == 0.0 {
            continue;
        }
        for &p in &prob.sets.route_pairs[s] {
            gr[p] -= m * error_prob_deriv(r[p], prob.params.kappa) / prob.rel_budget();
        }
    }
    (gx, gr)
}

fn projected_gradient_ascent(
    prob: &Eliminated,
    mut x_log: Vec<f64>,
    mut r: Vec<f64>,
    sigma: &[f64],
    tau: &[f64],
    rho: f64,
    tol: f64,
) -> AugmentedState {
    let mut step = 1.0_f64;
    let mut iterations = 0;
    let mut pg_norm = f64::INFINITY;
    let mut stalled = false;
    while iterations < INNER_CAP {
        iterations += 1;
        let value = augmented_value(prob, &x_log, &r, sigma, tau, rho);
        let (gx, gr) = augmented_gradient(prob, &x_log, &r, sigma, tau, rho);

        // projected-gradient optimality measure at unit step
        pg_norm = 0.0;
        for (i, &g) in gx.iter().enumerate() {
            let moved = (x_log[i] + g).clamp(prob.x_lo, prob.x_hi) - x_log[i];
            pg_norm = pg_norm.max(moved.abs());
        }
        for (p, &g) in gr.iter().enumerate() {
            let moved = (r[p] + g).clamp(R_FLOOR, 1.0) - r[p];
            pg_norm = pg_norm.max(moved.abs());
        }
        if pg_norm <= tol {
            break;
        }

        step = (step * 2.0).min(1e4);
        let mut accepted = false;
        while step >= 1e-18 {
            let mut cx: Vec<f64> = x_log.iter().zip(&gx).map(|(&v, &g)| v + step * g).collect();
            let mut cr: Vec<f64> = r.iter().zip(&gr).map(|(&v, &g)| v + step * g).collect();
            clamp_state(prob, &mut cx, &mut cr);
            let mut climb = 0.0;
            for (i, &g) in gx.iter().enumerate() {
                climb += g * (cx[i] - x_log[i]);
            }
            for (p, &g) in gr.iter().enumerate() {
                climb += g * (cr[p] - r[p]);
            }
            if climb <= 0.0 {
                step *= 0.5;
                continue;
            }
            if augmented_value(prob, &cx, &cr, sigma, tau, rho) >= value + 1e-4 * climb {
                x_log = cx;
                r = cr;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            stalled = pg_norm > tol;
            break;
        }
    }
    AugmentedState {
        x_log,
        r,
        inner_iterations: iterations,
        pg_norm,
        stalled,
    }
}

// ---------------------------------------------------------------------------
// Feasibility probe
// ---------------------------------------------------------------------------

/// Per-source probe code rate giving each hop an even share of the
/// reliability budget.
fn probe_code_rate(params: &TradeoffParams, hops: usize) -> Option<f64> {
    let budget = (1.0 - params.rel_min) / hops as f64;
    if budget >= 0.5 {
        return Some(1.0);
    }
    let r = 1.0 + (2.0 * budget).ln() / params.kappa;
    (r > R_FLOOR).then_some(r)
}

/// Cheap feasibility certificate: minimum rates, evenly split reliability
/// budgets. Errors with a report when even that point violates a
/// constraint.
fn feasibility_probe(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
) -> Result<Vec<f64>, OracleError> {
    let mut probe_r = vec![1.0; inst.sensor_count()];
    for s in 0..inst.sensor_count() {
        let hops = sets.route_pairs[s].len();
        probe_r[s] = probe_code_rate(params, hops).ok_or_else(|| OracleError::Infeasible {
            report: format!(
                "source {} cannot meet r_min={} over {hops} hops at kappa={}",
                inst.sensor_node(SensorId(s)).id,
                params.rel_min,
                params.kappa
            ),
        })?;
    }
    for (li, link) in inst.links.iter().enumerate() {
        let load: f64 = sets.link_pair_range[li]
            .clone()
            .map(|p| {
                let (_, s) = sets.pairs[p];
                params.x_min / probe_r[s.0]
            })
            .sum();
        if load > link.capacity_bps {
            return Err(OracleError::Infeasible {
                report: format!(
                    "link {} overloaded at minimum rates: {:.3} vs capacity {:.3} Mbit/s",
                    link.id,
                    load / 1e6,
                    link.capacity_bps / 1e6
                ),
            });
        }
    }
    Ok(probe_r)
}

/// Feasibility certificate used by validation: errors with a report when
/// even the minimum-rate probe point violates a constraint.
pub fn check_feasible(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
) -> Result<(), OracleError> {
    feasibility_probe(inst, sets, params).map(|_| ())
}

// ---------------------------------------------------------------------------
// Oracle solve
// ---------------------------------------------------------------------------

pub fn oracle_solve(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
    tol: f64,
) -> Result<OracleSolution, OracleError> {
    params.validate_for_solver()?;
    let probe_r = feasibility_probe(inst, sets, params)?;
    let x_log0 = vec![0.5 * (params.x_min.ln() + params.x_max.ln()); inst.sensor_count()];
    let mut r0 = vec![0.0; sets.pair_count()];
    for s in 0..inst.sensor_count() {
        for &p in &sets.route_pairs[s] {
            r0[p] = probe_r[s].max(0.6);
        }
    }
    oracle_solve_from(inst, sets, params, tol, x_log0, r0)
}

/// Oracle solve from an explicit starting point (used by the multi-start
/// invariance check).
pub fn oracle_solve_from(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
    tol: f64,
    mut x_log: Vec<f64>,
    mut r: Vec<f64>,
) -> Result<OracleSolution, OracleError> {
    params.validate_for_solver()?;
    feasibility_probe(inst, sets, params)?;
    let prob = Eliminated::new(inst, sets, params);
    clamp_state(&prob, &mut x_log, &mut r);

    let nl = inst.link_count();
    let ns = inst.sensor_count();
    let mut sigma = vec![0.0; nl];
    let mut tau = vec![0.0; ns];
    let mut rho = 10.0;
    let mut prev_viol = f64::INFINITY;
    let mut inner_total = 0;
    let mut outer_used = 0;
    let mut pg_norm = f64::INFINITY;
    let mut stalled = false;
    let inner_tol = (0.1 * tol).max(1e-12);

    for outer in 0..OUTER_CAP {
        outer_used = outer + 1;
        let out = projected_gradient_ascent(&prob, x_log, r, &sigma, &tau, rho, inner_tol);
        x_log = out.x_log;
        r = out.r;
        inner_total += out.inner_iterations;
        pg_norm = out.pg_norm;
        stalled = out.stalled;

        let x = prob.rates(&x_log);
        let mut viol: f64 = 0.0;
        for l in 0..nl {
            viol = viol.max(prob.constraint(l, &x, &r).max(0.0));
        }
        for s in 0..ns {
            viol = viol.max(prob.rel_constraint(s, &r).max(0.0));
        }
        if viol <= tol && pg_norm <= inner_tol {
            break;
        }
        for l in 0..nl {
            sigma[l] = (sigma[l] + rho * prob.constraint(l, &x, &r)).max(0.0);
        }
        for s in 0..ns {
            tau[s] = (tau[s] + rho * prob.rel_constraint(s, &r)).max(0.0);
        }
        if viol > 0.25 * prev_viol {
            rho = (rho * 5.0).min(1e10);
        }
        prev_viol = viol;
    }

    let mut x = prob.rates(&x_log);
    let mut max_violation: f64 = 0.0;
    for l in 0..nl {
        max_violation = max_violation.max(prob.constraint(l, &x, &r).max(0.0));
    }
    for s in 0..ns {
        max_violation = max_violation.max(prob.rel_constraint(s, &r).max(0.0));
    }
    // restoration: lower code rates on routes still over the reliability
    // budget (E scales by exp(-kappa * shift)), then scale rates down on
    // any link still over capacity
    for s in 0..ns {
        let over = 1.0 + prob.rel_constraint(s, &r);
        if over > 1.0 {
            let shift = over.ln() / params.kappa + 1e-15;
            for &p in &sets.route_pairs[s] {
                r[p] = (r[p] - shift).max(R_FLOOR);
            }
        }
    }
    for _ in 0..32 {
        let mut dirty = false;
        for l in 0..nl {
            let h = prob.constraint(l, &x, &r);
            if h > 0.0 {
                let scale = (1.0 / (1.0 + h)) * (1.0 - 1e-14);
                for p in sets.link_pair_range[l].clone() {
                    let (_, s) = sets.pairs[p];
                    x[s.0] = (x[s.0] * scale).max(params.x_min);
                }
                dirty = true;
            }
        }
        if !dirty {
            break;
        }
    }
    let x_log_final: Vec<f64> = x.iter().map(|&v| v.ln()).collect();

    // reconstruct the eliminated variables
    let z = prob.z_of(&x);
    let mut reliability = vec![0.0; inst.sensor_count()];
    for s in 0..inst.sensor_count() {
        let rel = prob.route_reliability(&r, s).min(params.rel_max);
        if rel < params.rel_min - 1e-9 {
            stalled = true;
        }
        reliability[s] = rel.clamp(params.rel_min, params.rel_max);
    }
    let mut alloc = vec![0.0; sets.pair_count()];
    for l in 0..nl {
        let range = sets.link_pair_range[l].clone();
        let flows: Vec<f64> = range
            .clone()
            .map(|p| {
                let (_, s) = sets.pairs[p];
                x[s.0] / r[p]
            })
            .collect();
        let slack =
            (inst.links[l].capacity_bps - flows.iter().sum::<f64>()).max(0.0) / range.len().max(1) as f64;
        for (k, p) in range.enumerate() {
            alloc[p] = flows[k] + slack;
        }
    }

    // multiplier estimates from stationarity at the solution
    let lambda: Vec<f64> = (0..sets.pair_count())
        .map(|p| {
            let (l, s) = sets.pairs[p];
            sigma[l.0] * x[s.0] / (r[p] * inst.links[l.0].capacity_bps)
        })
        .collect();
    // mu from the R-stationarity plus the reliability-budget multiplier,
    // which carries the price when R is pinned at rel_min
    let mut mu = vec![0.0; inst.sensor_count()];
    for s in 0..inst.sensor_count() {
        let obj = &prob.objectives[s];
        let rel = prob.route_reliability(&r, s);
        if rel >= params.rel_max {
            continue;
        }
        mu[s] = obj.gamma
            * (1.0 - obj.phi)
            * obj.reliability_utility_ext_deriv(rel.clamp(params.rel_min, params.rel_max))
            + tau[s] / prob.rel_budget();
    }
    let nu: Vec<f64> = (0..inst.sensor_count())
        .map(|s| {
            let obj = &prob.objectives[s];
            (1.0 - obj.gamma) * obj.lifetime_penalty_deriv(z[s]) / prob.energies[s]
        })
        .collect();

    let primal = PrimalState {
        x: x.clone(),
        x_log: x_log_final,
        reliability: reliability.clone(),
        z: z.clone(),
        code_rate: r.clone(),
        alloc,
    };
    let value = params.total_utility(&x, &reliability, &z);
    let dual = DualState {
        lambda: lambda.clone(),
        mu: mu.clone(),
        nu: nu.clone(),
    };
    let dual_bound = dual_function_value(inst, sets, params, &dual);

    Ok(OracleSolution {
        primal,
        value,
        dual_bound,
        lambda,
        sigma,
        mu,
        nu,
        inner_iterations: inner_total,
        outer_iterations: outer_used,
        final_pg_norm: pg_norm,
        max_violation,
        stalled,
    })
}

// ---------------------------------------------------------------------------
// Dual function and duality gap
// ---------------------------------------------------------------------------

/// Dual function G(λ, μ, ν): exact per-node and per-link maximizations at
/// the given prices plus the constant Σ μ term.
pub fn dual_function_value(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
    dual: &DualState,
) -> f64 {
    let zb = z_bounds(inst, sets, params);
    let mut total = 0.0;
    for i in 0..inst.sensor_count() {
        let s = SensorId(i);
        let own_pt = inst
            .transmit_power(s, sets.own_first_link[i])
            .expect("first hop leaves the source");
        let lambda_e2e: f64 = sets.route_pairs[i].iter().map(|&p| dual.lambda[p]).sum();
        let relay_price_sum: f64 = sets.relays_of_source[i]
            .iter()
            .map(|relay| dual.nu[relay.0] * sets.relay_power[&(*relay, s)])
            .sum::<f64>()
            + dual.nu[i] * own_pt;
        let input = NodeSubproblemInput {
            objective: params.source_objective(s),
            lambda_e2e,
            mu: dual.mu[i],
            nu_self: dual.nu[i],
            relay_price_sum,
            energy: inst.sensor_energy(s),
            z_lo: zb[i].0,
            z_hi: zb[i].1,
        };
        let d = solve_node_subproblem(&input);
        total += node_lagrangian_value(&input, &d);
        total += dual.mu[i];
    }
    for (li, link) in inst.links.iter().enumerate() {
        let range = sets.link_pair_range[li].clone();
        let lambdas: Vec<f64> = range.clone().map(|p| dual.lambda[p]).collect();
        let alloc = solve_link_allocation(&lambdas, link.capacity_bps);
        for (k, p) in range.enumerate() {
            let (_, s) = sets.pairs[p];
            let r = solve_code_rate(dual.lambda[p], dual.mu[s.0], params.kappa);
            total += dual.lambda[p] * (alloc[k].ln() + r.ln())
                - dual.mu[s.0] * error_prob(r, params.kappa);
        }
    }
    total
}

/// Weak-duality gap G(λ,μ,ν) − W(primal) for a feasible primal point.
/// The primal must satisfy every constraint within `feas_tol` (log units
/// for the capacity coupling, absolute for reliability, relative for
/// energy), otherwise an error carrying the residual report is returned.
pub fn duality_gap(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
    primal: &PrimalState,
    dual: &DualState,
    feas_tol: f64,
) -> Result<f64, OracleError> {
    let mut report = Vec::new();
    for (p, &(l, s)) in sets.pairs.iter().enumerate() {
        let gap = primal.x[s.0].ln() - primal.alloc[p].ln() - primal.code_rate[p].ln();
        if gap > feas_tol {
            report.push(format!(
                "capacity coupling on link {} source {}: log-violation {gap:.3e}",
                inst.links[l.0].id,
                inst.sensor_node(s).id
            ));
        }
    }
    for (li, link) in inst.links.iter().enumerate() {
        let total: f64 = sets.link_pair_range[li].clone().map(|p| primal.alloc[p]).sum();
        if total > link.capacity_bps * (1.0 + feas_tol) {
            report.push(format!("link {} allocation over budget", link.id));
        }
    }
    for i in 0..inst.sensor_count() {
        let route_rates: Vec<f64> =
            sets.route_pairs[i].iter().map(|&p| primal.code_rate[p]).collect();
        let route_rel = 1.0
            - route_rates
                .iter()
                .map(|&r| error_prob(r, params.kappa))
                .sum::<f64>();
        if primal.reliability[i] > route_rel + feas_tol {
            report.push(format!(
                "reliability of {} exceeds its route bound by {:.3e}",
                inst.sensor_node(SensorId(i)).id,
                primal.reliability[i] - route_rel
            ));
        }
        let ez = inst.sensor_energy(SensorId(i)) * primal.z[i];
        let power = sets.node_power_from_coeff(&primal.x, SensorId(i));
        if power > ez * (1.0 + feas_tol) {
            report.push(format!(
                "energy balance of {} violated: {power:.3e} W vs {ez:.3e} W",
                inst.sensor_node(SensorId(i)).id
            ));
        }
    }
    if !report.is_empty() {
        return Err(OracleError::InfeasiblePrimal {
            report: report.join("; "),
        });
    }
    let w = params.total_utility(&primal.x, &primal.reliability, &primal.z);
    Ok(dual_function_value(inst, sets, params, dual) - w)
}

// ---------------------------------------------------------------------------
// Max-min lifetime vs the β-utility surrogate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct BetaComparison {
    pub beta: f64,
    /// min_s T_s at the grid-searched max-min optimum.
    pub maxmin_lifetime: f64,
    /// min_s T_s induced by maximizing Σ V^β(T_s) on the same set.
    pub surrogate_lifetime: f64,
    /// (maxmin − surrogate)/maxmin ≥ 0.
    pub gap_rel: f64,
}

const GRID_SOURCE_LIMIT: usize = 3;
const GRID_POINTS: usize = 200;
const REFINE_PASSES: usize = 2;

/// Even split of the aggregate rate budget used by the comparison slice.
pub fn default_rate_budget(params: &TradeoffParams, sensors: usize) -> f64 {
    sensors as f64 * 0.5 * (params.x_min + params.x_max)
}

/// Compares true max-min lifetime maximization against the β-utility
/// surrogate over the fixed-total-rate slice {x in box : Σ x_s = budget},
/// where raising one source's rate forces another's down and the
/// lifetimes genuinely trade. As β grows the surrogate approaches the
/// max-min solution, so the lifetime gap must not increase.
pub fn network_lifetime_exact_vs_beta(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
    betas: &[f64],
    rate_budget: f64,
) -> Result<Vec<BetaComparison>, OracleError> {
    let ns = inst.sensor_count();
    if ns > GRID_SOURCE_LIMIT {
        return Err(OracleError::TooLarge {
            sources: ns,
            limit: GRID_SOURCE_LIMIT,
        });
    }
    let min_lifetime = |x: &[f64]| -> f64 {
        (0..ns)
            .map(|s| inst.sensor_energy(SensorId(s)) / sets.node_power_from_coeff(x, SensorId(s)))
            .fold(f64::INFINITY, f64::min)
    };
    let maxmin_x = grid_search_slice(inst, params, rate_budget, &min_lifetime, &min_lifetime)?;
    let maxmin = min_lifetime(&maxmin_x);

    let mut out = Vec::with_capacity(betas.len());
    for &beta in betas {
        if beta < 2.0 {
            return Err(OracleError::Params(ParamError::Invalid {
                field: "beta".into(),
                message: "comparison grid requires beta >= 2".into(),
            }));
        }
        let surrogate = |x: &[f64]| -> f64 {
            -(0..ns)
                .map(|s| {
                    let z = sets.node_power_from_coeff(x, SensorId(s))
                        / inst.sensor_energy(SensorId(s));
                    z.powf(beta - 1.0)
                })
                .sum::<f64>()
        };
        let best_x = grid_search_slice(inst, params, rate_budget, &surrogate, &min_lifetime)?;
        let induced = min_lifetime(&best_x);
        out.push(BetaComparison {
            beta,
            maxmin_lifetime: maxmin,
            surrogate_lifetime: induced,
            gap_rel: (maxmin - induced) / maxmin,
        });
    }
    Ok(out)
}

/// Grid maximization over {x in box : Σ x = budget}: the first S−1
/// coordinates scan their boxes, the last is determined by the budget.
/// Two refinement passes shrink the scan around the incumbent. Scores
/// within a 1e-12 relative band are ties, resolved toward the larger
/// `tiebreak` value; a degenerate (flat) score therefore reports the best
/// tiebreak among its optima.
fn grid_search_slice(
    inst: &NetworkInstance,
    params: &TradeoffParams,
    budget: f64,
    score: &dyn Fn(&[f64]) -> f64,
    tiebreak: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<f64>, OracleError> {
    let ns = inst.sensor_count();
    let free = ns - 1;
    let feasible_budget = (params.x_min * ns as f64, params.x_max * ns as f64);
    if budget < feasible_budget.0 || budget > feasible_budget.1 {
        return Err(OracleError::Infeasible {
            report: format!(
                "rate budget {budget:.3e} outside [{:.3e}, {:.3e}]",
                feasible_budget.0, feasible_budget.1
            ),
        });
    }
    if free == 0 {
        return Ok(vec![budget]);
    }
    let mut ranges = vec![(params.x_min, params.x_max); free];
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for _pass in 0..=REFINE_PASSES {
        let mut idx = vec![0usize; free];
        loop {
            let mut x = vec![0.0; ns];
            let mut sum = 0.0;
            for d in 0..free {
                let (lo, hi) = ranges[d];
                x[d] = lo + (hi - lo) * idx[d] as f64 / GRID_POINTS as f64;
                sum += x[d];
            }
            let last = budget - sum;
            if last >= params.x_min && last <= params.x_max {
                x[free] = last;
                let v = score(&x);
                let better = match &best {
                    None => true,
                    Some((bv, bt, _)) => {
                        let band = 1e-12 * bv.abs().max(v.abs());
                        v > *bv + band || (v >= *bv - band && tiebreak(&x) > *bt)
                    }
                };
                if better {
                    let t = tiebreak(&x);
                    best = Some((v, t, x));
                }
            }
            // odometer
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] <= GRID_POINTS {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == free {
                    break;
                }
            }
            if d == free {
                break;
            }
        }
        let incumbent = best.as_ref().expect("slice is nonempty").2.clone();
        for d in 0..free {
            let (lo, hi) = ranges[d];
            let width = 2.0 * (hi - lo) / GRID_POINTS as f64;
            ranges[d] = (
                (incumbent[d] - width).max(params.x_min),
                (incumbent[d] + width).min(params.x_max),
            );
        }
    }
    Ok(best.expect("slice is nonempty").2)
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

    const SINGLE: &str = r#"
        [[nodes]]
        id = "n1"
        kind = "sensor"
        energy_j = 2000.0
        [[nodes]]
        id = "sink"
        kind = "sink"
        [[links]]
        id = "a"
        tail = "n1"
        head = "sink"
        capacity_mbps = 1.0
        distance_m = 50.0
        [routes]
        n1 = ["a"]
        [radio]
        psi_j_per_bit = 50e-9
        sigma_j_per_bit_mtheta = 0.0013e-12
        theta = 4.0
        rx_j_per_bit = 50e-9
    "#;

    #[test]
    fn tiny_pure_rate_instance_closed_form() {
        // gamma = phi = 1: pure rate maximization. The reliability box
        // floor pins E(r) <= 1 - rel_min, so r* = 1 + ln(2(1-rel_min))/kappa
        // and x* = r* C on the capacity-tight frontier.
        let inst = NetworkInstance::from_toml_str(SINGLE).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(1, 1.0, 1.0);
        let sol = oracle_solve(&inst, &sets, &params, 1e-8).unwrap();
        let r_star = 0.919_528_104_378_295;
        let x_star = 919_528.104_378_295;
        assert!(close(sol.primal.code_rate[0], r_star, 1e-4), "{}", sol.primal.code_rate[0]);
        assert!(close(sol.primal.x[0], x_star, 1e-4), "{}", sol.primal.x[0]);
        assert!(close(sol.primal.reliability[0], 0.9, 1e-6));
        assert!(close(sol.value, 0.7686605731497625, 1e-4), "{}", sol.value);
        // x = r * c on the frontier
        assert!(close(sol.primal.x[0], sol.primal.code_rate[0] * sol.primal.alloc[0], 1e-6));
    }

    #[test]
    fn tiny_instance_gap_at_closed_form_multipliers() {
        // analytic saddle of the pure-rate single-link instance
        let inst = NetworkInstance::from_toml_str(SINGLE).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(1, 1.0, 1.0);
        let obj = params.source_objective(SensorId(0));
        let r_star: f64 = 0.919_528_104_378_295;
        let x_star: f64 = 919_528.104_378_295;
        let lambda_star = obj.rate_utility_dlog(x_star.ln());
        let mu_star = lambda_star / (r_star * error_prob_deriv(r_star, params.kappa));
        let primal = PrimalState {
            x: vec![x_star],
            x_log: vec![x_star.ln()],
            reliability: vec![0.9],
            z: vec![sets.node_power_from_coeff(&[x_star], SensorId(0)) / 2000.0],
            code_rate: vec![r_star],
            alloc: vec![1.0e6],
        };
        let dual = DualState {
            lambda: vec![lambda_star],
            mu: vec![mu_star],
            nu: vec![0.0],
        };
        let gap = duality_gap(&inst, &sets, &params, &primal, &dual, 1e-9).unwrap();
        assert!(gap >= -1e-9, "gap {gap}");
        assert!(gap <= 1e-6, "gap {gap}");
    }

    #[test]
    fn weak_duality_at_arbitrary_prices() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(6, 0.8, 0.8);
        let sol = oracle_solve(&inst, &sets, &params, 1e-7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let dual = DualState {
                lambda: (0..sets.pair_count()).map(|_| rng.gen_range(0.0..2.0)).collect(),
                mu: (0..6).map(|_| rng.gen_range(0.0..3.0)).collect(),
                nu: (0..6).map(|_| rng.gen_range(0.0..2.0)).collect(),
            };
            let gap = duality_gap(&inst, &sets, &params, &sol.primal, &dual, 1e-6).unwrap();
            assert!(gap >= -1e-9, "weak duality violated: {gap}");
        }
    }

    #[test]
    fn duality_gap_rejects_infeasible_primal() {
        let inst = NetworkInstance::from_toml_str(SINGLE).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(1, 0.8, 0.8);
        let mut primal = PrimalState::box_midpoint(&inst, &sets, &params);
        primal.reliability[0] = 1.0;
        primal.code_rate[0] = 1.0; // route bound = 0.5 < 1.0
        let dual = DualState {
            lambda: vec![0.0],
            mu: vec![0.0],
            nu: vec![0.0],
        };
        let err = duality_gap(&inst, &sets, &params, &primal, &dual, 1e-6).unwrap_err();
        assert!(err.to_string().contains("reliability"), "{err}");
    }

    #[test]
    fn oracle_matches_coordinate_refined_grid_on_canonical() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(6, 0.8, 0.8);
        let sol = oracle_solve(&inst, &sets, &params, 1e-8).unwrap();
        let grid = coordinate_search(&inst, &sets, &params, 120);
        assert!(
            (sol.value - grid).abs() <= 0.005 * grid.abs(),
            "oracle {} vs grid {}",
            sol.value,
            grid
        );
    }

    #[test]
    fn lifetime_only_weights_pin_rates_at_minimum() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(6, 0.0, 0.8);
        let sol = oracle_solve(&inst, &sets, &params, 1e-8).unwrap();
        for &x in &sol.primal.x {
            assert!(close(x, params.x_min, 1e-6), "{x}");
        }
        let min_rates = vec![params.x_min; 6];
        let want = inst.network_lifetime(&sets, &min_rates).unwrap();
        let got = inst.network_lifetime(&sets, &sol.primal.x).unwrap();
        assert!(close(got, want, 1e-6));
    }

    #[test]
    fn oracle_is_start_point_invariant() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(6, 0.8, 0.8);
        let tol = 1e-8;
        let reference = oracle_solve(&inst, &sets, &params, tol).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let x0: Vec<f64> = (0..6)
                .map(|_| rng.gen_range(params.x_min.ln()..params.x_max.ln()))
                .collect();
            let r0: Vec<f64> = (0..sets.pair_count()).map(|_| rng.gen_range(0.5..1.0)).collect();
            let sol = oracle_solve_from(&inst, &sets, &params, tol, x0, r0).unwrap();
            assert!(
                (sol.value - reference.value).abs() <= 1e-5 * reference.value.abs(),
                "{} vs {}",
                sol.value,
                reference.value
            );
        }
    }

    #[test]
    fn slack_capacity_zeroes_congestion_multipliers() {
        // single source, generous capacity: coupling slack at the optimum
        let relaxed = SINGLE.replace("capacity_mbps = 1.0", "capacity_mbps = 40.0");
        let inst = NetworkInstance::from_toml_str(&relaxed).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(1, 0.8, 0.8);
        let sol = oracle_solve(&inst, &sets, &params, 1e-8).unwrap();
        assert!(sol.sigma[0] <= 1e-8, "{}", sol.sigma[0]);
        assert!(sol.lambda[0] <= 1e-8, "{}", sol.lambda[0]);
    }

    #[test]
    fn rejects_infeasible_instance() {
        // capacity below the minimum-rate load
        let squeezed = SINGLE.replace("capacity_mbps = 1.0", "capacity_mbps = 0.05");
        let inst = NetworkInstance::from_toml_str(&squeezed).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(1, 0.8, 0.8);
        let err = oracle_solve(&inst, &sets, &params, 1e-8).unwrap_err();
        assert!(matches!(err, OracleError::Infeasible { .. }), "{err}");
    }

    #[test]
    fn symmetric_two_source_beta_comparison_agrees() {
        let inst = NetworkInstance::from_toml_str(instances::TWO_SOURCE_SYMMETRIC).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(2, 0.8, 0.8);
        let budget = default_rate_budget(&params, 2);
        let rows =
            network_lifetime_exact_vs_beta(&inst, &sets, &params, &[2.0, 5.0, 9.0], budget)
                .unwrap();
        for row in rows {
            assert!(row.gap_rel.abs() <= 1e-9, "beta {}: gap {}", row.beta, row.gap_rel);
        }
    }

    #[test]
    fn asymmetric_two_source_gap_shrinks_with_beta() {
        let inst = NetworkInstance::from_toml_str(instances::TWO_SOURCE_ASYMMETRIC).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(2, 0.8, 0.8);
        let budget = default_rate_budget(&params, 2);
        let rows =
            network_lifetime_exact_vs_beta(&inst, &sets, &params, &[2.0, 5.0, 9.0], budget)
                .unwrap();
        assert!(rows[0].gap_rel >= rows[1].gap_rel - 1e-12);
        assert!(rows[1].gap_rel >= rows[2].gap_rel - 1e-12);
        assert!(rows[0].gap_rel > rows[2].gap_rel, "gap should shrink: {rows:?}");
        assert!(rows[2].gap_rel <= 0.02, "beta=9 gap {}", rows[2].gap_rel);
    }

    #[test]
    fn beta_comparison_rejects_large_instances() {
        let inst = NetworkInstance::from_toml_str(instances::CANONICAL).unwrap();
        let sets = inst.derive_sets();
        let params = TradeoffParams::uniform(6, 0.8, 0.8);
        let err = network_lifetime_exact_vs_beta(&inst, &sets, &params, &[9.0], 6.0e6).unwrap_err();
        assert!(matches!(err, OracleError::TooLarge { .. }));
    }

    // Derivative-free coordinate refinement used as an independent check
    // on the oracle value: five points per coordinate per pass, rejecting
    // infeasible candidates. Searches (x_s, phi_p) where phi_p is the
    // bandwidth share of pair p on its link (so the code rate is
    // r_p = x_s / phi_p), plus budget-preserving transfers between pairs
    // sharing a link.
    fn coordinate_search(
        inst: &NetworkInstance,
        sets: &DerivedSets,
        params: &TradeoffParams,
        passes: usize,
    ) -> f64 {
        let ns = inst.sensor_count();
        let evaluate = |x: &[f64], phi: &[f64]| -> Option<f64> {
            for (li, link) in inst.links.iter().enumerate() {
                let used: f64 = sets.link_pair_range[li].clone().map(|p| phi[p]).sum();
                if used > link.capacity_bps * (1.0 + 1e-12) {
                    return None;
                }
            }
            let mut total = 0.0;
            for s in 0..ns {
                let mut rel = 1.0;
                for &p in &sets.route_pairs[s] {
                    if phi[p] <= 0.0 || x[s] / phi[p] > 1.0 {
                        return None;
                    }
                    rel -= error_prob(x[s] / phi[p], params.kappa);
                }
                if rel < params.rel_min {
                    return None;
                }
                let z = sets.node_power_from_coeff(x, SensorId(s)) / inst.sensor_energy(SensorId(s));
                total += params
                    .source_objective(SensorId(s))
                    .combined(x[s], rel.min(params.rel_max), z);
            }
            Some(total)
        };
        // feasible start: minimum rates, equal bandwidth split
        let mut x = vec![params.x_min; ns];
        let mut phi = vec![0.0; sets.pair_count()];
        for (li, link) in inst.links.iter().enumerate() {
            let n = sets.link_pair_range[li].len().max(1) as f64;
            for p in sets.link_pair_range[li].clone() {
                phi[p] = link.capacity_bps / n;
            }
        }
        let mut best = evaluate(&x, &phi).expect("probe point is feasible");
        for pass in 0..passes {
            let shrink = 0.92f64.powi(pass as i32);
            for j in 0..ns {
                let half = 0.5 * (params.x_max - params.x_min) * shrink;
                let center = x[j];
                for k in 0..5 {
                    let cand = (center - half + half * k as f64 / 2.0)
                        .clamp(params.x_min, params.x_max);
                    let old = x[j];
                    x[j] = cand;
                    match evaluate(&x, &phi) {
                        Some(v) if v > best => best = v,
                        _ => x[j] = old,
                    }
                }
            }
            for p in 0..phi.len() {
                let (l, _) = sets.pairs[p];
                let half = 0.5 * inst.links[l.0].capacity_bps * shrink;
                let center = phi[p];
                for k in 0..5 {
                    let cand = (center - half + half * k as f64 / 2.0)
                        .clamp(1.0, inst.links[l.0].capacity_bps);
                    let old = phi[p];
                    phi[p] = cand;
                    match evaluate(&x, &phi) {
                        Some(v) if v > best => best = v,
                        _ => phi[p] = old,
                    }
                }
            }
            for (li, link) in inst.links.iter().enumerate() {
                let range = sets.link_pair_range[li].clone();
                let half = 0.5 * link.capacity_bps * shrink;
                for p in range.clone() {
                    for q in range.clone() {
                        if p == q {
                            continue;
                        }
                        for k in 0..5 {
                            let t = -half + half * k as f64 / 2.0;
                            let (op, oq) = (phi[p], phi[q]);
                            if op + t < 1.0 || oq - t < 1.0 {
                                continue;
                            }
                            phi[p] = op + t;
                            phi[q] = oq - t;
                            match evaluate(&x, &phi) {
                                Some(v) if v > best => best = v,
                                _ => {
                                    phi[p] = op;
                                    phi[q] = oq;
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }
}
