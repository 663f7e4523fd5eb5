//! Per-agent maximizations of the dual decomposition: the node problem in
//! (x′, R, z), the link-layer capacity split, and the physical-layer code
//! rate choice. Each reduces to 1-D concave maximization solved by
//! bisection on the derivative sign.

use thiserror::Error;

use crate::objective::{error_prob, error_prob_deriv, SourceObjective};

/// Floor on capacity allocations; keeps `log c` finite in the price update.
pub const EPS_CAPACITY: f64 = 1e-9;
/// Floor on code rates; keeps `log r` finite in the price update.
pub const EPS_CODE_RATE: f64 = 1e-9;
/// Bisection tolerance on the variable, in its natural scale.
pub const TOL_1D: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SubproblemError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// Argmax of a concave function on [lo, hi] given its derivative, by
/// bisection on the derivative sign. Returns the boundary when the
/// derivative is one-signed on the interval; a flat objective resolves to
/// `lo`.
pub fn maximize_concave_1d(
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, SubproblemError> {
    if !(lo < hi && tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(SubproblemError::InvalidInterval { lo, hi });
    }
    if df(lo) <= 0.0 {
        return Ok(lo);
    }
    if df(hi) >= 0.0 {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if df(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

// ---------------------------------------------------------------------------
// Node subproblem
// ---------------------------------------------------------------------------

/// Prices and constants a node needs to solve its own maximization.
#[derive(Debug, Clone)]
pub struct NodeSubproblemInput {
    pub objective: SourceObjective,
    /// λ^s: end-to-end congestion price, sum over the route's links.
    pub lambda_e2e: f64,
    /// μ_s: reliability price.
    pub mu: f64,
    /// ν_s: own energy price.
    pub nu_self: f64,
    /// K_s: J/bit price of moving one bit end to end — relay energy
    /// prices weighted by their per-bit relay power, plus the own
    /// first-hop transmit power priced at ν_s.
    pub relay_price_sum: f64,
    /// e_s, joules.
    pub energy: f64,
    pub z_lo: f64,
    pub z_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDecision {
    pub x_log: f64,
    pub reliability: f64,
    pub z: f64,
}

/// Maximizes `W′(x′,R,z) − λ^s x′ − μ R + ν e z − e^{x′} K_s` over the box.
/// The objective is separable, so the three coordinates solve
/// independently.
pub fn solve_node_subproblem(input: &NodeSubproblemInput) -> NodeDecision {
    let obj = &input.objective;
    let w_rate = obj.gamma * obj.phi;
    let w_rel = obj.gamma * (1.0 - obj.phi);
    let w_life = 1.0 - obj.gamma;

    let x_log = maximize_concave_1d(
        |xl| w_rate * obj.rate_utility_dlog(xl) - input.lambda_e2e - input.relay_price_sum * xl.exp(),
        obj.x_min.ln(),
        obj.x_max.ln(),
        TOL_1D,
    )
    .expect("rate box is a valid interval");

    let reliability = maximize_concave_1d(
        |r| w_rel * obj.reliability_utility_deriv(r) - input.mu,
        obj.rel_min,
        obj.rel_max,
        TOL_1D,
    )
    .expect("reliability box is a valid interval");

    let z = maximize_concave_1d(
        |z| input.nu_self * input.energy - w_life * obj.lifetime_penalty_deriv(z),
        input.z_lo,
        input.z_hi,
        TOL_1D,
    )
    .expect("z box is a valid interval");

    NodeDecision {
        x_log,
        reliability,
        z,
    }
}

/// Objective value of the node subproblem at a candidate point.
pub fn node_lagrangian_value(input: &NodeSubproblemInput, d: &NodeDecision) -> f64 {
    input.objective.combined_log(d.x_log, d.reliability, d.z)
        - input.lambda_e2e * d.x_log
        - input.mu * d.reliability
        + input.nu_self * input.energy * d.z
        - d.x_log.exp() * input.relay_price_sum
}

// ---------------------------------------------------------------------------
// Link-layer subproblem
// ---------------------------------------------------------------------------

/// Maximizes `Σ_s λ_{l,s} log c_{l,s}` over `Σ c ≤ C_l, 0 ≤ c ≤ C_l`.
/// Positive prices receive an exactly proportional share of the budget;
/// zero-price sources get the floor `EPS_CAPACITY`, carved out of the
/// budget first. With every price zero the objective is flat and all
/// sources sit at the floor.
pub fn solve_link_allocation(lambda_on_link: &[f64], capacity: f64) -> Vec<f64> {
    assert!(capacity > 0.0, "link capacity must be positive");
    let positive_sum: f64 = lambda_on_link.iter().filter(|&&l| l > 0.0).sum();
    if positive_sum <= 0.0 {
        return vec![EPS_CAPACITY; lambda_on_link.len()];
    }
    let zeros = lambda_on_link.iter().filter(|&&l| l <= 0.0).count();
    let budget = capacity - zeros as f64 * EPS_CAPACITY;
    lambda_on_link
        .iter()
        .map(|&l| {
            if l > 0.0 {
                l * budget / positive_sum
            } else {
                EPS_CAPACITY
            }
        })
        .collect()
}

/// Link-part Lagrangian value for one (l, s) pair:
/// `λ(log c + log r) − μ E(r)`.
pub fn link_pair_value(lambda: f64, mu: f64, alloc: f64, code_rate: f64, kappa: f64) -> f64 {
    lambda * (alloc.ln() + code_rate.ln()) - mu * error_prob(code_rate, kappa)
}

// ---------------------------------------------------------------------------
// Physical-layer subproblem
// ---------------------------------------------------------------------------

/// Maximizes `λ log r − μ E(r)` over [EPS_CODE_RATE, 1]; strictly concave,
/// interior optima satisfy λ/r = μ E'(r).
pub fn solve_code_rate(lambda: f64, mu: f64, kappa: f64) -> f64 {
    maximize_concave_1d(
        |r| {
            let log_term = if lambda > 0.0 { lambda / r } else { 0.0 };
            log_term - mu * error_prob_deriv(r, kappa)
        },
        EPS_CODE_RATE,
        1.0,
        TOL_1D,
    )
    .expect("code-rate interval is valid")
}
