//! Subgradient dual decomposition, run as deterministic synchronous
//! message-passing rounds between node agents and link agents.
//!
//! Each round executes five phases in order: (1) every node solves its
//! own maximization at the round-start prices and broadcasts the new
//! rate, (2) nodes update reliability prices from the code rates received
//! at the end of the previous round, (3) nodes update energy prices from
//! the freshly broadcast rates, (4) every link splits its capacity and
//! picks code rates at the round-start prices, (5) links update
//! congestion prices from the freshly broadcast rates. Within a phase the
//! agents touch disjoint state, so they may run concurrently; messages
//! are accumulated into keyed maps, which keeps the trace identical under
//! any intra-round scheduling.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde_json::json;

use crate::model::{DerivedSets, LinkId, NetworkInstance, SensorId};
use crate::objective::{
    flow_reliability, z_bounds, ParamError, PrimalState, SourceObjective,
    TradeoffParams,
};
use crate::subproblems::{
    solve_code_rate, solve_link_allocation, solve_node_subproblem, NodeSubproblemInput,
};

// ---------------------------------------------------------------------------
// Dual state and schedules
// ---------------------------------------------------------------------------

/// Congestion, reliability and energy prices. `lambda` is indexed by the
/// (link, source) pair order of `DerivedSets::pairs`; `mu` and `nu` by
/// sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl DualState {
    pub fn is_nonnegative(&self) -> bool {
        self.lambda.iter().all(|&v| v >= 0.0)
            && self.mu.iter().all(|&v| v >= 0.0)
            && self.nu.iter().all(|&v| v >= 0.0)
    }
}

/// Stepsize schedule δ(t). The harmonic kinds vanish while their partial
/// sums diverge, as the convergence theorem requires; the constant kind
/// is for diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// 1 / (offset + t)
    Harmonic { offset: f64 },
    /// scale / (offset + t)
    ScaledHarmonic { scale: f64, offset: f64 },
    /// Fixed step; violates the diminishing-step condition.
    Constant { value: f64 },
}

impl StepSchedule {
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Harmonic { offset } => 1.0 / (offset + t as f64),
            StepSchedule::ScaledHarmonic { scale, offset } => scale / (offset + t as f64),
            StepSchedule::Constant { value } => value,
        }
    }

    pub fn is_diminishing(&self) -> bool {
        !matches!(self, StepSchedule::Constant { .. })
    }
}

/// Energy-price step conditioning. The stationarity ν e = (1−γ) ϖ z^{β−2}
/// ties each node's price to the (β−2)-th power of its normalized power,
/// so optimal ν values spread over many decades across nodes and a single
/// family-wide constant cannot track them all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuStepScaling {
    /// Raw family schedule.
    Family,
    /// Family schedule divided by the node's initial energy.
    InverseEnergy,
    /// Family schedule times (β−2)·ν_s(t)/(e_s·z_s(t)), the diagonal
    /// Newton factor of the z-stationarity map: relative price moves
    /// stay proportional to relative energy residuals on every node.
    Stationarity,
}

/// Per-price-family schedules. The price families live in different
/// units, so each gets its own scaling; the energy price additionally
/// carries the `NuStepScaling` conditioning.
#[derive(Debug, Clone, Copy)]
pub struct SddSchedules {
    pub lambda: StepSchedule,
    pub mu: StepSchedule,
    pub nu: StepSchedule,
    pub nu_scaling: NuStepScaling,
}

impl Default for SddSchedules {
    fn default() -> Self {
        SddSchedules {
            lambda: StepSchedule::ScaledHarmonic {
                scale: 0.5,
                offset: 50.0,
            },
            mu: StepSchedule::ScaledHarmonic {
                scale: 20.0,
                offset: 50.0,
            },
            nu: StepSchedule::ScaledHarmonic {
                scale: 40.0,
                offset: 50.0,
            },
            nu_scaling: NuStepScaling::Stationarity,
        }
    }
}

/// Iteration budget plus a relative-change tolerance on the averaged
/// objective over a trailing window.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub max_iters: usize,
    pub window: usize,
    pub rel_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_iters: 5000,
            window: 100,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SddOptions {
    pub schedules: SddSchedules,
    pub stop: StopRule,
    /// Run node and link agents concurrently within a round. The trace is
    /// identical either way.
    pub parallel: bool,
    /// λ_{l,s}(0) and μ_s(0).
    pub init_lambda: f64,
    pub init_mu: f64,
    /// ν_s(0); default is 1e-2 times the mean transmit power over route links.
    pub init_nu: Option<f64>,
}

impl Default for SddOptions {
    fn default() -> Self {
        SddOptions {
            schedules: SddSchedules::default(),
            stop: StopRule::default(),
            parallel: true,
            init_lambda: 1.0,
            init_mu: 1.0,
            init_nu: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Dual updates
// ---------------------------------------------------------------------------

/// λ(t+1) = [λ(t) − δ(t)·(log c + log r − log x)]⁺
pub fn update_congestion_price(
    lambda: f64,
    step: f64,
    alloc: f64,
    code_rate: f64,
    rate: f64,
) -> f64 {
    (lambda - step * (alloc.ln() + code_rate.ln() - rate.ln())).max(0.0)
}

/// μ(t+1) = [μ(t) − ζ(t)·(Rˢ − R)]⁺ with Rˢ = 1 − Σ E(r) along the route.
pub fn update_reliability_price(
    mu: f64,
    step: f64,
    route_code_rates: &[f64],
    kappa: f64,
    reliability: f64,
) -> f64 {
    let route_rel = flow_reliability(route_code_rates, kappa);
    (mu - step * (route_rel - reliability)).max(0.0)
}

/// ν(t+1) = [ν(t) − ϑ(t)·(e·z − Σ x_s′·p^(s,s′) − x·pᵗ)]⁺; `relayed`
/// iterates (rate, per-bit relay power) over the sources this node relays.
pub fn update_energy_price(
    nu: f64,
    step: f64,
    energy: f64,
    z: f64,
    relayed: impl IntoIterator<Item = (f64, f64)>,
    own_rate: f64,
    own_transmit_power: f64,
) -> f64 {
    let power: f64 = relayed.into_iter().map(|(x, p)| x * p).sum::<f64>()
        + own_rate * own_transmit_power;
    (nu - step * (energy * z - power)).max(0.0)
}

// ---------------------------------------------------------------------------
// Rounds
// ---------------------------------------------------------------------------

/// Message payloads exchanged during one round, keyed by the route
/// relationship they travel along.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundMessages {
    /// x_s(t+1), node → the links on its route; keyed (link, source).
    pub rates_to_links: BTreeMap<(LinkId, SensorId), f64>,
    /// x_s(t+1), source → each of its relays; keyed (relay, source).
    pub rates_to_relays: BTreeMap<(SensorId, SensorId), f64>,
    /// μ_s(t+1), node → the links on its route; keyed (link, source).
    pub reliability_prices: BTreeMap<(LinkId, SensorId), f64>,
    /// ν_relay(t+1), relay → the sources it serves; keyed (relay, source).
    pub energy_prices: BTreeMap<(SensorId, SensorId), f64>,
    /// r_{l,s}(t+1), link → the sources using it; keyed (link, source).
    pub code_rates: BTreeMap<(LinkId, SensorId), f64>,
    /// λ_{l,s}(t+1), link → the sources using it; keyed (link, source).
    pub congestion_prices: BTreeMap<(LinkId, SensorId), f64>,
}

#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub primal: PrimalState,
    pub dual: DualState,
    pub messages: RoundMessages,
}

/// Immutable per-solve context: instance views and per-source constants.
pub struct SddContext<'a> {
    pub inst: &'a NetworkInstance,
    pub sets: &'a DerivedSets,
    pub params: &'a TradeoffParams,
    pub z_bounds: Vec<(f64, f64)>,
    objectives: Vec<SourceObjective>,
    own_pt: Vec<f64>,
    energies: Vec<f64>,
    nu_floor: Vec<f64>,
}

impl<'a> SddContext<'a> {
    pub fn new(
        inst: &'a NetworkInstance,
        sets: &'a DerivedSets,
        params: &'a TradeoffParams,
    ) -> Self {
        let ns = inst.sensor_count();
        let objectives = (0..ns).map(|i| params.source_objective(SensorId(i))).collect();
        let own_pt = (0..ns)
            .map(|i| {
                inst.transmit_power(SensorId(i), sets.own_first_link[i])
                    .expect("first hop leaves the source")
            })
            .collect();
        let energies: Vec<f64> = (0..ns).map(|i| inst.sensor_energy(SensorId(i))).collect();
        let zb = z_bounds(inst, sets, params);
        // smallest meaningful price per node: below nu(z_lo) the z solve
        // pins at the box floor anyway, so the stationarity step never
        // needs to resolve finer than a fraction of it
        let nu_floor = (0..ns)
            .map(|i| {
                let weight = (1.0 - params.gamma[i]).max(0.05);
                1e-3 * weight * params.varpi * zb[i].0.powf(params.beta - 2.0) / energies[i]
            })
            .collect();
        SddContext {
            inst,
            sets,
            params,
            z_bounds: zb,
            objectives,
            own_pt,
            energies,
            nu_floor,
        }
    }

    fn map<T: Send>(&self, parallel: bool, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        if parallel {
            (0..n).into_par_iter().map(f).collect()
        } else {
            (0..n).map(f).collect()
        }
    }
}

/// One synchronous round: a deterministic function of (states, t).
pub fn run_round(
    ctx: &SddContext,
    primal: &PrimalState,
    dual: &DualState,
    schedules: &SddSchedules,
    t: usize,
    parallel: bool,
) -> RoundOutput {
    let sets = ctx.sets;
    let ns = ctx.inst.sensor_count();
    let nl = ctx.inst.link_count();
    let kappa = ctx.params.kappa;

    // Phase 1: node solves at round-start prices.
    let decisions = ctx.map(parallel, ns, |i| {
        let lambda_e2e: f64 = sets.route_pairs[i].iter().map(|&p| dual.lambda[p]).sum();
        let relay_price_sum: f64 = sets.relays_of_source[i]
            .iter()
            .map(|relay| dual.nu[relay.0] * sets.relay_power[&(*relay, SensorId(i))])
            .sum::<f64>()
            + dual.nu[i] * ctx.own_pt[i];
        let (z_lo, z_hi) = ctx.z_bounds[i];
        solve_node_subproblem(&NodeSubproblemInput {
            objective: ctx.objectives[i],
            lambda_e2e,
            mu: dual.mu[i],
            nu_self: dual.nu[i],
            relay_price_sum,
            energy: ctx.energies[i],
            z_lo,
            z_hi,
        })
    });
    let x_new: Vec<f64> = decisions.iter().map(|d| d.x_log.exp()).collect();
    let x_log_new: Vec<f64> = decisions.iter().map(|d| d.x_log).collect();
    let rel_new: Vec<f64> = decisions.iter().map(|d| d.reliability).collect();
    let z_new: Vec<f64> = decisions.iter().map(|d| d.z).collect();

    // Phase 2: reliability price updates from last round's code rates.
    let zeta = schedules.mu.step(t);
    let mu_new = ctx.map(parallel, ns, |i| {
        let route_rates: Vec<f64> = sets.route_pairs[i].iter().map(|&p| primal.code_rate[p]).collect();
        update_reliability_price(dual.mu[i], zeta, &route_rates, kappa, rel_new[i])
    });

    // Phase 3: energy price updates from the freshly broadcast rates.
    let nu_new = ctx.map(parallel, ns, |i| {
        let theta = match schedules.nu_scaling {
            NuStepScaling::Family => schedules.nu.step(t),
            NuStepScaling::InverseEnergy => schedules.nu.step(t) / ctx.energies[i],
            NuStepScaling::Stationarity => {
                let newton = (ctx.params.beta - 2.0).max(0.5)
                    * (dual.nu[i] + ctx.nu_floor[i])
                    / (ctx.energies[i] * z_new[i]);
                schedules.nu.step(t) * newton
            }
        };
        let relayed = sets.relayed_sources[i]
            .iter()
            .map(|src| (x_new[src.0], sets.relay_power[&(SensorId(i), *src)]));
        update_energy_price(
            dual.nu[i],
            theta,
            ctx.energies[i],
            z_new[i],
            relayed,
            x_new[i],
            ctx.own_pt[i],
        )
    });

    // Phase 4: link solves at round-start prices.
    let link_results = ctx.map(parallel, nl, |li| {
        let range = sets.link_pair_range[li].clone();
        let lambdas: Vec<f64> = range.clone().map(|p| dual.lambda[p]).collect();
        let alloc = solve_link_allocation(&lambdas, ctx.inst.links[li].capacity_bps);
        let rates: Vec<f64> = range
            .clone()
            .map(|p| {
                let (_, s) = sets.pairs[p];
                solve_code_rate(dual.lambda[p], dual.mu[s.0], kappa)
            })
            .collect();
        (alloc, rates)
    });
    let mut alloc_new = vec![0.0; sets.pair_count()];
    let mut code_new = vec![0.0; sets.pair_count()];
    for (li, (alloc, rates)) in link_results.into_iter().enumerate() {
        let range = sets.link_pair_range[li].clone();
        for (k, p) in range.enumerate() {
            alloc_new[p] = alloc[k];
            code_new[p] = rates[k];
        }
    }

    // Phase 5: congestion price updates from the freshly broadcast rates.
    let delta = schedules.lambda.step(t);
    let lambda_new = ctx.map(parallel, sets.pair_count(), |p| {
        let (_, s) = sets.pairs[p];
        update_congestion_price(dual.lambda[p], delta, alloc_new[p], code_new[p], x_new[s.0])
    });

    let mut messages = RoundMessages::default();
    for (p, &(l, s)) in sets.pairs.iter().enumerate() {
        messages.rates_to_links.insert((l, s), x_new[s.0]);
        messages.reliability_prices.insert((l, s), mu_new[s.0]);
        messages.code_rates.insert((l, s), code_new[p]);
        messages.congestion_prices.insert((l, s), lambda_new[p]);
    }
    for &(relay, src) in sets.hop_links.keys() {
        messages.rates_to_relays.insert((relay, src), x_new[src.0]);
        messages.energy_prices.insert((relay, src), nu_new[relay.0]);
    }

    RoundOutput {
        primal: PrimalState {
            x: x_new,
            x_log: x_log_new,
            reliability: rel_new,
            z: z_new,
            code_rate: code_new,
            alloc: alloc_new,
        },
        dual: DualState {
            lambda: lambda_new,
            mu: mu_new,
            nu: nu_new,
        },
        messages,
    }
}

// ---------------------------------------------------------------------------
// Full solve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged { at: usize },
    MaxIterations,
}

/// Constraint residuals of a primal point. The `_abs`/`_w`/`_rel` fields
/// measure tightness (both directions — the reliability and energy
/// inequalities bind at the optimum whenever their weights are active);
/// the `_violation` fields keep only the infeasible side, which is the
/// right convergence measure when a degenerate weight leaves a
/// constraint legitimately slack.
#[derive(Debug, Clone, Copy, Default)]
pub struct Residuals {
    pub capacity_log: f64,
    pub reliability_abs: f64,
    pub reliability_violation: f64,
    pub energy_w: f64,
    pub energy_rel: f64,
    pub energy_violation_w: f64,
}

pub fn residuals(ctx: &SddContext, primal: &PrimalState) -> Residuals {
    let sets = ctx.sets;
    let mut out = Residuals::default();
    for (p, &(_, s)) in sets.pairs.iter().enumerate() {
        let viol = primal.x[s.0].ln() - primal.alloc[p].ln() - primal.code_rate[p].ln();
        out.capacity_log = out.capacity_log.max(viol.max(0.0));
    }
    for i in 0..ctx.inst.sensor_count() {
        let route_rates: Vec<f64> =
            sets.route_pairs[i].iter().map(|&p| primal.code_rate[p]).collect();
        let route_rel = flow_reliability(&route_rates, ctx.params.kappa);
        let gap = route_rel - primal.reliability[i];
        out.reliability_abs = out.reliability_abs.max(gap.abs());
        out.reliability_violation = out.reliability_violation.max((-gap).max(0.0));
        let ez = ctx.energies[i] * primal.z[i];
        let power = sets.node_power_from_coeff(&primal.x, SensorId(i));
        out.energy_w = out.energy_w.max((ez - power).abs());
        out.energy_rel = out.energy_rel.max((ez - power).abs() / ez);
        out.energy_violation_w = out.energy_violation_w.max((power - ez).max(0.0));
    }
    out
}

/// One iteration of the trace: the round's primal/dual iterates, the
/// objective of the iterate and of the running average, and the averaged
/// residuals.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: usize,
    pub primal: PrimalState,
    pub dual: DualState,
    pub objective: f64,
    pub objective_avg: f64,
    pub residuals_avg: Residuals,
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
    /// Running average of the primal iterates (the reported solution).
    pub average: PrimalState,
    /// Last primal iterate.
    pub last: PrimalState,
    /// Final prices.
    pub dual: DualState,
    pub average_utility: f64,
    pub last_utility: f64,
}

/// Ergodic primal average with doubling restarts: the accumulator resets
/// at iterations 64, 128, 256, …, so at any stop time it covers roughly
/// the trailing half of the run. A plain full-history average decays the
/// price-discovery transient only like 1/T, which is far too slow for the
/// constraint-tightness targets; the doubling window is the standard
/// anytime remedy and keeps the same asymptotics.
struct RunningAverage {
    count: f64,
    restart_at: usize,
    last_restart: usize,
    x: Vec<f64>,
    reliability: Vec<f64>,
    z: Vec<f64>,
    code_rate: Vec<f64>,
    alloc: Vec<f64>,
}

const FIRST_RESTART: usize = 64;

impl RunningAverage {
    fn new(ns: usize, np: usize) -> Self {
        RunningAverage {
            count: 0.0,
            restart_at: FIRST_RESTART,
            last_restart: 0,
            x: vec![0.0; ns],
            reliability: vec![0.0; ns],
            z: vec![0.0; ns],
            code_rate: vec![0.0; np],
            alloc: vec![0.0; np],
        }
    }

    fn push(&mut self, t: usize, p: &PrimalState) {
        if t == self.restart_at {
            self.count = 0.0;
            self.last_restart = t;
            self.restart_at *= 2;
        }
        self.count += 1.0;
        let w = 1.0 / self.count;
        let blend = |avg: &mut Vec<f64>, new: &[f64]| {
            for (a, &v) in avg.iter_mut().zip(new) {
                *a += w * (v - *a);
            }
        };
        blend(&mut self.x, &p.x);
        blend(&mut self.reliability, &p.reliability);
        blend(&mut self.z, &p.z);
        blend(&mut self.code_rate, &p.code_rate);
        blend(&mut self.alloc, &p.alloc);
    }

    fn snapshot(&self) -> PrimalState {
        PrimalState {
            x: self.x.clone(),
            x_log: self.x.iter().map(|&v| v.ln()).collect(),
            reliability: self.reliability.clone(),
            z: self.z.clone(),
            code_rate: self.code_rate.clone(),
            alloc: self.alloc.clone(),
        }
    }
}

/// Mean transmit power over links that carry at least one route; scales
/// the default energy-price initialization.
pub fn mean_route_transmit_power(inst: &NetworkInstance, sets: &DerivedSets) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (li, link) in inst.links.iter().enumerate() {
        if sets.sources_on_link[li].is_empty() {
            continue;
        }
        sum += inst.radio.psi_j_per_bit
            + inst.radio.sigma_j_per_bit_mtheta * link.distance_m.powf(inst.radio.theta);
        n += 1;
    }
    sum / n.max(1) as f64
}

pub fn initial_dual(ctx: &SddContext, options: &SddOptions) -> DualState {
    let nu0 = options
        .init_nu
        .unwrap_or_else(|| 1e-2 * mean_route_transmit_power(ctx.inst, ctx.sets));
    DualState {
        lambda: vec![options.init_lambda; ctx.sets.pair_count()],
        mu: vec![options.init_mu; ctx.inst.sensor_count()],
        nu: vec![nu0; ctx.inst.sensor_count()],
    }
}

/// Runs rounds until the stop rule fires; returns the full trace with the
/// running primal average as the reported solution. Non-convergence
/// within the iteration budget is a status, not an error.
pub fn sdd_solve(
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
    options: &SddOptions,
) -> Result<SolveTrace, ParamError> {
    params.validate_for_solver()?;
    let ctx = SddContext::new(inst, sets, params);
    let mut primal = PrimalState::box_midpoint(inst, sets, params);
    let mut dual = initial_dual(&ctx, options);
    let mut avg = RunningAverage::new(inst.sensor_count(), sets.pair_count());
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = SolveStatus::MaxIterations;

    for t in 0..options.stop.max_iters {
        let out = run_round(&ctx, &primal, &dual, &options.schedules, t, options.parallel);
        primal = out.primal;
        dual = out.dual;
        avg.push(t, &primal);
        let averaged = avg.snapshot();
        let objective = params.total_utility(&primal.x, &primal.reliability, &primal.z);
        let objective_avg =
            params.total_utility(&averaged.x, &averaged.reliability, &averaged.z);
        let residuals_avg = residuals(&ctx, &averaged);
        records.push(IterationRecord {
            t,
            primal: primal.clone(),
            dual: dual.clone(),
            objective,
            objective_avg,
            residuals_avg,
        });

        // skip the window check while it straddles an averaging restart
        let w = options.stop.window;
        if w > 0 && records.len() > w && t >= avg.last_restart + w {
            let now = records[records.len() - 1].objective_avg;
            let then = records[records.len() - 1 - w].objective_avg;
            if (now - then).abs() < options.stop.rel_tol * now.abs().max(1e-12) {
                status = SolveStatus::Converged { at: t };
                break;
            }
        }
    }

    let average = avg.snapshot();
    let average_utility = params.total_utility(&average.x, &average.reliability, &average.z);
    let last_utility = params.total_utility(&primal.x, &primal.reliability, &primal.z);
    Ok(SolveTrace {
        records,
        status,
        average,
        last: primal,
        dual,
        average_utility,
        last_utility,
    })
}

// ---------------------------------------------------------------------------
// Trace export
// ---------------------------------------------------------------------------

/// One CSV row per iteration: per-source rates, reliabilities and
/// lifetimes (T = 1/z), per-pair congestion prices, per-source
/// reliability and energy prices, objectives, and averaged residuals.
/// Column order is fixed by instance declaration order.
pub fn write_trace_csv<W: Write>(
    trace: &SolveTrace,
    inst: &NetworkInstance,
    sets: &DerivedSets,
    mut w: W,
) -> io::Result<()> {
    let sensor_id = |s: SensorId| inst.sensor_node(s).id.clone();
    let mut header = vec!["t".to_string()];
    for i in 0..inst.sensor_count() {
        header.push(format!("x_{}", sensor_id(SensorId(i))));
    }
    for i in 0..inst.sensor_count() {
        header.push(format!("R_{}", sensor_id(SensorId(i))));
    }
    for i in 0..inst.sensor_count() {
        header.push(format!("T_{}", sensor_id(SensorId(i))));
    }
    for &(l, s) in &sets.pairs {
        header.push(format!("lambda_{}_{}", inst.links[l.0].id, sensor_id(s)));
    }
    for i in 0..inst.sensor_count() {
        header.push(format!("mu_{}", sensor_id(SensorId(i))));
    }
    for i in 0..inst.sensor_count() {
        header.push(format!("nu_{}", sensor_id(SensorId(i))));
    }
    header.push("objective".into());
    header.push("objective_avg".into());
    header.push("resid_capacity_log".into());
    header.push("resid_reliability".into());
    header.push("resid_energy_w".into());
    writeln!(w, "{}", header.join(","))?;

    for rec in &trace.records {
        let mut row = vec![rec.t.to_string()];
        let push = |row: &mut Vec<String>, v: f64| row.push(format!("{v:e}"));
        for &v in &rec.primal.x {
            push(&mut row, v);
        }
        for &v in &rec.primal.reliability {
            push(&mut row, v);
        }
        for &v in &rec.primal.z {
            push(&mut row, 1.0 / v);
        }
        for &v in &rec.dual.lambda {
            push(&mut row, v);
        }
        for &v in &rec.dual.mu {
            push(&mut row, v);
        }
        for &v in &rec.dual.nu {
            push(&mut row, v);
        }
        push(&mut row, rec.objective);
        push(&mut row, rec.objective_avg);
        push(&mut row, rec.residuals_avg.capacity_log);
        push(&mut row, rec.residuals_avg.reliability_abs);
        push(&mut row, rec.residuals_avg.energy_w);
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Plot-ready CSV: iteration, per-source rate, total objective of the
/// iterate.
pub fn write_plot_csv<W: Write>(
    trace: &SolveTrace,
    inst: &NetworkInstance,
    mut w: W,
) -> io::Result<()> {
    let mut header = vec!["t".to_string()];
    for i in 0..inst.sensor_count() {
        header.push(format!("x_{}", inst.sensor_node(SensorId(i)).id));
    }
    header.push("total_utility".into());
    writeln!(w, "{}", header.join(","))?;
    for rec in &trace.records {
        let mut row = vec![rec.t.to_string()];
        for &v in &rec.primal.x {
            row.push(format!("{v:e}"));
        }
        row.push(format!("{:e}", rec.objective));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// JSON summary of a finished solve: status, final averaged and last
/// solutions, residuals of the average, and the final prices.
pub fn summary_json(
    trace: &SolveTrace,
    inst: &NetworkInstance,
    sets: &DerivedSets,
    params: &TradeoffParams,
) -> serde_json::Value {
    let ctx = SddContext::new(inst, sets, params);
    let res = residuals(&ctx, &trace.average);
    let per_sensor = |vals: &[f64]| -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (i, &v) in vals.iter().enumerate() {
            map.insert(inst.sensor_node(SensorId(i)).id.clone(), json!(v));
        }
        serde_json::Value::Object(map)
    };
    let per_pair = |vals: &[f64]| -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (p, &(l, s)) in sets.pairs.iter().enumerate() {
            let key = format!("{}:{}", inst.links[l.0].id, inst.sensor_node(s).id);
            map.insert(key, json!(vals[p]));
        }
        serde_json::Value::Object(map)
    };
    let lifetimes: Vec<f64> = trace.average.z.iter().map(|&z| 1.0 / z).collect();
    let network_lifetime = inst
        .network_lifetime(sets, &trace.average.x)
        .unwrap_or(f64::NAN);
    json!({
        "status": match trace.status {
            SolveStatus::Converged { at } => json!({"converged": true, "at_iteration": at}),
            SolveStatus::MaxIterations => json!({"converged": false}),
        },
        "iterations": trace.records.len(),
        "average": {
            "x_bps": per_sensor(&trace.average.x),
            "reliability": per_sensor(&trace.average.reliability),
            "lifetime_s": per_sensor(&lifetimes),
            "network_lifetime_s": network_lifetime,
            "total_utility": trace.average_utility,
        },
        "last": {
            "x_bps": per_sensor(&trace.last.x),
            "reliability": per_sensor(&trace.last.reliability),
            "total_utility": trace.last_utility,
        },
        "residuals_avg": {
            "capacity_log": res.capacity_log,
            "reliability_abs": res.reliability_abs,
            "reliability_violation": res.reliability_violation,
            "energy_w": res.energy_w,
            "energy_rel": res.energy_rel,
            "energy_violation_w": res.energy_violation_w,
        },
        "dual": {
            "lambda": per_pair(&trace.dual.lambda),
            "mu": per_sensor(&trace.dual.mu),
            "nu": per_sensor(&trace.dual.nu),
        },
    })
}
