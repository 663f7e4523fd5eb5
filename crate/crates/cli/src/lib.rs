//! Experiment driver behind the `rrl` binary: loads instance and
//! parameter documents, runs the distributed and/or centralized solver,
//! sweeps weight parameters, and writes traces, summaries and plot data.
//!
//! Artifact filenames embed a hash of the resolved configuration
//! (document contents, overrides, solver, seed), so reruns of the same
//! experiment land on the same files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use rrl_core::model::SensorId;
use rrl_core::objective::ParamError;
use rrl_core::oracle::{self, OracleError};
use rrl_core::sdd::{self, sdd_solve, SddOptions, SolveTrace, StepSchedule};
use rrl_core::{ModelError, NetworkInstance, TradeoffParams};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Sdd,
    Oracle,
    Both,
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverChoice::Sdd => "sdd",
            SolverChoice::Oracle => "oracle",
            SolverChoice::Both => "both",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepWeight {
    Gamma,
    Phi,
}

impl fmt::Display for SweepWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepWeight::Gamma => "gamma",
            SweepWeight::Phi => "phi",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub weight: SweepWeight,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = self.from + self.step * k as f64;
            if v > self.to + 1e-9 {
                break;
            }
            out.push(v.min(self.to));
            k += 1;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance_path: PathBuf,
    pub params_path: Option<PathBuf>,
    /// `key=value` parameter overrides applied after loading.
    pub overrides: Vec<(String, f64)>,
    pub solver: SolverChoice,
    pub out_dir: PathBuf,
    pub sweep: Option<SweepSpec>,
    pub seed: u64,
    pub max_iters: Option<usize>,
    /// Stop-rule relative tolerance for SDD; stationarity tolerance for
    /// the oracle.
    pub tol: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance_path: PathBuf::new(),
            params_path: None,
            overrides: Vec::new(),
            solver: SolverChoice::Sdd,
            out_dir: PathBuf::from("out"),
            sweep: None,
            seed: 0,
            max_iters: None,
            tol: None,
        }
    }
}

const ORACLE_TOL_DEFAULT: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    /// Bad instance, parameters or configuration. Exit code 1.
    Validation(String),
    /// A solver finished without reaching a usable solution. Exit code 2.
    NonConvergence(String),
    /// Filesystem trouble. Exit code 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::NonConvergence(m) => write!(f, "solver did not converge: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        match e {
            ParamError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Infeasible { .. }
            | OracleError::Params(_)
            | OracleError::TooLarge { .. } => CliError::Validation(e.to_string()),
            OracleError::InfeasiblePrimal { .. } => CliError::NonConvergence(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

struct Loaded {
    inst: NetworkInstance,
    params: TradeoffParams,
    instance_text: String,
    params_text: String,
}

fn load(config: &ExperimentConfig) -> Result<Loaded, CliError> {
    let instance_text = fs::read_to_string(&config.instance_path)
        .map_err(|e| io_err(&config.instance_path, e))?;
    let inst = NetworkInstance::from_toml_str(&instance_text)?;
    let params_text = match &config.params_path {
        Some(p) => fs::read_to_string(p).map_err(|e| io_err(p, e))?,
        None => String::new(),
    };
    let mut params = TradeoffParams::from_toml_str(&params_text, &inst)?;
    for (key, value) in &config.overrides {
        if key.starts_with("sched.") || key.starts_with("stop.") {
            continue;
        }
        params.set_scalar(key, *value)?;
    }
    if let Some(sweep) = &config.sweep {
        if !(0.0..=1.0).contains(&sweep.from) || !(0.0..=1.0).contains(&sweep.to) {
            return Err(CliError::Validation("sweep bounds must lie in [0, 1]".into()));
        }
        if sweep.step <= 0.0 || sweep.to < sweep.from {
            return Err(CliError::Validation(
                "sweep needs step > 0 and to >= from".into(),
            ));
        }
    }
    Ok(Loaded {
        inst,
        params,
        instance_text,
        params_text,
    })
}

fn sdd_options(config: &ExperimentConfig) -> Result<SddOptions, CliError> {
    let mut options = SddOptions::default();
    if let Some(n) = config.max_iters {
        options.stop.max_iters = n;
    }
    if let Some(t) = config.tol {
        options.stop.rel_tol = t;
    }
    for (key, value) in &config.overrides {
        let scaled = |sched: &StepSchedule, scale: Option<f64>, offset: Option<f64>| {
            let (s0, o0) = match *sched {
                StepSchedule::ScaledHarmonic { scale, offset } => (scale, offset),
                StepSchedule::Harmonic { offset } => (1.0, offset),
                StepSchedule::Constant { value } => (value, 0.0),
            };
            StepSchedule::ScaledHarmonic {
                scale: scale.unwrap_or(s0),
                offset: offset.unwrap_or(o0),
            }
        };
        match key.as_str() {
            "sched.lambda_scale" => {
                options.schedules.lambda = scaled(&options.schedules.lambda, Some(*value), None)
            }
            "sched.lambda_offset" => {
                options.schedules.lambda = scaled(&options.schedules.lambda, None, Some(*value))
            }
            "sched.mu_scale" => {
                options.schedules.mu = scaled(&options.schedules.mu, Some(*value), None)
            }
            "sched.mu_offset" => {
                options.schedules.mu = scaled(&options.schedules.mu, None, Some(*value))
            }
            "sched.nu_scale" => {
                options.schedules.nu = scaled(&options.schedules.nu, Some(*value), None)
            }
            "sched.nu_offset" => {
                options.schedules.nu = scaled(&options.schedules.nu, None, Some(*value))
            }
            "stop.window" => options.stop.window = *value as usize,
            "stop.max_iters" => options.stop.max_iters = *value as usize,
            "stop.rel_tol" => options.stop.rel_tol = *value,
            other if other.starts_with("sched.") || other.starts_with("stop.") => {
                return Err(CliError::Validation(format!("unknown solver knob {other:?}")))
            }
            _ => {}
        }
    }
    Ok(options)
}

/// Hash of the resolved experiment: document contents, overrides, solver
/// selection and numeric knobs. Artifact filenames derive from it.
pub fn config_hash(config: &ExperimentConfig, instance_text: &str, params_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(instance_text.as_bytes());
    hasher.update([0]);
    hasher.update(params_text.as_bytes());
    hasher.update([0]);
    for (k, v) in &config.overrides {
        hasher.update(k.as_bytes());
        hasher.update(v.to_le_bytes());
    }
    hasher.update(config.solver.to_string().as_bytes());
    if let Some(s) = &config.sweep {
        hasher.update(s.weight.to_string().as_bytes());
        hasher.update(s.from.to_le_bytes());
        hasher.update(s.to.to_le_bytes());
        hasher.update(s.step.to_le_bytes());
    }
    hasher.update(config.seed.to_le_bytes());
    hasher.update(config.max_iters.unwrap_or(0).to_le_bytes());
    hasher.update(config.tol.unwrap_or(0.0).to_le_bytes());
    let digest = hasher.finalize();
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

/// Loads and validates instance plus parameters, returning a printable
/// report of the derived sets, unit-converted values and the feasibility
/// probe result.
pub fn cmd_validate(config: &ExperimentConfig) -> Result<String, CliError> {
    let loaded = load(config)?;
    let inst = &loaded.inst;
    let params = &loaded.params;
    let sets = inst.derive_sets();
    oracle::check_feasible(inst, &sets, params)?;

    let mut out = String::new();
    out.push_str(&format!(
        "OK, {} sources, {} links, {} (link, source) pairs\n",
        inst.sensor_count(),
        inst.link_count(),
        sets.pair_count()
    ));
    out.push_str("links:\n");
    for (li, link) in inst.links.iter().enumerate() {
        let members: Vec<&str> = sets.sources_on_link[li]
            .iter()
            .map(|&s| inst.sensor_node(s).id.as_str())
            .collect();
        out.push_str(&format!(
            "  {}: {} -> {}, capacity {:.0} bit/s, distance {} m, sources {{{}}}\n",
            link.id,
            inst.nodes[link.tail].id,
            inst.nodes[link.head].id,
            link.capacity_bps,
            link.distance_m,
            members.join(", ")
        ));
    }
    out.push_str("sources:\n");
    for i in 0..inst.sensor_count() {
        let s = SensorId(i);
        let route: Vec<&str> = sets.links_of_source[i]
            .iter()
            .map(|&l| inst.links[l.0].id.as_str())
            .collect();
        let relays: Vec<&str> = sets.relays_of_source[i]
            .iter()
            .map(|&r| inst.sensor_node(r).id.as_str())
            .collect();
        out.push_str(&format!(
            "  {}: energy {} J, route [{}], relays {{{}}}\n",
            inst.sensor_node(s).id,
            inst.sensor_energy(s),
            route.join(", "),
            relays.join(", ")
        ));
    }
    out.push_str(&format!(
        "radio: tx electronics {:.3e} J/bit, amplifier {:.3e} J/bit/m^theta, theta {}, rx {:.3e} J/bit\n",
        inst.radio.psi_j_per_bit,
        inst.radio.sigma_j_per_bit_mtheta,
        inst.radio.theta,
        inst.radio.rx_j_per_bit
    ));
    out.push_str(&format!(
        "params: rate box [{:.0}, {:.0}] bit/s, reliability box [{}, {}], alpha {}, beta {}, kappa {}, varpi {:.4e}\n",
        params.x_min,
        params.x_max,
        params.rel_min,
        params.rel_max,
        params.alpha,
        params.beta,
        params.kappa,
        params.varpi
    ));
    out.push_str("feasibility probe: satisfied at minimum rates\n");
    Ok(out)
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct RunArtifacts {
    pub summary_path: PathBuf,
    pub trace_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
    pub summary: serde_json::Value,
    pub converged: bool,
}

/// Residual floor a finished run must meet to count as converged
/// (natural/log units on the averaged primal).
const RESIDUAL_FLOOR: f64 = 1e-2;

fn run_converged(trace: &SolveTrace) -> bool {
    match trace.records.last() {
        None => false,
        Some(rec) => {
            rec.residuals_avg.capacity_log <= RESIDUAL_FLOOR
                && rec.residuals_avg.reliability_violation <= RESIDUAL_FLOOR
                && rec.residuals_avg.energy_violation_w <= RESIDUAL_FLOOR
        }
    }
}

/// Runs the configured solver(s) and writes trace CSV, plot CSV and a
/// JSON summary into the output directory. Solver trouble still writes
/// the artifacts before being reported as non-convergence.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunArtifacts, CliError> {
    let loaded = load(config)?;
    let inst = &loaded.inst;
    let params = &loaded.params;
    let sets = inst.derive_sets();
    let hash = config_hash(config, &loaded.instance_text, &loaded.params_text);
    fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;

    let mut summary = serde_json::Map::new();
    summary.insert("config_hash".into(), json!(hash));
    summary.insert("solver".into(), json!(config.solver.to_string()));
    summary.insert("seed".into(), json!(config.seed));

    let mut trace_path = None;
    let mut plot_path = None;
    let mut converged = true;
    let mut failure: Option<String> = None;

    let trace = if config.solver != SolverChoice::Oracle {
        params.validate_for_solver()?;
        let trace = sdd_solve(inst, &sets, params, &sdd_options(config)?)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let tp = config.out_dir.join(format!("run-{hash}.trace.csv"));
        let mut buf = Vec::new();
        sdd::write_trace_csv(&trace, inst, &sets, &mut buf).map_err(|e| io_err(&tp, e))?;
        fs::write(&tp, buf).map_err(|e| io_err(&tp, e))?;
        let pp = config.out_dir.join(format!("run-{hash}.plot.csv"));
        let mut buf = Vec::new();
        sdd::write_plot_csv(&trace, inst, &mut buf).map_err(|e| io_err(&pp, e))?;
        fs::write(&pp, buf).map_err(|e| io_err(&pp, e))?;
        trace_path = Some(tp);
        plot_path = Some(pp);
        summary.insert("sdd".into(), sdd::summary_json(&trace, inst, &sets, params));
        if !run_converged(&trace) {
            converged = false;
            failure = Some(format!(
                "averaged residuals above {RESIDUAL_FLOOR:.0e} after {} iterations",
                trace.records.len()
            ));
        }
        Some(trace)
    } else {
        None
    };

    let oracle_solution = if config.solver != SolverChoice::Sdd {
        let tol = config.tol.unwrap_or(ORACLE_TOL_DEFAULT);
        let sol = oracle::oracle_solve(inst, &sets, params, tol)?;
        summary.insert(
            "oracle".into(),
            json!({
                "value": sol.value,
                "dual_bound": sol.dual_bound,
                "x_bps": sol.primal.x,
                "reliability": sol.primal.reliability,
                "network_lifetime_s": inst.network_lifetime(&sets, &sol.primal.x).ok(),
                "inner_iterations": sol.inner_iterations,
                "outer_iterations": sol.outer_iterations,
                "final_pg_norm": sol.final_pg_norm,
                "max_violation": sol.max_violation,
                "stalled": sol.stalled,
            }),
        );
        if sol.stalled {
            converged = false;
            failure.get_or_insert_with(|| "oracle reported stalled progress".into());
        }
        Some(sol)
    } else {
        None
    };

    if let (Some(trace), Some(sol)) = (&trace, &oracle_solution) {
        let gap = oracle::duality_gap(
            inst,
            &sets,
            params,
            &trace.average,
            &trace.dual,
            RESIDUAL_FLOOR,
        );
        match gap {
            Ok(g) => {
                summary.insert(
                    "duality_gap".into(),
                    json!({
                        "absolute": g,
                        "relative_to_oracle": g / sol.value.abs().max(1e-300),
                    }),
                );
            }
            Err(e) => {
                summary.insert("duality_gap".into(), json!({ "error": e.to_string() }));
            }
        }
    }

    summary.insert("converged".into(), json!(converged));
    let summary = serde_json::Value::Object(summary);
    let sp = config.out_dir.join(format!("run-{hash}.summary.json"));
    fs::write(
        &sp,
        serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
    )
    .map_err(|e| io_err(&sp, e))?;

    if let Some(msg) = failure {
        return Err(CliError::NonConvergence(msg));
    }
    Ok(RunArtifacts {
        summary_path: sp,
        trace_path,
        plot_path,
        summary,
        converged,
    })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub weight: f64,
    pub rate_utility_sum: f64,
    pub reliability_utility_sum: f64,
    pub network_lifetime_s: f64,
    pub total_utility: f64,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct SweepArtifacts {
    pub table_path: PathBuf,
    pub summary_path: PathBuf,
    pub rows: Vec<SweepRow>,
    pub summary: serde_json::Value,
}

/// Unit-weight utility sums: the sweep columns report Σ U_rate and Σ U_rel
/// with the γφ weighting removed, so the curves reflect the quantities
/// themselves rather than the swept weight.
fn utility_sums(
    inst: &NetworkInstance,
    params: &TradeoffParams,
    x: &[f64],
    rel: &[f64],
) -> (f64, f64) {
    let mut rate = 0.0;
    let mut reliability = 0.0;
    for i in 0..inst.sensor_count() {
        let obj = params.source_objective(SensorId(i));
        rate += obj.rate_utility(x[i].clamp(params.x_min, params.x_max));
        reliability += obj.reliability_utility(rel[i].clamp(params.rel_min, params.rel_max));
    }
    (rate, reliability)
}

fn sweep_point(
    config: &ExperimentConfig,
    inst: &NetworkInstance,
    base: &TradeoffParams,
    weight: SweepWeight,
    value: f64,
) -> SweepRow {
    let sets = inst.derive_sets();
    let mut params = base.clone();
    match weight {
        SweepWeight::Gamma => params.gamma.iter_mut().for_each(|g| *g = value),
        SweepWeight::Phi => params.phi.iter_mut().for_each(|p| *p = value),
    }
    let failed = |msg: String| SweepRow {
        weight: value,
        rate_utility_sum: f64::NAN,
        reliability_utility_sum: f64::NAN,
        network_lifetime_s: f64::NAN,
        total_utility: f64::NAN,
        converged: false,
        error: Some(msg),
    };
    if let Err(e) = params.validate_for_solver() {
        return failed(e.to_string());
    }
    let (x, rel, total, converged) = if config.solver == SolverChoice::Oracle {
        match oracle::oracle_solve(inst, &sets, &params, config.tol.unwrap_or(ORACLE_TOL_DEFAULT))
        {
            Ok(sol) => (
                sol.primal.x.clone(),
                sol.primal.reliability.clone(),
                sol.value,
                !sol.stalled,
            ),
            Err(e) => return failed(e.to_string()),
        }
    } else {
        let options = match sdd_options(config) {
            Ok(o) => o,
            Err(e) => return failed(e.to_string()),
        };
        match sdd_solve(inst, &sets, &params, &options) {
            Ok(trace) => (
                trace.average.x.clone(),
                trace.average.reliability.clone(),
                trace.average_utility,
                run_converged(&trace),
            ),
            Err(e) => return failed(e.to_string()),
        }
    };
    let (rate, reliability) = utility_sums(inst, &params, &x, &rel);
    let lifetime = inst.network_lifetime(&sets, &x).unwrap_or(f64::NAN);
    SweepRow {
        weight: value,
        rate_utility_sum: rate,
        reliability_utility_sum: reliability,
        network_lifetime_s: lifetime,
        total_utility: total,
        converged,
        error: None,
    }
}

/// Monotonicity slack in utility units; lifetimes use the same slack
/// relatively.
const SWEEP_SLACK: f64 = 1e-3;

fn monotone_flags(weight: SweepWeight, rows: &[SweepRow]) -> serde_json::Value {
    let ok_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let mut rate_nondecreasing = true;
    let mut reliability_nonincreasing = true;
    let mut lifetime_nonincreasing = true;
    for w in ok_rows.windows(2) {
        if w[1].rate_utility_sum < w[0].rate_utility_sum - SWEEP_SLACK {
            rate_nondecreasing = false;
        }
        if w[1].reliability_utility_sum > w[0].reliability_utility_sum + SWEEP_SLACK {
            reliability_nonincreasing = false;
        }
        if w[1].network_lifetime_s > w[0].network_lifetime_s * (1.0 + SWEEP_SLACK) {
            lifetime_nonincreasing = false;
        }
    }
    let mut largest_drop_step: Option<usize> = None;
    if ok_rows.len() >= 2 {
        let drops: Vec<f64> = ok_rows
            .windows(2)
            .map(|w| w[0].network_lifetime_s - w[1].network_lifetime_s)
            .collect();
        largest_drop_step = drops
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i);
    }
    match weight {
        SweepWeight::Phi => json!({
            "rate_utility_nondecreasing": rate_nondecreasing,
            "reliability_utility_nonincreasing": reliability_nonincreasing,
        }),
        SweepWeight::Gamma => json!({
            "rate_utility_nondecreasing": rate_nondecreasing,
            "lifetime_nonincreasing": lifetime_nonincreasing,
            "largest_lifetime_drop_step": largest_drop_step,
        }),
    }
}

/// Runs the solver at each sweep point (points run concurrently), writes
/// the sweep table CSV and a JSON summary with the monotonicity flags.
/// Per-point failures are recorded in their rows and the sweep continues.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<SweepArtifacts, CliError> {
    let sweep = config
        .sweep
        .ok_or_else(|| CliError::Validation("sweep subcommand needs a sweep spec".into()))?;
    let loaded = load(config)?;
    let inst = &loaded.inst;
    let hash = config_hash(config, &loaded.instance_text, &loaded.params_text);
    fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;

    let points = sweep.points();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&value| sweep_point(config, inst, &loaded.params, sweep.weight, value))
        .collect();

    let table_path = config.out_dir.join(format!("sweep-{hash}.csv"));
    let mut csv = String::from(
        "weight,rate_utility_sum,reliability_utility_sum,network_lifetime_s,total_utility,converged,error\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{},{}\n",
            row.weight,
            row.rate_utility_sum,
            row.reliability_utility_sum,
            row.network_lifetime_s,
            row.total_utility,
            row.converged,
            row.error.as_deref().unwrap_or("")
        ));
    }
    fs::write(&table_path, csv).map_err(|e| io_err(&table_path, e))?;

    let flags = monotone_flags(sweep.weight, &rows);
    let summary = json!({
        "config_hash": hash,
        "swept_weight": sweep.weight.to_string(),
        "from": sweep.from,
        "to": sweep.to,
        "step": sweep.step,
        "points": rows.len(),
        "failures": rows.iter().filter(|r| r.error.is_some()).count(),
        "monotonicity": flags,
    });
    let summary_path = config.out_dir.join(format!("sweep-{hash}.summary.json"));
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
    )
    .map_err(|e| io_err(&summary_path, e))?;

    Ok(SweepArtifacts {
        table_path,
        summary_path,
        rows,
        summary,
    })
}
