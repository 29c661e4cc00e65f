//! Drivers behind the `rnls-ground` command: single solves, initial-data
//! sweeps, the action/energy relation check and iteration benchmarks.

pub mod output;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use serde::Serialize;

use rnls_core::energy::{mass_of, solve_energy_ground_state};
use rnls_core::functionals::FunctionalReport;
use rnls_core::io::initial::{make_initial_data, InitialData, InitialKind};
use rnls_core::io::RunConfig;
use rnls_core::solver::{Method, SolveResult, SolverOptions, StopReason};
use rnls_core::{solve_ground_state, Error, ProblemSpec, Regime};

use crate::output::{ensure_dir, write_json, write_run, Emit, SUMMARY};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::NoConvergence(_) => EXIT_NO_CONVERGENCE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => CliError::Io(e.to_string()),
            Error::Diverged { .. } | Error::NoConvergence { .. } | Error::NonPositiveQuadratic(_) => {
                CliError::NoConvergence(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Reads and validates a config file with overrides applied.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    rnls_core::io::parse_config_with(&text, overrides).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub title: Option<String>,
    pub regime: &'static str,
    pub method: Method,
    pub initial: &'static str,
    pub exponent: f64,
    pub beta: f64,
    pub omega: f64,
    pub rotation: f64,
    pub modes: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    /// `S(phi_g)`
    pub action: f64,
    /// `Q(phi_g)`
    pub quadratic: f64,
    /// `K(phi_g)`
    pub nehari: f64,
    pub energy: f64,
    pub mass: f64,
    /// Multiplier of the run: `lambda(u*)` when focusing.
    pub multiplier: f64,
    pub chemical_potential: Option<f64>,
    /// Residual of the solver's own stopping test.
    pub residual: f64,
    pub functionals: FunctionalReport,
    pub iterations: usize,
    pub wall_time: f64,
    pub stop_reason: StopReason,
    pub converged: bool,
}

impl RunSummary {
    fn new(config: &RunConfig, spec: &ProblemSpec, method: Method, initial: InitialKind, r: &SolveResult) -> Self {
        let regime = match spec.regime() {
            Some(Regime::Focusing) => "focusing",
            Some(Regime::Defocusing) => "defocusing",
            None => "linear",
        };
        RunSummary {
            title: config.title.clone(),
            regime,
            method,
            initial: initial.name(),
            exponent: spec.exponent(),
            beta: spec.beta(),
            omega: spec.omega(),
            rotation: spec.rotation(),
            modes: spec.grid().modes(),
            bounds: spec.grid().bounds(),
            action: r.report.action,
            quadratic: r.report.quadratic,
            nehari: r.report.nehari,
            energy: r.report.energy,
            mass: r.report.mass,
            multiplier: r.multiplier,
            chemical_potential: r.chemical_potential,
            residual: r.residual,
            functionals: r.report,
            iterations: r.iterations,
            wall_time: r.elapsed,
            stop_reason: r.stop_reason,
            converged: r.stop_reason.converged(),
        }
    }
}

fn emit_flags(config: &RunConfig) -> Emit {
    Emit {
        summary: config.output.summary,
        history: config.output.history,
        fields: config.output.fields,
        density: config.output.density,
    }
}

/// Runs one ground-state computation and writes its artifacts into `dir`.
fn run_one(
    config: &RunConfig,
    spec: &ProblemSpec,
    opts: &SolverOptions,
    initial: &InitialData,
    dir: &Path,
) -> Result<(RunSummary, SolveResult), CliError> {
    let u0 = make_initial_data(initial, spec)?;
    info!(
        "solving {:?} with {:?}, initial data {}, Omega = {}",
        spec.regime(),
        opts.method,
        initial.kind.name(),
        spec.rotation()
    );
    let result = solve_ground_state(spec, &u0, opts)?;
    let summary = RunSummary::new(config, spec, opts.method, initial.kind, &result);
    ensure_dir(dir)?;
    let emit = emit_flags(config);
    write_run(dir, &result, &emit)?;
    if emit.summary {
        write_json(&dir.join(SUMMARY), &summary)?;
    }
    info!(
        "S = {:.12}, {} iterations, {:.2} s, {:?}",
        summary.action, summary.iterations, summary.wall_time, summary.stop_reason
    );
    Ok((summary, result))
}

fn require_converged(summary: &RunSummary) -> Result<(), CliError> {
    if summary.converged {
        Ok(())
    } else {
        Err(CliError::NoConvergence(format!(
            "stopped after {} iterations ({:?}) with residual {:e}",
            summary.iterations, summary.stop_reason, summary.residual
        )))
    }
}

pub fn solve(config: &RunConfig) -> Result<RunSummary, CliError> {
    let spec = config.spec()?;
    let (summary, _) = run_one(config, &spec, &config.options(), &config.initial, &config.output.directory)?;
    require_converged(&summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub initial: &'static str,
    pub action: Option<f64>,
    pub iterations: Option<usize>,
    pub stop_reason: Option<StopReason>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub entries: Vec<SweepEntry>,
    /// Seed with the smallest action among converged runs.
    pub selected: Option<&'static str>,
    pub action: Option<f64>,
}

/// Index of the smallest action; earlier entries win ties.
pub fn select_minimum(actions: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, a) in actions.iter().enumerate() {
        if let Some(a) = *a {
            if best.is_none_or(|(_, b)| a < b) {
                best = Some((i, a));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Solves from each seed (one directory per seed) and selects the minimum action.
pub fn sweep(config: &RunConfig) -> Result<SweepSummary, CliError> {
    let spec = config.spec()?;
    let opts = config.options();
    let seeds = config.sweep.seeds.clone();
    if seeds.is_empty() {
        return Err(CliError::Config("sweep.seeds is empty".into()));
    }
    let root = ensure_dir(&config.output.directory)?;
    let workers = match config.sweep.threads {
        0 => seeds.len(),
        n => n.min(seeds.len()),
    };
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<SweepEntry>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&kind) = seeds.get(i) else { break };
                let initial = InitialData {
                    kind,
                    ..config.initial.clone()
                };
                let entry = match run_one(config, &spec, &opts, &initial, &root.join(kind.name())) {
                    Ok((s, _)) => SweepEntry {
                        initial: kind.name(),
                        action: Some(s.action),
                        iterations: Some(s.iterations),
                        stop_reason: Some(s.stop_reason),
                        error: None,
                    },
                    Err(e) => {
                        warn!("seed {}: {e}", kind.name());
                        SweepEntry {
                            initial: kind.name(),
                            action: None,
                            iterations: None,
                            stop_reason: None,
                            error: Some(e.to_string()),
                        }
                    }
                };
                *slots[i].lock().expect("slot") = Some(entry);
            });
        }
    });
    let entries: Vec<SweepEntry> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot").expect("every seed ran"))
        .collect();
    let actions: Vec<Option<f64>> = entries
        .iter()
        .map(|e| match e.stop_reason {
            Some(r) if r.converged() => e.action,
            _ => None,
        })
        .collect();
    let chosen = select_minimum(&actions);
    let summary = SweepSummary {
        selected: chosen.map(|i| entries[i].initial),
        action: chosen.and_then(|i| entries[i].action),
        entries,
    };
    write_json(&root.join("sweep.json"), &summary)?;
    if summary.selected.is_none() {
        return Err(CliError::NoConvergence("no seed converged".into()));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationSummary {
    pub omega: f64,
    pub rotation: f64,
    /// `S(phi_g)` from the action problem.
    pub action: f64,
    /// `m = ||phi_g||^2`
    pub mass: f64,
    /// `E(u_g)` from the mass-constrained problem.
    pub energy: f64,
    /// `E(u_g) + omega m`
    pub energy_plus_omega_mass: f64,
    /// Chemical potential of `u_g`.
    pub chemical_potential: f64,
    pub action_gap: f64,
    pub frequency_gap: f64,
    pub action_iterations: usize,
    pub energy_iterations: usize,
    pub converged: bool,
}

/// Action ground state, its mass, then the energy ground state of that mass.
pub fn relation(config: &RunConfig) -> Result<RelationSummary, CliError> {
    let spec = config.spec()?;
    let root = ensure_dir(&config.output.directory)?;
    let (action_run, phi) = run_one(config, &spec, &config.options(), &config.initial, &root.join("action"))?;
    require_converged(&action_run)?;
    let mass = mass_of(&phi.state);
    let opts = config.energy_solver.options();
    // the action ground state already has mass m
    let energy = solve_energy_ground_state(&spec, mass, &phi.state, &opts)?;
    let dir = ensure_dir(&root.join("energy"))?;
    write_run(&dir, &energy, &emit_flags(config))?;
    let mu = energy.chemical_potential.expect("mass-constrained runs report a chemical potential");
    let shifted = energy.objective + spec.omega() * mass;
    let summary = RelationSummary {
        omega: spec.omega(),
        rotation: spec.rotation(),
        action: action_run.action,
        mass,
        energy: energy.objective,
        energy_plus_omega_mass: shifted,
        chemical_potential: mu,
        action_gap: (action_run.action - shifted).abs(),
        frequency_gap: (mu - spec.omega()).abs(),
        action_iterations: action_run.iterations,
        energy_iterations: energy.iterations,
        converged: energy.stop_reason.converged(),
    };
    write_json(&root.join("relation.json"), &summary)?;
    if !summary.converged {
        return Err(CliError::NoConvergence(format!(
            "energy problem stopped with {:?}",
            energy.stop_reason
        )));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub rotation: f64,
    pub iterations: usize,
    pub cpu_seconds: f64,
    pub action: f64,
    /// Last objective difference.
    pub energy_error: f64,
    pub residual: f64,
    pub stop_reason: StopReason,
}

/// Iterations and timings per method and angular velocity.
pub fn bench(config: &RunConfig) -> Result<Vec<BenchRow>, CliError> {
    let base = config.spec()?;
    let root = ensure_dir(&config.output.directory)?;
    let rotations = if config.bench.rotations.is_empty() {
        vec![base.rotation()]
    } else {
        config.bench.rotations.clone()
    };
    let mut rows = Vec::new();
    for &rotation in &rotations {
        let spec = base.with_frequencies(base.omega(), rotation)?;
        for &method in &config.bench.methods {
            let opts = SolverOptions {
                method,
                ..config.options()
            };
            let dir = root.join(format!("{}-{rotation}", method_name(method)));
            let (s, r) = run_one(config, &spec, &opts, &config.initial, &dir)?;
            rows.push(BenchRow {
                method,
                rotation,
                iterations: s.iterations,
                cpu_seconds: s.wall_time,
                action: s.action,
                energy_error: r.history.last().map_or(f64::NAN, |h| h.difference),
                residual: s.residual,
                stop_reason: s.stop_reason,
            });
        }
    }
    let path = root.join("bench.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for row in &rows {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(rows)
}

pub fn method_name(method: Method) -> &'static str {
    match method {
        Method::GradientFlow => "gfalm",
        Method::Pbb => "pbb",
        Method::Pcg => "pcg",
    }
}

/// `output.directory=...` with the path quoted for TOML.
pub fn output_override(dir: &Path) -> String {
    format!("output.directory={}", toml_string(&dir.to_string_lossy()))
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}
