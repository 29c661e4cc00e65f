//! TOML run configuration.
//!
//! Every table rejects unknown keys. Overrides are `dotted.key=value` pairs
//! applied to the parsed document before it is interpreted, so they obey the
//! same validation as the file itself.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::io::initial::{InitialData, InitialKind};
use crate::linesearch::StepBounds;
use crate::preconditioner::PreconditionerKind;
use crate::problem::{Parameters, ProblemSpec, RotationPolicy, Trap};
use crate::solver::{Criterion, Method, SolverOptions, Stopping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryName {
    Periodic,
    Dirichlet,
}

impl From<BoundaryName> for Boundary {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Dirichlet => Boundary::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Error,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "cubic")]
    pub exponent: f64,
    pub beta: f64,
    pub omega: f64,
    /// Angular velocity `Omega`.
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "strict")]
    pub rotation_policy: PolicyName,
}

fn cubic() -> f64 {
    3.0
}

fn strict() -> PolicyName {
    PolicyName::Error
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrapKind {
    None,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub kind: TrapKind,
    /// `V = sum gamma_j^2 x_j^2 / 2`
    pub gammas: Vec<f64>,
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection {
            kind: TrapKind::None,
            gammas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub bounds: Vec<[f64; 2]>,
    /// Modes per axis; give either this or `spacing`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<usize>>,
    /// Uniform mesh size `h`, turned into `modes = L / h` per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default = "periodic")]
    pub boundary: BoundaryName,
}

fn periodic() -> BoundaryName {
    BoundaryName::Periodic
}

impl GridSection {
    pub fn modes(&self) -> Result<Vec<usize>> {
        match (&self.modes, self.spacing) {
            (Some(m), None) => Ok(m.clone()),
            (None, Some(h)) if h > 0.0 => self
                .bounds
                .iter()
                .map(|[lo, hi]| {
                    let n = (hi - lo) / h;
                    let rounded = n.round();
                    if (n - rounded).abs() > 1e-9 * n.max(1.0) {
                        return Err(Error::Config(format!(
                            "spacing {h} does not divide the axis ({lo}, {hi})"
                        )));
                    }
                    Ok(rounded as usize)
                })
                .collect(),
            _ => Err(Error::Config(
                "grid needs exactly one of `modes` or a positive `spacing`".into(),
            )),
        }
    }

    pub fn build(&self) -> Result<Arc<Grid>> {
        let bounds: Vec<(f64, f64)> = self.bounds.iter().map(|[a, b]| (*a, *b)).collect();
        Grid::new(&bounds, &self.modes()?, self.boundary.into())
    }
}

/// Flat mirror of [`SolverOptions`] for configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: Method,
    pub time_step: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub criterion: Criterion,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub stabilization_margin: f64,
    pub preconditioner: PreconditionerKind,
    pub bracket_floor: f64,
    pub bracket_growth: f64,
    pub brent_tolerance: f64,
    pub brent_max_evals: usize,
    pub record_every: usize,
    pub check_admissibility: bool,
}

impl From<&SolverOptions> for SolverSection {
    fn from(o: &SolverOptions) -> Self {
        SolverSection {
            method: o.method,
            time_step: o.time_step,
            initial_step: o.steps.initial,
            min_step: o.steps.min,
            max_step: o.steps.max,
            criterion: o.stopping.criterion,
            tolerance: o.stopping.tolerance,
            max_iterations: o.max_iterations,
            stabilization_margin: o.stabilization_margin,
            preconditioner: o.preconditioner,
            bracket_floor: o.bracket_floor,
            bracket_growth: o.bracket_growth,
            brent_tolerance: o.brent_tolerance,
            brent_max_evals: o.brent_max_evals,
            record_every: o.record_every,
            check_admissibility: o.check_admissibility,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection::from(&SolverOptions::default())
    }
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            method: self.method,
            time_step: self.time_step,
            steps: StepBounds {
                initial: self.initial_step,
                min: self.min_step,
                max: self.max_step,
            },
            stopping: Stopping {
                criterion: self.criterion,
                tolerance: self.tolerance,
            },
            max_iterations: self.max_iterations,
            stabilization_margin: self.stabilization_margin,
            preconditioner: self.preconditioner,
            bracket_floor: self.bracket_floor,
            bracket_growth: self.bracket_growth,
            brent_tolerance: self.brent_tolerance,
            brent_max_evals: self.brent_max_evals,
            record_every: self.record_every,
            check_admissibility: self.check_admissibility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub summary: bool,
    pub history: bool,
    /// Binary dump of the final state.
    pub fields: bool,
    /// `x, y, |phi|^2` text export for contour plots.
    pub density: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("out"),
            summary: true,
            history: true,
            fields: true,
            density: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub seeds: Vec<InitialKind>,
    /// Worker threads; 0 runs one thread per seed.
    pub threads: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            seeds: InitialKind::SEEDS.to_vec(),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub methods: Vec<Method>,
    /// Angular velocities to tabulate; empty means the configured one.
    pub rotations: Vec<f64>,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            methods: vec![Method::GradientFlow, Method::Pbb, Method::Pcg],
            rotations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub problem: ProblemSection,
    #[serde(default)]
    pub trap: TrapSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    /// Solver for the mass-constrained energy problem of `relation`.
    #[serde(default = "energy_solver")]
    pub energy_solver: SolverSection,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub bench: BenchSection,
}

fn energy_solver() -> SolverSection {
    SolverSection {
        method: Method::Pcg,
        ..Default::default()
    }
}

impl RunConfig {
    pub fn trap(&self) -> Trap {
        match self.trap.kind {
            TrapKind::None => Trap::None,
            TrapKind::Harmonic => Trap::Harmonic(self.trap.gammas.clone()),
        }
    }

    pub fn parameters(&self) -> Parameters {
        Parameters {
            exponent: self.problem.exponent,
            beta: self.problem.beta,
            omega: self.problem.omega,
            rotation: self.problem.rotation,
        }
    }

    pub fn rotation_policy(&self) -> RotationPolicy {
        match self.problem.rotation_policy {
            PolicyName::Error => RotationPolicy::Error,
            PolicyName::Warn => RotationPolicy::Warn,
        }
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        let grid = self.grid.build()?;
        ProblemSpec::with_policy(grid, self.parameters(), self.trap(), self.rotation_policy())
    }

    pub fn options(&self) -> SolverOptions {
        self.solver.options()
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        let semantic = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.spec().map_err(semantic)?;
        self.options().validate().map_err(semantic)?;
        self.energy_solver.options().validate().map_err(semantic)?;
        if self.energy_solver.method == Method::GradientFlow {
            return Err(Error::Config("energy_solver.method must be pbb or pcg".into()));
        }
        if self.initial.kind == InitialKind::File && self.initial.path.is_none() {
            return Err(Error::Config("initial.kind = \"file\" needs initial.path".into()));
        }
        Ok(())
    }

    /// Annotated TOML with every key at its default value.
    pub fn reference() -> String {
        let mut out = String::from(REFERENCE_HEADER);
        let example = RunConfig {
            title: Some("example".into()),
            problem: ProblemSection {
                exponent: cubic(),
                beta: -1.0,
                omega: 1.0,
                rotation: 0.0,
                rotation_policy: strict(),
            },
            trap: TrapSection::default(),
            grid: GridSection {
                bounds: vec![[-32.0, 32.0]],
                modes: Some(vec![1024]),
                spacing: None,
                boundary: periodic(),
            },
            solver: SolverSection::default(),
            energy_solver: energy_solver(),
            initial: InitialData::default(),
            output: OutputSection::default(),
            sweep: SweepSection::default(),
            bench: BenchSection::default(),
        };
        out.push_str(&toml::to_string(&example).expect("config serializes"));
        out
    }
}

const REFERENCE_HEADER: &str = "\
# Run configuration reference. `problem.beta`, `problem.omega` and
# `grid.bounds` are required; everything else shows its default.
#
# problem.rotation         angular velocity Omega (needs d >= 2 when nonzero)
# problem.rotation_policy  error | warn when |Omega| >= min(trap gammas)
# trap.kind                none | harmonic (gammas: one rate per axis)
# grid                     modes = [...] or spacing = h; boundary = periodic | dirichlet
# solver.method            gfalm | pbb | pcg
# solver.criterion         residual | energy
# solver.preconditioner    combined | laplacian | potential | identity
# initial.kind             a | b | c | d | e | f | gaussian | sine | file
# output.*                 which artifacts to write into output.directory
";

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

/// Parses `text`, applies `key=value` overrides and validates the result.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| syntax(text, &e))?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    let config = RunConfig::deserialize(toml::Value::Table(doc)).map_err(|e| Error::Config(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

fn syntax(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::ConfigSyntax {
        line,
        message: e.message().to_string(),
    }
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let raw = raw.trim();
    // bare words that are not TOML values are taken as strings
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut table = doc;
    for part in parents {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {part} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
