//! Run configuration: one JSON document with a `system` section, a task
//! name, an optional block per task and an `output` section.
//!
//! Parsing happens in two passes. `serde_json` rejects malformed documents
//! and unknown keys (with line and column), then [`RunConfig::from_raw`]
//! checks values and reports the offending field path.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hamflow_core::canonical::{CatalogGenerator, DomainBox};
use hamflow_core::dynamics::{FlowKind, IntegratorConfig, Method, RateConvention};
use hamflow_core::hierarchy::TruncationOrder;
use hamflow_core::{Lambda, PhaseState, Potential, PotentialFamily, SystemParams};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Eval,
    Integrate,
    Verify,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Eval => "eval",
            Task::Integrate => "integrate",
            Task::Verify => "verify",
            Task::Sweep => "sweep",
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eval" => Ok(Task::Eval),
            "integrate" => Ok(Task::Integrate),
            "verify" => Ok(Task::Verify),
            "sweep" => Ok(Task::Sweep),
            other => Err(format!(
                "unknown task '{other}' (expected eval, integrate, verify or sweep)"
            )),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Verification suites understood by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Legendre,
    Hamilton,
    Series,
    Reduction,
    Brackets,
    Energy,
    Coincidence,
    Rescaling,
    Resummation,
    Canonical,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Legendre,
        Suite::Hamilton,
        Suite::Series,
        Suite::Reduction,
        Suite::Brackets,
        Suite::Energy,
        Suite::Coincidence,
        Suite::Rescaling,
        Suite::Resummation,
        Suite::Canonical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Legendre => "legendre",
            Suite::Hamilton => "hamilton",
            Suite::Series => "series",
            Suite::Reduction => "reduction",
            Suite::Brackets => "brackets",
            Suite::Energy => "energy",
            Suite::Coincidence => "coincidence",
            Suite::Rescaling => "rescaling",
            Suite::Resummation => "resummation",
            Suite::Canonical => "canonical",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Parses `standard`, `multiplicative` or `hierarchy_<j>`.
pub fn parse_flow_kind(name: &str) -> Option<FlowKind> {
    match name {
        "standard" => Some(FlowKind::Standard),
        "multiplicative" => Some(FlowKind::Multiplicative),
        _ => {
            let j: u32 = name.strip_prefix("hierarchy_")?.parse().ok()?;
            (j >= 1).then_some(FlowKind::Hierarchy(j))
        }
    }
}

// ---------------------------------------------------------------------------
// Raw document

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    task: Option<String>,
    eval: Option<RawEval>,
    integrate: Option<RawIntegrate>,
    verify: Option<RawVerify>,
    sweep: Option<RawSweep>,
    canonical: Option<RawCanonical>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    potential: RawPotential,
    mass: f64,
    lambda: RawLambda,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    family: String,
    #[serde(default)]
    coefficients: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawLambda {
    Number(f64),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    truncation: u32,
    states: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrate {
    #[serde(default = "default_method")]
    method: String,
    dt: f64,
    t_end: f64,
    start: [f64; 2],
    flows: Vec<String>,
}

fn default_method() -> String {
    "rk4".to_owned()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    suites: Vec<String>,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    rate_convention: Option<String>,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    t_end: Option<f64>,
    #[serde(default)]
    start: Option<[f64; 2]>,
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    lambdas: Vec<f64>,
    state: [f64; 2],
    #[serde(default = "default_orders")]
    hierarchy_orders: Vec<u32>,
}

fn default_orders() -> Vec<u32> {
    vec![1, 2, 3]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCanonical {
    generator: String,
    #[serde(default)]
    parameter: Option<f64>,
    #[serde(default)]
    domain: Option<RawDomain>,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    t_end: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    a: [f64; 2],
    b: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default)]
    path: Option<PathBuf>,
    #[serde(default)]
    format: Option<String>,
}

// ---------------------------------------------------------------------------
// Validated configuration

#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub potential: Potential,
    pub params: SystemParams,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub truncation: TruncationOrder,
    pub states: Vec<PhaseState>,
}

#[derive(Debug, Clone)]
pub struct IntegrateConfig {
    pub integrator: IntegratorConfig,
    pub start: PhaseState,
    pub flows: Vec<FlowKind>,
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    pub samples: usize,
    pub rate_convention: RateConvention,
    /// Step, horizon and start for the trajectory suites.
    pub dt: f64,
    pub t_end: f64,
    pub start: PhaseState,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub state: PhaseState,
    pub hierarchy_orders: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct CanonicalConfig {
    pub generator: CatalogGenerator,
    pub domain: DomainBox,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for CanonicalConfig {
    fn default() -> Self {
        CanonicalConfig {
            generator: CatalogGenerator::Exchange,
            domain: DomainBox::new((-2.0, 2.0), (-2.0, 2.0)).expect("static box"),
            dt: 1e-3,
            t_end: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub task: Option<Task>,
    pub eval: Option<EvalConfig>,
    pub integrate: Option<IntegrateConfig>,
    pub verify: Option<VerifyConfig>,
    pub sweep: Option<SweepConfig>,
    pub canonical: CanonicalConfig,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

fn invalid(field: &str, message: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

fn finite(field: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(field, "must be a finite number"))
    }
}

fn state(field: &str, pair: [f64; 2]) -> Result<PhaseState, CliError> {
    Ok(PhaseState::new(
        finite(&format!("{field}[0]"), pair[0])?,
        finite(&format!("{field}[1]"), pair[1])?,
    ))
}

fn positive(field: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(field, "must be finite and > 0"))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        let system = system(raw.system)?;
        let task = raw
            .task
            .map(|t| t.parse::<Task>().map_err(|e| invalid("task", e)))
            .transpose()?;
        let eval = raw.eval.map(eval).transpose()?;
        let integrate = raw.integrate.map(integrate).transpose()?;
        let verify = raw.verify.map(verify).transpose()?;
        let sweep = raw.sweep.map(sweep).transpose()?;
        let canonical = raw
            .canonical
            .map(canonical)
            .transpose()?
            .unwrap_or_default();
        let (output_path, format) = match raw.output {
            None => (None, Format::Csv),
            Some(o) => {
                let format = match o.format.as_deref() {
                    None | Some("csv") => Format::Csv,
                    Some("json") => Format::Json,
                    Some(other) => {
                        return Err(invalid(
                            "output.format",
                            format!("unknown format '{other}' (expected csv or json)"),
                        ))
                    }
                };
                (o.path, format)
            }
        };
        Ok(RunConfig {
            system,
            task,
            eval,
            integrate,
            verify,
            sweep,
            canonical,
            output_path,
            format,
        })
    }

    /// Checks that the configured task (if any) agrees with `task` and that
    /// its block is present.
    pub fn require_task(&self, task: Task) -> Result<(), CliError> {
        if let Some(configured) = self.task {
            if configured != task {
                return Err(invalid(
                    "task",
                    format!("config is for '{configured}' but '{task}' was requested"),
                ));
            }
        }
        let present = match task {
            Task::Eval => self.eval.is_some(),
            Task::Integrate => self.integrate.is_some(),
            Task::Verify => self.verify.is_some(),
            Task::Sweep => self.sweep.is_some(),
        };
        if present {
            Ok(())
        } else {
            Err(invalid(task.name(), "section is required for this task"))
        }
    }
}

fn system(raw: RawSystem) -> Result<SystemConfig, CliError> {
    let family = PotentialFamily::from_name(&raw.potential.family).ok_or_else(|| {
        let names: Vec<&str> = PotentialFamily::ALL.iter().map(|f| f.name()).collect();
        invalid(
            "system.potential.family",
            format!(
                "unknown potential family '{}' (expected one of {})",
                raw.potential.family,
                names.join(", ")
            ),
        )
    })?;
    for (i, c) in raw.potential.coefficients.iter().enumerate() {
        finite(&format!("system.potential.coefficients[{i}]"), *c)?;
    }
    let potential = Potential::from_family(family, &raw.potential.coefficients)
        .map_err(|e| invalid("system.potential.coefficients", e))?;
    let mass = positive("system.mass", raw.mass)?;
    let lambda = match raw.lambda {
        RawLambda::Number(l) => Lambda::Finite(positive("system.lambda", l)?),
        RawLambda::Name(s) if s == "infinite" => Lambda::Infinite,
        RawLambda::Name(s) => {
            return Err(invalid(
                "system.lambda",
                format!("expected a positive number or \"infinite\", got \"{s}\""),
            ))
        }
    };
    let params = SystemParams::new(mass, lambda).map_err(|e| invalid("system", e))?;
    Ok(SystemConfig { potential, params })
}

fn eval(raw: RawEval) -> Result<EvalConfig, CliError> {
    let truncation =
        TruncationOrder::new(raw.truncation).map_err(|e| invalid("eval.truncation", e))?;
    if raw.states.is_empty() {
        return Err(invalid(
            "eval.states",
            "must list at least one [x, p] state",
        ));
    }
    let states = raw
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| state(&format!("eval.states[{i}]"), *s))
        .collect::<Result<_, _>>()?;
    Ok(EvalConfig { truncation, states })
}

fn method(field: &str, name: &str) -> Result<Method, CliError> {
    match name {
        "rk4" => Ok(Method::Rk4),
        "leapfrog" => Ok(Method::Leapfrog),
        other => Err(invalid(
            field,
            format!("unknown method '{other}' (expected rk4 or leapfrog)"),
        )),
    }
}

fn integrate(raw: RawIntegrate) -> Result<IntegrateConfig, CliError> {
    let method = method("integrate.method", &raw.method)?;
    let dt = positive("integrate.dt", raw.dt)?;
    let t_end = positive("integrate.t_end", raw.t_end)?;
    let integrator =
        IntegratorConfig::new(method, dt, t_end).map_err(|e| invalid("integrate", e))?;
    if raw.flows.is_empty() {
        return Err(invalid("integrate.flows", "must list at least one flow"));
    }
    let mut flows = Vec::with_capacity(raw.flows.len());
    for (i, name) in raw.flows.iter().enumerate() {
        let field = format!("integrate.flows[{i}]");
        let kind = parse_flow_kind(name).ok_or_else(|| {
            invalid(
                &field,
                format!("unknown flow '{name}' (expected standard, hierarchy_<j>, multiplicative)"),
            )
        })?;
        if flows.contains(&kind) {
            return Err(invalid(&field, format!("flow '{name}' is listed twice")));
        }
        if method == Method::Leapfrog && kind != FlowKind::Standard {
            return Err(invalid(
                &field,
                "leapfrog only integrates the standard (separable) flow",
            ));
        }
        flows.push(kind);
    }
    Ok(IntegrateConfig {
        integrator,
        start: state("integrate.start", raw.start)?,
        flows,
    })
}

fn verify(raw: RawVerify) -> Result<VerifyConfig, CliError> {
    if raw.suites.is_empty() {
        return Err(invalid("verify.suites", "must select at least one suite"));
    }
    let mut suites = Vec::new();
    for (i, name) in raw.suites.iter().enumerate() {
        let suite = Suite::from_name(name).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            invalid(
                &format!("verify.suites[{i}]"),
                format!(
                    "unknown suite '{name}' (expected one of {})",
                    names.join(", ")
                ),
            )
        })?;
        if !suites.contains(&suite) {
            suites.push(suite);
        }
    }
    if raw.samples == 0 {
        return Err(invalid("verify.samples", "must be at least 1"));
    }
    let rate_convention = match raw.rate_convention.as_deref() {
        None | Some("derived") => RateConvention::Derived,
        Some("printed") => RateConvention::Printed,
        Some(other) => {
            return Err(invalid(
                "verify.rate_convention",
                format!("unknown convention '{other}' (expected derived or printed)"),
            ))
        }
    };
    Ok(VerifyConfig {
        suites,
        samples: raw.samples,
        rate_convention,
        dt: raw
            .dt
            .map(|v| positive("verify.dt", v))
            .transpose()?
            .unwrap_or(1e-3),
        t_end: raw
            .t_end
            .map(|v| positive("verify.t_end", v))
            .transpose()?
            .unwrap_or(1.0),
        start: raw
            .start
            .map(|s| state("verify.start", s))
            .transpose()?
            .unwrap_or(PhaseState::new(1.0, 0.0)),
    })
}

fn sweep(raw: RawSweep) -> Result<SweepConfig, CliError> {
    if raw.lambdas.is_empty() {
        return Err(invalid("sweep.lambdas", "grid must not be empty"));
    }
    for (i, l) in raw.lambdas.iter().enumerate() {
        positive(&format!("sweep.lambdas[{i}]"), *l)?;
        if i > 0 && *l <= raw.lambdas[i - 1] {
            return Err(invalid(
                &format!("sweep.lambdas[{i}]"),
                "grid must be strictly increasing",
            ));
        }
    }
    for (i, j) in raw.hierarchy_orders.iter().enumerate() {
        if !(1..=TruncationOrder::MAX).contains(j) {
            return Err(invalid(
                &format!("sweep.hierarchy_orders[{i}]"),
                format!("must be in 1..={}", TruncationOrder::MAX),
            ));
        }
    }
    Ok(SweepConfig {
        lambdas: raw.lambdas,
        state: state("sweep.state", raw.state)?,
        hierarchy_orders: raw.hierarchy_orders,
    })
}

fn canonical(raw: RawCanonical) -> Result<CanonicalConfig, CliError> {
    let defaults = CanonicalConfig::default();
    let generator =
        CatalogGenerator::from_name(&raw.generator, raw.parameter).ok_or_else(|| {
            if CatalogGenerator::NAMES.contains(&raw.generator.as_str()) {
                invalid(
                    "canonical.parameter",
                    format!("generator '{}' needs a parameter", raw.generator),
                )
            } else {
                invalid(
                    "canonical.generator",
                    format!(
                        "unknown generator '{}' (expected one of {})",
                        raw.generator,
                        CatalogGenerator::NAMES.join(", ")
                    ),
                )
            }
        })?;
    let domain = match raw.domain {
        None => defaults.domain,
        Some(d) => DomainBox::new((d.a[0], d.a[1]), (d.b[0], d.b[1]))
            .map_err(|e| invalid("canonical.domain", e))?,
    };
    Ok(CanonicalConfig {
        generator,
        domain,
        dt: raw
            .dt
            .map(|v| positive("canonical.dt", v))
            .transpose()?
            .unwrap_or(defaults.dt),
        t_end: raw
            .t_end
            .map(|v| positive("canonical.t_end", v))
            .transpose()?
            .unwrap_or(defaults.t_end),
    })
}
