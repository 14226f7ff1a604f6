//! Invariant suites behind `hamflow verify`. Each suite measures a set of
//! residuals and reports one row per check; a check passes when its value
//! is at most the tolerance.

use std::path::Path;
use std::thread;

use hamflow_core::canonical::{
    ct_apply, ct_dynamics_check, ct_hierarchy_expand, ct_inverse, f_lambda, f_lambda_series,
    lambda_momentum_bracket, GeneratingFunctionSpec, Generator,
};
use hamflow_core::dynamics::{
    coincidence_metric, energy_drift, hamilton_identity_residuals, hamilton_identity_residuals_fd,
    hamilton_residual_scale, integrate, legendre_residual_j, poisson_bracket, printed_rate_factor,
    rate_factor, rescaling_check_with, FlowField, FlowKind, IntegratorConfig, RateConvention,
};
use hamflow_core::hierarchy::{
    hamiltonian_j, multiplicative_hamiltonian, multiplicative_lagrangian, multiplicative_momentum,
    multiplicative_momentum_at, reduction_residual, truncated_series, ReductionKind, SeriesKind,
    TruncationOrder,
};
use hamflow_core::{
    additive_hamiltonian, Error as CoreError, KineticState, Lambda, PhaseState, Potential,
    SystemParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::Outcome;
use crate::config::{RunConfig, Suite, VerifyConfig};
use crate::error::CliError;
use crate::output::Table;

pub const LEGENDRE_TOL: f64 = 1e-9;
pub const HAMILTON_TOL: f64 = 1e-7;
pub const SERIES_TOL: f64 = 1e-10;
pub const BRACKET_TOL: f64 = 1e-6;
pub const ENERGY_TOL: f64 = 1e-8;
pub const COINCIDENCE_TOL: f64 = 1e-5;
pub const RESCALING_TOL: f64 = 1e-5;
pub const RESUMMATION_TOL: f64 = 1e-9;
pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const RICHARDSON_TOL: f64 = 1e-6;
pub const CT_DYNAMICS_TOL: f64 = 1e-4;
pub const EXPANSION_TOL: f64 = 1e-6;

const LEGENDRE_LEVELS: u32 = 8;
const HAMILTON_LEVELS: u32 = 6;
const SERIES_LEVELS: u32 = 12;
const REDUCTION_LAMBDAS: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
const COINCIDENCE_LAMBDAS: [f64; 3] = [1.0, 2.0, 10.0];
const RICHARDSON_LAMBDAS: [f64; 3] = [4.0, 8.0, 16.0];
const STATE_BOX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            check: check.into(),
            value,
            tolerance,
        }
    }

    /// NaN never passes.
    pub fn pass(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Everything a suite produced: its checks and any extra tables.
#[derive(Debug, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub tables: Vec<(&'static str, Table)>,
    pub notes: Vec<String>,
}

struct Ctx<'a> {
    v: &'a Potential,
    params: SystemParams,
    verify: &'a VerifyConfig,
    cfg: &'a RunConfig,
    seed: u64,
}

impl Ctx<'_> {
    // every suite draws from its own stream so results do not depend on
    // which other suites were selected
    fn rng(&self, suite: Suite) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(suite as u64);
        rng
    }

    fn states(&self, suite: Suite, half_width: f64) -> Vec<PhaseState> {
        let mut rng = self.rng(suite);
        (0..self.verify.samples)
            .map(|_| {
                PhaseState::new(
                    rng.gen_range(-half_width..=half_width),
                    rng.gen_range(-half_width..=half_width),
                )
            })
            .collect()
    }

    fn finite_lambda(&self, suite: Suite) -> Result<f64, CliError> {
        self.params.lambda().finite().ok_or_else(|| {
            CliError::Config(format!(
                "verify.suites: '{}' needs a finite system.lambda",
                suite.name()
            ))
        })
    }

    fn with_lambda(&self, lambda: f64) -> Result<SystemParams, CliError> {
        self.params
            .with_lambda(Lambda::Finite(lambda))
            .map_err(|e| CliError::core("verify", e))
    }

    fn integrator(&self, t_end: f64) -> Result<IntegratorConfig, CliError> {
        IntegratorConfig::rk4(self.verify.dt, t_end).map_err(|e| CliError::core("verify", e))
    }
}

fn core<T>(suite: Suite, r: Result<T, CoreError>) -> Result<T, CliError> {
    r.map_err(|e| CliError::core(format!("suite {}", suite.name()), e))
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that a broken evaluation fails its check
    values.into_iter().fold(0.0, |acc: f64, v| {
        if v.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.max(v)
        }
    })
}

fn legendre(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let m = ctx.params.mass();
    let states = ctx.states(Suite::Legendre, STATE_BOX);
    let checks = (1..=LEGENDRE_LEVELS)
        .map(|j| {
            let value = worst(states.iter().map(|s| {
                let kinetic = KineticState::new(s.x, s.p);
                let h = hamiltonian_j(j, kinetic.to_phase(m), ctx.v, &ctx.params);
                legendre_residual_j(j, kinetic, ctx.v, &ctx.params) / h.abs().max(1.0)
            }));
            Check::new(format!("legendre_j{j}"), value, LEGENDRE_TOL)
        })
        .collect();
    Ok(SuiteReport {
        checks,
        ..Default::default()
    })
}

fn hamilton(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let states = ctx.states(Suite::Hamilton, STATE_BOX);
    let mut checks = Vec::new();
    for j in 1..=HAMILTON_LEVELS {
        let (mut analytic, mut fd, mut agreement) = (0.0f64, 0.0f64, 0.0f64);
        for s in &states {
            let scale = hamilton_residual_scale(j, *s, ctx.v, &ctx.params);
            let a = hamilton_identity_residuals(j, *s, ctx.v, &ctx.params);
            let f = hamilton_identity_residuals_fd(j, *s, ctx.v, &ctx.params);
            analytic = worst([analytic, a.max_abs() / scale]);
            fd = worst([fd, f.max_abs() / scale]);
            let diff = (a.r_x - f.r_x).abs().max((a.r_p - f.r_p).abs());
            agreement = worst([agreement, diff / scale]);
        }
        checks.push(Check::new(
            format!("hamilton_analytic_j{j}"),
            analytic,
            HAMILTON_TOL,
        ));
        checks.push(Check::new(format!("hamilton_fd_j{j}"), fd, HAMILTON_TOL));
        checks.push(Check::new(
            format!("hamilton_analytic_vs_fd_j{j}"),
            agreement,
            HAMILTON_TOL,
        ));
    }
    Ok(SuiteReport {
        checks,
        ..Default::default()
    })
}

/// Random states with `|H_N| <= 1`, drawn by rejection from the state box.
fn low_energy_states(ctx: &Ctx, suite: Suite) -> Result<Vec<PhaseState>, CliError> {
    let mut rng = ctx.rng(suite);
    let mut states = Vec::with_capacity(ctx.verify.samples);
    let budget = 100 * ctx.verify.samples.max(1);
    for _ in 0..budget {
        if states.len() == ctx.verify.samples {
            break;
        }
        let s = PhaseState::new(
            rng.gen_range(-STATE_BOX..=STATE_BOX),
            rng.gen_range(-STATE_BOX..=STATE_BOX),
        );
        if additive_hamiltonian(s, ctx.v, &ctx.params).abs() <= 1.0 {
            states.push(s);
        }
    }
    if states.is_empty() && ctx.verify.samples > 0 {
        return Err(CliError::Config(format!(
            "verify.suites: '{}' found no states with |H_N| <= 1 in [-2, 2]²",
            suite.name()
        )));
    }
    Ok(states)
}

fn series(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Series;
    ctx.finite_lambda(suite)?;
    let order = TruncationOrder::new(SERIES_LEVELS).expect("within cap");
    let (v, prm, m) = (ctx.v, &ctx.params, ctx.params.mass());
    let states = low_energy_states(ctx, suite)?;
    let (mut l_err, mut h_err, mut p_err) = (0.0f64, 0.0f64, 0.0f64);
    for s in &states {
        let kinetic = s.to_kinetic(m);
        let sum = |kind| core(suite, truncated_series(order, kind, *s, v, prm));
        l_err = worst([
            l_err,
            (sum(SeriesKind::Lagrangian)?
                - core(suite, multiplicative_lagrangian(kinetic, v, prm))?)
            .abs(),
        ]);
        h_err = worst([
            h_err,
            (sum(SeriesKind::Hamiltonian)? - core(suite, multiplicative_hamiltonian(*s, v, prm))?)
                .abs(),
        ]);
        p_err = worst([
            p_err,
            (sum(SeriesKind::Momentum)? - core(suite, multiplicative_momentum(kinetic, v, prm))?)
                .abs(),
        ]);
    }
    Ok(SuiteReport {
        checks: vec![
            Check::new("series_L_j12", l_err, SERIES_TOL),
            Check::new("series_H_j12", h_err, SERIES_TOL),
            Check::new("series_p_j12", p_err, SERIES_TOL),
        ],
        ..Default::default()
    })
}

fn reduction(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Reduction;
    let grid = REDUCTION_LAMBDAS
        .iter()
        .map(|&l| ctx.with_lambda(l))
        .collect::<Result<Vec<_>, _>>()?;
    let mut bound_ratio = 0.0f64;
    let mut h_increases = 0usize;
    // worst L residual per λ over states with 0 <= H_N <= 2
    let mut l_envelope = vec![0.0f64; grid.len()];
    for s in ctx.states(suite, STATE_BOX) {
        let energy = additive_hamiltonian(s, ctx.v, &ctx.params);
        let in_range = (0.0..=2.0).contains(&energy);
        let mut previous: Option<f64> = None;
        for (k, prm) in grid.iter().enumerate() {
            let h = core(
                suite,
                reduction_residual(ReductionKind::Hamiltonian, s, ctx.v, prm),
            )?;
            if in_range {
                let l = core(
                    suite,
                    reduction_residual(ReductionKind::Lagrangian, s, ctx.v, prm),
                )?;
                l_envelope[k] = worst([l_envelope[k], l]);
                if energy > 0.0 {
                    let bound = energy * energy / (2.0 * prm.energy_scale().expect("finite"));
                    bound_ratio = worst([bound_ratio, h / bound]);
                }
            }
            if let Some(hp) = previous {
                h_increases += usize::from(h > hp);
            }
            previous = Some(h);
        }
    }
    // pointwise the L residual can rise where its leading coefficient
    // changes sign, so monotonicity is checked on the envelope
    let l_increases = l_envelope
        .windows(2)
        .filter(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less))
        .count();
    Ok(SuiteReport {
        checks: vec![
            // a ratio of exactly 1 is the Taylor bound itself
            Check::new("reduction_H_over_bound", bound_ratio, 1.0),
            Check::new("reduction_H_increases", h_increases as f64, 0.0),
            Check::new("reduction_L_envelope_increases", l_increases as f64, 0.0),
        ],
        ..Default::default()
    })
}

fn brackets(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Brackets;
    let (v, prm) = (ctx.v, &ctx.params);
    let hn = |s: PhaseState| additive_hamiltonian(s, v, prm);
    let x = |s: PhaseState| s.x;
    let p = |s: PhaseState| s.p;
    let (mut canonical, mut antisym, mut leibniz, mut lambda_pair) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in ctx.states(suite, STATE_BOX) {
        canonical = worst([canonical, (poisson_bracket(x, p, s) - 1.0).abs()]);
        let ab = poisson_bracket(x, hn, s);
        antisym = worst([antisym, (ab + poisson_bracket(hn, x, s)).abs()]);
        // {x, p H_N} = {x, p} H_N + p {x, H_N}
        let lhs = poisson_bracket(x, |st: PhaseState| st.p * hn(st), s);
        let rhs = poisson_bracket(x, p, s) * hn(s) + s.p * ab;
        leibniz = worst([leibniz, (lhs - rhs).abs() / rhs.abs().max(1.0)]);
        if prm.lambda().is_finite() {
            let pl = |st: PhaseState| multiplicative_momentum_at(st, v, prm).unwrap_or(f64::NAN);
            let measured = poisson_bracket(x, pl, s);
            lambda_pair = worst([
                lambda_pair,
                (measured - lambda_momentum_bracket(s, v, prm)).abs(),
            ]);
        }
    }
    let mut checks = vec![
        Check::new("bracket_x_p", canonical, BRACKET_TOL),
        Check::new("bracket_antisymmetry", antisym, BRACKET_TOL),
        Check::new("bracket_leibniz", leibniz, BRACKET_TOL),
    ];
    if prm.lambda().is_finite() {
        checks.push(Check::new("bracket_x_p_lambda", lambda_pair, BRACKET_TOL));
    }
    Ok(SuiteReport {
        checks,
        ..Default::default()
    })
}

fn flow_kinds(params: &SystemParams) -> Vec<FlowKind> {
    let mut kinds = vec![
        FlowKind::Standard,
        FlowKind::Hierarchy(2),
        FlowKind::Hierarchy(3),
    ];
    if params.lambda().is_finite() {
        kinds.push(FlowKind::Multiplicative);
    }
    kinds
}

fn energy(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Energy;
    let cfg = ctx.integrator(ctx.verify.t_end)?;
    let mut checks = Vec::new();
    for kind in flow_kinds(&ctx.params) {
        let field = core(suite, FlowField::new(kind, ctx.v.clone(), ctx.params))?;
        let traj = core(suite, integrate(&field, ctx.verify.start, &cfg))?;
        checks.push(Check::new(
            format!("energy_drift_{kind}"),
            energy_drift(&traj, ctx.v, &ctx.params),
            ENERGY_TOL,
        ));
    }
    Ok(SuiteReport {
        checks,
        ..Default::default()
    })
}

/// Multiplicative-flow λ values: a fixed spread plus the configured one.
fn comparison_lambdas(params: &SystemParams) -> Vec<f64> {
    let mut lambdas = COINCIDENCE_LAMBDAS.to_vec();
    if let Some(l) = params.lambda().finite() {
        if !lambdas.contains(&l) {
            lambdas.push(l);
        }
    }
    lambdas
}

fn coincidence(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Coincidence;
    let cfg = ctx.integrator(ctx.verify.t_end)?;
    let run = |kind: FlowKind, prm: SystemParams| {
        let field = core(suite, FlowField::new(kind, ctx.v.clone(), prm))?;
        core(suite, integrate(&field, ctx.verify.start, &cfg))
    };
    let standard = run(FlowKind::Standard, ctx.params)?;
    let mut checks = Vec::new();
    for j in [2, 3] {
        let traj = run(FlowKind::Hierarchy(j), ctx.params)?;
        checks.push(Check::new(
            format!("coincidence_hierarchy_{j}"),
            coincidence_metric(&traj, &standard),
            COINCIDENCE_TOL,
        ));
    }
    for lambda in comparison_lambdas(&ctx.params) {
        let traj = run(FlowKind::Multiplicative, ctx.with_lambda(lambda)?)?;
        checks.push(Check::new(
            format!("coincidence_multiplicative_lambda{lambda}"),
            coincidence_metric(&traj, &standard),
            COINCIDENCE_TOL,
        ));
    }
    Ok(SuiteReport {
        checks,
        ..Default::default()
    })
}

fn rescaling(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Rescaling;
    let cfg = ctx.integrator(ctx.verify.t_end)?;
    let start = ctx.verify.start;
    let energy = additive_hamiltonian(start, ctx.v, &ctx.params);
    let convention = ctx.verify.rate_convention;
    let tag = match convention {
        RateConvention::Derived => "derived",
        RateConvention::Printed => "printed",
    };

    let mut checks = Vec::new();
    let mut table = Table::new([
        "flow",
        "lambda",
        "energy",
        "derived_factor",
        "printed_factor",
        "derived_distance",
        "printed_distance",
    ]);
    let distance = |conv, kind, prm: &SystemParams| {
        core(
            suite,
            rescaling_check_with(conv, kind, ctx.v, prm, start, &cfg),
        )
    };

    // the printed factor needs a finite scale even for hierarchy levels
    let printed_params = match ctx.params.lambda() {
        Lambda::Finite(_) => ctx.params,
        Lambda::Infinite => ctx.with_lambda(1.0)?,
    };
    for j in [2, 3] {
        let kind = FlowKind::Hierarchy(j);
        let derived = distance(RateConvention::Derived, kind, &ctx.params)?;
        let printed = distance(RateConvention::Printed, kind, &printed_params)?;
        table.push(vec![
            kind.to_string().into(),
            printed_params
                .lambda()
                .finite()
                .unwrap_or(f64::INFINITY)
                .into(),
            energy.into(),
            core(suite, rate_factor(kind, energy, &ctx.params))?.into(),
            core(suite, printed_rate_factor(kind, energy, &printed_params))?.into(),
            derived.into(),
            printed.into(),
        ]);
        let value = match convention {
            RateConvention::Derived => derived,
            RateConvention::Printed => printed,
        };
        checks.push(Check::new(
            format!("rescaling_{tag}_{kind}"),
            value,
            RESCALING_TOL,
        ));
    }

    let mut notes = Vec::new();
    if convention == RateConvention::Printed {
        notes.push("rescaling: the printed convention has no multiplicative factor; only hierarchy levels are checked".into());
    } else {
        for lambda in comparison_lambdas(&ctx.params) {
            let prm = ctx.with_lambda(lambda)?;
            let kind = FlowKind::Multiplicative;
            let derived = distance(RateConvention::Derived, kind, &prm)?;
            table.push(vec![
                kind.to_string().into(),
                lambda.into(),
                energy.into(),
                core(suite, rate_factor(kind, energy, &prm))?.into(),
                f64::NAN.into(),
                derived.into(),
                f64::NAN.into(),
            ]);
            checks.push(Check::new(
                format!("rescaling_{tag}_multiplicative_lambda{lambda}"),
                derived,
                RESCALING_TOL,
            ));
        }
    }
    Ok(SuiteReport {
        checks,
        tables: vec![("rate_comparison", table)],
        notes,
    })
}

fn resummation(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Resummation;
    let order = TruncationOrder::new(20).expect("within cap");
    let m = ctx.params.mass();
    let mut rng = ctx.rng(suite);
    let (mut tail_ratio, mut inner, mut lifted, mut missing_errors) =
        (0.0f64, 0.0f64, 0.0f64, 0usize);
    for _ in 0..ctx.verify.samples {
        let lambda = rng.gen_range(0.5..=10.0);
        let u: f64 = rng.gen_range(-0.5..=0.5);
        let prm = ctx.with_lambda(lambda)?;
        let c = m * lambda * lambda;
        let f = u * c;
        let closed = c * u.ln_1p();
        let err = (core(suite, f_lambda_series(order, f, &prm))? - closed).abs();
        // alternating tail after 20 terms
        let tail = c * u.abs().powi(21) / (21.0 * (1.0 - u.abs()));
        tail_ratio = worst([tail_ratio, err / (tail + 1e-14 * c.max(1.0))]);
        if u.abs() <= 0.35 {
            inner = worst([inner, err / c.max(1.0)]);
        }
        lifted = worst([
            lifted,
            (core(suite, f_lambda(f, &prm))? - closed).abs() / c.max(1.0),
        ]);
        let outside = rng.gen_range(1.0..=4.0) * if u < 0.0 { -c } else { c };
        missing_errors += usize::from(f_lambda_series(order, outside, &prm).is_ok());
    }
    Ok(SuiteReport {
        checks: vec![
            Check::new("resummation_j20_over_tail_bound", tail_ratio, 1.0),
            Check::new("resummation_j20_inner", inner, RESUMMATION_TOL),
            Check::new("resummation_closed_form", lifted, 1e-14),
            Check::new(
                "resummation_domain_errors_missing",
                missing_errors as f64,
                0.0,
            ),
        ],
        ..Default::default()
    })
}

fn canonical(ctx: &Ctx) -> Result<SuiteReport, CliError> {
    let suite = Suite::Canonical;
    let cc = &ctx.cfg.canonical;
    let generator = cc.generator;
    let spec = core(
        suite,
        GeneratingFunctionSpec::new(generator.ct_type(), generator, ctx.params, cc.domain),
    )?;
    let name = generator.name();
    let mut notes = Vec::new();
    let mut checks = Vec::new();

    // round trip from old-side states built out of (a, b) pairs inside the
    // box, so a root is known to exist; the forward image is checked too
    let ty = spec.ct_type();
    let inner = |(lo, hi): (f64, f64), rng: &mut ChaCha8Rng| {
        let (mid, half) = (0.5 * (lo + hi), 0.45 * (hi - lo));
        mid + rng.gen_range(-half..=half)
    };
    let mut rng = ctx.rng(suite);
    let mut pairs = Vec::with_capacity(ctx.verify.samples);
    for _ in 0..ctx.verify.samples {
        let a = inner(cc.domain.a, &mut rng);
        let b = inner(cc.domain.b, &mut rng);
        let (da, db, _) = core(suite, spec.partials(a, b, 0.0))?;
        let old = if ty.old_is_coordinate() {
            PhaseState::new(a, da)
        } else {
            PhaseState::new(-da, a)
        };
        let new = if ty.new_is_coordinate() {
            PhaseState::new(b, -db)
        } else {
            PhaseState::new(db, b)
        };
        pairs.push((old, new));
    }
    let round_trip = worst(pairs.iter().map(|(s, expected)| {
        ct_apply(&spec, *s, 0.0, 0.0)
            .and_then(|r| Ok((r.new_state, ct_inverse(&spec, r.new_state, 0.0)?.0)))
            .map_or(f64::INFINITY, |(image, back)| {
                back.distance(s).max(image.distance(expected))
            })
    }));
    checks.push(Check::new(
        format!("ct_round_trip_{name}"),
        round_trip,
        ROUND_TRIP_TOL,
    ));

    // λ→∞ limit by two Richardson steps in 1/λ² against the additive map
    let additive = core(suite, spec.with_lambda(Lambda::Infinite))?;
    let ladder = RICHARDSON_LAMBDAS
        .iter()
        .map(|&l| core(suite, spec.with_lambda(Lambda::Finite(l))))
        .collect::<Result<Vec<_>, _>>()?;
    let richardson = worst(ctx.states(suite, 0.75).iter().map(|s| {
        let out = |sp: &GeneratingFunctionSpec| ct_apply(sp, *s, 0.0, 0.0).map(|r| r.new_state);
        let (Ok(limit), Ok(o4), Ok(o8), Ok(o16)) = (
            out(&additive),
            out(&ladder[0]),
            out(&ladder[1]),
            out(&ladder[2]),
        ) else {
            return f64::INFINITY;
        };
        let step = |a: f64, b: f64| (4.0 * b - a) / 3.0;
        let r1 = PhaseState::new(step(o4.x, o8.x), step(o4.p, o8.p));
        let r2 = PhaseState::new(step(o8.x, o16.x), step(o8.p, o16.p));
        let r = PhaseState::new((16.0 * r2.x - r1.x) / 15.0, (16.0 * r2.p - r1.p) / 15.0);
        r.distance(&limit)
    }));
    if richardson.is_infinite() {
        notes.push(format!(
            "canonical: some states in [-0.75, 0.75]² map outside the {name} domain box"
        ));
    }
    checks.push(Check::new(
        format!("ct_richardson_limit_{name}"),
        richardson,
        RICHARDSON_TOL,
    ));

    if spec.base().is_time_independent() {
        let cfg =
            IntegratorConfig::rk4(cc.dt, cc.t_end).map_err(|e| CliError::core("canonical", e))?;
        // a trajectory leaving the domain box fails the check, not the run
        let d = ct_dynamics_check(&spec, ctx.v, ctx.verify.start, &cfg).unwrap_or_else(|e| {
            notes.push(format!("canonical: dynamics check for {name} failed: {e}"));
            f64::INFINITY
        });
        checks.push(Check::new(
            format!("ct_dynamics_{name}"),
            d,
            CT_DYNAMICS_TOL,
        ));
    } else {
        notes.push(format!(
            "canonical: {name} depends on time; dynamics check skipped"
        ));
    }

    if ctx.params.lambda().is_finite() {
        let order = TruncationOrder::new(4).expect("within cap");
        for r in core(suite, ct_hierarchy_expand(&spec, order))? {
            checks.push(Check::new(
                format!("ct_expansion_{name}_j{}", r.j),
                r.residual,
                EXPANSION_TOL,
            ));
        }
    }
    Ok(SuiteReport {
        checks,
        tables: Vec::new(),
        notes,
    })
}

fn run_suite(suite: Suite, ctx: &Ctx) -> Result<SuiteReport, CliError> {
    match suite {
        Suite::Legendre => legendre(ctx),
        Suite::Hamilton => hamilton(ctx),
        Suite::Series => series(ctx),
        Suite::Reduction => reduction(ctx),
        Suite::Brackets => brackets(ctx),
        Suite::Energy => energy(ctx),
        Suite::Coincidence => coincidence(ctx),
        Suite::Rescaling => rescaling(ctx),
        Suite::Resummation => resummation(ctx),
        Suite::Canonical => canonical(ctx),
    }
}

/// Runs the selected suites concurrently and returns their reports in
/// configuration order.
pub fn run_suites(cfg: &RunConfig, seed: u64) -> Result<Vec<SuiteReport>, CliError> {
    let verify = cfg.verify.as_ref().expect("checked by require_task");
    let ctx = Ctx {
        v: &cfg.system.potential,
        params: cfg.system.params,
        verify,
        cfg,
        seed,
    };
    let ctx = &ctx;
    thread::scope(|scope| {
        let handles: Vec<_> = verify
            .suites
            .iter()
            .map(|&suite| scope.spawn(move || run_suite(suite, ctx)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verification thread panicked"))
            .collect()
    })
}

pub fn report_table(checks: &[Check]) -> Table {
    let mut table = Table::new(["check", "value", "tolerance", "pass"]);
    for c in checks {
        table.push(vec![
            c.check.as_str().into(),
            c.value.into(),
            c.tolerance.into(),
            c.pass().into(),
        ]);
    }
    table
}

/// Writes `verify_report` (plus any suite tables). Failed checks are
/// recorded in [`Outcome::failure`] so the report is still listed.
pub fn cmd_verify(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome, CliError> {
    let reports = run_suites(cfg, seed)?;
    let mut outcome = Outcome::default();
    let checks: Vec<Check> = reports
        .iter()
        .flat_map(|r| r.checks.iter().cloned())
        .collect();
    for report in &reports {
        for (stem, table) in &report.tables {
            outcome.files.push(table.write(out, stem, cfg.format)?);
        }
        outcome.warnings.extend(report.notes.iter().cloned());
    }
    outcome
        .files
        .push(report_table(&checks).write(out, "verify_report", cfg.format)?);
    let failed = checks.iter().filter(|c| !c.pass()).count();
    for c in checks.iter().filter(|c| !c.pass()) {
        outcome.warnings.push(format!(
            "FAIL {}: {:e} > {:e}",
            c.check, c.value, c.tolerance
        ));
    }
    if failed > 0 {
        outcome.failure = Some(CliError::Verification {
            failed,
            total: checks.len(),
        });
    }
    Ok(outcome)
}
