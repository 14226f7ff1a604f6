//! λ-extended canonical transformations.
//!
//! A base generating function `F` lifts to `F_λ = mλ² ln(1 + F/mλ²)`, whose
//! partial derivatives are `F_a / (1 + F/mλ²)`. The four transformation
//! types are the classical relations applied to `F_λ` with the λ-momenta
//! `p_λ`, `P_λ` taking the place of `p`, `P`:
//!
//! ```text
//! type 1  F(x, X):  p_λ =  ∂F_λ/∂x   P_λ = -∂F_λ/∂X
//! type 2  F(x, P):  p_λ =  ∂F_λ/∂x   X   =  ∂F_λ/∂P
//! type 3  F(p, X):  x   = -∂F_λ/∂p   P_λ = -∂F_λ/∂X
//! type 4  F(p, P):  x   = -∂F_λ/∂p   X   =  ∂F_λ/∂P
//! ```
//!
//! and in every case `H'_λ = H_λ + ∂F_λ/∂t`. These follow from requiring
//! `p_λ ẋ - H_λ = P_λ Ẋ - H'_λ + dF_λ/dt` in the usual way. The pair
//! `(x, p_λ)` is canonical for `H_λ`; its bracket in the ordinary `(x, p)`
//! variables is `exp(-H_N/mλ²)`, see [`lambda_momentum_bracket`].
//!
//! Throughout, `a` is the old-side argument of `F` (`x` or `p_λ`) and `b` the
//! new-side one (`X` or `P_λ`).

use alloc::vec::Vec;

use crate::dynamics::{integrate, integrate_with, FlowField, FlowKind, IntegratorConfig, FD_STEP};
use crate::error::{Error, Result};
use crate::fit::{endpoint_taylor_coefficients, DEFAULT_DEGREE};
use crate::hierarchy::{momentum_from_multiplicative, multiplicative_momentum_at, TruncationOrder};
use crate::math::{exp, expm1, ln1p, powi, sqrt};
use crate::roots::{unique_root, RootConfig};
use crate::system::{additive_hamiltonian, Lambda, PhaseState, Potential, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CtType {
    /// `F(x, X, t)`
    One,
    /// `F(x, P, t)`
    Two,
    /// `F(p, X, t)`
    Three,
    /// `F(p, P, t)`
    Four,
}

impl CtType {
    pub fn number(self) -> u8 {
        match self {
            CtType::One => 1,
            CtType::Two => 2,
            CtType::Three => 3,
            CtType::Four => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(CtType::One),
            2 => Some(CtType::Two),
            3 => Some(CtType::Three),
            4 => Some(CtType::Four),
            _ => None,
        }
    }

    /// Old side argument is a coordinate (types 1, 2) rather than a momentum.
    pub fn old_is_coordinate(self) -> bool {
        matches!(self, CtType::One | CtType::Two)
    }

    /// New side argument is a coordinate (types 1, 3) rather than a momentum.
    pub fn new_is_coordinate(self) -> bool {
        matches!(self, CtType::One | CtType::Three)
    }
}

/// Base generating function `F(a, b, t)` with analytic partials.
pub trait Generator {
    fn value(&self, a: f64, b: f64, t: f64) -> f64;
    fn d_a(&self, a: f64, b: f64, t: f64) -> f64;
    fn d_b(&self, a: f64, b: f64, t: f64) -> f64;
    fn d_t(&self, a: f64, b: f64, t: f64) -> f64;
    fn is_time_independent(&self) -> bool;
}

/// Built-in generators, selectable by name from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogGenerator {
    /// `xX`, type 1; classically `p = X`, `P = -x`.
    Exchange,
    /// `αxX`, type 1.
    ScaledExchange { alpha: f64 },
    /// `xP`, type 2; classically the identity.
    Identity,
    /// `αxP`, type 2.
    ScaledIdentity { alpha: f64 },
    /// `-pX`, type 3; classically the identity.
    IdentityType3,
    /// `pP`, type 4; classically `X = p`, `P = -x`.
    ExchangeType4,
    /// `(x + vt)P`, type 2; a Galilean shift of the coordinate.
    Translation { velocity: f64 },
}

impl CatalogGenerator {
    pub const NAMES: [&'static str; 7] = [
        "exchange",
        "scaled_exchange",
        "identity",
        "scaled_identity",
        "identity_type3",
        "exchange_type4",
        "translation",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CatalogGenerator::Exchange => "exchange",
            CatalogGenerator::ScaledExchange { .. } => "scaled_exchange",
            CatalogGenerator::Identity => "identity",
            CatalogGenerator::ScaledIdentity { .. } => "scaled_identity",
            CatalogGenerator::IdentityType3 => "identity_type3",
            CatalogGenerator::ExchangeType4 => "exchange_type4",
            CatalogGenerator::Translation { .. } => "translation",
        }
    }

    /// Looks up `name`; `parameter` is `α` or the velocity where one is needed.
    pub fn from_name(name: &str, parameter: Option<f64>) -> Option<Self> {
        let p = parameter;
        Some(match name {
            "exchange" => CatalogGenerator::Exchange,
            "scaled_exchange" => CatalogGenerator::ScaledExchange { alpha: p? },
            "identity" => CatalogGenerator::Identity,
            "scaled_identity" => CatalogGenerator::ScaledIdentity { alpha: p? },
            "identity_type3" => CatalogGenerator::IdentityType3,
            "exchange_type4" => CatalogGenerator::ExchangeType4,
            "translation" => CatalogGenerator::Translation { velocity: p? },
            _ => return None,
        })
    }

    /// The transformation type the generator is written for.
    pub fn ct_type(&self) -> CtType {
        match self {
            CatalogGenerator::Exchange | CatalogGenerator::ScaledExchange { .. } => CtType::One,
            CatalogGenerator::Identity
            | CatalogGenerator::ScaledIdentity { .. }
            | CatalogGenerator::Translation { .. } => CtType::Two,
            CatalogGenerator::IdentityType3 => CtType::Three,
            CatalogGenerator::ExchangeType4 => CtType::Four,
        }
    }

    // F = k·(a + s t)·b for every catalog entry.
    fn bilinear(&self) -> (f64, f64) {
        match *self {
            CatalogGenerator::Exchange
            | CatalogGenerator::Identity
            | CatalogGenerator::ExchangeType4 => (1.0, 0.0),
            CatalogGenerator::ScaledExchange { alpha }
            | CatalogGenerator::ScaledIdentity { alpha } => (alpha, 0.0),
            CatalogGenerator::IdentityType3 => (-1.0, 0.0),
            CatalogGenerator::Translation { velocity } => (1.0, velocity),
        }
    }
}

impl Generator for CatalogGenerator {
    fn value(&self, a: f64, b: f64, t: f64) -> f64 {
        let (k, s) = self.bilinear();
        k * (a + s * t) * b
    }

    fn d_a(&self, _a: f64, b: f64, _t: f64) -> f64 {
        self.bilinear().0 * b
    }

    fn d_b(&self, a: f64, _b: f64, t: f64) -> f64 {
        let (k, s) = self.bilinear();
        k * (a + s * t)
    }

    fn d_t(&self, _a: f64, b: f64, _t: f64) -> f64 {
        let (k, s) = self.bilinear();
        k * s * b
    }

    fn is_time_independent(&self) -> bool {
        self.bilinear().1 == 0.0
    }
}

/// Rectangle in `(a, b)` on which a generator is used. Root searches for the
/// new variable run over `b`, inverse searches over `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl DomainBox {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Result<Self> {
        for (name, (lo, hi)) in [("domain.a", a), ("domain.b", b)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "need finite lo < hi",
                });
            }
        }
        Ok(DomainBox { a, b })
    }

    /// `n × n` grid including the corners.
    fn grid(&self, n: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let at = move |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        (0..n).flat_map(move |i| (0..n).map(move |k| (at(self.a, i), at(self.b, k))))
    }
}

const DOMAIN_GRID: usize = 33;

/// A generator, its transformation type, the system parameters that fix
/// `mλ²`, and the box on which it is used.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunctionSpec<G = CatalogGenerator> {
    ct_type: CtType,
    base: G,
    params: SystemParams,
    domain: DomainBox,
    degenerate: bool,
}

impl<G: Generator> GeneratingFunctionSpec<G> {
    /// Validates that `F` and its partials are finite and `F > -mλ²` on a
    /// grid over `domain` (at `t = 0`).
    pub fn new(ct_type: CtType, base: G, params: SystemParams, domain: DomainBox) -> Result<Self> {
        let floor = params.energy_scale().map(|c| -c);
        let mut degenerate = true;
        for (a, b) in domain.grid(DOMAIN_GRID) {
            let f = base.value(a, b, 0.0);
            let fa = base.d_a(a, b, 0.0);
            let fb = base.d_b(a, b, 0.0);
            if !(f.is_finite() && fa.is_finite() && fb.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "generator",
                    reason: "not finite on the domain box",
                });
            }
            if let Some(floor) = floor {
                if f <= floor {
                    return Err(Error::LogDomain { value: f, floor });
                }
            }
            if fa != 0.0 || fb != 0.0 {
                degenerate = false;
            }
        }
        Ok(GeneratingFunctionSpec {
            ct_type,
            base,
            params,
            domain,
            degenerate,
        })
    }

    pub fn ct_type(&self) -> CtType {
        self.ct_type
    }

    pub fn base(&self) -> &G {
        &self.base
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    /// All partials of `F` vanish on the domain grid.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Same generator and box at a different λ.
    pub fn with_lambda(&self, lambda: Lambda) -> Result<Self>
    where
        G: Clone,
    {
        Self::new(
            self.ct_type,
            self.base.clone(),
            self.params.with_lambda(lambda)?,
            self.domain,
        )
    }

    /// `1 / (1 + F/mλ²)`, the factor carrying a partial of `F` to `F_λ`.
    fn lift(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        let Some(c) = self.params.energy_scale() else {
            return Ok(1.0);
        };
        let f = self.base.value(a, b, t);
        if f <= -c {
            return Err(Error::LogDomain {
                value: f,
                floor: -c,
            });
        }
        Ok(1.0 / (1.0 + f / c))
    }

    /// `F_λ(a, b, t)`.
    pub fn value(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        f_lambda(self.base.value(a, b, t), &self.params)
    }

    /// `(∂F_λ/∂a, ∂F_λ/∂b, ∂F_λ/∂t)`.
    pub fn partials(&self, a: f64, b: f64, t: f64) -> Result<(f64, f64, f64)> {
        let s = self.lift(a, b, t)?;
        Ok((
            s * self.base.d_a(a, b, t),
            s * self.base.d_b(a, b, t),
            s * self.base.d_t(a, b, t),
        ))
    }
}

/// `F_λ = mλ² ln(1 + F/mλ²)`; exactly `F` when λ is infinite.
pub fn f_lambda(f: f64, params: &SystemParams) -> Result<f64> {
    let Some(c) = params.energy_scale() else {
        return Ok(f);
    };
    if f <= -c {
        return Err(Error::LogDomain {
            value: f,
            floor: -c,
        });
    }
    Ok(c * ln1p(f / c))
}

/// `F_j = (j - 1)! F^j`.
///
/// # Panics
/// If `j == 0`.
pub fn f_j(j: u32, f: f64) -> f64 {
    assert!(j >= 1, "hierarchy index starts at 1");
    let mut acc = f;
    for k in 1..j {
        acc *= k as f64 * f;
    }
    acc
}

/// `Σ_{j=1}^{J} (1/j!) (-1/mλ²)^{j-1} F_j`, i.e. the `ln(1 + u)` series.
pub fn f_lambda_series(order: TruncationOrder, f: f64, params: &SystemParams) -> Result<f64> {
    let Some(c) = params.energy_scale() else {
        return Ok(f);
    };
    let u = f / c;
    if u.is_nan() || u.abs() >= 1.0 {
        return Err(Error::ConvergenceDomain { ratio: u.abs() });
    }
    // F_j / j! = F^j / j, so the j-th term is c·(-1)^{j-1} u^j / j.
    let mut power = u;
    let mut sum = 0.0;
    for j in 1..=order.get() {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * power / j as f64;
        power *= u;
    }
    Ok(c * sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtDiagnostics {
    pub iterations: usize,
    /// `|relation(root)|` of the implicit equation that was solved.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtResult {
    /// `(X, P_λ)`.
    pub new_state: PhaseState,
    /// `H'_λ = H_λ + ∂F_λ/∂t`.
    pub new_hamiltonian: f64,
    /// `∂F_λ/∂t`.
    pub hamiltonian_shift: f64,
    pub diagnostics: CtDiagnostics,
}

fn require_non_degenerate<G: Generator>(spec: &GeneratingFunctionSpec<G>) -> Result<()> {
    if spec.degenerate {
        Err(Error::DegenerateGenerator)
    } else {
        Ok(())
    }
}

/// Maps `(x, p_λ)` to `(X, P_λ)` at time `t`. `hamiltonian` is the old
/// `H_λ` value, returned shifted by `∂F_λ/∂t`.
///
/// The new-side argument `b` is found as the unique root of the defining
/// relation on `domain.b`.
pub fn ct_apply<G: Generator>(
    spec: &GeneratingFunctionSpec<G>,
    state: PhaseState,
    t: f64,
    hamiltonian: f64,
) -> Result<CtResult> {
    require_non_degenerate(spec)?;
    if !state.is_finite() {
        return Err(Error::InvalidParameter {
            name: "state",
            reason: "must be finite",
        });
    }
    let ty = spec.ct_type;
    // types 1, 2: p_λ = ∂_a F_λ(x, b); types 3, 4: x = -∂_a F_λ(p_λ, b)
    let (a, target, sign) = if ty.old_is_coordinate() {
        (state.x, state.p, 1.0)
    } else {
        (state.p, state.x, -1.0)
    };
    let mut failure = None;
    let relation = |b: f64| match spec.partials(a, b, t) {
        Ok((da, _, _)) => sign * da - target,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let root = unique_root(
        relation,
        spec.domain.b.0,
        spec.domain.b.1,
        &RootConfig::default(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root?;
    let b = root.x;
    let (_, db, dt) = spec.partials(a, b, t)?;
    let new_state = if ty.new_is_coordinate() {
        PhaseState::new(b, -db)
    } else {
        PhaseState::new(db, b)
    };
    Ok(CtResult {
        new_state,
        new_hamiltonian: hamiltonian + dt,
        hamiltonian_shift: dt,
        diagnostics: CtDiagnostics {
            iterations: root.iterations,
            residual: root.residual,
        },
    })
}

/// Maps `(X, P_λ)` back to `(x, p_λ)`, solving for the old-side argument on
/// `domain.a`.
pub fn ct_inverse<G: Generator>(
    spec: &GeneratingFunctionSpec<G>,
    new_state: PhaseState,
    t: f64,
) -> Result<(PhaseState, CtDiagnostics)> {
    require_non_degenerate(spec)?;
    let ty = spec.ct_type;
    // types 1, 3: P_λ = -∂_b F_λ(a, X); types 2, 4: X = ∂_b F_λ(a, P_λ)
    let (b, target, sign) = if ty.new_is_coordinate() {
        (new_state.x, new_state.p, -1.0)
    } else {
        (new_state.p, new_state.x, 1.0)
    };
    let mut failure = None;
    let relation = |a: f64| match spec.partials(a, b, t) {
        Ok((_, db, _)) => sign * db - target,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let root = unique_root(
        relation,
        spec.domain.a.0,
        spec.domain.a.1,
        &RootConfig::default(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root?;
    let a = root.x;
    let (da, _, _) = spec.partials(a, b, t)?;
    let old = if ty.old_is_coordinate() {
        PhaseState::new(a, da)
    } else {
        PhaseState::new(-da, a)
    };
    Ok((
        old,
        CtDiagnostics {
            iterations: root.iterations,
            residual: root.residual,
        },
    ))
}

/// `{x, p_λ}` in the ordinary `(x, p)` bracket, which equals
/// `exp(-H_N/mλ²)` (1 when λ is infinite).
pub fn lambda_momentum_bracket(
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> f64 {
    match params.energy_scale() {
        None => 1.0,
        Some(c) => exp(-additive_hamiltonian(state, potential, params) / c),
    }
}

/// `H_λ + mλ² = -mλ² expm1(-H_N/mλ²)` at the ordinary phase point; `H_N`
/// for infinite λ. Same derivatives as `H_λ`, better conditioned.
fn shifted_hamiltonian(state: PhaseState, potential: &Potential, params: &SystemParams) -> f64 {
    let h = additive_hamiltonian(state, potential, params);
    match params.energy_scale() {
        None => h,
        Some(c) => -c * expm1(-h / c),
    }
}

/// Checks that a time-independent transformation commutes with the
/// dynamics, and returns the largest phase-plane distance between the two
/// routes below.
///
/// 1. Integrate the multiplicative flow from `start` (ordinary `(x, p)`;
///    the standard flow when λ is infinite), convert each sample to
///    `(x, p_λ)` and map it with [`ct_apply`].
/// 2. Map `start` likewise and integrate the `H'_λ` flow in `(X, P_λ)`
///    directly, with `H'_λ` evaluated through [`ct_inverse`] and its partials
///    by centred differences.
///
/// `(x, p_λ)` Hamilton dynamics under `H_λ` runs in standard time, while the
/// multiplicative flow in `(x, p)` runs at `exp(-E/mλ²)` of it; route 2
/// carries that constant factor so both routes share one clock.
pub fn ct_dynamics_check<G: Generator>(
    spec: &GeneratingFunctionSpec<G>,
    potential: &Potential,
    start: PhaseState,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    if !spec.base.is_time_independent() {
        return Err(Error::Unsupported(
            "dynamics check needs a time-independent generator",
        ));
    }
    require_non_degenerate(spec)?;
    let params = spec.params;
    let kind = if params.lambda().is_finite() {
        FlowKind::Multiplicative
    } else {
        FlowKind::Standard
    };
    let to_new = |s: PhaseState| -> Result<PhaseState> {
        let p_lambda = multiplicative_momentum_at(s, potential, &params)?;
        Ok(ct_apply(spec, PhaseState::new(s.x, p_lambda), 0.0, 0.0)?.new_state)
    };

    let field = FlowField::new(kind, potential.clone(), params)?;
    let original = integrate(&field, start, cfg)?;
    let rate = lambda_momentum_bracket(start, potential, &params);

    let h_new = |n: PhaseState| -> Result<f64> {
        let (old, _) = ct_inverse(spec, n, 0.0)?;
        let p = momentum_from_multiplicative(old.x, old.p, potential, &params)?;
        Ok(shifted_hamiltonian(
            PhaseState::new(old.x, p),
            potential,
            &params,
        ))
    };
    let new_field = |n: PhaseState| -> Result<(f64, f64)> {
        let hx = FD_STEP * n.x.abs().max(1.0);
        let hp = FD_STEP * n.p.abs().max(1.0);
        let dx = (h_new(PhaseState::new(n.x + hx, n.p))? - h_new(PhaseState::new(n.x - hx, n.p))?)
            / (2.0 * hx);
        let dp = (h_new(PhaseState::new(n.x, n.p + hp))? - h_new(PhaseState::new(n.x, n.p - hp))?)
            / (2.0 * hp);
        Ok((rate * dp, -rate * dx))
    };
    let new_start = to_new(start)?;
    let transformed = integrate_with(new_field, new_start, cfg, original.energy())?;

    let mut worst = 0.0f64;
    for (o, n) in original.samples().iter().zip(transformed.samples()) {
        worst = worst.max(to_new(o.state)?.distance(&n.state));
    }
    Ok(worst)
}

/// Largest order accepted by [`ct_hierarchy_expand`]. The endpoint fit is
/// good to about `1e-7` through `j = 5` and loses more than a digit per
/// order after that.
pub const MAX_EXPANSION_ORDER: u32 = 8;

const EXPANSION_GRID: usize = 5;

/// Residual of one hierarchy level of the transformation relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionResidual {
    pub j: u32,
    pub residual: f64,
}

/// Expands the lifted relations `∂F_λ/∂a`, `∂F_λ/∂b` in powers of
/// `ε = -1/mλ²` and compares the coefficient of `ε^{j-1}` with
/// `(1/j!) ∂F_j/∂a` (resp. `b`), built by differencing `F_j ∘ F`.
///
/// The coefficients come from a λ sweep of [`GeneratingFunctionSpec::partials`]
/// fitted on Chebyshev–Lobatto nodes, over a 5 × 5 grid of the domain box at
/// `t = 0`. Residuals are scaled by `max(1, |F_b|) · max(1, |F|)^{j-1}`.
pub fn ct_hierarchy_expand<G: Generator + Clone>(
    spec: &GeneratingFunctionSpec<G>,
    order: TruncationOrder,
) -> Result<Vec<ExpansionResidual>> {
    let levels = order.get();
    if levels > MAX_EXPANSION_ORDER {
        return Err(Error::InvalidParameter {
            name: "J",
            reason: "hierarchy expansion supports J <= 8",
        });
    }
    let mass = spec.params.mass();
    if let Some(c) = spec.params.energy_scale() {
        for (a, b) in spec.domain.grid(DOMAIN_GRID) {
            let u = spec.base.value(a, b, 0.0) / c;
            if u.is_nan() || u.abs() >= 1.0 {
                return Err(Error::ConvergenceDomain { ratio: u.abs() });
            }
        }
    }

    let mut residuals: Vec<ExpansionResidual> = (1..=levels)
        .map(|j| ExpansionResidual { j, residual: 0.0 })
        .collect();
    for (a, b) in spec.domain.grid(EXPANSION_GRID) {
        let f = spec.base.value(a, b, 0.0);
        // singularity of 1/(1 - εF) sits at ε = 1/F; keep the fit 5 h away
        let h = if f == 0.0 {
            1.0
        } else {
            (0.2 / f.abs()).min(1.0)
        };
        for which in [Partial::A, Partial::B] {
            let mut sweep_error = None;
            let relation = |eps: f64| {
                let lambda = if eps == 0.0 {
                    Lambda::Infinite
                } else {
                    Lambda::Finite(sqrt(-1.0 / (eps * mass)))
                };
                // only the point (a, b) matters here, so skip the box check
                let partial = spec
                    .params
                    .with_lambda(lambda)
                    .and_then(|params| {
                        GeneratingFunctionSpec {
                            params,
                            ..spec.clone()
                        }
                        .partials(a, b, 0.0)
                    })
                    .map(|(da, db, _)| which.pick(da, db));
                partial.unwrap_or_else(|e| {
                    sweep_error.get_or_insert(e);
                    f64::NAN
                })
            };
            let coefficients =
                endpoint_taylor_coefficients(relation, h, DEFAULT_DEGREE, levels as usize - 1);
            if let Some(e) = sweep_error {
                return Err(e);
            }
            let coefficients = coefficients?;
            let base_partial = which.pick(spec.base.d_a(a, b, 0.0), spec.base.d_b(a, b, 0.0));
            for (k, slot) in residuals.iter_mut().enumerate() {
                let j = k as u32 + 1;
                let direct = composed_partial(j, &spec.base, which, a, b);
                let scale = base_partial.abs().max(1.0) * powi(f.abs().max(1.0), j - 1);
                let r = (coefficients[k] - direct).abs() / scale;
                slot.residual = slot.residual.max(r);
            }
        }
    }
    Ok(residuals)
}

#[derive(Debug, Clone, Copy)]
enum Partial {
    A,
    B,
}

impl Partial {
    fn pick(self, da: f64, db: f64) -> f64 {
        match self {
            Partial::A => da,
            Partial::B => db,
        }
    }
}

/// `(1/j!) ∂(F_j ∘ F)/∂a` (or `b`) by centred differences.
fn composed_partial<G: Generator>(j: u32, base: &G, which: Partial, a: f64, b: f64) -> f64 {
    let fj = |a: f64, b: f64| f_j(j, base.value(a, b, 0.0));
    let d = match which {
        Partial::A => {
            let h = FD_STEP * a.abs().max(1.0);
            (fj(a + h, b) - fj(a - h, b)) / (2.0 * h)
        }
        Partial::B => {
            let h = FD_STEP * b.abs().max(1.0);
            (fj(a, b + h) - fj(a, b - h)) / (2.0 * h)
        }
    };
    let mut factorial = 1.0;
    for k in 2..=j {
        factorial *= k as f64;
    }
    d / factorial
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: Lambda) -> SystemParams {
        SystemParams::new(1.0, l).unwrap()
    }

    fn square(r: f64) -> DomainBox {
        DomainBox::new((-r, r), (-r, r)).unwrap()
    }

    #[derive(Debug, Clone)]
    struct Zero;

    impl Generator for Zero {
        fn value(&self, _: f64, _: f64, _: f64) -> f64 {
            0.0
        }
        fn d_a(&self, _: f64, _: f64, _: f64) -> f64 {
            0.0
        }
        fn d_b(&self, _: f64, _: f64, _: f64) -> f64 {
            0.0
        }
        fn d_t(&self, _: f64, _: f64, _: f64) -> f64 {
            0.0
        }
        fn is_time_independent(&self) -> bool {
            true
        }
    }

    #[test]
    fn f_lambda_examples() {
        assert_eq!(f_lambda(0.0, &params(Lambda::Finite(1.0))).unwrap(), 0.0);
        let v = f_lambda(1.0, &params(Lambda::Finite(1.0))).unwrap();
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15);
        let v = f_lambda(1.0, &params(Lambda::Finite(10.0))).unwrap();
        assert!((v - 0.995_033_085_316_808_3).abs() < 1e-13);
        assert_eq!(f_lambda(0.37, &params(Lambda::Infinite)).unwrap(), 0.37);
        assert!(matches!(
            f_lambda(-1.0, &params(Lambda::Finite(1.0))),
            Err(Error::LogDomain { .. })
        ));
    }

    #[test]
    fn f_j_examples() {
        assert_eq!(f_j(1, 0.7), 0.7);
        assert_eq!(f_j(3, 2.0), 16.0);
        assert_eq!(f_j(7, 0.0), 0.0);
    }

    #[test]
    fn f_lambda_series_examples() {
        let p = params(Lambda::Finite(2.0));
        let one = TruncationOrder::new(1).unwrap();
        assert_eq!(f_lambda_series(one, 1.0, &p).unwrap(), 1.0);
        let twenty = TruncationOrder::new(20).unwrap();
        let s = f_lambda_series(twenty, 1.0, &p).unwrap();
        assert!((s - 4.0 * libm::log(1.25)).abs() < 1e-9);
        assert!(matches!(
            f_lambda_series(twenty, -5.0, &p),
            Err(Error::ConvergenceDomain { .. })
        ));
    }

    #[test]
    fn classical_exchange_at_infinite_lambda() {
        let spec = GeneratingFunctionSpec::new(
            CtType::One,
            CatalogGenerator::Exchange,
            params(Lambda::Infinite),
            square(3.0),
        )
        .unwrap();
        let r = ct_apply(&spec, PhaseState::new(0.4, -1.1), 0.0, 2.0).unwrap();
        assert!(r.new_state.distance(&PhaseState::new(-1.1, -0.4)) < 1e-12);
        assert_eq!(r.new_hamiltonian, 2.0);
        assert!(r.diagnostics.residual < 1e-10);
    }

    #[test]
    fn exchange_matches_closed_form() {
        let prm = params(Lambda::Finite(2.0));
        let c = 4.0;
        let spec =
            GeneratingFunctionSpec::new(CtType::One, CatalogGenerator::Exchange, prm, square(1.5))
                .unwrap();
        let (x, p) = (0.6, 0.7);
        let r = ct_apply(&spec, PhaseState::new(x, p), 0.0, 0.0).unwrap();
        let big_x = p * c / (c - p * x);
        let big_p = -x * c / (c + x * big_x);
        assert!((r.new_state.x - big_x).abs() < 1e-13);
        assert!((r.new_state.p - big_p).abs() < 1e-13);
    }

    #[test]
    fn all_types_round_trip() {
        let prm = params(Lambda::Finite(3.0));
        let cases = [
            (CtType::One, CatalogGenerator::ScaledExchange { alpha: 0.8 }),
            (CtType::Two, CatalogGenerator::Identity),
            (CtType::Three, CatalogGenerator::IdentityType3),
            (CtType::Four, CatalogGenerator::ExchangeType4),
            (CtType::Two, CatalogGenerator::Translation { velocity: 0.5 }),
        ];
        for (ty, g) in cases {
            let spec = GeneratingFunctionSpec::new(ty, g, prm, square(2.0)).unwrap();
            let s = PhaseState::new(0.5, -0.3);
            let r = ct_apply(&spec, s, 0.2, 0.0).unwrap();
            let (back, diag) = ct_inverse(&spec, r.new_state, 0.2).unwrap();
            assert!(back.distance(&s) < 1e-12, "{g:?}: {back:?}");
            assert!(diag.residual < 1e-10);
        }
    }

    #[test]
    fn translation_shifts_hamiltonian() {
        let spec = GeneratingFunctionSpec::new(
            CtType::Two,
            CatalogGenerator::Translation { velocity: 2.0 },
            params(Lambda::Infinite),
            square(5.0),
        )
        .unwrap();
        let r = ct_apply(&spec, PhaseState::new(1.0, 0.5), 0.5, 3.0).unwrap();
        assert!(r.new_state.distance(&PhaseState::new(2.0, 0.5)) < 1e-12);
        assert!((r.hamiltonian_shift - 1.0).abs() < 1e-12);
        assert!((r.new_hamiltonian - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_generator_is_degenerate() {
        let spec = GeneratingFunctionSpec::new(
            CtType::One,
            Zero,
            params(Lambda::Finite(1.0)),
            square(1.0),
        )
        .unwrap();
        assert!(spec.is_degenerate());
        assert_eq!(spec.value(0.3, 0.2, 0.0).unwrap(), 0.0);
        assert!(matches!(
            ct_apply(&spec, PhaseState::new(0.1, 0.2), 0.0, 0.0),
            Err(Error::DegenerateGenerator)
        ));
        let order = TruncationOrder::new(6).unwrap();
        for r in ct_hierarchy_expand(&spec, order).unwrap() {
            assert_eq!(r.residual, 0.0);
        }
    }

    #[test]
    fn domain_errors() {
        // xX reaches -4 on [-2, 2]², below -mλ² = -1
        let err = GeneratingFunctionSpec::new(
            CtType::One,
            CatalogGenerator::Exchange,
            params(Lambda::Finite(1.0)),
            square(2.0),
        );
        assert!(matches!(err, Err(Error::LogDomain { .. })));
        let spec = GeneratingFunctionSpec::new(
            CtType::One,
            CatalogGenerator::Exchange,
            params(Lambda::Infinite),
            square(1.0),
        )
        .unwrap();
        // p = X needs X = 5, outside the box
        assert!(matches!(
            ct_apply(&spec, PhaseState::new(0.2, 5.0), 0.0, 0.0),
            Err(Error::NoRoot { .. })
        ));
        assert!(DomainBox::new((1.0, 0.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn ambiguous_root_is_reported() {
        #[derive(Clone)]
        struct Cubic;
        impl Generator for Cubic {
            fn value(&self, a: f64, b: f64, _: f64) -> f64 {
                a * (b * b * b - b)
            }
            fn d_a(&self, _: f64, b: f64, _: f64) -> f64 {
                b * b * b - b
            }
            fn d_b(&self, a: f64, b: f64, _: f64) -> f64 {
                a * (3.0 * b * b - 1.0)
            }
            fn d_t(&self, _: f64, _: f64, _: f64) -> f64 {
                0.0
            }
            fn is_time_independent(&self) -> bool {
                true
            }
        }
        let spec =
            GeneratingFunctionSpec::new(CtType::One, Cubic, params(Lambda::Infinite), square(2.0))
                .unwrap();
        assert!(matches!(
            ct_apply(&spec, PhaseState::new(0.5, 0.1), 0.0, 0.0),
            Err(Error::AmbiguousRoot { .. })
        ));
    }

    #[test]
    fn bracket_of_lambda_momentum() {
        let osc = Potential::harmonic(1.0);
        let prm = params(Lambda::Finite(1.5));
        let s = PhaseState::new(0.7, -0.4);
        let pl = |st: PhaseState| multiplicative_momentum_at(st, &osc, &prm).unwrap();
        let measured = crate::dynamics::poisson_bracket(|st| st.x, pl, s);
        let expected = lambda_momentum_bracket(s, &osc, &prm);
        assert!((measured - expected).abs() < 1e-8);
        assert!(expected < 1.0);
    }

    #[test]
    fn identity_commutes_with_dynamics() {
        let spec = GeneratingFunctionSpec::new(
            CtType::Two,
            CatalogGenerator::Identity,
            params(Lambda::Infinite),
            square(3.0),
        )
        .unwrap();
        let cfg = IntegratorConfig::rk4(1e-2, 1.0).unwrap();
        let d = ct_dynamics_check(
            &spec,
            &Potential::harmonic(1.0),
            PhaseState::new(1.0, 0.0),
            &cfg,
        )
        .unwrap();
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn expansion_of_exchange() {
        let spec = GeneratingFunctionSpec::new(
            CtType::One,
            CatalogGenerator::Exchange,
            params(Lambda::Finite(4.0)),
            square(1.0),
        )
        .unwrap();
        let res = ct_hierarchy_expand(&spec, TruncationOrder::new(5).unwrap()).unwrap();
        assert!(res[0].residual < 1e-8, "{res:?}");
        for r in &res {
            assert!(r.residual < 1e-6, "{res:?}");
        }
        assert!(ct_hierarchy_expand(&spec, TruncationOrder::new(9).unwrap()).is_err());
    }
}
