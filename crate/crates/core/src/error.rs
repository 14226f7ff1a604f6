use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter violated its documented range.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// The operation needs a finite λ; `additive` names the λ→∞ counterpart.
    InfiniteLambda {
        operation: &'static str,
        additive: &'static str,
    },
    /// `|F| ≥ mλ²`: outside the radius of convergence of the `ln(1 + u)` series.
    ConvergenceDomain {
        ratio: f64,
    },
    /// `F ≤ -mλ²`: the λ-lift hits the logarithm branch point.
    LogDomain {
        value: f64,
        floor: f64,
    },
    /// An integration step produced a non-finite state.
    NonFiniteState {
        last_good_time: f64,
    },
    /// No sign change of the implicit equation inside the search bracket.
    NoRoot {
        lo: f64,
        hi: f64,
    },
    /// More than one sign change inside the search bracket.
    AmbiguousRoot {
        sign_changes: usize,
        lo: f64,
        hi: f64,
    },
    /// The root finder stopped before reaching the residual tolerance.
    RootNotConverged {
        iterations: usize,
        residual: f64,
    },
    /// All partial derivatives of the lifted generator vanish on the domain box.
    DegenerateGenerator,
    EmptyTrajectory,
    NonIncreasingTimes {
        index: usize,
    },
    Unsupported(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::InfiniteLambda {
                operation,
                additive,
            } => write!(
                f,
                "{operation} requires a finite lambda; use {additive} for the additive limit"
            ),
            Error::ConvergenceDomain { ratio } => write!(
                f,
                "series outside its convergence domain: |F|/(m lambda^2) = {ratio} >= 1"
            ),
            Error::LogDomain { value, floor } => write!(
                f,
                "generator value {value} is at or below the branch point -m lambda^2 = {floor}"
            ),
            Error::NonFiniteState { last_good_time } => write!(
                f,
                "integration produced a non-finite state; last good time t = {last_good_time}"
            ),
            Error::NoRoot { lo, hi } => write!(f, "no sign change in bracket [{lo}, {hi}]"),
            Error::AmbiguousRoot {
                sign_changes,
                lo,
                hi,
            } => write!(
                f,
                "{sign_changes} sign changes in bracket [{lo}, {hi}]; shrink the domain box"
            ),
            Error::RootNotConverged {
                iterations,
                residual,
            } => write!(
                f,
                "root finder stopped after {iterations} iterations with residual {residual}"
            ),
            Error::DegenerateGenerator => {
                f.write_str("generating function has vanishing partials on its domain box")
            }
            Error::EmptyTrajectory => f.write_str("trajectory has no samples"),
            Error::NonIncreasingTimes { index } => {
                write!(
                    f,
                    "trajectory times not strictly increasing at sample {index}"
                )
            }
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
        }
    }
}

impl core::error::Error for Error {}
