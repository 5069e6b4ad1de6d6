use thiserror::Error;

use crate::fit::FanoFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// A root of the photon-number cubic came out negative. This is an
    /// algebra bug, never a user error.
    #[error("non-physical steady state: {0}")]
    NonPhysical(String),

    #[error("atom-dressed cavity damping κ_eff = {kappa_eff:.6e} rad/s is not positive")]
    NonPositiveEffectiveDamping { kappa_eff: f64 },

    #[error("selected steady-state branch {index} is dynamically unstable (max growth rate {growth_rate:.6e} rad/s)")]
    UnstableBranch { index: usize, growth_rate: f64 },

    #[error("branch index {index} out of range: {count} root(s) available")]
    BranchOutOfRange { index: usize, count: usize },

    #[error(
        "response matrix is singular at Δ = {delta:.9e} rad/s (condition number {condition:.3e})"
    )]
    SingularResponse { delta: f64, condition: f64 },

    #[error("closed form requires g_ac = 0")]
    AtomCouplingPresent,

    #[error("no resonance: {0}")]
    ZeroCoupling(&'static str),

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fit window invalid: {0}")]
    InvalidWindow(String),

    #[error("Fano fit did not converge after {iterations} iterations (rms residual {residual:.3e})", iterations = best.iterations, residual = best.residual)]
    NoConvergence { best: Box<FanoFit> },

    #[error("trajectory diverged at t = {time:.6e} s (state norm exceeded 1e12)")]
    Divergence { time: f64 },

    #[error("trajectory not settled: dc changed by {relative_change:.3e} (relative) between consecutive windows")]
    NotSettled { relative_change: f64 },

    #[error("integration plan invalid: {0}")]
    InvalidPlan(String),

    #[error("at grid point {index}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed spectrum CSV at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips any number of [`Error::AtGridPoint`] wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
