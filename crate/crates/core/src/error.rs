use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid epidemic state (s = {s}, i = {i}): {reason}")]
    InvalidState {
        s: f64,
        i: f64,
        reason: &'static str,
    },

    /// The integrated state left the simplex `s > 0, i >= 0, s + i <= 1`.
    #[error("state drifted out of the simplex at t = {t}: s = {s}, i = {i}")]
    SimplexDrift { t: f64, s: f64, i: f64 },

    #[error("infected proportion underflowed to {i} at t = {t}")]
    InfectedUnderflow { t: f64, i: f64 },

    #[error("no bracket for the final-size equation after {halvings} halvings (level {level})")]
    NoBracket { halvings: usize, level: f64 },

    #[error("uncontrolled trajectory never crosses S_herd = {s_herd} (s0 = {s0})")]
    NoHerdCrossing { s0: f64, s_herd: f64 },

    #[error("no convergence after {iterations} iterations, last bracket [{lo}, {hi}]")]
    MaxIterations { iterations: usize, lo: f64, hi: f64 },
}

impl Error {
    /// True for errors caused by the caller's inputs rather than by the solver.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::InvalidState { .. }
        )
    }
}

pub(crate) fn require(
    cond: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
