use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain (bad length, k <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A factorization or iteration broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// `i*beta*I - A` is numerically singular.
    #[error("resolvent is numerically singular at beta = {beta} (sigma_min/sigma_max = {ratio:e})")]
    NearSingular { beta: f64, ratio: f64 },

    /// Newton's method failed to converge from the given seed.
    #[error("root search from seed {seed} did not converge after {iterations} iterations")]
    NonConvergence {
        seed: num_complex::Complex64,
        iterations: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn ensure_gain(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        domain(format!("feedback gain k must be positive and finite, got {k}"))
    }
}
