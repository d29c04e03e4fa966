use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("no convergence after {iterations} iterations (estimated error {estimate:e})")]
    Convergence { iterations: usize, estimate: f64 },

    #[error("root not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Pre- and postselected states are orthogonal, so the weak value is 0/0.
    #[error("orthogonal pre/postselection: |cos(alpha - beta)| = {cos_diff:e} is below threshold")]
    OrthogonalSelection { cos_diff: f64 },

    /// Postselection acceptance vanishes; the postselected density is undefined.
    #[error("degenerate postselection: acceptance probability {probability:e} is below threshold")]
    DegeneratePostselection { probability: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    /// No photon survived postselection.
    #[error("no data detected: 0 of {n_emitted} emitted photons passed postselection")]
    EmptyBatch { n_emitted: u64 },
}
