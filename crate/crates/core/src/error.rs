use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The generator has more than one stationary state (or the constrained
    /// system is numerically singular).
    #[error("degenerate steady state: kernel dimension {kernel_dim} (singular values {smallest:.3e}, {second:.3e})")]
    DegenerateSteadyState {
        kernel_dim: usize,
        smallest: f64,
        second: f64,
    },

    #[error("non-physical result: {0}")]
    NonPhysicalResult(String),

    #[error("time step {dt:.3e} us exceeds stability bound {bound:.3e} us")]
    StepTooLarge { dt: f64, bound: f64 },

    /// A closed-form expression was evaluated outside the regime it was derived for.
    #[error("outside formula domain: {0}")]
    DomainError(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
