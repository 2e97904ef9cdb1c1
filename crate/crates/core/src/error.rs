use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point {x} lies outside the domain [{left}, {right}]")]
    OutOfDomain { x: f64, left: f64, right: f64 },

    #[error("fields live on different meshes or degrees")]
    MeshMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular step system: pivot {pivot:e} at row {row} is below the guard threshold")]
    Singular { row: usize, pivot: f64 },

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("system has {unknowns} unknowns, above the limit of {limit}")]
    TooLarge { unknowns: usize, limit: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },

    #[error("sample {sample}: {source}")]
    AtSample { sample: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub fn at_sample(self, sample: usize) -> Self {
        Error::AtSample {
            sample,
            source: Box::new(self),
        }
    }
}
