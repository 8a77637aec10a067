use thiserror::Error;

/// Errors raised by the simulator.
///
/// Physical quantities carried for diagnostics are stored as `f64` regardless
/// of the scalar type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("branch {index} not in saturation: overdrive {overdrive:.6e} V is not positive")]
    NotSaturated { index: usize, overdrive: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "no sign change in KCL residual over bracket [{lo:.6} V, {hi:.6} V]: \
         residual({lo:.6}) = {residual_lo:.6e} A, residual({hi:.6}) = {residual_hi:.6e} A"
    )]
    NoSignChange {
        lo: f64,
        hi: f64,
        residual_lo: f64,
        residual_hi: f64,
    },

    #[error("shared-node solve did not converge in {iterations} iterations (|residual| = {residual:.6e} A)")]
    OuterNotConverged { iterations: usize, residual: f64 },

    #[error("load fixed point for branch {branch} did not converge in {iterations} iterations")]
    InnerNotConverged { branch: usize, iterations: usize },

    #[error("{context}: {source}")]
    At {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn at(self, context: impl Into<String>) -> Self {
        Error::At {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a failure of a nonlinear solve.
    pub fn is_convergence(&self) -> bool {
        match self {
            Error::NoSignChange { .. }
            | Error::OuterNotConverged { .. }
            | Error::InnerNotConverged { .. } => true,
            Error::At { source, .. } => source.is_convergence(),
            _ => false,
        }
    }

    /// True when the root cause is an invalid configuration or parameter set.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::At { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
