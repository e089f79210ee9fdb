use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation outside the domain of a model or expression.
    #[error("domain error: {message}{}", fmt_time(*.t))]
    Domain { message: String, t: Option<f64> },

    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("Wei-Norman matrix singular at t = {t} (condition {condition:e}, v = {v:?})")]
    Singular { t: f64, v: Vec<f64>, condition: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    /// Reduction produced a subgroup right-hand side leaving the subalgebra.
    #[error("reduction consistency error: residual {residual:e} outside the subalgebra at t = {t}")]
    Consistency { residual: f64, t: f64 },
}

fn fmt_time(t: Option<f64>) -> String {
    t.map(|t| format!(" at t = {t}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain {
            message: message.into(),
            t: None,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// Attach a time stamp to a domain error raised deeper in the stack.
    pub(crate) fn at_time(self, time: f64) -> Self {
        match self {
            Error::Domain { message, t: None } => Error::Domain { message, t: Some(time) },
            other => other,
        }
    }

    /// True for errors caused by leaving the domain of a model or expression.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain { .. })
    }

    /// True for integration and linear-algebra failures.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::StepUnderflow { .. }
                | Error::Singular { .. }
                | Error::Numeric(_)
                | Error::Consistency { .. }
        )
    }
}
