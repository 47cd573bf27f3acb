use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point {u:?} is closer than {margin} to the chart boundary")]
    Domain { u: [f64; 2], margin: f64 },

    #[error("thickness too large: det(Id + tΠ) = {det} at u = {u:?}, t = {t}")]
    ThicknessTooLarge { u: [f64; 2], t: f64, det: f64 },

    #[error("non-finite value while evaluating {what} at u = {u:?}")]
    Evaluation { what: String, u: [f64; 2] },

    #[error("finite-difference Hessian is not symmetric (asymmetry {asymmetry:e})")]
    DifferentiationFailure { asymmetry: f64 },

    #[error("degenerate material: normal-coupling block is singular ({0})")]
    DegenerateMaterial(String),

    #[error(
        "field is not an infinitesimal isometry: residual {residual:e} > {tol:e} at node {node} (u = {u:?})"
    )]
    NotAnIsometry {
        node: usize,
        u: [f64; 2],
        residual: f64,
        tol: f64,
    },

    #[error("energy blow-up at surface node {node}, transversal node {t_node} (u = {u:?}, W = {value})")]
    EnergyBlowup {
        node: usize,
        t_node: usize,
        u: [f64; 2],
        value: f64,
    },

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("config parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("study aborted at h = {h}: {source}")]
    Study {
        h: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }
}
