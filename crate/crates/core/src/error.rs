use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter {value} outside the domain [0, 1]")]
    Domain { value: f64 },

    #[error("inadmissible discretisation: {0}")]
    Admissibility(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("conformity error on interface {interface}: edge gap {gap:e}")]
    Conformity { interface: usize, gap: f64 },

    #[error("irregular parametrisation on patch {patch} at corner ({c1}, {c2})")]
    Regularity { patch: usize, c1: u8, c2: u8 },

    #[error("gluing data vanishes on interface {interface}")]
    GluingDegenerate { interface: usize },

    #[error("infeasible constraints in {stage}: least-squares residual {residual:e}")]
    Infeasible { stage: String, residual: f64 },

    #[error("degenerate system in {stage}")]
    Degenerate { stage: String },

    #[error("surface is not AS-G1: residual {residual:e} on interface {interface}")]
    NotAsG1 { interface: usize, residual: f64 },

    #[error("problem does not match topology: {0}")]
    ProblemMismatch(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Re-labels stage-carrying errors with a more specific stage name.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        match self {
            Error::Infeasible { residual, .. } => Error::Infeasible {
                stage: stage.into(),
                residual,
            },
            Error::Degenerate { .. } => Error::Degenerate {
                stage: stage.into(),
            },
            other => other,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
