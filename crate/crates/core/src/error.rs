use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid stabilizer group: {0}")]
    InvalidStabilizer(String),
    #[error("subset {subset:?} is not correctable")]
    NotCorrectable { subset: Vec<usize> },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
