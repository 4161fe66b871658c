use thiserror::Error;

pub type Result<T, E = SketchError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("cannot sketch an empty vector")]
    EmptyVector,
    #[error("sketch length must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("batch increment must be at least 1, got {0}")]
    InvalidDelta(usize),
    #[error("element {element} has weight {weight}; weights must be positive and at least {min}")]
    InvalidWeight { element: u64, weight: f64, min: f64 },
    #[error("element index must be at least 1")]
    ZeroElement,
    #[error("element {0} appears more than once")]
    DuplicateElement(u64),
    #[error("element {0} is not present in the vector")]
    MissingElement(u64),
    #[error("queue for element {element} is exhausted after {k} customers")]
    ExhaustedQueue { element: u64, k: usize },
    #[error("element {element} reappeared with weight {got}, previously {expected}")]
    InconsistentWeight {
        element: u64,
        expected: f64,
        got: f64,
    },
    #[error("sketch is incomplete; unset registers: {0:?}")]
    IncompleteSketch(Vec<usize>),
    #[error("sketch lengths differ: {0} vs {1}")]
    MismatchedK(usize, usize),
    #[error("sketches were built with different seed schemes ({0:#018x} vs {1:#018x})")]
    MismatchedScheme(u64, u64),
    #[error("no sketches to combine")]
    EmptyInput,
    #[error("cardinality estimation needs k >= 2, got {0}")]
    KTooSmall(usize),
    #[error("unknown distribution {0:?}")]
    UnknownDistribution(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("layer {layer} is out of range 1..={depth}")]
    LayerOutOfRange { layer: usize, depth: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed sketch record: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SketchError {
    fn from(e: std::io::Error) -> Self {
        SketchError::Io(e.to_string())
    }
}
