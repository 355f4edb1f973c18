use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: String, expected: usize, found: usize },

    #[error("letter {letter} out of range for alphabet size {d}")]
    LetterOutOfRange { letter: usize, d: usize },

    #[error("polynomial is not homogeneous")]
    Inhomogeneous,

    #[error("ideal generators must be nonzero and homogeneous of degree >= 1 (generator {index})")]
    BadGenerator { index: usize },

    #[error("frame is not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },

    #[error("prescribed fibers violate X({n}) ⊆ X({i}) ⊗ X({j}) (residual {residual:.3e})")]
    InclusionViolation { i: usize, j: usize, n: usize, residual: f64 },

    #[error("q-matrix is not admissible at ({i}, {j}): q_ij * q_ji = {product}")]
    NotAdmissible { i: usize, j: usize, product: String },

    #[error("q-matrix outside the classified family: q_{i}{j} = 1")]
    OutsideClassifiedFamily { i: usize, j: usize },

    #[error("forbidden word {0:?} is shorter than 2")]
    ShortForbiddenWord(Vec<usize>),

    #[error("vector does not lie in X({level}) (residual {residual:.3e})")]
    NotInFiber { level: usize, residual: f64 },

    #[error("level {level} exceeds depth {depth}")]
    LevelTooDeep { level: usize, depth: usize },

    #[error("row norm {row_norm} with r = {r}: Poisson kernel not summable")]
    KernelNotSummable { row_norm: f64, r: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not stochastic: {0}")]
    NotStochastic(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
