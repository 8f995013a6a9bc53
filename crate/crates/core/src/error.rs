use thiserror::Error;

/// Errors raised by the constructions and checks in this crate.
///
/// Verification failures (a lift that is not isometric, a criterion that
/// does not hold) are reported as verdicts, not as errors. Errors are for
/// violated preconditions and constructions that cannot be carried out.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("vectors are rank deficient (smallest relative singular value {0:e})")]
    RankDeficient(f64),
    #[error("matrix is singular (smallest singular value {0:e})")]
    Singular(f64),
    #[error("not a complex structure: residual {0:e}")]
    NotComplexStructure(f64),

    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("bad rotation plane ({0}, {1}) for ambient dimension {2}")]
    BadPlane(usize, usize, usize),
    #[error("did not converge: {0}")]
    NonConvergent(String),

    #[error("vector is not in the fiber: residual {0:e}")]
    NotInFiber(f64),
    #[error("too few transport steps: {0} (need at least 16)")]
    TooFewSteps(usize),
    #[error("holonomy sign is ambiguous: normalized inner product {0}")]
    Ambiguous(f64),

    #[error("bundle mismatch: `{0}` vs `{1}`")]
    BundleMismatch(String, String),
    #[error("degenerate Jacobian at {point:?}: smallest singular value {singular_value:e}")]
    DegenerateJacobian { point: Vec<f64>, singular_value: f64 },
    #[error("projection is not injective at {point:?}: smallest singular value {singular_value:e}")]
    NonInjective { point: Vec<f64>, singular_value: f64 },
    #[error(
        "torus criterion fails for A = {matrix:?}, b = {bits:?}: sign mismatch between x = {witness_point:?} and x + {witness_shift:?}"
    )]
    CriterionFails {
        matrix: Vec<Vec<i64>>,
        bits: Vec<u8>,
        witness_point: Vec<f64>,
        witness_shift: Vec<i64>,
    },
    #[error("lift is not isometric: residual {0:e}")]
    NotIsometric(f64),
    #[error("frame is not orthonormal: residual {0:e}")]
    NotOrthonormal(f64),
    #[error("bundle `{0}` has no complex structure")]
    NoComplexStructure(String),

    #[error("degenerate plaquette {triangle}: |tr(Q_a Q_b Q_c)| = {magnitude:e}")]
    DegeneratePlaquette { triangle: usize, magnitude: f64 },

    #[error("point {0:?} is not mapped into its patch")]
    PatchNotInvariant(Vec<f64>),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
