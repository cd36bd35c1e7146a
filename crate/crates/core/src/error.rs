use thiserror::Error;

/// Errors raised by the geometric kernels and the pipeline around them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension n = {0} (only 2 and 3 are supported)")]
    UnsupportedDimension(usize),

    #[error("point is not in the {model} model: {reason}")]
    OutsideModel { model: &'static str, reason: String },

    #[error("matrix is not an isometry: {0}")]
    NotIsometry(String),

    #[error("determinant must be 1, got {0}")]
    BadDeterminant(String),

    #[error("vector is not spacelike (<u,u> = {0})")]
    NotSpacelike(f64),

    #[error("vector is not lightlike (<p,p> = {0})")]
    NotLightlike(f64),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("horoballs are centred at the same ideal point")]
    SameIdealPoint,

    #[error("horoballs overlap (distance {0})")]
    Overlapping(f64),

    #[error("negative distance {0}")]
    NegativeDistance(f64),

    #[error("not an involution: {0}")]
    NotInvolution(String),

    #[error("tau-pairing impossible: {0}")]
    PairingImpossible(String),

    #[error("inconsistent decoration scales: {0}")]
    ScaleConflict(String),

    #[error("facet {facet} of cell {cell} has no neighbouring cell in the certified region")]
    UnpairedFacet { cell: usize, facet: usize },

    #[error("cell {0} meets more than one wall")]
    MultipleWalls(usize),

    #[error("wall is not orthogonal to facet {facet} of cell {cell} (<u,w> = {dot})")]
    NotOrthogonal { cell: usize, facet: usize, dot: f64 },

    #[error("cut locus incomplete: {0}")]
    IncompleteCutLocus(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
