use thiserror::Error;

pub type Result<T> = std::result::Result<T, KgError>;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("mass must be positive and finite, got {0}")]
    NonPositiveMass(f64),

    #[error("box length must be positive and finite, got {0}")]
    NonPositiveLength(f64),

    #[error("parameter `a` must satisfy |a| < 1, got {0}")]
    ParameterOutOfRange(f64),

    #[error("kappa must be positive, got {0}")]
    NonPositiveKappa(f64),

    #[error("Klein-Gordon normalization g must be positive, got {0}")]
    NonPositiveNorm(f64),

    #[error("boost speed |beta| = {0} is not below 1")]
    Superluminal(f64),

    #[error("four-vector is off shell: k.k = {found}, expected {expected}")]
    OffShell { found: f64, expected: f64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("array length {found} does not match lattice point count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("states are not comparable: {0}")]
    StateMismatch(String),

    #[error("mode with lattice index {index:?} exceeds the Nyquist bound |n| < {bound}")]
    Aliasing { index: [i64; 3], bound: i64 },

    #[error("mode field is not compatible with the lattice: {0}")]
    IncompatibleField(String),

    #[error("coincident points: the closed form is singular at r = 0")]
    CoincidentPoints,

    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("state has support within the boundary band along axis {axis} (relative magnitude {magnitude:e})")]
    BoundarySupport { axis: usize, magnitude: f64 },

    #[error("center {0:?} is not a lattice site")]
    OffLattice([f64; 3]),

    #[error("invalid rational parameter m/n = {m}/{n}: {reason}")]
    InvalidRational { m: i64, n: u64, reason: String },

    #[error("rationality of the gauge parameter must be declared explicitly")]
    UndeclaredRationality,

    #[error("operator construction requires phi = 0")]
    NonzeroScalarPotential,

    #[error("dense operator size {size} exceeds the cap of {cap} lattice points")]
    SizeCap { size: usize, cap: usize },

    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("non-positive eigenvalue {0} encountered")]
    NonPositiveEigenvalue(f64),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
