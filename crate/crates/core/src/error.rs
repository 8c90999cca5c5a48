use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space must have positive dimension")]
    EmptySpace,
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("fundamental symmetry is not involutive (|J^2 - I| = {defect:.3e}, offending eigenvalue {eigenvalue:.6})")]
    NotInvolutive { defect: f64, eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis is not orthonormal (|V^*V - I| = {defect:.3e})")]
    NonOrthonormalBasis { defect: f64 },
    #[error("subspace is indefinite")]
    NotSemidefinite,
    #[error("operator is not J-dissipative (lambda_max Herm(JL) = {lambda_max:.3e})")]
    NotJDissipative { lambda_max: f64 },
    #[error("{what} is not positive definite (lambda_min = {lambda_min:.3e})")]
    NotPositiveDefinite { what: String, lambda_min: f64 },
    #[error("matrix is numerically singular")]
    Singular,
    #[error("decomposition failed: {0}")]
    DecompositionFailed(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("interpolation parameter t must be positive, got {0}")]
    NonPositiveT(f64),
    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("lambda = {re}{im:+}i lies in the spectrum (sigma_min = {sigma_min:.3e})")]
    LambdaInSpectrum { re: f64, im: f64, sigma_min: f64 },
    #[error("mu = {re}{im:+}i lies in the spectrum of the block-diagonal part (sigma_min = {sigma_min:.3e})")]
    MuInSpectrum { re: f64, im: f64, sigma_min: f64 },
    #[error("spectrum meets the sampled sector at {re}{im:+}i")]
    SpectrumInSector { re: f64, im: f64 },
    #[error("eigenvalue {re}{im:+}i lies within tolerance of the imaginary axis")]
    ImaginarySpectrum { re: f64, im: f64 },
    #[error("Sylvester decoupling is ill-conditioned (separation {separation:.3e})")]
    SylvesterIllConditioned { separation: f64 },
    #[error("contour passes within {distance:.3e} of the spectrum")]
    ContourHitsSpectrum { distance: f64 },
    #[error("quadrature budget exceeded: estimated error {estimate:.3e} after {evaluations} evaluations")]
    QuadratureBudgetExceeded { estimate: f64, evaluations: usize },
    #[error("eigenvalue cluster is too close to the rest of the spectrum (gap {gap:.3e})")]
    ClusterTooClose { gap: f64 },
    #[error("complementary subspace is degenerate in the indefinite metric")]
    DegenerateComplement,
    #[error("spectrum of the restriction meets the scanned half-plane at {re}{im:+}i")]
    SpectrumInHalfPlane { re: f64, im: f64 },
    #[error("diagonal blocks are not dissipative: {0}")]
    BlocksNotDissipative(String),
    #[error("matrix exponential would overflow (spectral abscissa * t = {0:.3e})")]
    Overflow(f64),
    #[error("matrix is not stable (spectral abscissa {0:.3e})")]
    NotStable(f64),
    #[error("vector is not in the subspace (residual {0:.3e})")]
    NotInSubspace(f64),
    #[error("restriction to the subspace is not stable in either time direction")]
    NotStableRestriction,
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
