use std::path::PathBuf;

/// Errors produced anywhere in the lab.
///
/// Variants are split into two families: usage/configuration problems and
/// physics-level failures (a closed gap, a non-projection, an unconverged
/// window). [`Error::is_physics`] tells them apart so the runner can pick an
/// exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid site {site} (lattice has {sites} sites)")]
    InvalidSite { site: usize, sites: usize },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("profile displacement {value} at column {column} exceeds amplitude bound {bound}")]
    AmplitudeViolation { column: usize, value: i64, bound: i64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operators live on different lattices")]
    LatticeMismatch,

    #[error("operator is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("not an insulator at E = {energy}: eigenvalue {eigenvalue} lies within {tol:e}")]
    NotAnInsulator { energy: f64, eigenvalue: f64, tol: f64 },

    #[error("invalid spectral function: {0}")]
    InvalidSpectralFunction(String),

    #[error("operator is not a projection (defect {defect:e})")]
    NotAProjection { defect: f64 },

    #[error("operator is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("empty region where a nonempty one is required: {0}")]
    EmptyRegion(String),

    #[error("flux quantization violated: b * Lx * Ly = {total} is not a multiple of 2*pi")]
    FluxQuantization { total: f64 },

    #[error("model has no Bloch symbol: {0}")]
    NoSymbol(String),

    #[error("k-grid too coarse: Chern residual {residual:e} exceeds {tol:e}")]
    GridTooCoarse { residual: f64, tol: f64 },

    #[error("gap closes at grid point k = {k:?} (eigenvalue {eigenvalue})")]
    GapClosedOnGrid { k: Vec<f64>, eigenvalue: f64 },

    #[error("window of radius {radius} touches {crossings} boundary crossings (expected exactly one)")]
    WindowOverlap { radius: f64, crossings: usize },

    #[error("bump support [{a}, {b}] is not inside the bulk gap ({gap_lo}, {gap_hi})")]
    SupportOutsideGap { a: f64, b: f64, gap_lo: f64, gap_hi: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("malformed triplet line {line}: {message}")]
    Triplet { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that are about the model rather than the input.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::NotAnInsulator { .. }
                | Error::NotAProjection { .. }
                | Error::NotUnitary { .. }
                | Error::GridTooCoarse { .. }
                | Error::GapClosedOnGrid { .. }
                | Error::SupportOutsideGap { .. }
                | Error::Eigensolver(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
