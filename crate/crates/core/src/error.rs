use thiserror::Error;

/// Errors shared across the engine and the exact solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameters are not sign-free: {0}")]
    SignProblem(String),

    #[error("operation requires jz = 0 (free-fermion limit), got jz = {0}")]
    NotFreeFermion(f64),

    #[error("Monte Carlo state corrupted: {0}")]
    Corruption(String),

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("Hilbert-space dimension guard: n_sites = {n_sites} exceeds the ED limit {limit}; use the free-fermion solver instead")]
    DimensionGuard { n_sites: usize, limit: usize },

    #[error("reference energy collides with an eigenvalue track near phi = {phi}: |det| = {det_abs:.3e}")]
    TrackCollision { phi: f64, det_abs: f64 },

    #[error("reference energy lies on the spectrum (min distance {0:.3e})")]
    OnSpectrum(f64),

    #[error("degenerate real parts at the filling edge (indices {indices:?}, values {values:?}); perturb mu to lift the tie")]
    FillingDegeneracy {
        indices: Vec<usize>,
        values: Vec<f64>,
    },

    #[error("log singularity in entropy: |xi^2 + (1-xi)^2| = {0:.3e}")]
    EntropySingularity(f64),

    #[error("negative vertex abundance from correlator input: {0}")]
    NegativeAbundance(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("{0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
