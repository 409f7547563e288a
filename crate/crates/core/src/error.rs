use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tile: {0}")]
    InvalidTile(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("unknown tiling generator `{0}`")]
    UnknownGenerator(String),
    #[error("enumeration budget exceeded: {count} tiles > budget {budget}")]
    RegionTooLarge { count: usize, budget: usize },
    #[error("adjacent boxes {first} and {second} violate the adjacency condition ({detail})")]
    AdjacencyViolation {
        first: usize,
        second: usize,
        detail: String,
    },
    #[error("boxes {first} and {second} overlap")]
    BoxOverlap { first: usize, second: usize },
    #[error("coverage gap at {0:?}")]
    CoverageGap(Vec<f64>),
    #[error("multiplicity {count} exceeds bound {bound} at {point:?}")]
    MultiplicityExceeded {
        point: Vec<f64>,
        count: usize,
        bound: f64,
    },
    #[error("regularity violation between tiles {first} and {second}: distance {distance}")]
    RegularityViolation {
        first: String,
        second: String,
        distance: f64,
    },
    #[error("shape budget exceeded at t = {t}: {balls} balls > K(t) = {budget}")]
    KBudgetExceeded { t: f64, balls: usize, budget: f64 },
    #[error("growth function integral diverges: {0}")]
    KIntegralDiverges(String),

    #[error("weight is not unbounded: no t with ln W(t) >= {level}")]
    WeightNotUnbounded { level: f64 },
    #[error("truncation budget exceeded: bound {achieved:e} > requested {requested:e} at M = {m}")]
    TruncationBudgetExceeded {
        achieved: f64,
        requested: f64,
        m: usize,
    },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("certificate violation: {0}")]
    CertificateViolation(String),

    #[error("incomplete enumeration: omitted-tile bound {bound:e} exceeds allowance {allowed:e}")]
    IncompleteEnumeration { bound: f64, allowed: f64 },
    #[error("invalid inputs: {0}")]
    InvalidInputs(String),
    #[error("signal is not band limited to the sampling grid: {0}")]
    BandlimitViolation(String),
    #[error("region mismatch: {0}")]
    RegionMismatch(String),

    #[error("tile {tile} is not commensurate with the sampling grid: {detail}")]
    GridIncommensurate { tile: usize, detail: String },
    #[error("frame certificate is degenerate (A_cert = {a_cert})")]
    DegenerateCertificate { a_cert: f64 },
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("signal leaks {fraction:e} of its energy outside the certified region")]
    BoundaryLeak { fraction: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("missing report: {0}")]
    MissingReport(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
