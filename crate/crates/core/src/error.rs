use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected: vertex {0} cannot reach the rest")]
    DisconnectedGraph(String),
    #[error("graph has neither boundary vertices nor killing")]
    NoKillingNoBoundary,
    #[error("edge {0} has non-positive resistance {1}")]
    NonpositiveResistance(usize, f64),
    #[error("negative killing rate at vertex {0}")]
    NegativeKilling(String),
    #[error("self-loop at vertex {0}")]
    SelfLoop(String),
    #[error("duplicate vertex label {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("Laplacian is singular")]
    SingularLaplacian,
    #[error("marked points coincide: {0}")]
    SameVertex(String),
    #[error("vertex {0} must be interior here")]
    NotInterior(String),
    #[error("excursion mass is zero")]
    ZeroMass,
    #[error("odd parity requested with zero mean")]
    OddWithZeroMean,
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("cycle leaves the open edge set")]
    CycleLeavesOpenSet,
    #[error("too few samples: {0} < 50")]
    TooFewSamples(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
