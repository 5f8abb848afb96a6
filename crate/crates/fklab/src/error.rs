use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation not supported on this domain: {0}")]
    UnsupportedDomain(String),
    #[error("medial edge {0} is not on the path")]
    NotOnPath(u32),
    #[error("domain has {edges} random edges, enumeration limit is {limit}")]
    TooLarge { edges: usize, limit: usize },
    #[error("spin is complex for q = {0} (only 0 <= q <= 4 is supported)")]
    ComplexSpinUnsupported(f64),
    #[error("medial vertex {0} is not interior")]
    UndefinedVertex(u32),
    #[error("site {0} is the origin and is excluded")]
    ExcludedSite(u32),
    #[error("observable requires q = 4, got {0}")]
    WrongObservable(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
