use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid formulation: {0}")]
    InvalidFormulation(String),

    #[error("insufficient data: {rows} usable rows after lag trimming (need at least 2)")]
    InsufficientData { rows: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("divergence: non-finite state at t = {time} min")]
    Divergence { time: f64 },

    #[error("time {time} outside integrated span [0, {t_end}]")]
    OutOfSpan { time: f64, t_end: f64 },

    #[error("collinear design for blanket {blanket:?} (rank {rank} < {cols} columns)")]
    CollinearDesign {
        blanket: Vec<usize>,
        rank: usize,
        cols: usize,
    },

    #[error("degenerate residual for blanket {blanket:?}: y'y - (g/(1+g)) yhat'yhat = {value}")]
    DegenerateResidual { blanket: Vec<usize>, value: f64 },

    #[error("enumeration too large: {count} blankets exceeds cap {cap}; reduce d_max")]
    EnumerationTooLarge { count: u64, cap: u64 },

    #[error("no valid models: every enumerated blanket was degenerate for target {target}")]
    NoValidModels { target: usize },

    #[error("constant vector: zero variance input to correlation test")]
    ConstantVector,

    #[error("undefined AUR: need at least one true and one false candidate edge")]
    UndefinedAur,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
