use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("distribution `{context}` sums to {sum}, outside the 1e-6 renormalisation window")]
    InvalidDistribution { context: String, sum: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("episode already reached the horizon")]
    HorizonExceeded,

    #[error("no episode in progress")]
    NoActiveEpisode,

    #[error("observation {obs} was never emitted at layer {layer}")]
    UnregisteredObservation { layer: usize, obs: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset exhausted: {needed} samples required, {available} available")]
    DatasetExhausted { needed: u64, available: u64 },

    #[error("labels for observation {obs} are not deterministic")]
    NoiselessViolation { obs: usize },

    #[error("distribution is not realizable: {0}")]
    RealizabilityViolation(String),

    #[error("rejection sampling gave up after {attempts} attempts")]
    GenerationTimeout { attempts: usize },

    #[error("the Bayes oracle cannot resolve this dataset: {0}")]
    MissingTruth(String),

    #[error("malformed input: {0}")]
    Format(String),
}
