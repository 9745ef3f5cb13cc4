use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid antigen transition {prev} -> {cur} for {mode}-antigen mode")]
    InvalidTransition { prev: u8, cur: u8, mode: u8 },

    #[error("relative fitness needs strictly positive absolute fitness values, got {0}")]
    NonPositiveFitness(f64),

    #[error("population of {0} is too small, at least 5 robots are required")]
    PopulationTooSmall(usize),

    #[error("seed file line {line}: {msg}")]
    SeedParse { line: usize, msg: String },

    #[error("antibody text `{text}`: {msg}")]
    AntibodyParse { text: String, msg: String },

    #[error("world config: {0}")]
    WorldConfig(String),

    #[error("plan line {line}: {msg}")]
    PlanParse { line: usize, msg: String },

    #[error("weak-antibody replacement is only defined for unseeded systems")]
    ReplacementInSeededMode,

    #[error("difference rate is undefined before any selection has been made")]
    NoSelections,

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
