use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A standing model assumption that a network spec fails.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Weight matrix length does not match `neurons * neurons`.
    WeightShape {
        expected: usize,
        found: usize,
    },
    /// Per-neuron rate or pulse lists have the wrong length.
    ParameterCount {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    NonzeroSelfWeight {
        neuron: usize,
        weight: f64,
    },
    NonFiniteWeight {
        source: usize,
        target: usize,
    },
    PStarOutOfRange {
        neuron: usize,
        p_star: f64,
    },
    NonPositiveRateParameter {
        neuron: usize,
        name: &'static str,
        value: f64,
    },
    NonPositiveKernelParameter {
        neuron: usize,
        name: &'static str,
        value: f64,
    },
    EmptyNetwork,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WeightShape { expected, found } => {
                write!(f, "weight matrix has {found} entries, expected {expected}")
            }
            Violation::ParameterCount { field, expected, found } => {
                write!(f, "{field} has {found} entries, expected {expected}")
            }
            Violation::NonzeroSelfWeight { neuron, weight } => {
                write!(f, "nonzero self-weight {weight} at neuron {neuron}")
            }
            Violation::NonFiniteWeight { source, target } => {
                write!(f, "non-finite weight {source} -> {target}")
            }
            Violation::PStarOutOfRange { neuron, p_star } => {
                write!(f, "p_star not in (0, 1/2) at neuron {neuron}: {p_star}")
            }
            Violation::NonPositiveRateParameter { neuron, name, value } => {
                write!(f, "rate parameter {name} must be positive at neuron {neuron}: {value}")
            }
            Violation::NonPositiveKernelParameter { neuron, name, value } => {
                write!(f, "kernel parameter {name} out of range at neuron {neuron}: {value}")
            }
            Violation::EmptyNetwork => write!(f, "network has no neurons"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {}", join(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("neuron {0} is not part of the raster")]
    NeuronNotInRaster(usize),

    #[error("neuron {0} is not part of the network")]
    UnknownNeuron(usize),

    #[error("neuron {target} is not in the sampling region")]
    TargetNotInRegion { target: usize },

    #[error("candidate {candidate} is not a valid source for target {target}")]
    InvalidCandidate { target: usize, candidate: usize },

    #[error("presynaptic neuron {presynaptic} of {target} is missing from the raster")]
    MissingPresynaptic { presynaptic: usize, target: usize },

    #[error("time {t} outside 1..={n}")]
    TimeOutOfRange { t: usize, n: usize },

    #[error("empirical probability undefined for a context with zero occurrences")]
    UndefinedProbability,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("network too strongly coupled for the bound: no alpha <= {max_alpha} gives norm below 1")]
    StronglyCoupled { max_alpha: f64 },

    #[error("{path}: line {line}, field {field}: {message}")]
    Parse { path: String, line: u64, field: String, message: String },

    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for malformed or unreadable files, false for rejected inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Schema { .. } | Error::Io { .. } | Error::Csv(_) | Error::Json(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
