use thiserror::Error;

/// Errors produced by the grid model, estimators and attack constructors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: bus {bus} is not defined")]
    DanglingBus { line: usize, bus: u32 },

    #[error("line {line}: duplicate sensor {label}")]
    DuplicateSensor { line: usize, label: String },

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("zero impedance on connected line {from}-{to}")]
    ZeroImpedance { from: u32, to: u32 },

    #[error("unknown sensor {0}")]
    UnknownSensor(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measurement matrix is rank deficient (rank {rank}, {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("Gauss-Newton did not converge within {0} iterations")]
    Divergence(usize),

    #[error("singular normal equations")]
    Singular,

    #[error("initial measurement system is unobservable")]
    Unobservable,

    #[error("degenerate samples: covariance rank below the requested dimension {0}")]
    DegenerateSamples(usize),

    #[error("attack infeasible: {0}")]
    Infeasible(String),

    #[error("ambiguous null space: singular value gap {gap:.3} below {required}")]
    AmbiguousNullSpace { gap: f64, required: f64 },

    #[error("empty feasible attack space (no singular value below {0:e})")]
    EmptyFeasibleSpace(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
