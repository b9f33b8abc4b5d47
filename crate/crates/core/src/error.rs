use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid scale: {0}")]
    InvalidScale(&'static str),
    #[error("no nonzero variance attainable with fewer than two trials")]
    NoNonzeroVariance,
    #[error("duplicate record for user {user:?}, item {item:?}, trial {trial}")]
    DuplicateRecord { user: String, item: String, trial: u32 },
    #[error("rating out of scale: {value} not in [{min}, {max}]")]
    RatingOutOfScale { value: i64, min: i32, max: i32 },
    #[error("trial index {trial} outside 1..={max}")]
    TrialOutOfRange { trial: u32, max: u32 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("degenerate reference distribution: sigma = {0}")]
    DegenerateReference(f64),
    #[error("exponential support violated: {0} is not positive")]
    ExponentialSupport(f64),
    #[error("invalid bounds: {0}")]
    InvalidBounds(&'static str),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("key mismatch at index {index}: distribution ({dist_user:?}, {dist_item:?}) vs predictor ({pred_user:?}, {pred_item:?})")]
    KeyMismatch {
        index: usize,
        dist_user: String,
        dist_item: String,
        pred_user: String,
        pred_item: String,
    },
    #[error("invalid variance {0}")]
    InvalidVariance(f64),
    #[error("degenerate barrier: all variances and offsets are zero")]
    DegenerateBarrier,
    #[error("missing central moment m_{0}")]
    MissingMoment(usize),
    #[error("unsupported Taylor order {0}")]
    UnsupportedOrder(usize),
    #[error("bin edges differ between densities")]
    EdgeMismatch,
    #[error("invalid density: {0}")]
    InvalidDensity(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

impl Error {
    /// Errors caused by numerically degenerate input rather than malformed data.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateBarrier | Error::DegenerateReference(_) | Error::NoNonzeroVariance
        )
    }
}
