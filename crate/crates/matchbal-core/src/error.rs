use alloc::string::String;
use core::fmt;

/// Crate-wide error type, one variant per contract family.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid generator or run configuration.
    Config(String),
    /// A structural invariant was violated (roster/role mismatch, ...).
    Invariant(String),
    /// A referenced entity does not exist (player not on a roster, ...).
    Lookup(String),
    /// Records applied out of chronological order.
    Ordering(String),
    /// Aggregation over an empty set.
    Aggregation(String),
    /// Feature dimension or schema-hash mismatch between producer and consumer.
    Schema(String),
    /// Model fitting failed (empty data, non-finite values, degenerate labels).
    Fit(String),
    /// Training loss became non-finite.
    Divergence { epoch: usize, learning_rate: f64 },
    /// Malformed or truncated model container bytes.
    Format(String),
    /// Out-of-range argument (window sizes, keep counts, length mismatches).
    Parameter(String),
    /// A rolling-window evaluation could not be carried out.
    Evaluation(String),
    /// Input outside the mathematical domain of an operation.
    Domain(String),
    /// Design matrix is rank deficient; prune correlated features first.
    RankDeficient(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "invalid configuration: {m}"),
            Error::Invariant(m) => write!(f, "invariant violated: {m}"),
            Error::Lookup(m) => write!(f, "lookup failed: {m}"),
            Error::Ordering(m) => write!(f, "out-of-order record: {m}"),
            Error::Aggregation(m) => write!(f, "empty aggregation: {m}"),
            Error::Schema(m) => write!(f, "schema mismatch: {m}"),
            Error::Fit(m) => write!(f, "fit failed: {m}"),
            Error::Divergence { epoch, learning_rate } => write!(
                f,
                "training diverged at epoch {epoch} (learning rate {learning_rate})"
            ),
            Error::Format(m) => write!(f, "bad model container: {m}"),
            Error::Parameter(m) => write!(f, "invalid parameter: {m}"),
            Error::Evaluation(m) => write!(f, "evaluation failed: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::RankDeficient(m) => write!(f, "rank deficient: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
