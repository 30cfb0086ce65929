use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Gram-Schmidt or a least-squares design hit a (numerically) dependent column.
    #[error("rank deficient: column {column} is linearly dependent on earlier columns")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("degenerate panel: every pair of observations coincides")]
    DegeneratePanel,

    #[error("degenerate weights: 1'inv(Sigma)1 = {0:e}")]
    DegenerateWeights(f64),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("backtest period {period} failed: {source}")]
    Backtest {
        period: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
