use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A physical rate or pump amplitude outside its admissible range.
    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A formula evaluated outside the region where it holds.
    #[error("{0}")]
    Domain(String),

    #[error("visibility is undefined for an all-zero fringe pattern")]
    UndefinedVisibility,

    #[error("absorber order p = {p} exceeds the expansion limit {limit}")]
    Resource { p: u32, limit: u32 },

    #[error("quadrature did not converge: error estimate {achieved:e} > requested {requested:e}")]
    Convergence { achieved: f64, requested: f64 },

    #[error("{discarded} of {attempted} trajectories diverged (limit {limit_percent}%)")]
    StatisticsQuality {
        discarded: usize,
        attempted: usize,
        limit_percent: u32,
    },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
