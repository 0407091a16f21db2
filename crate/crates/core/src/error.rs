use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient jet order: need {needed} entries, got {got}")]
    InsufficientJetOrder { needed: usize, got: usize },

    #[error("jet order {requested} exceeds the configured maximum {max}")]
    JetOrderTooLarge { requested: usize, max: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("series reversion did not stabilize within {0} iterations")]
    ReversionStalled(usize),

    #[error("series reversion failed its composition check (residual {0:e})")]
    ReversionInconsistent(f64),

    #[error("truncation order {trunc} needs at least {needed} b coefficients, have {available}")]
    TruncationTooLarge { trunc: usize, needed: usize, available: usize },

    #[error("QL iteration did not converge for eigenvalue {0}")]
    EigenNoConvergence(usize),

    #[error("insufficient basis: requested {count} eigenvalues from a basis of size {basis}")]
    InsufficientBasis { count: usize, basis: usize },

    #[error("bracket failure for eigenvalue {n}: [{lo}, {hi}] holds {found} eigenvalue(s)")]
    BracketFailure { n: usize, lo: f64, hi: f64, found: i64 },

    #[error("pole of {func} at s = {s}")]
    Pole { func: &'static str, s: f64 },

    #[error("t = {t} is below the reliability threshold; minimal admissible t is {t_min}")]
    TimeTooSmall { t: f64, t_min: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
