use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("could not find distinct expander columns after {0} resamples")]
    DuplicateExhaustion(usize),
    #[error("true coefficient vector is zero")]
    ZeroTruth,
    #[error("no transition located: {0}")]
    NoTransition(String),
    #[error("{}:{line}: {message}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("models are not nested: {0}")]
    InvalidNesting(String),
    #[error("complete separation: all observed proportions are 0 or 1")]
    Separation,
    #[error("IRLS did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("no crossing of level {0}")]
    NoCrossing(f64),
    #[error("reference curve order violated at delta = {0}: rhoT < rhoC")]
    OrderViolation(f64),
    #[error("no common cells between the compared record sets")]
    NoCommonCells,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("enumeration of {needed} subsets exceeds the budget of {budget}")]
    TooLarge { needed: u128, budget: u128 },
    #[error("integer overflow in {0}")]
    Overflow(String),
    #[error("spark+ failed on every column")]
    AllColumnsFailed,
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
