use thiserror::Error;

/// Negative-weight cycle found by a label-correcting shortest path search.
///
/// `nodes` lists the cycle in traversal order; `weight` is the sum of the
/// edge weights around it, which is negative and can be re-checked by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeCycle {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String, f64)>,
    pub weight: f64,
}

impl std::fmt::Display for NegativeCycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (total weight {})", self.nodes.join(" -> "), self.weight)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(String),
    #[error("empty identifier")]
    EmptyId,
    #[error("reference pair is not strictly ordered: {0}")]
    Reference(String),
    #[error("bisection did not converge within {0} iterations")]
    Convergence(usize),
    #[error("value outside the search range [{lo}, {hi}]: {detail}")]
    Range { lo: f64, hi: f64, detail: String },
    #[error("degenerate reference pair: {0}")]
    DegenerateReference(String),
    #[error("comparison unknown for {0}")]
    Unknown(String),
    #[error("comparison gap: {0}")]
    ComparisonGap(String),
    #[error("affine fit failed: {0}")]
    Fit(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("model evaluation failed: {0}")]
    Model(String),
    #[error("orientation violated: {0}")]
    Orientation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("temperature ordering: {0}")]
    Ordering(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("negative cycle: {0}")]
    NegativeCycle(NegativeCycle),
    #[error("constraint is not a difference constraint: {0}")]
    UnsupportedConstraint(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
