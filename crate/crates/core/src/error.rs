use alloc::string::String;

/// Errors produced by tree construction, ePD evaluation and experiments.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("tree has no root")]
    NoRoot,
    #[error("tree has more than one root (nodes {0} and {1})")]
    MultipleRoots(usize, usize),
    #[error("node {node} has parent {parent}, which does not exist")]
    UnknownParent { node: usize, parent: usize },
    #[error("cycle detected through node {0}")]
    Cycle(usize),
    #[error("node {node} has {children} child(ren); non-leaf nodes need at least two")]
    TooFewChildren { node: usize, children: usize },
    #[error("branch into node {node} has invalid length {length}")]
    InvalidLength { node: usize, length: f64 },
    #[error("duplicate leaf label `{0}`")]
    DuplicateLabel(String),
    #[error("input arrays disagree in length: {0}")]
    ShapeMismatch(&'static str),
    #[error("unknown arc {0}")]
    UnknownArc(usize),
    #[error("unknown species {0}")]
    UnknownSpecies(usize),
    #[error("probability vector has {got} entries, tree has {expected} species")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probability {value} of species {species} is outside [0, 1]")]
    ProbabilityOutOfRange { species: usize, value: f64 },
    #[error("budget k = {k} exceeds the {n} available species")]
    BudgetOutOfRange { k: usize, n: usize },
    #[error("instance too large for exhaustive search: {n} species (cap {cap})")]
    AboveCap { n: usize, cap: usize },
    #[error("optimal ePD {0} is not positive; relative gap undefined")]
    NonPositiveOptimum(f64),
    #[error("cross-scenario ePD {cross} exceeds scenario optimum {optimum}")]
    NotOptimal { optimum: f64, cross: f64 },
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty result list")]
    EmptyResults,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
