use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value at {0}")]
    NonFiniteValue(String),
    #[error("duplicate trial id `{0}`")]
    DuplicateId(String),

    #[error("index needs 2 <= K <= n-1 (got K={k}, n={n})")]
    DegenerateK { k: usize, n: usize },
    #[error("within-cluster dispersion is zero")]
    ZeroWithinDispersion,
    #[error("two clusters share a barycenter")]
    CoincidentCentroids,
    #[error("every cluster has zero diameter")]
    ZeroDiameter,
    #[error("all pairwise distances are equal")]
    DegenerateDistances,
    #[error("total scatter matrix is singular")]
    SingularTotalScatter,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("sample is not sorted ascending")]
    Unsorted,
    #[error("zero variance")]
    ZeroVariance,
    #[error("rank variance is zero")]
    DegenerateVariance,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    #[error("subgroup is empty")]
    EmptySubgroup,
    #[error("bundle has no raw input")]
    MissingRawInput,
    #[error("no space rejected unimodality")]
    NoRetainedSpaces,
    #[error("bundle has no ground-truth partition")]
    MissingTruth,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with any pipeline-stage annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
