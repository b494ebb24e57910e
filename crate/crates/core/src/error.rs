use crate::metric::MetricMatrix;

/// Errors produced by graph construction, file ingestion and the numeric
/// stages of the denoising pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("node index {index} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge {
        /// 0-based endpoint as passed to the constructor.
        i: usize,
        j: usize,
        reason: EdgeErrorKind,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{what} must be nonnegative, got {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("parse error in {path} at row {row}: {message}")]
    Parse {
        path: String,
        row: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "similarity graph has no edges: smallest pairwise distance {min_distance} \
         exceeds threshold {threshold}"
    )]
    EmptyGraph { min_distance: f64, threshold: f64 },

    #[error("metric matrix is not positive semi-definite: {detail}")]
    MetricNotPsd { detail: String },

    #[error(
        "metric optimizer stalled at objective {objective}: no trial step decreased \
         the objective (best iterate attached)"
    )]
    OptimizerStalled {
        best: MetricMatrix,
        objective: f64,
    },

    #[error(
        "no feasible k-hop connected graph for any k in 1..={k_max} \
         (edge target {e_target})"
    )]
    InfeasibleNoiseGraph { e_target: usize, k_max: usize },

    #[error(
        "noise estimation requires similarity weights in (0, 1], \
         graph has maximum weight {max_weight}"
    )]
    WeightsAboveUnity { max_weight: f64 },

    #[error("no locally constant region with at least {n_min} nodes was found")]
    NoRegions { n_min: usize },

    #[error(
        "eigensolver did not converge within {iterations} iterations \
         (residual {residual:.3e}, tolerance {tol:.3e})"
    )]
    EigenNotConverged {
        residual: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("graph is disconnected ({components} components); {hint}")]
    Disconnected { components: usize, hint: &'static str },

    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

/// Why an edge was rejected at graph construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeErrorKind {
    SelfLoop,
    NonPositiveWeight,
    NonFiniteWeight,
    Duplicate,
}

impl std::fmt::Display for EdgeErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeErrorKind::SelfLoop => write!(f, "self-loops are not allowed"),
            EdgeErrorKind::NonPositiveWeight => write!(f, "edge weights must be strictly positive"),
            EdgeErrorKind::NonFiniteWeight => write!(f, "edge weight is not finite"),
            EdgeErrorKind::Duplicate => write!(f, "duplicate edge for this node pair"),
        }
    }
}

impl Error {
    /// Wrap an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
