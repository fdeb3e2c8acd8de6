use thiserror::Error;

/// Errors raised by the solvers and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("unsupported symmetry sector {statistics} J={j} parity={parity:+}: {reason}")]
    UnsupportedSector {
        statistics: String,
        j: u32,
        parity: i32,
        reason: String,
    },

    #[error("mesh under-resolves the coincidence region at R={r}: {nodes} node spacings across width {width:.3e} (need at least {required})")]
    MeshResolution {
        r: f64,
        width: f64,
        nodes: usize,
        required: usize,
    },

    #[error("domain too small: outer turning point {turning_point:.6e} exceeds r_max {r_max:.6e}")]
    DomainTooSmall { turning_point: f64, r_max: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("channel relabeling failure at R={r}: overlap {overlap:.3} below 0.5 (likely a channel crossing)")]
    Relabel { r: f64, overlap: f64 },

    #[error("value R={r} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("solver failed at R={r}: {source}")]
    AtRadius {
        r: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_radius(self, r: f64) -> Self {
        match self {
            e @ Error::AtRadius { .. } => e,
            e => Error::AtRadius {
                r,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, skipping `AtRadius` annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtRadius { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
