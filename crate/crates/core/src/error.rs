use crate::autoref::CandidateBox;
use crate::registration::RegistrationResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("no correspondences within the gating distance")]
    NoCorrespondences,
    #[error("no alignment candidate reached the required support")]
    NoAlignmentFound,
    #[error("referencing rejected (rmse {:.4} m, inlier fraction {:.3})", .0.rmse, .0.inlier_fraction)]
    ReferencingRejected(Box<RegistrationResult>),
    #[error("descriptor window contains no points")]
    EmptyWindow,
    #[error("automatic referencing failed for all {} candidates", .0.len())]
    AutoReferencingFailed(Vec<CandidateBox>),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("ray does not hit the surface")]
    NoSurfaceHit,
    #[error("inverse kinematics did not converge")]
    IkFailed,
    #[error("goal configuration is in collision")]
    GoalInCollision,
    #[error("planning budget of {0} nodes exhausted")]
    PlanningTimeout(usize),
    #[error("waypoint {id}: {source}")]
    Waypoint {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("robot model not found: {0}")]
    ModelNotFound(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column: 0,
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
