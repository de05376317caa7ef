use serde::{Deserialize, Serialize};

use crate::session::Stage;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] arcell_core::Error),
    #[error("{action} needs stage {required:?} (session is in {current:?}); missing: {missing}")]
    StageViolation {
        action: &'static str,
        required: Stage,
        current: Stage,
        missing: &'static str,
    },
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("{0}")]
    Conflict(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Core(e.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Core(e.into())
    }
}

/// JSON body sent with every failed service request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoint: Option<String>,
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        use arcell_core::Error as C;
        match self {
            Error::StageViolation { .. } => "StageViolation",
            Error::UnknownSession(_) => "UnknownSession",
            Error::Conflict(_) => "Conflict",
            Error::Core(c) => match c {
                C::InvalidParameter(_) => "InvalidParameter",
                C::EmptyInput(_) => "EmptyInput",
                C::DegenerateInput(_) => "DegenerateInput",
                C::NoCorrespondences => "NoCorrespondences",
                C::NoAlignmentFound => "NoAlignmentFound",
                C::ReferencingRejected(_) => "ReferencingRejected",
                C::EmptyWindow => "EmptyWindow",
                C::AutoReferencingFailed(_) => "AutoReferencingFailed",
                C::InvalidConfiguration(_) => "InvalidConfiguration",
                C::NoSurfaceHit => "NoSurfaceHit",
                C::IkFailed => "IkFailed",
                C::GoalInCollision => "GoalInCollision",
                C::PlanningTimeout(_) => "PlanningTimeout",
                C::Waypoint { .. } => "Waypoint",
                C::ModelNotFound(_) => "ModelNotFound",
                C::Parse { .. } => "ParseError",
                C::Version { .. } => "VersionError",
                C::Io(_) => "Io",
            },
        }
    }

    pub fn body(&self) -> ErrorBody {
        let waypoint = match self {
            Error::Core(arcell_core::Error::Waypoint { id, .. }) => Some(id.clone()),
            _ => None,
        };
        ErrorBody { error: self.to_string(), kind: self.kind().to_string(), waypoint }
    }
}
