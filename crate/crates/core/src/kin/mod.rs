//! Serial-chain kinematics, damped least squares IK and hand guidance.
//!
//! Link `i` is the body moved by joint `i`. [`fk`] returns one `base_from_link` pose per link
//! followed by the end-effector (tool) frame.

mod chain;
mod guidance;
mod ik;

pub use chain::{
    fk, jacobian, robot_model, Joint, JointKind, JointState, KinematicChain, Link, BUNDLED_MODELS,
};
pub use guidance::{grab_detect, hand_guidance_step, Grab, GuidanceOutcome, GuidanceParams, Propagation};
pub use ik::{ik_solve, pose_error, IkParams, IkSolution};
