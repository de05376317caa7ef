//! Runnable work-cell pipeline on top of `arcell-core`.
//!
//! - [`sim`]: synthetic spatial mesh of a robot cell with ground truth.
//! - [`hands`]: simulated hand motion, wrist IMU and HMD hand observations.
//! - [`persist`]: versioned artifact files.
//! - [`session`]: the stage machine a cell goes through.
//! - [`pipeline`]: the steps shared by the command line and the service.
//! - [`cli`] and [`service`]: the `arcell` binary and its HTTP/WebSocket server.

pub mod cli;
mod error;
pub mod hands;
pub mod persist;
pub mod pipeline;
pub mod service;
pub mod session;
pub mod sim;

pub use error::{Error, ErrorBody, Result};
