//! Delay and jitter analysis for time-sensitive network paths that contain
//! dampers, under non-ideal clocks, together with a discrete-event simulator
//! that validates every bound empirically.

pub mod bounds;
pub mod clocks;
pub mod curves;
pub mod dampers;
pub mod scenarios;
pub mod sim;
pub mod tfa;
