//! Channel assignment for multi-radio multi-channel wireless mesh networks.
//!
//! Three interference estimation metrics ([`iem`]) drive four optimizer
//! architectures ([`optimizer`]); a flow-level contention estimator
//! ([`evaluator`]) compares the resulting assignments, and [`experiment`]
//! runs the scheme x metric x rate x seed matrix.

pub mod error;
pub mod evaluator;
pub mod exec;
pub mod experiment;
pub mod iem;
pub mod io;
pub mod optimizer;
pub mod topology;

pub use error::{Error, Result};
pub use exec::Execution;
pub use iem::{better, score, IemScore, Metric};
pub use optimizer::{run_scheme, Scheme, SchemeConfig};
pub use topology::{ChannelAssignment, ConflictGraph, Connectivity, Topology};
