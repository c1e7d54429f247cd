//! Delayed-label stream learning benchmark.
//!
//! Drifting stream generators, label-delay models, instance-incremental and
//! batch-incremental learners, and a chunked evaluation harness that only
//! scores a chunk once every label in it has arrived.

pub mod batch;
pub mod delay;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod harness;
pub mod incremental;
pub mod stream;

pub use error::{Error, Result};
pub use stream::{Instance, RunSeed, StreamEvent, Substream};
