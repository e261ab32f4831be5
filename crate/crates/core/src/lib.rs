//! Multivariate Hawkes processes: simulation, learning and analysis.

pub mod analyze;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod kernel;
pub mod learn;
pub mod model;
pub mod process;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use model::{Event, EventSequence, HawkesModel, Matrix};
