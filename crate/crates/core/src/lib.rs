//! Point-sphere incidence geometry over finite fields of odd characteristic.

pub mod constructions;
pub mod error;
pub mod exact;
pub mod field;
pub mod forms;
pub mod geometry;
pub mod harness;
pub mod incidence;
pub mod instance;
pub mod sampling;

pub use error::{Error, Result};
