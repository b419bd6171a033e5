//! Fisher information, SLD quantum information and Sarovar–Milburn-type
//! bounds for parametric quantum channels.

pub mod bounds;
pub mod channels;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod multi;
pub mod quantum;
pub mod random;
pub mod verify;

pub use error::{QfiError, Result};
