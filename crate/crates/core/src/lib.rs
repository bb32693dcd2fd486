//! Differentiable range-partition entropy estimators, exact small-instance
//! oracles, point-set restructuring and entropy-adaptive geometry.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod halfspace;
pub mod oracle;
pub mod partition;
pub mod points;
pub mod restructure;
pub mod rng;

pub use error::{Error, Result};
pub use partition::HardPartition;
pub use points::PointSet;
