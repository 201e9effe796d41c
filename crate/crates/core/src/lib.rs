//! Packing-covering spanner solver suite.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod density;
pub mod error;
pub mod gen;
pub mod greedy;
pub mod height;
pub mod io;
pub mod junction;
pub mod labels;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod product;
pub mod rcsp;
pub mod reductions;
pub mod scalar;
pub mod scaling;

pub use error::{PcsError, Result};
pub use model::{ConditionNumbers, Demand, Edge, PcsInstance, ResourceVector, Walk};
pub use scalar::Scalar;

/// Exact rational scalar used by default.
pub type Q = num_rational::BigRational;
