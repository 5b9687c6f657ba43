// negated comparisons such as `!(x > 0.0)` are deliberate: they reject NaN
#![allow(clippy::nonminimal_bool, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod batch;
pub mod bench;
pub mod error;
pub mod geometry;
pub mod problem;
pub mod rgg;
pub mod search;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
