//! Cable-graph Gaussian free field laboratory.
//!
//! Samples the field and its sign clusters, the loop-soup parity and
//! excursion descriptions of the squared field, and runs the statistical
//! comparisons between them.

pub mod error;
pub mod excursions;
pub mod gff;
pub mod graph;
pub mod green;
pub mod lab;
pub mod loops;
pub mod one_edge;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
