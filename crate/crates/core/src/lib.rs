#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combin;
pub mod couplings;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod properties;
pub mod samplers;
pub mod stats;
pub mod thresholds;

pub use error::{Error, Result};
pub use graph::{FeatureAssignment, Graph, Hypergraph, PartiteHypergraph, Project};
