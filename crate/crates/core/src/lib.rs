//! Strong chain recurrence on one-dimensional flows.
//!
//! Cells of a uniform [`space::Grid`] carry a two-layer [`graph::ChainGraph`]:
//! jump costs between midpoint images realize strong chains, and the
//! overlap relation between cell images encloses ω-limits. The
//! [`analysis`] and [`decompose`] modules build the recurrent sets and the
//! strongly stable decompositions on top of it.

pub mod error;
pub mod analysis;
pub mod decompose;
pub mod flow;
pub mod graph;
pub mod lemmas;
pub mod scc;
pub mod space;

pub use error::{Error, Result};
pub use flow::{CantorKind, Field, IntegratorConfig, SystemSpec};
pub use graph::{build_chain_graph, build_chain_graph_default, reverse_graph, ChainGraph, WeightedCsr};
pub use space::{CellSet, CollarComparison, Domain, Grid, Interval};
