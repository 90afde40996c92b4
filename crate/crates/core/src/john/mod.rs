//! John-curve probing and chain decompositions.
//!
//! Curves are shortest paths on occupied cells for a cost that grows near
//! the boundary, so they behave like the cone-shaped curves of a John
//! domain. Chains of Whitney cubes are read off these curves.

mod chains;
mod probe;
mod verify;

pub use chains::{build_chains, star_overlap_ratio, Chain, ChainDecomposition, CHAIN_OVERLAP_FLOOR};
pub use probe::{john_probe, john_probe_cells, CurveTree, JohnReport, JohnSample};
pub use verify::{verify_chains, ChainConditionReport, ChainWitness, ConditionCheck};
