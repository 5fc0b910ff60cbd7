//! Balanced Tanner Units: `m × m` binary matrices formed by superposing `r`
//! pairwise-compatible permutations of `1..=m`.
//!
//! The crate is organised bottom-up:
//!
//! * [`partitions`]: partitions of `m` with every part at least 2, scaling,
//!   and the optimal-partition generator for girth-maximum families.
//! * [`permutations`]: permutations, compatibility, the partition between
//!   two permutations, the canonical `(m,2)` construction [`psi`] and
//!   tree-ordered enumeration of compatible extensions.
//! * [`microparts`]: margin-constrained micro-partitions, label mappings,
//!   cycle orders and permutation assembly.
//! * [`btu`]: the BTU itself with its matrix and Tanner-graph views, girth,
//!   cycle taxonomy, bounds, puncturing and cross-block analysis.
//! * [`search`]: exhaustive and partition-constrained girth searches.
//! * [`oracle`]: independent brute-force routines used for verification.

pub mod btu;
pub mod error;
pub mod microparts;
pub mod oracle;
pub mod partitions;
pub mod permutations;
pub mod search;

pub use btu::{BinaryMatrix, Btu};
pub use error::{Error, Result};
pub use microparts::{MicroPartition, OrderedLabeledPartition, UnorderedLabeledPartition};
pub use partitions::{Partition, PartitionFamilySpec};
pub use permutations::{psi, CompatibleSet, Permutation};
pub use search::{SearchBudget, SearchMode, SearchResult};
