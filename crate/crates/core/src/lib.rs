//! Dyadic cell-permutation approximation of measure-preserving maps of the
//! unit cube and torus, and analysis of the resulting finite dynamics.
//!
//! The pipeline runs [`maps::overlap_matrix`] → [`lax::hall_matching`] →
//! [`lax::cyclicize`] → [`lax::bicyclize`], wrapped by
//! [`lax::lax_approximate`]. The other modules measure what comes out:
//! distances and approximation speed ([`metrics`]), towers ([`towers`]),
//! entropy ([`entropy`]), spectral measures ([`spectral`]). [`extension`]
//! builds explicit area-preserving maps that move finitely many points.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod extension;
pub mod grid;
pub mod lax;
pub mod maps;
pub mod metrics;
pub mod perm;
pub mod refined;
pub mod spectral;
pub mod towers;

pub use error::{Error, Result};
pub use grid::{DyadicGrid, Topology};
pub use maps::{MeasureMap, OverlapMatrix, Sampling};
pub use perm::CellPermutation;
pub use refined::RefinedSet;
