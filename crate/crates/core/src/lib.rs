//! Finite approximations of Fraïssé limits and the coarse geometry of their
//! automorphism groups: orbital-type graphs, independence relations,
//! functorial amalgamation and permutation-group factorizations, all
//! checked exhaustively at small sizes.

// Distance matrices read most clearly with explicit indices.
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod amalgam;
pub mod error;
pub mod fraisse;
pub mod geometry;
pub mod groups;
pub mod independence;
pub mod orbits;
pub mod report;
pub mod structures;

pub use error::{Error, Result};
