//! Desk-scale computational harmonic analysis on uniform grids.
//!
//! Functions live on bounded one- or two-dimensional grids and are treated as
//! step functions, constant on cells and zero outside the grid domain. On top
//! of that substrate the crate provides:
//!
//! - exact decreasing rearrangements and Lorentz norms ([`lorentz`]),
//! - Lebesgue / Lorentz / variable-exponent / Orlicz norms, Morrey-type norms
//!   over ball families, and mean-oscillation machinery ([`spaces`]),
//! - Muckenhoupt weight constants, including multilinear variants
//!   ([`weights`]),
//! - Hardy-Littlewood-type maximal operators over dyadic and dense cube
//!   families ([`maximal`]),
//! - dyadic lattices, shifted covers, sparse families with certified
//!   sparseness, and sparse model operators ([`lattice`], [`sparse`]),
//! - discrete model singular integrals and their iterated commutators
//!   ([`operators`]),
//! - seeded corpus generation, suite execution, and deterministic reports
//!   ([`corpus`], [`report`], [`suites`]).
//!
//! Everything is deterministic: identical inputs (including seeds) produce
//! bit-identical outputs, which the report layer relies on.

pub mod corpus;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod lorentz;
pub mod maximal;
pub mod operators;
pub mod report;
pub mod spaces;
pub mod sparse;
pub mod suites;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Ball, Cube, Grid, GridFunction, Region};
