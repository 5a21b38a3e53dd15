//! Riesz capacities on `Z^d`, discrete fractal percolation and hitting
//! probabilities of Minkowski sums of random sets.
//!
//! The crate is organised bottom-up: [`lattice`] holds points, finite sets and
//! the text format; [`capacity`] solves the equilibrium problem; [`fractal`]
//! samples `Q_d(p; k)` and evaluates its exact hitting probabilities;
//! [`hitting`] estimates `P((Q̂ + Q) ∩ A ≠ ∅)`; [`randomsets`] covers random
//! walk ranges.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod fractal;
pub mod hitting;
pub mod lattice;
pub mod randomsets;
pub mod rng;
pub mod stats;

pub use capacity::{capacity, capacity_with, energy, CapacityOptions, CapacityResult, Kernel, Measure, ShapeSpec};
pub use error::{Error, Result};
pub use fractal::{PercolationParams, PercolationSample, TreeWord};
pub use lattice::{LatticeBox, LatticePoint, PointSet};
pub use rng::StreamKey;
