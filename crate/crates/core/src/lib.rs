//! Blind source separation by log-determinant mutual information maximization.
//!
//! Source estimates `S` (`r × N`) are found by projected gradient ascent on
//! the LD-mutual information between `S` and the observed mixtures `Y`
//! (`M × N`), with every column of `S` constrained to a known polytope.
//!
//! The crate is `no_std` (with `alloc`). File formats, the experiment harness
//! and the command line live in the companion `ldinfomax` crate.

#![no_std]

extern crate alloc;

pub mod datagen;
pub mod error;
pub mod eval;
pub mod ica;
pub mod linalg;
pub mod polytope;
pub mod solver;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use nalgebra;
pub use polytope::{Domain, PolytopeSpec, Preset};
pub use stats::{CovarianceBundle, SampleMatrix};
