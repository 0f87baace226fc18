//! Duchon–Robert dissipation functionals and third-order structure functions
//! on periodic 3D fields, with finite-scale checks of the Yaglom 4/3 laws for
//! passive scalars, ideal MHD, Euler helicity, Oldroyd-B and the α-models.
//!
//! The pipeline is: build fields on a [`grid::PeriodicGrid`], pick a
//! [`functionals::CatalogEntry`], evaluate dissipation fields and structure
//! curves over scale sweeps, and hand both sweeps to
//! [`functionals::law_check`].

// `!(x > 0.0)` style checks are kept because they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod increments;
pub mod mollifier;
pub mod numerics;
pub mod solver;
pub mod synth;
pub mod systems;

pub use error::{Error, Result};
pub use grid::{Field, PeriodicGrid, ScalarField, SymTensorField3, VectorField3};
