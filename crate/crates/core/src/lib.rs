//! Exact two-electron grid simulation of a soft-core 1D helium atom in a
//! strong laser pulse, with Bohmian trajectory ensembles, injection-locking
//! phase statistics, ionization yields, reduced-density-matrix entropies and
//! a time-dependent quantum Monte Carlo (TDQMC) walker ensemble.

// `!(x > 0.0)` guards deliberately reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod absorber;
pub mod bohmian;
pub mod config;
pub mod error;
pub mod fft;
pub mod grid;
pub mod laser;
pub mod observables;
pub mod ground_state;
pub mod par;
pub mod phase;
pub mod potential;
pub mod propagator;
pub mod report;
pub mod runner;
pub mod tdqmc;
pub mod wavefunction;

pub use error::{Error, Result};
