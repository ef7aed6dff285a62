//! Truncated Fock-space models of radiation-pressure optomechanics and its
//! atom-coupled extension, with exact diagonalization, mean-field landscapes,
//! a two-parameter squeezed-vacuum variational solver and closed-form spectra.
//!
//! All Hamiltonian matrices are stored in units of the cavity frequency.
//! [`params::ModelParams`] keeps the physical values.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod algebra;
pub mod analytic;
pub mod error;
pub mod meanfield;
pub mod model;
pub mod params;
pub mod spectrum;
pub mod variational;

pub use error::{Error, Result};
pub use faer::c64;
