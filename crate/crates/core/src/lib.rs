//! Virtual permutations and their polymorphisms.
//!
//! The crate covers finite symmetric groups with the cycle-deletion projections
//! and Ewens measures, Poisson–Dirichlet restaurants with the cut-and-glue
//! action, chip diagrams, checker surfaces, Dirichlet mixtures and the engines
//! that compute spreaded images of restaurants under circle collections and
//! chips. Everything here is `no_std` with `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod checker;
pub mod chip;
pub mod dirichlet;
pub mod engine;
pub mod error;
pub mod mixture;
pub mod perm;
pub mod restaurant;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use perm::{EwensParams, Permutation, Rational};
