//! Random walks on the nonnegative integers in doped random environments.
//!
//! The crate is `no_std` (with `alloc`). It covers environment sampling,
//! exact log-space hitting-time functionals with independent oracles,
//! recurrence classification, trajectory simulation and almost-sure
//! envelope checks for partial sums.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod env;
pub mod error;
pub mod math;
pub mod functionals;
pub mod limit_laws;
pub mod phase;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
