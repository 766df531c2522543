//! Models for cooperative, fully distributed generative channel learning in
//! UAV millimeter-wave networks.
//!
//! Everything here is pure and allocation-only so it can run on the vehicles
//! themselves. File formats, configuration and the command line live in the
//! `aerogan` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod completion;
pub mod error;
pub mod learning;
pub mod online;
pub mod rng;
pub mod topology;

pub use error::{Error, Infeasibility, Result};
pub use num_complex::Complex64;
