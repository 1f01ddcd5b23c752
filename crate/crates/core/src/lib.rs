//! Simulation core for RIS-assisted MISO downlinks with faulty elements.
//!
//! The crate models a single-antenna user served by a multi-antenna access
//! point through a reconfigurable intelligent surface, where some surface
//! elements are stuck at random reflection states. It provides:
//!
//! - geometry, steering vectors and Rician channel synthesis ([`channel`]),
//! - fault patterns, fault states and the channel partition ([`faulty`]),
//! - SNR / leakage / SLNR metrics and received-power maps ([`metrics`]),
//! - a primal-dual interior-point solver for the lifted programs ([`sdp`]),
//! - the four configuration strategies ([`optimizers`]),
//! - a single Monte Carlo trial that runs all strategies on shared draws
//!   ([`trial`]).
//!
//! Everything here is `no_std` + `alloc`; file formats, the experiment
//! driver and the command line live in the companion `faulty-ris` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod error;
pub mod faulty;
pub mod linalg;
pub mod metrics;
pub mod optimizers;
pub mod rng;
pub mod scenario;
pub mod sdp;
pub mod trial;

pub use crate::error::{Error, Result};
pub use crate::linalg::{CMat, CVec, Cplx, Point3};
