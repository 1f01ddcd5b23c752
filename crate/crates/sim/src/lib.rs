//! Experiment driver for the faulty-RIS simulation core: configuration
//! files, parallel Monte Carlo harness, CSV outputs and the invariant suite.

pub mod config;
pub mod harness;
pub mod output;
pub mod validate;
