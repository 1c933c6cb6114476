//! Sphere decoding through the lattice Gaussian distribution.
//!
//! The crate is organised bottom-up: [`lattice`] holds bases, QR, LLL and
//! brute-force oracles; [`gaussian`] the discrete Gaussian machinery;
//! [`decoders`] the Babai, Fincke-Pohst, pruning-size (ESD), Klein-probability
//! (RSD) and Klein sampling decoders; [`mimo`] the Monte-Carlo MIMO harness;
//! [`verify`] randomized property suites shared by the CLI and tests.

pub mod decoders;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod lattice;
pub mod mimo;
pub mod verify;

pub use error::{Error, Result};
