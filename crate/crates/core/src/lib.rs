//! Exact simulation of weak-value amplification with one qubit meter.
//!
//! The crate is `no_std` and needs only `alloc`. It covers small state
//! vector algebra ([`qcore`]), the independent, iterative and entangled
//! measurement schemes ([`protocols`]), Fisher information and Monte Carlo
//! estimation ([`metrology`]), a Jones-calculus model of a photonic
//! implementation ([`photonic`]) and a randomized check that the entangled
//! and iterative schemes coincide ([`equivalence`]).

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod equivalence;
pub mod error;
pub mod metrology;
pub mod photonic;
pub mod protocols;
pub mod qcore;
pub mod stream;

pub use error::{Error, Result};
pub use protocols::{run_exact, Observable, Scenario, WvaInstance};
pub use qcore::{Amplitude, OperatorMatrix, StateVector};
