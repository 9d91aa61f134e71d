//! Core algorithms for predicting competitive balance in team sports
//! matches: a seeded synthetic match generator, online player/team/match
//! feature construction, score-difference regressors and win-probability
//! classifiers, feature selection and significance analysis, a
//! rolling-window evaluation harness, and a balance-gated matchmaking
//! loop.
//!
//! The crate is `no_std` + `alloc`; all file formats, CLI plumbing and
//! wall-clock benchmarking live in the companion `matchbal-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod features;
pub mod harness;
pub mod analysis;
pub mod linalg;
pub mod matchmaker;
pub mod models;
pub mod rngx;
pub mod simworld;
pub mod stats;

pub use error::{Error, Result};
