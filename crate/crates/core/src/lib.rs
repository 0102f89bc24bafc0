//! Transmit power minimization for IRS-assisted physical-layer broadcasting.
//!
//! A base station with `M` antennas serves `K` single-antenna users with one
//! common stream, helped by an intelligent reflecting surface of `N`
//! phase-only units. [`alternating`] minimizes `‖w‖²` subject to per-user
//! SINR targets by alternating an SDR beamformer step ([`beamforming`]) with
//! an SDR phase step ([`phase`]); [`bound`] evaluates the closed-form lower
//! bound on average power and [`harness`] runs Monte-Carlo sweeps.

pub mod alternating;
pub mod beamforming;
pub mod bound;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod phase;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
