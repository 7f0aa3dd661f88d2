//! Outage and intercept probabilities for an uplink NOMA network with an
//! ambient backscatter device and artificial-noise jamming, plus a Monte
//! Carlo simulator that checks every closed form.
//!
//! The library works with linear SNR; dB conversion happens at the edges
//! ([`params::db_to_linear`]).

pub mod cascade;
pub mod error;
pub mod mcsim;
pub mod outage;
pub mod params;
pub mod quad;
pub mod secrecy;
pub mod specfun;

pub use error::{Error, Result};
pub use params::{EpsilonBranch, EveEnsemble, Node, SicMode, SystemParams};
