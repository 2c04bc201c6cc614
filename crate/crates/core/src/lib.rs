//! Outage analysis of direct transmission and decode-and-forward relaying
//! (dual-hop, selection combining, maximum ratio combining) for short packets
//! over quasi-static Rayleigh fading, using the normal approximation of the
//! finite-blocklength coding rate.
//!
//! The crate offers three ways to evaluate every link outage:
//! closed forms built on a piecewise-linear surrogate of the Q-function
//! ([`outage_closed`]), adaptive quadrature of the exact expectation, and
//! seeded Monte Carlo ([`oracles`]). [`protocols`] composes link outages into
//! protocol outages and [`analysis`] drives power-allocation optimization,
//! reliability-region maps and parameter sweeps.

pub mod analysis;
pub mod error;
pub mod fb_core;
pub mod linearization;
pub mod oracles;
pub mod outage_closed;
pub mod protocols;

pub use error::{Error, Result};
pub use fb_core::{RateSpec, SnrValue};
pub use linearization::{LinConvention, LinearizationParams};
pub use oracles::{Method, OutageEstimate};
pub use outage_closed::HypoexpParams;
pub use protocols::{Backend, ProtocolKind, TopologyConfig};
