//! Outage, training-period and transmission-capacity analysis for
//! Poisson-clustered MIMO ad hoc networks where every cluster runs
//! interference alignment, compared with a TDMA spatial-multiplexing baseline.
//!
//! Closed forms live in [`analytic`], [`trainopt`] and [`capacity`]; the
//! physical model ([`geometry`], [`channel`], [`phy`]) is simulated end to end
//! by [`montecarlo`] as an independent check.

pub mod analytic;
pub mod capacity;
pub mod channel;
pub mod disc;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod montecarlo;
pub mod params;
pub mod phy;
pub mod quad;
pub mod rng;
pub mod selfcheck;
pub mod stats;
pub mod trainopt;

pub use error::{Error, Result};
