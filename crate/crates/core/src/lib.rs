//! Simulation models for hybrid parallel quantum key distribution.
//!
//! The crate covers four layers:
//!
//! * [`optics`]: two-carrier sideband interference between Alice's
//!   Mach-Zehnder and Bob's phase modulator, in closed form and through an
//!   exact time-domain oracle.
//! * [`polarization`]: linearly polarized two-mode coherent states, their
//!   Stokes statistics, overlaps and photon counting behind a polarizing
//!   beam splitter.
//! * [`adversary`]: brute-force polarization identification, amplifier
//!   attacks with Bob-side anomaly monitoring, and photon-number-splitting
//!   exposure.
//! * [`key_pipeline`] and [`protocol`]: the shared-key basis distribution
//!   over mesoscopic pulses and the four session modes (baseline BB84,
//!   hybrid, parallel, hybrid parallel).

pub mod adversary;
pub mod error;
pub mod key_pipeline;
pub mod optics;
pub mod polarization;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result, Warning};
