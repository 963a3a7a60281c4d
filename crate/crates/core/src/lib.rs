//! Artificial-noise-aided secure multicast precoding for directional
//! modulation over line-of-propagation channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`array`] builds ULA steering vectors and group channel matrices.
//! * [`precoder`] designs confidential-message beams and AN projectors
//!   (Max-GRP + NSP, Max-SLNR + Max-ANLNR, and a block-diagonalization
//!   baseline).
//! * [`signal`] holds the QPSK mapper, power normalization and the
//!   transmit/receive models.
//! * [`metrics`] evaluates SINR, secrecy sum-rate and Monte Carlo BER.
//! * [`complexity`] evaluates the closed-form FLOP counts of each scheme.
//! * [`experiment`] orchestrates the sweeps behind the `dmcast` CLI.

pub mod array;
pub mod complexity;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod precoder;
pub mod signal;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
