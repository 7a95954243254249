//! Coded MIMO-OFDM link-level simulation with an iterative MMSE/PIC receiver
//! and effective exponential SINR mapping (EESM) for post-decoder BER
//! prediction.
//!
//! The crate is organised bottom-up:
//!
//! - [`stcode`]: space-time block codes as dispersion matrices and the real
//!   linear map from stacked symbols to stacked transmit samples.
//! - [`channel`]: TU-6 frequency-domain channels, power imbalance and the
//!   real-valued equivalent channel per subcarrier.
//! - [`linkchain`]: convolutional coding, puncturing, interleaving, Gray QAM,
//!   max-log demapping, BCJR decoding and soft mapping.
//! - [`mcs`]: the supported space-time code, QAM and code-rate combinations.
//! - [`detector`]: MMSE and PIC detection, analytic and feedback SINR, and the
//!   iterative receiver loop.
//! - [`eesm`]: effective SINR compression, AWGN lookup tables, per-MCS
//!   calibration of the EESM parameter and BER prediction.
//! - [`sim`]: configuration, Monte Carlo orchestration and file formats used
//!   by the `mimo-eesm` command line tool.

pub mod channel;
pub mod detector;
pub mod eesm;
mod error;
pub mod linkchain;
pub mod mcs;
pub mod numfmt;
pub mod sim;
pub mod stcode;

pub use error::{Error, Result};

/// Real dense matrix used for all stacked real-valued system models.
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Real dense vector.
pub type RVector = nalgebra::DVector<f64>;
/// Complex dense matrix (antenna by slot codewords, channel matrices).
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
