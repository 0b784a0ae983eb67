//! Generalized frequency division multiplexing (GFDM) as a block multicarrier
//! framework: frequency-domain modem, decoupled channel-equalizer plus
//! demodulator receivers, closed-form per-symbol SINR and symbol error rate
//! evaluation over block-fading multipath channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`dsp`], [`params`], [`pulse`], [`window`]: DFT convention, block
//!   geometry, prototype pulses and the modulator/receiver windows.
//! * [`modem`] and [`factors`]: the FFT-based modem, the dense reference
//!   modulator and the unitary factorization of the frequency-domain GFDM
//!   matrix.
//! * [`channel`]: block-fading multipath channels with cyclic prefix.
//! * [`receivers`]: zero-forcing and LMMSE channel equalizers, receiver
//!   windows and the dense joint-LMMSE oracle.
//! * [`analysis`]: effective per-subsymbol matrices, SINR, analytic and
//!   Monte-Carlo SER.
//! * [`stream`]: seeded per-block random streams and parallel maps.
//! * [`sim`]: scenarios, deterministic sweeps, reports and the identity
//!   verification suite.
//!
//! All DFTs are unnormalized in the forward direction:
//! `X[k] = sum_n x[n] exp(-j 2 pi k n / Q)`, and the inverse carries `1/Q`.
//! Matrices are column-major, so `vec(D)` places `d[k, m]` at `k + m*K`.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod dsp;
pub mod error;
pub mod factors;
pub mod modem;
pub mod params;
pub mod pulse;
pub mod qam;
pub mod receivers;
pub mod sim;
pub mod stream;
pub mod window;

pub use error::{GfdmError, Result};
pub use params::GfdmParams;

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix (column-major).
pub type CMat = nalgebra::DMatrix<C64>;

/// Data matrix `D` of size `K x M`; entry `(k, m)` is the symbol on
/// subcarrier `k`, subsymbol `m`.
pub type SymbolGrid = CMat;
