//! Closed-form per-symbol SINR of the decoupled receiver chains, the
//! resulting analytic SER, and Monte-Carlo estimators of both.

pub mod dense;
pub mod montecarlo;
pub mod ser;
pub mod sinr;

pub use dense::{dense_symbol_sinr, receiver_matrix};
pub use montecarlo::{empirical_ser, empirical_sinr, Link, SerEstimate, SinrEstimate};
pub use ser::{analytic_ser_qam, q_function};
pub use sinr::{closed_form_sinr, effective_matrices, link_sinr, EffectiveMatrices, SinrGrid};
