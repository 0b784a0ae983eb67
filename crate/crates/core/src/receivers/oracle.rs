//! Dense joint receivers over the full `N x N` system
//! `y_fd = H A_fd d + v_fd`. These are brute-force references for the
//! decoupled chains and are limited to `N <= DENSE_LIMIT`.
//!
//! The dense LMMSE demodulator that follows zero-forcing equalization
//! ([`dense_lmmse_demodulator`]) is generally not a GFDM matrix and only
//! exists here as a verification path.

use nalgebra::DVector;

use crate::channel::ChannelRealization;
use crate::error::{GfdmError, Result};
use crate::factors::GfdmMatrixFactors;
use crate::modem::check_dense;
use crate::receivers::{check_channel_invertible, ReceiverSpec};
use crate::{CMat, SymbolGrid, C64};

fn solve(lhs: CMat, rhs: &CMat, what: &str) -> Result<CMat> {
    lhs.lu().solve(rhs).ok_or_else(|| GfdmError::InvalidReceiver(format!("{what} is singular")))
}

fn invert(mat: CMat, what: &str) -> Result<CMat> {
    mat.try_inverse().ok_or_else(|| GfdmError::InvalidReceiver(format!("{what} is singular")))
}

/// LMMSE filter for `y = G d + v` in covariance form,
/// `W^H = R_d G^H (G R_d G^H + R_v)^{-1}`.
pub fn lmmse_covariance_form(g: &CMat, r_d: &CMat, r_v: &CMat) -> Result<CMat> {
    let gram = g * r_d * g.adjoint() + r_v;
    // W^H = (gram^{-1} G R_d)^H since gram and R_d are Hermitian.
    let x = solve(gram, &(g * r_d), "G R_d G^H + R_v")?;
    Ok(x.adjoint())
}

/// LMMSE filter in information form,
/// `W^H = (G^H R_v^{-1} G + R_d^{-1})^{-1} G^H R_v^{-1}`.
pub fn lmmse_information_form(g: &CMat, r_d: &CMat, r_v: &CMat) -> Result<CMat> {
    let rv_inv = invert(r_v.clone(), "R_v")?;
    let rd_inv = invert(r_d.clone(), "R_d")?;
    let gh_rv_inv = g.adjoint() * rv_inv;
    let lhs = &gh_rv_inv * g + rd_inv;
    solve(lhs, &gh_rv_inv, "G^H R_v^{-1} G + R_d^{-1}")
}

/// Effective joint channel `H A_fd`.
pub fn effective_channel(chan: &ChannelRealization, a_fd: &CMat) -> Result<CMat> {
    let n = chan.h_fd.len();
    if a_fd.shape() != (n, n) {
        return Err(GfdmError::DimensionMismatch {
            expected: format!("{n}x{n} modulation matrix"),
            actual: format!("{}x{}", a_fd.nrows(), a_fd.ncols()),
        });
    }
    check_dense(n)?;
    let mut g = a_fd.clone();
    for (r, h) in chan.h_fd.iter().enumerate() {
        let mut row = g.row_mut(r);
        row *= *h;
    }
    Ok(g)
}

/// Both forms of the joint LMMSE filter with `R_d = Es I`,
/// `R_v = N sigma2 I`.
pub fn joint_lmmse_filters(chan: &ChannelRealization, a_fd: &CMat, spec: &ReceiverSpec) -> Result<(CMat, CMat)> {
    let g = effective_channel(chan, a_fd)?;
    let n = g.nrows();
    let r_d = CMat::identity(n, n) * C64::new(spec.es, 0.0);
    let r_v = CMat::identity(n, n) * C64::new(n as f64 * spec.sigma2, 0.0);
    Ok((lmmse_covariance_form(&g, &r_d, &r_v)?, lmmse_information_form(&g, &r_d, &r_v)?))
}

fn to_grid(d: DVector<C64>, k: usize, m: usize) -> SymbolGrid {
    CMat::from_column_slice(k, m, d.as_slice())
}

/// Joint zero-forcing `A_fd^{-1} H^{-1} y_fd`.
pub fn joint_zf(y_fd: &[C64], chan: &ChannelRealization, a_fd: &CMat) -> Result<SymbolGrid> {
    check_channel_invertible(&chan.h_fd)?;
    let y_eq: Vec<C64> = y_fd.iter().zip(&chan.h_fd).map(|(y, h)| y / h).collect();
    let d = a_fd
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(&y_eq))
        .ok_or_else(|| GfdmError::InvalidReceiver("modulation matrix is singular".into()))?;
    let (k, m) = chan.per_m_diag.shape();
    Ok(to_grid(d, k, m))
}

/// Dense joint LMMSE estimate `W^H y_fd`. Falls back to joint
/// zero-forcing when `sigma2 = 0`.
pub fn joint_lmmse_oracle(
    y_fd: &[C64],
    chan: &ChannelRealization,
    a_fd: &CMat,
    spec: &ReceiverSpec,
) -> Result<SymbolGrid> {
    spec.validate()?;
    if spec.sigma2 == 0.0 {
        return joint_zf(y_fd, chan, a_fd);
    }
    let g = effective_channel(chan, a_fd)?;
    let n = g.nrows();
    let r_d = CMat::identity(n, n) * C64::new(spec.es, 0.0);
    let r_v = CMat::identity(n, n) * C64::new(n as f64 * spec.sigma2, 0.0);
    let w_h = lmmse_covariance_form(&g, &r_d, &r_v)?;
    let (k, m) = chan.per_m_diag.shape();
    Ok(to_grid(w_h * DVector::from_column_slice(y_fd), k, m))
}

/// Covariance of the noise after zero-forcing equalization,
/// `R_vbar = N sigma2 (H H^H)^{-1}` (diagonal).
pub fn zf_noise_covariance(chan: &ChannelRealization, spec: &ReceiverSpec) -> Result<CMat> {
    check_channel_invertible(&chan.h_fd)?;
    let n = chan.h_fd.len();
    let sigma2_fd = n as f64 * spec.sigma2;
    let diag = DVector::from_iterator(n, chan.h_fd.iter().map(|h| C64::new(sigma2_fd / h.norm_sqr(), 0.0)));
    Ok(CMat::from_diagonal(&diag))
}

/// Unconstrained LMMSE demodulator after zero-forcing equalization,
/// `B^H = A_fd^H (A_fd A_fd^H + R_vbar / Es)^{-1}`.
pub fn dense_lmmse_demodulator(chan: &ChannelRealization, a_fd: &CMat, spec: &ReceiverSpec) -> Result<CMat> {
    check_dense(a_fd.nrows())?;
    let r = zf_noise_covariance(chan, spec)? / C64::new(spec.es, 0.0);
    let gram = a_fd * a_fd.adjoint() + r;
    Ok(solve(gram, a_fd, "A A^H + R_vbar / Es")?.adjoint())
}

/// Middle factor of the dense LMMSE demodulator in the GFDM basis,
/// `Gamma_rx = Lambda^H (Lambda Lambda^H + V_f^H R_vbar V_f / Es)^{-1}`.
/// It is diagonal exactly when the dense demodulator is itself a GFDM
/// matrix.
pub fn gamma_rx(factors: &GfdmMatrixFactors, chan: &ChannelRealization, spec: &ReceiverSpec) -> Result<CMat> {
    let r = zf_noise_covariance(chan, spec)? / C64::new(spec.es, 0.0);
    let lambda = DVector::from_column_slice(&factors.lambda_tx);
    let lam = CMat::from_diagonal(&lambda);
    let inner = &lam * lam.adjoint() + factors.v_f.adjoint() * r * &factors.v_f;
    // Lambda^H inner^{-1} = (inner^{-1} Lambda)^H, inner Hermitian.
    Ok(solve(inner, &lam, "Lambda Lambda^H + V_f^H R V_f / Es")?.adjoint())
}

/// Path "zero-forcing equalization, then unconstrained LMMSE
/// demodulation" for one block.
pub fn zf_then_dense_lmmse(
    y_fd: &[C64],
    chan: &ChannelRealization,
    a_fd: &CMat,
    spec: &ReceiverSpec,
) -> Result<SymbolGrid> {
    spec.validate()?;
    check_channel_invertible(&chan.h_fd)?;
    let y_eq: Vec<C64> = y_fd.iter().zip(&chan.h_fd).map(|(y, h)| y / h).collect();
    let b_h = dense_lmmse_demodulator(chan, a_fd, spec)?;
    let (k, m) = chan.per_m_diag.shape();
    Ok(to_grid(b_h * DVector::from_column_slice(&y_eq), k, m))
}
