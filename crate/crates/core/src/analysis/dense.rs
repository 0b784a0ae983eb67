//! Brute-force per-symbol SINR from the dense end-to-end matrices, built by
//! pushing unit vectors through the fast receiver. Limited to
//! `N <= DENSE_LIMIT`.

use nalgebra::DMatrix;

use crate::channel::ChannelRealization;
use crate::error::Result;
use crate::modem::check_dense;
use crate::params::GfdmParams;
use crate::receivers::{PreparedReceiver, ReceiverSpec};
use crate::window::WindowMatrix;
use crate::{CMat, C64};

/// Dense `N x N` map from the received frequency-domain block to `vec(D_hat)`.
pub fn receiver_matrix(rx: &PreparedReceiver) -> Result<CMat> {
    let n = rx.params().n();
    check_dense(n)?;
    let mut out = CMat::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        e[i] = C64::new(1.0, 0.0);
        let col = rx.apply_fd(&e)?;
        out.column_mut(i).copy_from_slice(col.as_slice());
        e[i] = C64::new(0.0, 0.0);
    }
    Ok(out)
}

/// Per-symbol SINR of the chain with `G = R H A_fd` and noise map `R`:
/// signal `Es |G_ii|^2`, interference `Es sum_{j != i} |G_ij|^2`, noise
/// `N sigma2 sum_j |R_ij|^2`.
pub fn dense_symbol_sinr(
    chan: &ChannelRealization,
    w_tx: &WindowMatrix,
    a_fd: &CMat,
    spec: &ReceiverSpec,
    params: &GfdmParams,
) -> Result<DMatrix<f64>> {
    let rx = PreparedReceiver::new(chan, w_tx, spec, params)?;
    let r = receiver_matrix(&rx)?;
    let mut ha = a_fd.clone();
    for (row, h) in chan.h_fd.iter().enumerate() {
        let mut line = ha.row_mut(row);
        line *= *h;
    }
    let g = &r * ha;
    let sigma2_fd = spec.sigma2_fd(params);
    let n = params.n();
    let sinr: Vec<f64> = (0..n)
        .map(|i| {
            let row_g = g.row(i);
            let signal = spec.es * row_g[i].norm_sqr();
            let total: f64 = row_g.iter().map(|v| v.norm_sqr()).sum();
            let interference = spec.es * total - signal;
            let noise = sigma2_fd * r.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>();
            let den = interference.max(0.0) + noise;
            if den > 0.0 {
                signal / den
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(DMatrix::from_column_slice(params.k(), params.m(), &sinr))
}
