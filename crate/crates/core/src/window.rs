//! Modulator and receiver windows: the `K x M` diagonal content of the
//! frequency-domain GFDM matrix factorization.

use serde::{Deserialize, Serialize};

use crate::dsp::{map_columns, reshape_v, DftPlan};
use crate::error::{GfdmError, Result};
use crate::params::GfdmParams;
use crate::pulse::PrototypePulse;
use crate::{CMat, C64};

/// Relative threshold below which a window or channel entry counts as zero
/// for zero-forcing inversion.
pub const EPS_INV: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowRole {
    Tx,
    Rx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix {
    pub w: CMat,
    pub role: WindowRole,
}

impl WindowMatrix {
    pub fn new(w: CMat, role: WindowRole) -> Self {
        Self { w, role }
    }

    pub fn k(&self) -> usize {
        self.w.nrows()
    }

    pub fn m(&self) -> usize {
        self.w.ncols()
    }

    /// `sum_k |w[k, m]|^2` for column `m`.
    pub fn column_power(&self, m: usize) -> f64 {
        self.w.column(m).iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when every entry of column `m` has the same magnitude (to `tol`
    /// relative to the column maximum).
    pub fn column_has_equal_amplitude(&self, m: usize, tol: f64) -> bool {
        let mags: Vec<f64> = self.w.column(m).iter().map(|v| v.norm()).collect();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min <= tol * max.max(f64::MIN_POSITIVE)
    }
}

/// `W_tx = F_K^H V_{K,M}(g_fd)`.
pub fn compute_tx_window(pulse: &PrototypePulse, params: &GfdmParams) -> Result<WindowMatrix> {
    let mut w = reshape_v(&pulse.g_fd, params)?;
    let plan = DftPlan::new(params.k());
    map_columns(&mut w, |col| plan.adjoint(col));
    Ok(WindowMatrix::new(w, WindowRole::Tx))
}

/// Zero-forcing receiver window: the elementwise reciprocal of `W_tx`.
pub fn zf_rx_window(w_tx: &WindowMatrix) -> Result<WindowMatrix> {
    let threshold = EPS_INV * w_tx.max_abs();
    let (k_len, m_len) = w_tx.w.shape();
    for m in 0..m_len {
        for k in 0..k_len {
            let v = w_tx.w[(k, m)];
            if !(v.norm() > threshold) {
                return Err(GfdmError::SingularWindow { k, m });
            }
        }
    }
    let w = w_tx.w.map(|v| C64::new(1.0, 0.0) / v);
    Ok(WindowMatrix::new(w, WindowRole::Rx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{make_pulse, PulseKind};

    fn window(kind: PulseKind, k: usize, m: usize) -> WindowMatrix {
        let p = GfdmParams::new(k, m, 0).unwrap();
        compute_tx_window(&make_pulse(kind, &p).unwrap(), &p).unwrap()
    }

    /// Literal `F_K^H V(g_fd)` with an explicit DFT matrix.
    fn direct_window(g_fd: &[C64], k: usize, m: usize) -> CMat {
        let fh =
            CMat::from_fn(k, k, |a, b| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (a * b) as f64 / k as f64));
        let v = CMat::from_fn(k, m, |q, p| g_fd[p + q * m]);
        fh * v
    }

    #[test]
    fn ofdm_window_is_flat_sqrt_n() {
        let w = window(PulseKind::RectTd, 8, 1);
        let p = GfdmParams::new(8, 1, 0).unwrap();
        let g = make_pulse(PulseKind::RectTd, &p).unwrap();
        let direct = direct_window(&g.g_fd, 8, 1);
        for i in 0..8 {
            assert!((w.w[(i, 0)] - C64::new(8f64.sqrt(), 0.0)).norm() < 1e-12);
            assert!((w.w[(i, 0)] - direct[(i, 0)]).norm() < 1e-12);
        }
        let w = window(PulseKind::RectTd, 512, 1);
        assert!(w.w.iter().all(|v| (v - C64::new(512f64.sqrt(), 0.0)).norm() < 1e-9));
    }

    #[test]
    fn sc_window_is_the_spectrum_row() {
        let w = window(PulseKind::RectFd, 1, 512);
        assert_eq!(w.w.shape(), (1, 512));
        assert!(w.w.iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn rc_zero_roll_off_window_is_flat() {
        let w = window(PulseKind::PeriodicRc { alpha: 0.0 }, 4, 4);
        let first = w.w[(0, 0)].norm();
        assert!(w.w.iter().all(|v| (v.norm() - first).abs() < 1e-10));
    }

    #[test]
    fn matches_direct_definition() {
        let p = GfdmParams::new(6, 4, 0).unwrap();
        let g = make_pulse(PulseKind::PeriodicRc { alpha: 0.5 }, &p).unwrap();
        let w = compute_tx_window(&g, &p).unwrap();
        let direct = direct_window(&g.g_fd, 6, 4);
        assert!((&w.w - direct).norm() < 1e-12);
    }

    #[test]
    fn window_energy_is_k_times_spectrum_energy() {
        // Each column goes through an unnormalized K-point transform, so
        // sum |W|^2 = K * ||g_fd||^2 = K * N for a unit-energy pulse.
        let p = GfdmParams::new(2, 2, 0).unwrap();
        let g = make_pulse(PulseKind::PeriodicRc { alpha: 0.6 }, &p).unwrap();
        let w = compute_tx_window(&g, &p).unwrap();
        let direct = direct_window(&g.g_fd, 2, 2);
        let total: f64 = direct.iter().map(|v| v.norm_sqr()).sum();
        let spec: f64 = g.g_fd.iter().map(|v| v.norm_sqr()).sum();
        assert!((total - 2.0 * spec).abs() < 1e-12);
        assert!((total - 8.0).abs() < 1e-12);
        let fast: f64 = w.w.iter().map(|v| v.norm_sqr()).sum();
        assert!((fast - 8.0).abs() < 1e-12);

        for (k, m, kind) in [(32, 16, PulseKind::PeriodicRc { alpha: 0.8 }), (32, 16, PulseKind::Chirp)] {
            let w = window(kind, k, m);
            let total: f64 = w.w.iter().map(|v| v.norm_sqr()).sum();
            assert!((total - (k * k * m) as f64).abs() < 1e-9 * total);
        }
    }

    #[test]
    fn zf_window_reciprocal() {
        let ones = WindowMatrix::new(CMat::from_element(3, 2, C64::new(1.0, 0.0)), WindowRole::Tx);
        let rx = zf_rx_window(&ones).unwrap();
        assert_eq!(rx.role, WindowRole::Rx);
        assert!(rx.w.iter().all(|v| *v == C64::new(1.0, 0.0)));

        let twos = WindowMatrix::new(CMat::from_element(3, 2, C64::new(2.0, 0.0)), WindowRole::Tx);
        let rx = zf_rx_window(&twos).unwrap();
        assert!(rx.w.iter().all(|v| *v == C64::new(0.5, 0.0)));

        let w = window(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
        let rx = zf_rx_window(&w).unwrap();
        for (a, b) in w.w.iter().zip(rx.w.iter()) {
            assert!((a * b - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn zf_window_rejects_zero_entry() {
        let mut w = CMat::from_element(3, 2, C64::new(1.0, 0.0));
        w[(2, 1)] = C64::new(0.0, 0.0);
        let err = zf_rx_window(&WindowMatrix::new(w, WindowRole::Tx)).unwrap_err();
        assert_eq!(err, GfdmError::SingularWindow { k: 2, m: 1 });
    }

    #[test]
    fn even_m_rc_windows_have_no_nulls() {
        for alpha in [0.2, 0.5, 0.8] {
            let w = window(PulseKind::PeriodicRc { alpha }, 32, 16);
            assert!(zf_rx_window(&w).is_ok(), "alpha = {alpha}");
        }
    }
}
