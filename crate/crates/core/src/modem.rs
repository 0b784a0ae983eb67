//! Frequency-domain GFDM modulator and demodulator, plus the literal
//! time-domain reference modulator and the dense modulation matrix used to
//! check them.

use std::f64::consts::PI;

use crate::dsp::{map_columns, map_rows, reshape_v, unreshape_v, Transforms};
use crate::error::{GfdmError, Result};
use crate::params::GfdmParams;
use crate::pulse::PrototypePulse;
use crate::window::WindowMatrix;
use crate::{CMat, SymbolGrid, C64};

/// Largest block size for which dense `N x N` matrices are built.
pub const DENSE_LIMIT: usize = 4096;

pub(crate) fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(GfdmError::TooLarge { n, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// FFT-based modem for one block geometry. Plans are built once.
#[derive(Debug, Clone)]
pub struct FdModem {
    params: GfdmParams,
    transforms: Transforms,
}

impl FdModem {
    pub fn new(params: GfdmParams) -> Self {
        Self { transforms: Transforms::new(&params), params }
    }

    pub fn params(&self) -> &GfdmParams {
        &self.params
    }

    pub fn transforms(&self) -> &Transforms {
        &self.transforms
    }

    /// `V(x_fd) = F_K (W_tx .* [(1/K) F_K^H D F_M])`, returned as the
    /// length-`N` frequency-domain block.
    pub fn modulate(&self, d: &SymbolGrid, w_tx: &WindowMatrix) -> Result<Vec<C64>> {
        self.params.check_grid("data matrix", d.nrows(), d.ncols())?;
        self.params.check_grid("window", w_tx.k(), w_tx.m())?;
        let t = &self.transforms;
        let mut x = d.clone();
        map_rows(&mut x, |row| t.m.forward(row));
        map_columns(&mut x, |col| t.k.inverse(col));
        x.component_mul_assign(&w_tx.w);
        map_columns(&mut x, |col| t.k.forward(col));
        Ok(unreshape_v(&x))
    }

    /// Time-domain block `x = F_N^{-1} x_fd`.
    pub fn modulate_td(&self, d: &SymbolGrid, w_tx: &WindowMatrix) -> Result<Vec<C64>> {
        let mut x = self.modulate(d, w_tx)?;
        self.transforms.n.inverse(&mut x);
        Ok(x)
    }

    /// `D_hat = (1/M) F_K (W_rx .* [(1/K) F_K^H V(y_eq)]) F_M^H`.
    pub fn demodulate(&self, y_eq_fd: &[C64], w_rx: &WindowMatrix) -> Result<SymbolGrid> {
        self.params.check_grid("window", w_rx.k(), w_rx.m())?;
        let t = &self.transforms;
        let mut y = reshape_v(y_eq_fd, &self.params)?;
        map_columns(&mut y, |col| t.k.inverse(col));
        y.component_mul_assign(&w_rx.w);
        map_columns(&mut y, |col| t.k.forward(col));
        map_rows(&mut y, |row| t.m.inverse(row));
        Ok(y)
    }
}

/// One-shot frequency-domain modulation; see [`FdModem::modulate`].
pub fn modulate_fd(d: &SymbolGrid, w_tx: &WindowMatrix) -> Result<Vec<C64>> {
    let params = GfdmParams::new(w_tx.k(), w_tx.m(), 0)?;
    FdModem::new(params).modulate(d, w_tx)
}

/// One-shot frequency-domain demodulation; see [`FdModem::demodulate`].
pub fn demodulate_fd(y_eq_fd: &[C64], w_rx: &WindowMatrix) -> Result<SymbolGrid> {
    let params = GfdmParams::new(w_rx.k(), w_rx.m(), 0)?;
    FdModem::new(params).demodulate(y_eq_fd, w_rx)
}

fn subcarrier_phase(k: usize, n: usize, k_len: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * ((k * n) % k_len) as f64 / k_len as f64)
}

/// Literal double sum `x[n] = sum_{k,m} D[k,m] g[(n - mK) mod N] e^{j 2 pi k n / K}`.
pub fn modulate_reference_td(d: &SymbolGrid, pulse: &PrototypePulse, params: &GfdmParams) -> Result<Vec<C64>> {
    params.check_grid("data matrix", d.nrows(), d.ncols())?;
    params.check_len("pulse", pulse.len())?;
    let (k_len, m_len, n_len) = (params.k(), params.m(), params.n());
    Ok((0..n_len)
        .map(|n| {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..m_len {
                let g = pulse.g[(n + n_len - m * k_len) % n_len];
                for k in 0..k_len {
                    acc += d[(k, m)] * g * subcarrier_phase(k, n, k_len);
                }
            }
            acc
        })
        .collect())
}

/// Dense modulation matrix `[A]_{n, k+mK} = g[(n - mK) mod N] e^{j 2 pi k n / K}`.
pub fn build_modulation_matrix(pulse: &PrototypePulse, params: &GfdmParams) -> Result<CMat> {
    params.check_len("pulse", pulse.len())?;
    check_dense(params.n())?;
    let (k_len, n_len) = (params.k(), params.n());
    Ok(CMat::from_fn(n_len, n_len, |n, col| {
        let k = col % k_len;
        let m = col / k_len;
        pulse.g[(n + n_len - m * k_len) % n_len] * subcarrier_phase(k, n, k_len)
    }))
}

/// `A_fd = F_N A`, the frequency-domain modulation matrix.
pub fn build_modulation_matrix_fd(pulse: &PrototypePulse, params: &GfdmParams) -> Result<CMat> {
    let mut a = build_modulation_matrix(pulse, params)?;
    let plan = crate::dsp::DftPlan::new(params.n());
    map_columns(&mut a, |col| plan.forward(col));
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::max_abs;
    use crate::pulse::{make_pulse, PulseKind};
    use crate::window::{compute_tx_window, zf_rx_window};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(k: usize, m: usize, seed: u64) -> SymbolGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(k, m, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn setup(kind: PulseKind, k: usize, m: usize) -> (GfdmParams, PrototypePulse, WindowMatrix) {
        let p = GfdmParams::new(k, m, 0).unwrap();
        let g = make_pulse(kind, &p).unwrap();
        let w = compute_tx_window(&g, &p).unwrap();
        (p, g, w)
    }

    fn max_rel(a: &[C64], b: &[C64]) -> f64 {
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn zero_data_gives_zero_block() {
        let (p, g, w) = setup(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
        let d = CMat::zeros(8, 4);
        assert!(modulate_fd(&d, &w).unwrap().iter().all(|v| v.norm() == 0.0));
        assert!(modulate_reference_td(&d, &g, &p).unwrap().iter().all(|v| v.norm() == 0.0));
        let rx = zf_rx_window(&w).unwrap();
        assert!(demodulate_fd(&vec![C64::new(0.0, 0.0); 32], &rx).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn reference_single_symbols() {
        let (p, g, _) = setup(PulseKind::PeriodicRc { alpha: 0.6 }, 2, 2);
        let mut d = CMat::zeros(2, 2);
        d[(0, 0)] = C64::new(1.0, 0.0);
        let x = modulate_reference_td(&d, &g, &p).unwrap();
        assert!(max_rel(&x, &g.g) < 1e-15);

        let mut d = CMat::zeros(2, 2);
        d[(1, 0)] = C64::new(1.0, 0.0);
        let x = modulate_reference_td(&d, &g, &p).unwrap();
        for n in 0..4 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((x[n] - g.g[n] * sign).norm() < 1e-15);
        }
    }

    #[test]
    fn matrix_column_zero_is_pulse() {
        let (p, g, _) = setup(PulseKind::Chirp, 4, 3);
        let a = build_modulation_matrix(&g, &p).unwrap();
        for n in 0..12 {
            assert_eq!(a[(n, 0)], g.g[n]);
        }
    }

    #[test]
    fn matrix_matches_reference() {
        let (p, g, _) = setup(PulseKind::PeriodicRc { alpha: 0.5 }, 4, 3);
        let a = build_modulation_matrix(&g, &p).unwrap();
        let d = random_grid(4, 3, 1);
        let x = &a * nalgebra::DVector::from_column_slice(d.as_slice());
        let r = modulate_reference_td(&d, &g, &p).unwrap();
        assert!(max_rel(x.as_slice(), &r) < 1e-10);
    }

    #[test]
    fn fd_path_matches_reference() {
        for kind in [PulseKind::PeriodicRc { alpha: 0.5 }, PulseKind::Chirp, PulseKind::RectTd, PulseKind::RectFd] {
            let (p, g, w) = setup(kind, 8, 4);
            let d = random_grid(8, 4, 2);
            let fast = modulate_fd(&d, &w).unwrap();
            let reference = crate::dsp::dft(&modulate_reference_td(&d, &g, &p).unwrap());
            assert!(max_rel(&fast, &reference) < 1e-9, "{kind}");
        }
    }

    #[test]
    fn single_carrier_is_one_circular_convolution() {
        let (p, g, w) = setup(PulseKind::RectFd, 1, 8);
        let d = random_grid(1, 8, 3);
        let fast = modulate_fd(&d, &w).unwrap();
        let expected: Vec<C64> = crate::dsp::dft(d.as_slice()).iter().zip(w.w.iter()).map(|(a, b)| a * b).collect();
        assert!(max_rel(&fast, &expected) < 1e-12);
        let reference = crate::dsp::dft(&modulate_reference_td(&d, &g, &p).unwrap());
        assert!(max_rel(&fast, &reference) < 1e-12);
    }

    #[test]
    fn zf_round_trip() {
        for (kind, k, m) in [
            (PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4),
            (PulseKind::RectTd, 16, 1),
            (PulseKind::PeriodicRc { alpha: 0.8 }, 32, 16),
        ] {
            let (_, _, w) = setup(kind, k, m);
            let rx = zf_rx_window(&w).unwrap();
            let d = random_grid(k, m, 4);
            let y = modulate_fd(&d, &w).unwrap();
            let d_hat = demodulate_fd(&y, &rx).unwrap();
            assert!(max_abs(&(d_hat - &d)) < 1e-9, "{kind}");
        }
    }

    #[test]
    fn linearity() {
        let (_, _, w) = setup(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
        let d1 = random_grid(8, 4, 5);
        let d2 = random_grid(8, 4, 6);
        let a = C64::new(0.3, -1.2);
        let b = C64::new(-2.0, 0.5);
        let lhs = modulate_fd(&(&d1 * a + &d2 * b), &w).unwrap();
        let x1 = modulate_fd(&d1, &w).unwrap();
        let x2 = modulate_fd(&d2, &w).unwrap();
        let rhs: Vec<C64> = x1.iter().zip(&x2).map(|(u, v)| u * a + v * b).collect();
        assert!(max_rel(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn orthonormal_power_conservation() {
        let (_, _, w) = setup(PulseKind::PeriodicRc { alpha: 0.0 }, 8, 4);
        let d = random_grid(8, 4, 7);
        let x_fd = modulate_fd(&d, &w).unwrap();
        let x = crate::dsp::idft(&x_fd);
        let pd: f64 = d.iter().map(|v| v.norm_sqr()).sum();
        let px: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let pfd: f64 = x_fd.iter().map(|v| v.norm_sqr()).sum();
        assert!((px - pd).abs() < 1e-9 * pd);
        assert!((pfd - 32.0 * pd).abs() < 1e-9 * pfd);
    }

    #[test]
    fn dimension_errors() {
        let (_, _, w) = setup(PulseKind::RectTd, 4, 2);
        assert!(modulate_fd(&CMat::zeros(2, 4), &w).is_err());
        assert!(demodulate_fd(&[C64::new(0.0, 0.0); 7], &w).is_err());
    }
}
