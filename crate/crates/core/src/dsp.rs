//! DFT convention and the polyphase reshape used by the frequency-domain
//! modem.
//!
//! `F_Q` is the unnormalized DFT matrix, `[F_Q]_{a,b} = exp(-j 2 pi a b / Q)`,
//! so `F_Q^H F_Q = Q I`. [`dft`] applies `F_Q`, [`idft`] applies
//! `(1/Q) F_Q^H`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::params::GfdmParams;
use crate::{CMat, C64};

/// Forward and inverse transforms of one size.
#[derive(Clone)]
pub struct DftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len).finish()
    }
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        Self { len, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `x <- F_Q x`.
    pub fn forward(&self, x: &mut [C64]) {
        debug_assert_eq!(x.len(), self.len);
        if self.len > 1 {
            self.forward.process(x);
        }
    }

    /// `x <- (1/Q) F_Q^H x`.
    pub fn inverse(&self, x: &mut [C64]) {
        debug_assert_eq!(x.len(), self.len);
        if self.len > 1 {
            self.inverse.process(x);
            let scale = 1.0 / self.len as f64;
            x.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// `x <- F_Q^H x` (inverse transform without the `1/Q`).
    pub fn adjoint(&self, x: &mut [C64]) {
        debug_assert_eq!(x.len(), self.len);
        if self.len > 1 {
            self.inverse.process(x);
        }
    }
}

/// `F_Q x`.
pub fn dft(x: &[C64]) -> Vec<C64> {
    let mut out = x.to_vec();
    if !out.is_empty() {
        DftPlan::new(out.len()).forward(&mut out);
    }
    out
}

/// `(1/Q) F_Q^H x`; the exact inverse of [`dft`].
pub fn idft(x: &[C64]) -> Vec<C64> {
    let mut out = x.to_vec();
    if !out.is_empty() {
        DftPlan::new(out.len()).inverse(&mut out);
    }
    out
}

/// `V_{K,M}(x)`: the `K x M` matrix with `out[q, p] = x[p + q*M]`.
pub fn reshape_v(x: &[C64], params: &GfdmParams) -> Result<CMat> {
    params.check_len("vector", x.len())?;
    let m = params.m();
    Ok(CMat::from_fn(params.k(), m, |q, p| x[p + q * m]))
}

/// Inverse of [`reshape_v`].
pub fn unreshape_v(v: &CMat) -> Vec<C64> {
    let (k, m) = v.shape();
    let mut out = vec![C64::new(0.0, 0.0); k * m];
    for q in 0..k {
        for p in 0..m {
            out[p + q * m] = v[(q, p)];
        }
    }
    out
}

/// Applies an in-place transform to every column of `mat`.
pub(crate) fn map_columns(mat: &mut CMat, f: impl Fn(&mut [C64])) {
    let rows = mat.nrows();
    if rows == 0 {
        return;
    }
    for col in mat.as_mut_slice().chunks_exact_mut(rows) {
        f(col);
    }
}

/// Applies an in-place transform to every row of `mat`.
pub(crate) fn map_rows(mat: &mut CMat, f: impl Fn(&mut [C64])) {
    let (rows, cols) = mat.shape();
    let mut buf = vec![C64::new(0.0, 0.0); cols];
    for r in 0..rows {
        for c in 0..cols {
            buf[c] = mat[(r, c)];
        }
        f(&mut buf);
        for c in 0..cols {
            mat[(r, c)] = buf[c];
        }
    }
}

/// Largest entry magnitude of a complex matrix (0 when empty).
pub fn max_abs(mat: &CMat) -> f64 {
    mat.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Cached transforms of sizes `K`, `M` and `N` for one block geometry.
#[derive(Debug, Clone)]
pub struct Transforms {
    pub k: DftPlan,
    pub m: DftPlan,
    pub n: DftPlan,
}

impl Transforms {
    pub fn new(params: &GfdmParams) -> Self {
        Self { k: DftPlan::new(params.k()), m: DftPlan::new(params.m()), n: DftPlan::new(params.n()) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn naive_dft(x: &[C64]) -> Vec<C64> {
        let q = x.len();
        (0..q)
            .map(|a| {
                x.iter()
                    .enumerate()
                    .map(|(b, v)| v * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (a * b) as f64 / q as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn impulse_and_dc() {
        let out = dft(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        for v in out {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
        let out = dft(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((out[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(out[1].norm() < 1e-15);
    }

    #[test]
    fn length_one_is_identity() {
        let x = [c(0.3, -0.7)];
        assert_eq!(dft(&x), x.to_vec());
        assert_eq!(idft(&x), x.to_vec());
    }

    #[test]
    fn matches_naive_sign_convention() {
        let x: Vec<C64> = (0..12).map(|i| c((i as f64).sin(), (1.7 * i as f64).cos())).collect();
        let fast = dft(&x);
        let slow = naive_dft(&x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dft_matrix_gram_is_scaled_identity() {
        for q in [1usize, 2, 3, 7, 16, 30] {
            let f = CMat::from_fn(q, q, |a, b| {
                C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (a * b) as f64 / q as f64)
            });
            let g = f.adjoint() * &f;
            for a in 0..q {
                for b in 0..q {
                    let expect = if a == b { q as f64 } else { 0.0 };
                    assert!((g[(a, b)] - c(expect, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reshape_examples() {
        let p = GfdmParams::new(2, 2, 0).unwrap();
        let x = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        let v = reshape_v(&x, &p).unwrap();
        assert_eq!(v[(0, 0)], x[0]);
        assert_eq!(v[(0, 1)], x[1]);
        assert_eq!(v[(1, 0)], x[2]);
        assert_eq!(v[(1, 1)], x[3]);

        let p = GfdmParams::new(3, 1, 0).unwrap();
        let v = reshape_v(&x[..3], &p).unwrap();
        assert_eq!(v.shape(), (3, 1));
        assert_eq!(v[(2, 0)], x[2]);
    }

    #[test]
    fn reshape_rejects_wrong_length() {
        let p = GfdmParams::new(2, 2, 0).unwrap();
        assert!(reshape_v(&[c(1.0, 0.0); 3], &p).is_err());
    }

    fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), len)
            .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
    }

    proptest! {
        #[test]
        fn idft_inverts_dft(x in (1usize..64).prop_flat_map(complex_vec)) {
            let back = idft(&dft(&x));
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()) * 10.0);
            }
        }

        #[test]
        fn reshape_roundtrip((k, m, x) in (1usize..24, 1usize..24)
            .prop_flat_map(|(k, m)| (Just(k), Just(m), complex_vec(k * m))))
        {
            let p = GfdmParams::new(k, m, 0).unwrap();
            let v = reshape_v(&x, &p).unwrap();
            prop_assert_eq!(unreshape_v(&v), x);
        }
    }
}
