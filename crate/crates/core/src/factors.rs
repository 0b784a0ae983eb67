//! Unitary factorization of the frequency-domain GFDM matrix,
//! `A_fd = V_f * Lambda_tx * U_t`, with `V_f = P_{K,M} U_{M,K}`,
//! `U_t = U_{M,K}^H P_{M,K} U_{K,M} P_{K,M}` and
//! `Lambda_tx = sqrt(M) diag(vec(W_tx))`.
//!
//! Commutation matrices are kept as index maps; dense matrices are only
//! materialized here for verification at `N <= DENSE_LIMIT`.

use std::io::{Read, Write};

use crate::error::{GfdmError, Result};
use crate::modem::check_dense;
use crate::params::GfdmParams;
use crate::window::WindowMatrix;
use crate::{CMat, C64};

/// A permutation acting on vectors as `out[r] = input[source[r]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    source: Vec<usize>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self { source: (0..len).collect() }
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Index read by output row `r`.
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    pub fn apply<T: Copy>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.len(), "permutation length mismatch");
        self.source.iter().map(|&s| input[s]).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut source = vec![0; self.len()];
        for (r, &s) in self.source.iter().enumerate() {
            source[s] = r;
        }
        Self { source }
    }

    /// `self * rhs` as matrices: applies `rhs` first.
    pub fn compose(&self, rhs: &Permutation) -> Self {
        assert_eq!(self.len(), rhs.len(), "permutation length mismatch");
        Self { source: self.source.iter().map(|&s| rhs.source[s]).collect() }
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.len();
        let mut p = CMat::zeros(n, n);
        for (r, &s) in self.source.iter().enumerate() {
            p[(r, s)] = C64::new(1.0, 0.0);
        }
        p
    }
}

/// Commutation matrix `P_{Q,P}` with `vec(X^T) = P_{Q,P} vec(X)` for any
/// `Q x P` matrix `X`.
pub fn commutation_matrix(q: usize, p: usize) -> Permutation {
    let mut source = vec![0; q * p];
    for i in 0..q {
        for j in 0..p {
            // X[i, j] sits at i + jQ in vec(X) and at j + iP in vec(X^T).
            source[j + i * p] = i + j * q;
        }
    }
    Permutation { source }
}

/// `U_{P,Q} = (1/sqrt(Q)) I_P kron F_Q`.
pub fn unitary_dft_blocks(p: usize, q: usize) -> CMat {
    let n = p * q;
    let scale = 1.0 / (q as f64).sqrt();
    let mut u = CMat::zeros(n, n);
    for block in 0..p {
        let base = block * q;
        for a in 0..q {
            for b in 0..q {
                let phase = -2.0 * std::f64::consts::PI * ((a * b) % q) as f64 / q as f64;
                u[(base + a, base + b)] = C64::from_polar(scale, phase);
            }
        }
    }
    u
}

/// Dense factors of a frequency-domain GFDM matrix.
#[derive(Debug, Clone)]
pub struct GfdmMatrixFactors {
    pub v_f: CMat,
    pub u_t: CMat,
    /// Diagonal of `Lambda_tx = sqrt(M) diag(vec(W_tx))`.
    pub lambda_tx: Vec<C64>,
    m: usize,
}

impl GfdmMatrixFactors {
    /// `V_f diag(lambda) U_t`.
    pub fn assemble(&self, lambda: &[C64]) -> CMat {
        let mut scaled = self.u_t.clone();
        for (r, l) in lambda.iter().enumerate() {
            let mut row = scaled.row_mut(r);
            row *= *l;
        }
        &self.v_f * scaled
    }

    /// The modulation matrix `A_fd` rebuilt from its factors.
    pub fn modulation_matrix(&self) -> CMat {
        self.assemble(&self.lambda_tx)
    }

    /// `Lambda_rx = (1/sqrt(M)) diag(vec(W_rx))`.
    pub fn lambda_rx(&self, w_rx: &WindowMatrix) -> Vec<C64> {
        let scale = 1.0 / (self.m as f64).sqrt();
        w_rx.w.iter().map(|v| v * scale).collect()
    }

    /// Demodulator matrix `B_fd = V_f Lambda_rx^H U_t`; the demodulator
    /// output is `B_fd^H y_eq`.
    pub fn demodulation_matrix(&self, w_rx: &WindowMatrix) -> CMat {
        let lambda: Vec<C64> = self.lambda_rx(w_rx).iter().map(|v| v.conj()).collect();
        self.assemble(&lambda)
    }
}

/// Builds the dense factorization of the modulation matrix for `w_tx`.
pub fn build_factors(w_tx: &WindowMatrix, params: &GfdmParams) -> Result<GfdmMatrixFactors> {
    params.check_grid("window", w_tx.k(), w_tx.m())?;
    check_dense(params.n())?;
    let (k, m) = (params.k(), params.m());
    let p_km = commutation_matrix(k, m).to_dense();
    let p_mk = commutation_matrix(m, k).to_dense();
    let u_mk = unitary_dft_blocks(m, k);
    let u_km = unitary_dft_blocks(k, m);
    let v_f = &p_km * &u_mk;
    let u_t = u_mk.adjoint() * p_mk * u_km * p_km;
    let scale = (m as f64).sqrt();
    let lambda_tx = w_tx.w.iter().map(|v| v * scale).collect();
    Ok(GfdmMatrixFactors { v_f, u_t, lambda_tx, m })
}

/// Writes `mat` as two little-endian `u32` dimensions (rows, cols) followed
/// by row-major interleaved `f32` real/imaginary pairs.
pub fn write_matrix_bin<W: Write>(mut out: W, mat: &CMat) -> Result<()> {
    let (rows, cols) = mat.shape();
    let dim = |v: usize| u32::try_from(v).map_err(|_| GfdmError::Io(format!("dimension {v} exceeds u32")));
    out.write_all(&dim(rows)?.to_le_bytes())?;
    out.write_all(&dim(cols)?.to_le_bytes())?;
    for r in 0..rows {
        for c in 0..cols {
            let v = mat[(r, c)];
            out.write_all(&(v.re as f32).to_le_bytes())?;
            out.write_all(&(v.im as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix_bin`].
pub fn read_matrix_bin<R: Read>(mut input: R) -> Result<CMat> {
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let rows = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u32::from_le_bytes(word) as usize;
    let mut mat = CMat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            input.read_exact(&mut word)?;
            let re = f32::from_le_bytes(word);
            input.read_exact(&mut word)?;
            let im = f32::from_le_bytes(word);
            mat[(r, c)] = C64::new(re as f64, im as f64);
        }
    }
    Ok(mat)
}
