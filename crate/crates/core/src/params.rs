use serde::{Deserialize, Serialize};

use crate::error::{GfdmError, Result};

/// Block geometry: `K` subcarriers, `M` subsymbols, `N = K*M` samples and a
/// cyclic prefix of `cp_len` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GfdmParams {
    k: usize,
    m: usize,
    cp_len: usize,
}

impl GfdmParams {
    pub fn new(k: usize, m: usize, cp_len: usize) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(GfdmError::InvalidParams(format!("K and M must be positive (K = {k}, M = {m})")));
        }
        let n = k.checked_mul(m).ok_or_else(|| GfdmError::InvalidParams("K*M overflows".into()))?;
        if cp_len >= n {
            return Err(GfdmError::InvalidParams(format!(
                "cp_len = {cp_len} must be shorter than the block (N = {n})"
            )));
        }
        Ok(Self { k, m, cp_len })
    }

    /// Number of subcarriers.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of subsymbols.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Block length `K*M`.
    pub fn n(&self) -> usize {
        self.k * self.m
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn with_cp_len(self, cp_len: usize) -> Result<Self> {
        Self::new(self.k, self.m, cp_len)
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(GfdmError::DimensionMismatch {
                expected: format!("{what} of length N = {}", self.n()),
                actual: format!("length {len}"),
            });
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, what: &str, rows: usize, cols: usize) -> Result<()> {
        if rows != self.k || cols != self.m {
            return Err(GfdmError::DimensionMismatch {
                expected: format!("{what} of size {}x{}", self.k, self.m),
                actual: format!("{rows}x{cols}"),
            });
        }
        Ok(())
    }
}
