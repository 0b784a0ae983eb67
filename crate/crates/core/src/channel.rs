//! Block-fading multipath channels with cyclic prefix and AWGN.
//!
//! Noise is always injected in the time domain, per sample with variance
//! `sigma2`; after the `N`-point DFT each bin carries variance `N * sigma2`.

use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp::{dft, reshape_v, DftPlan};
use crate::error::{GfdmError, Result};
use crate::params::GfdmParams;
use crate::{CMat, C64};

/// Power-delay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pdp {
    /// `p_l ~ 10^(-decay * l / 10)`.
    Exponential {
        decay_db_per_tap: f64,
    },
    Uniform,
}

impl std::fmt::Display for Pdp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pdp::Exponential { decay_db_per_tap } => write!(f, "exp:{decay_db_per_tap}"),
            Pdp::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for Pdp {
    type Err = GfdmError;

    /// Accepts `uniform`, `exp` (1 dB/tap) or `exp:<dB per tap>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" | "uni" => Ok(Pdp::Uniform),
            "exp" | "exponential" => Ok(Pdp::Exponential { decay_db_per_tap: 1.0 }),
            _ => {
                let decay = s
                    .strip_prefix("exp:")
                    .or_else(|| s.strip_prefix("exponential:"))
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| GfdmError::Config(format!("unknown power-delay profile '{s}'")))?;
                if !decay.is_finite() || decay < 0.0 {
                    return Err(GfdmError::Config(format!("decay must be a non-negative number, got {decay}")));
                }
                Ok(Pdp::Exponential { decay_db_per_tap: decay })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub taps: usize,
    pub pdp: Pdp,
    /// Scale the profile to unit total mean power.
    pub normalize: bool,
}

impl ChannelModel {
    pub fn new(taps: usize, pdp: Pdp) -> Result<Self> {
        let model = Self { taps, pdp, normalize: true };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(GfdmError::InvalidChannel("at least one tap is required".into()));
        }
        if let Pdp::Exponential { decay_db_per_tap } = self.pdp {
            if !decay_db_per_tap.is_finite() || decay_db_per_tap < 0.0 {
                return Err(GfdmError::InvalidChannel(format!("invalid decay {decay_db_per_tap}")));
            }
        }
        Ok(())
    }

    /// Mean tap powers `p_l`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w: Vec<f64> = match self.pdp {
            Pdp::Uniform => vec![1.0; self.taps],
            Pdp::Exponential { decay_db_per_tap } => {
                (0..self.taps).map(|l| 10f64.powf(-decay_db_per_tap * l as f64 / 10.0)).collect()
            }
        };
        if self.normalize {
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
        }
        w
    }
}

/// One block-fading realization: taps, their `N`-point spectrum and the
/// per-subsymbol diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<C64>,
    pub h_fd: Vec<C64>,
    /// `V_{K,M}(h_fd)`; column `m` is the diagonal of the `m`-th block.
    pub per_m_diag: CMat,
}

impl ChannelRealization {
    pub fn from_taps(h: Vec<C64>, params: &GfdmParams) -> Result<Self> {
        if h.is_empty() || h.len() > params.n() {
            return Err(GfdmError::InvalidChannel(format!("tap count {} must be in 1..={}", h.len(), params.n())));
        }
        let mut padded = h.clone();
        padded.resize(params.n(), C64::new(0.0, 0.0));
        let h_fd = dft(&padded);
        let per_m_diag = reshape_v(&h_fd, params)?;
        Ok(Self { h, h_fd, per_m_diag })
    }

    /// Ideal channel `h = delta`.
    pub fn flat(params: &GfdmParams) -> Self {
        Self::from_taps(vec![C64::new(1.0, 0.0)], params).expect("a single tap always fits")
    }

    pub fn taps(&self) -> usize {
        self.h.len()
    }

    /// Diagonal of the `m`-th per-subsymbol channel block (length `K`).
    pub fn block(&self, m: usize) -> Vec<C64> {
        self.per_m_diag.column(m).iter().copied().collect()
    }

    pub fn to_file(&self) -> ChannelFile {
        ChannelFile { taps: self.h.iter().map(|v| [v.re, v.im]).collect() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(json: &str, params: &GfdmParams) -> Result<Self> {
        let file: ChannelFile =
            serde_json::from_str(json).map_err(|e| GfdmError::InvalidChannel(format!("channel JSON: {e}")))?;
        Self::from_taps(file.taps_complex(), params)
    }
}

/// JSON form of a channel realization: taps as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub taps: Vec<[f64; 2]>,
}

impl ChannelFile {
    pub fn taps_complex(&self) -> Vec<C64> {
        self.taps.iter().map(|[re, im]| C64::new(*re, *im)).collect()
    }
}

/// Circular-symmetric complex Gaussian sample of variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let scale = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

/// Draws independent zero-mean circular-symmetric Gaussian taps with the
/// model's power-delay profile.
pub fn draw_channel<R: Rng + ?Sized>(
    model: &ChannelModel,
    params: &GfdmParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    model.validate()?;
    let h = model.weights().into_iter().map(|p| complex_gaussian(rng, p)).collect();
    ChannelRealization::from_taps(h, params)
}

fn add_noise<R: Rng + ?Sized>(y: &mut [C64], sigma2: f64, rng: &mut R) {
    if sigma2 > 0.0 {
        y.iter_mut().for_each(|v| *v += complex_gaussian(rng, sigma2));
    }
}

/// Prepends a cyclic prefix, convolves linearly with `h`, strips the prefix
/// and adds AWGN of per-sample variance `sigma2`.
pub fn apply_channel_cp<R: Rng + ?Sized>(
    x: &[C64],
    h: &[C64],
    cp_len: usize,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if h.is_empty() || cp_len + 1 < h.len() {
        return Err(GfdmError::CpTooShort { cp_len, taps: h.len() });
    }
    let n = x.len();
    if cp_len > n {
        return Err(GfdmError::InvalidParams(format!("cp_len {cp_len} exceeds block length {n}")));
    }
    let mut tx = Vec::with_capacity(n + cp_len);
    tx.extend_from_slice(&x[n - cp_len..]);
    tx.extend_from_slice(x);
    let mut y: Vec<C64> =
        (cp_len..cp_len + n).map(|t| h.iter().enumerate().map(|(l, hl)| hl * tx[t - l]).sum()).collect();
    add_noise(&mut y, sigma2, rng);
    Ok(y)
}

/// Circular channel `idft(h_fd .* dft(x)) + noise`.
pub fn apply_channel_circular<R: Rng + ?Sized>(
    x: &[C64],
    chan: &ChannelRealization,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if x.len() != chan.h_fd.len() {
        return Err(GfdmError::DimensionMismatch {
            expected: format!("block of length {}", chan.h_fd.len()),
            actual: format!("length {}", x.len()),
        });
    }
    let plan = DftPlan::new(x.len());
    let mut y = x.to_vec();
    plan.forward(&mut y);
    y.iter_mut().zip(&chan.h_fd).for_each(|(v, h)| *v *= h);
    plan.inverse(&mut y);
    add_noise(&mut y, sigma2, rng);
    Ok(y)
}
