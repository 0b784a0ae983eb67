//! GFDM-based linear receivers: a channel equalizer followed by a windowed
//! GFDM demodulator, plus the dense joint receivers they are checked
//! against (see [`oracle`]).

use std::str::FromStr;

use log::warn;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dsp::{reshape_v, unreshape_v, DftPlan};
use crate::error::{GfdmError, Result};
use crate::modem::FdModem;
use crate::params::GfdmParams;
use crate::window::{zf_rx_window, WindowMatrix, WindowRole, EPS_INV};
use crate::{CMat, SymbolGrid, C64};

pub mod oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelEqualizer {
    Zf,
    FullLmmse,
    DiagLmmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Demodulator {
    Zf,
    Lmmse,
}

/// Equalizer/demodulator pairing, written `<ceq>-<demod>` on the command
/// line: `zf-zf`, `diag-lmmse-zf`, `full-lmmse-zf`, `zf-lmmse`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ReceiverChain {
    pub ceq: ChannelEqualizer,
    pub demod: Demodulator,
}

impl ReceiverChain {
    pub const ZF_ZF: Self = Self { ceq: ChannelEqualizer::Zf, demod: Demodulator::Zf };
    pub const DIAG_LMMSE_ZF: Self = Self { ceq: ChannelEqualizer::DiagLmmse, demod: Demodulator::Zf };
    pub const FULL_LMMSE_ZF: Self = Self { ceq: ChannelEqualizer::FullLmmse, demod: Demodulator::Zf };
    pub const ZF_LMMSE: Self = Self { ceq: ChannelEqualizer::Zf, demod: Demodulator::Lmmse };

    /// The four chains compared throughout.
    pub const ALL: [Self; 4] = [Self::ZF_ZF, Self::DIAG_LMMSE_ZF, Self::FULL_LMMSE_ZF, Self::ZF_LMMSE];

    pub fn new(ceq: ChannelEqualizer, demod: Demodulator) -> Result<Self> {
        if ceq == ChannelEqualizer::FullLmmse && demod == Demodulator::Lmmse {
            return Err(GfdmError::InvalidReceiver(
                "full LMMSE equalization followed by LMMSE demodulation is not a defined chain".into(),
            ));
        }
        Ok(Self { ceq, demod })
    }
}

impl std::fmt::Display for ReceiverChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ceq = match self.ceq {
            ChannelEqualizer::Zf => "zf",
            ChannelEqualizer::FullLmmse => "full-lmmse",
            ChannelEqualizer::DiagLmmse => "diag-lmmse",
        };
        let demod = match self.demod {
            Demodulator::Zf => "zf",
            Demodulator::Lmmse => "lmmse",
        };
        write!(f, "{ceq}-{demod}")
    }
}

impl FromStr for ReceiverChain {
    type Err = GfdmError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (ceq, demod) = s
            .rsplit_once('-')
            .ok_or_else(|| GfdmError::InvalidReceiver(format!("expected <ceq>-<demod>, got '{s}'")))?;
        let ceq = match ceq {
            "zf" => ChannelEqualizer::Zf,
            "full-lmmse" => ChannelEqualizer::FullLmmse,
            "diag-lmmse" => ChannelEqualizer::DiagLmmse,
            other => return Err(GfdmError::InvalidReceiver(format!("unknown channel equalizer '{other}'"))),
        };
        let demod = match demod {
            "zf" => Demodulator::Zf,
            "lmmse" => Demodulator::Lmmse,
            other => return Err(GfdmError::InvalidReceiver(format!("unknown demodulator '{other}'"))),
        };
        Self::new(ceq, demod)
    }
}

impl TryFrom<String> for ReceiverChain {
    type Error = GfdmError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReceiverChain> for String {
    fn from(c: ReceiverChain) -> String {
        c.to_string()
    }
}

/// A receiver chain together with the statistics it is designed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSpec {
    pub chain: ReceiverChain,
    /// Mean symbol energy.
    pub es: f64,
    /// Time-domain noise variance per sample.
    pub sigma2: f64,
}

impl ReceiverSpec {
    pub fn new(chain: ReceiverChain, es: f64, sigma2: f64) -> Result<Self> {
        let spec = Self { chain, es, sigma2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ReceiverChain::new(self.chain.ceq, self.chain.demod)?;
        if !(self.es > 0.0) || !self.es.is_finite() {
            return Err(GfdmError::InvalidReceiver(format!("symbol energy must be positive, got {}", self.es)));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(GfdmError::InvalidReceiver(format!(
                "noise variance must be non-negative, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// Frequency-domain noise variance `N * sigma2`.
    pub fn sigma2_fd(&self, params: &GfdmParams) -> f64 {
        params.n() as f64 * self.sigma2
    }
}

/// Per-subsymbol channel equalizer `H_eq,m^H` acting on the `K` bins of
/// column `m` of `V(y_fd)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Equalizer {
    Diagonal(Vec<C64>),
    Dense(CMat),
}

impl Equalizer {
    pub fn to_dense(&self) -> CMat {
        match self {
            Equalizer::Diagonal(d) => CMat::from_diagonal(&DVector::from_column_slice(d)),
            Equalizer::Dense(m) => m.clone(),
        }
    }

    fn apply(&self, col: &[C64]) -> Vec<C64> {
        match self {
            Equalizer::Diagonal(d) => d.iter().zip(col).map(|(e, y)| e * y).collect(),
            Equalizer::Dense(mat) => (mat * DVector::from_column_slice(col)).as_slice().to_vec(),
        }
    }
}

/// One equalizer per subsymbol column.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerBank {
    pub per_m: Vec<Equalizer>,
}

impl EqualizerBank {
    pub fn is_diagonal(&self) -> bool {
        self.per_m.iter().all(|e| matches!(e, Equalizer::Diagonal(_)))
    }

    /// Equalizes a frequency-domain block.
    pub fn apply(&self, y_fd: &[C64], params: &GfdmParams) -> Result<Vec<C64>> {
        let mut v = reshape_v(y_fd, params)?;
        let k = params.k();
        for (m, eq) in self.per_m.iter().enumerate() {
            let col = &mut v.as_mut_slice()[m * k..(m + 1) * k];
            let out = eq.apply(col);
            col.copy_from_slice(&out);
        }
        Ok(unreshape_v(&v))
    }
}

fn grid_params(grid: &CMat) -> Result<GfdmParams> {
    GfdmParams::new(grid.nrows(), grid.ncols(), 0)
}

/// Fails on the first frequency bin whose magnitude is below
/// `EPS_INV * max |h_fd|`.
pub fn check_channel_invertible(h_fd: &[C64]) -> Result<()> {
    let max = h_fd.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let threshold = EPS_INV * max;
    match h_fd.iter().position(|v| !(v.norm() > threshold)) {
        Some(bin) => Err(GfdmError::SingularChannel { bin }),
        None => Ok(()),
    }
}

/// Zero-forcing equalizer `H^{-1}`.
pub fn zf_bank(chan: &crate::channel::ChannelRealization) -> Result<EqualizerBank> {
    check_channel_invertible(&chan.h_fd)?;
    let one = C64::new(1.0, 0.0);
    let per_m =
        chan.per_m_diag.column_iter().map(|col| Equalizer::Diagonal(col.iter().map(|h| one / h).collect())).collect();
    Ok(EqualizerBank { per_m })
}

/// Full LMMSE equalizer per subsymbol:
/// `(H_m^H H_m + sigma2_fd R_m^{-1})^{-1} H_m^H` with the transmit
/// covariance `R_m = (M Es / K) F_K Lambda_m Lambda_m^H F_K^H`.
pub fn full_lmmse_bank(
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
) -> Result<EqualizerBank> {
    spec.validate()?;
    let params = grid_params(&chan.per_m_diag)?;
    params.check_grid("window", w_tx.k(), w_tx.m())?;
    if spec.sigma2 == 0.0 {
        return zf_bank(chan);
    }
    let (k, m_len) = (params.k(), params.m());
    let sigma2_fd = spec.sigma2_fd(&params);
    let plan = DftPlan::new(k);
    let mut per_m = Vec::with_capacity(m_len);
    for m in 0..m_len {
        // R_m = (1/K) F diag(lambda) F^H with lambda = M Es |w|^2.
        let mut lambda: Vec<f64> = w_tx.w.column(m).iter().map(|w| m_len as f64 * spec.es * w.norm_sqr()).collect();
        let mean = lambda.iter().sum::<f64>() / k as f64;
        let eps = 1e-12 * mean;
        if lambda.iter().any(|&l| l <= eps) {
            warn!("transmit covariance of subsymbol {m} is singular; regularizing with {eps:e} I");
            lambda.iter_mut().for_each(|l| *l += eps);
        }
        // R_m^{-1} is circulant; its first column is dft(1/lambda) / K.
        let mut first: Vec<C64> = lambda.iter().map(|l| C64::new(1.0 / l, 0.0)).collect();
        plan.forward(&mut first);
        let h = chan.per_m_diag.column(m);
        let mut system = CMat::from_fn(k, k, |a, b| first[(a + k - b) % k] * (sigma2_fd / k as f64));
        for a in 0..k {
            system[(a, a)] += h[a].norm_sqr();
        }
        let rhs = CMat::from_diagonal(&h.map(|v| v.conj()));
        let eq = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| GfdmError::InvalidReceiver(format!("full LMMSE system of subsymbol {m} is singular")))?;
        per_m.push(Equalizer::Dense(eq));
    }
    Ok(EqualizerBank { per_m })
}

/// LMMSE equalizer under a diagonal constraint: per bin
/// `conj(h) / (|h|^2 + K sigma2_fd / (M Es P_m))`, `P_m = sum_k |W_tx[k, m]|^2`.
pub fn diag_lmmse_bank(
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
) -> Result<EqualizerBank> {
    spec.validate()?;
    let params = grid_params(&chan.per_m_diag)?;
    params.check_grid("window", w_tx.k(), w_tx.m())?;
    if spec.sigma2 == 0.0 {
        return zf_bank(chan);
    }
    let (k, m_len) = (params.k() as f64, params.m() as f64);
    let sigma2_fd = spec.sigma2_fd(&params);
    let per_m = chan
        .per_m_diag
        .column_iter()
        .enumerate()
        .map(|(m, col)| {
            let reg = k * sigma2_fd / (m_len * spec.es * w_tx.column_power(m));
            Equalizer::Diagonal(col.iter().map(|h| h.conj() / (h.norm_sqr() + reg)).collect())
        })
        .collect();
    Ok(EqualizerBank { per_m })
}

/// Equalizer bank for the chain's channel-equalization stage.
pub fn equalizer_bank(
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
) -> Result<EqualizerBank> {
    match spec.chain.ceq {
        ChannelEqualizer::Zf => zf_bank(chan),
        ChannelEqualizer::FullLmmse => full_lmmse_bank(chan, w_tx, spec),
        ChannelEqualizer::DiagLmmse => diag_lmmse_bank(chan, w_tx, spec),
    }
}

/// `y_eq = H^{-1} y`.
pub fn ceq_zf(y_fd: &[C64], chan: &crate::channel::ChannelRealization) -> Result<Vec<C64>> {
    zf_bank(chan)?.apply(y_fd, &grid_params(&chan.per_m_diag)?)
}

pub fn ceq_full_lmmse(
    y_fd: &[C64],
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
) -> Result<Vec<C64>> {
    full_lmmse_bank(chan, w_tx, spec)?.apply(y_fd, &grid_params(&chan.per_m_diag)?)
}

pub fn ceq_diag_lmmse(
    y_fd: &[C64],
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
) -> Result<Vec<C64>> {
    diag_lmmse_bank(chan, w_tx, spec)?.apply(y_fd, &grid_params(&chan.per_m_diag)?)
}

/// `Omega_m = trace((H_m H_m^H)^{-1})`: noise enhancement of zero-forcing
/// equalization on subsymbol column `m`.
pub fn zf_noise_enhancement(chan: &crate::channel::ChannelRealization, m: usize) -> f64 {
    chan.per_m_diag.column(m).iter().map(|h| 1.0 / h.norm_sqr()).sum()
}

/// LMMSE demodulator window for use after zero-forcing equalization:
/// `conj(w) / (|w|^2 + sigma2_fd Omega_m / (Es N))` with
/// `Omega_m = sum_k 1 / |h_m[k]|^2`.
pub fn demod_lmmse_window(
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
) -> Result<WindowMatrix> {
    spec.validate()?;
    let params = grid_params(&chan.per_m_diag)?;
    params.check_grid("window", w_tx.k(), w_tx.m())?;
    check_channel_invertible(&chan.h_fd)?;
    if spec.sigma2 == 0.0 {
        return zf_rx_window(w_tx);
    }
    let n = params.n() as f64;
    let sigma2_fd = spec.sigma2_fd(&params);
    let mut w = w_tx.w.clone();
    for (m, mut col) in w.column_iter_mut().enumerate() {
        let omega = zf_noise_enhancement(chan, m);
        let reg = sigma2_fd * omega / (spec.es * n);
        col.iter_mut().for_each(|v| *v = v.conj() / (v.norm_sqr() + reg));
    }
    Ok(WindowMatrix::new(w, WindowRole::Rx))
}

/// Receiver window for the chain's demodulation stage.
pub fn receiver_window(
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
) -> Result<WindowMatrix> {
    match spec.chain.demod {
        Demodulator::Zf => zf_rx_window(w_tx),
        Demodulator::Lmmse => demod_lmmse_window(chan, w_tx, spec),
    }
}

/// A receiver chain with its equalizers and window computed for one channel
/// realization, ready to process many blocks.
#[derive(Debug, Clone)]
pub struct PreparedReceiver {
    pub spec: ReceiverSpec,
    pub bank: EqualizerBank,
    pub w_rx: WindowMatrix,
    modem: FdModem,
}

impl PreparedReceiver {
    pub fn new(
        chan: &crate::channel::ChannelRealization,
        w_tx: &WindowMatrix,
        spec: &ReceiverSpec,
        params: &GfdmParams,
    ) -> Result<Self> {
        params.check_grid("channel", chan.per_m_diag.nrows(), chan.per_m_diag.ncols())?;
        let bank = equalizer_bank(chan, w_tx, spec)?;
        let w_rx = receiver_window(chan, w_tx, spec)?;
        Ok(Self { spec: *spec, bank, w_rx, modem: FdModem::new(*params) })
    }

    pub fn params(&self) -> &GfdmParams {
        self.modem.params()
    }

    /// Equalizes and demodulates a frequency-domain block.
    pub fn apply_fd(&self, y_fd: &[C64]) -> Result<SymbolGrid> {
        let y_eq = self.bank.apply(y_fd, self.params())?;
        self.modem.demodulate(&y_eq, &self.w_rx)
    }

    /// Full chain from a CP-stripped time-domain block.
    pub fn apply_td(&self, y_td: &[C64]) -> Result<SymbolGrid> {
        self.params().check_len("received block", y_td.len())?;
        let mut y = y_td.to_vec();
        self.modem.transforms().n.forward(&mut y);
        self.apply_fd(&y)
    }
}

/// DFT, channel equalization and windowed demodulation of one received
/// time-domain block.
pub fn run_receiver(
    y_td: &[C64],
    chan: &crate::channel::ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
    params: &GfdmParams,
) -> Result<SymbolGrid> {
    PreparedReceiver::new(chan, w_tx, spec, params)?.apply_td(y_td)
}

#[cfg(test)]
mod tests;
