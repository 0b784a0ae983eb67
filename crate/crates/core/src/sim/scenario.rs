use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, Pdp};
use crate::error::{GfdmError, Result};
use crate::params::GfdmParams;
use crate::pulse::{validate_roll_off, PulseKind};
use crate::receivers::ReceiverChain;

/// Environment variable holding the default master seed.
pub const SEED_ENV: &str = "GFDM_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TAPS: usize = 24;
pub const DEFAULT_CP: usize = 32;
pub const DEFAULT_CHANNELS: usize = 200;
pub const DEFAULT_BLOCKS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformKind {
    Gfdm,
    Ofdm,
    Sc,
    Chirp,
}

impl fmt::Display for WaveformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WaveformKind::Gfdm => "gfdm",
            WaveformKind::Ofdm => "ofdm",
            WaveformKind::Sc => "sc",
            WaveformKind::Chirp => "chirp",
        })
    }
}

impl FromStr for WaveformKind {
    type Err = GfdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gfdm" => Ok(WaveformKind::Gfdm),
            "ofdm" => Ok(WaveformKind::Ofdm),
            "sc" | "single-carrier" => Ok(WaveformKind::Sc),
            "chirp" => Ok(WaveformKind::Chirp),
            other => Err(GfdmError::Config(format!("unknown waveform '{other}'"))),
        }
    }
}

/// A waveform configuration: pulse family plus block geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub kind: WaveformKind,
    pub k: usize,
    pub m: usize,
    /// Roll-off; only used by GFDM.
    pub alpha: f64,
    pub cp_len: usize,
}

impl Waveform {
    /// Default geometry of each waveform: GFDM and chirp with 32 x 16,
    /// OFDM with 512 x 1, single carrier with 1 x 512.
    pub fn standard(kind: WaveformKind, alpha: f64) -> Self {
        let (k, m) = match kind {
            WaveformKind::Gfdm | WaveformKind::Chirp => (32, 16),
            WaveformKind::Ofdm => (512, 1),
            WaveformKind::Sc => (1, 512),
        };
        Self { kind, k, m, alpha, cp_len: DEFAULT_CP }
    }

    pub fn pulse(&self) -> PulseKind {
        match self.kind {
            WaveformKind::Gfdm => PulseKind::PeriodicRc { alpha: self.alpha },
            WaveformKind::Ofdm => PulseKind::RectTd,
            WaveformKind::Sc => PulseKind::RectFd,
            WaveformKind::Chirp => PulseKind::Chirp,
        }
    }

    pub fn params(&self) -> Result<GfdmParams> {
        GfdmParams::new(self.k, self.m, self.cp_len)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.kind == WaveformKind::Gfdm {
            validate_roll_off(self.alpha, self.m)?;
            if self.k < 2 {
                return Err(GfdmError::Config("GFDM needs at least two subcarriers".into()));
            }
        }
        Ok(())
    }

    /// Short label such as `gfdm(32x16,a=0.8)`.
    pub fn label(&self) -> String {
        match self.kind {
            WaveformKind::Gfdm => format!("gfdm({}x{},a={})", self.k, self.m, self.alpha),
            _ => format!("{}({}x{})", self.kind, self.k, self.m),
        }
    }
}

/// Parses an SNR grid in dB: `start:step:stop` (inclusive), a comma list,
/// or a single value. `inf` denotes a noiseless point.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let bad = || GfdmError::Config(format!("invalid SNR grid '{s}'"));
    let num = |v: &str| -> Result<f64> {
        match v.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            t => t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad),
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || !stop.is_finite() || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if n > 10_000 {
                return Err(GfdmError::Config(format!("SNR grid '{s}' has too many points")));
            }
            (0..n).map(|i| start + step * i as f64).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

/// Time-domain noise variance for `Es / sigma2 = snr`.
pub fn snr_to_sigma2(snr_db: f64, es: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        es * 10f64.powf(-snr_db / 10.0)
    }
}

/// Seed from [`SEED_ENV`] if set, otherwise [`DEFAULT_SEED`].
pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map_err(|_| GfdmError::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer")))
        }
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Everything needed to run one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub waveform: Waveform,
    pub receivers: Vec<ReceiverChain>,
    pub channel: ChannelModel,
    pub snr_db: Vec<f64>,
    pub n_channels: usize,
    pub n_blocks_per_channel: usize,
    pub seed: u64,
    /// QAM order.
    pub constellation: usize,
    pub es: f64,
    /// Record wall-clock time per row; off keeps output byte-reproducible.
    pub record_timing: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            id: "default".into(),
            waveform: Waveform::standard(WaveformKind::Gfdm, 0.5),
            receivers: vec![ReceiverChain::ZF_ZF],
            channel: ChannelModel {
                taps: DEFAULT_TAPS,
                pdp: Pdp::Exponential { decay_db_per_tap: 1.0 },
                normalize: true,
            },
            snr_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            n_channels: DEFAULT_CHANNELS,
            n_blocks_per_channel: DEFAULT_BLOCKS,
            seed: DEFAULT_SEED,
            constellation: 16,
            es: 1.0,
            record_timing: false,
        }
    }
}

/// Key-value settings before they are applied to a [`Scenario`].
///
/// Keys: `id`, `waveform`, `k`, `m`, `alpha`, `cp`, `receiver` (comma
/// list), `pdp`, `taps`, `snr`, `channels`, `blocks`, `seed`,
/// `constellation`, `es`, `timing`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "id",
    "waveform",
    "k",
    "m",
    "alpha",
    "cp",
    "receiver",
    "pdp",
    "taps",
    "snr",
    "channels",
    "blocks",
    "seed",
    "constellation",
    "es",
    "timing",
];

impl ConfigMap {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GfdmError::Config(format!("line {}: expected key = value", no + 1)))?;
            map.set(key.trim(), value.trim()).map_err(|e| GfdmError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(GfdmError::Config(format!("unknown key '{key}'")));
        }
        self.entries.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| GfdmError::Config(format!("invalid value '{v}' for '{key}'"))))
            .transpose()
    }

    /// Builds a scenario. Without a `seed` key the seed comes from
    /// [`default_seed`].
    pub fn to_scenario(&self) -> Result<Scenario> {
        let mut sc = Scenario::default();
        let kind = self.parsed::<WaveformKind>("waveform")?.unwrap_or(WaveformKind::Gfdm);
        let alpha = self.parsed::<f64>("alpha")?.unwrap_or(sc.waveform.alpha);
        sc.waveform = Waveform::standard(kind, alpha);
        if let Some(k) = self.parsed("k")? {
            sc.waveform.k = k;
        }
        if let Some(m) = self.parsed("m")? {
            sc.waveform.m = m;
        }
        if let Some(cp) = self.parsed("cp")? {
            sc.waveform.cp_len = cp;
        }
        if let Some(id) = self.get("id") {
            sc.id = id.to_string();
        }
        if let Some(list) = self.get("receiver") {
            sc.receivers = list.split(',').map(|r| r.trim().parse()).collect::<Result<_>>()?;
        }
        if let Some(pdp) = self.get("pdp") {
            sc.channel.pdp = pdp.parse()?;
        }
        if let Some(taps) = self.parsed("taps")? {
            sc.channel.taps = taps;
        }
        if let Some(snr) = self.get("snr") {
            sc.snr_db = parse_snr_grid(snr)?;
        }
        if let Some(n) = self.parsed("channels")? {
            sc.n_channels = n;
        }
        if let Some(n) = self.parsed("blocks")? {
            sc.n_blocks_per_channel = n;
        }
        sc.seed = match self.parsed("seed")? {
            Some(s) => s,
            None => default_seed()?,
        };
        if let Some(mc) = self.parsed("constellation")? {
            sc.constellation = mc;
        }
        if let Some(es) = self.parsed("es")? {
            sc.es = es;
        }
        if let Some(t) = self.parsed("timing")? {
            sc.record_timing = t;
        }
        sc.validate()?;
        Ok(sc)
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(GfdmError::Config(msg));
        self.waveform.validate().map_err(|e| GfdmError::Config(e.to_string()))?;
        self.channel.validate().map_err(|e| GfdmError::Config(e.to_string()))?;
        if self.channel.taps > self.waveform.cp_len + 1 {
            return cfg(format!(
                "cyclic prefix of {} samples cannot absorb {} taps",
                self.waveform.cp_len, self.channel.taps
            ));
        }
        if self.receivers.is_empty() {
            return cfg("no receiver given".into());
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return cfg("SNR grid must be non-empty and contain numbers or inf".into());
        }
        if self.n_channels == 0 {
            return cfg("channel count must be positive".into());
        }
        crate::qam::Qam::new(self.constellation, self.es).map_err(|e| GfdmError::Config(e.to_string()))?;
        Ok(())
    }
}
