//! Prototype pulses: the single filter whose circular time and frequency
//! shifts form every GFDM basis function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dsp::{dft, idft};
use crate::error::{GfdmError, Result};
use crate::params::GfdmParams;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseKind {
    /// Frequency-domain raised cosine spanning two neighbouring subcarriers.
    PeriodicRc { alpha: f64 },
    /// `g[n] = 1/sqrt(N)`: the OFDM pulse when `M = 1`.
    RectTd,
    /// Flat spectrum, `g = delta`: single carrier when `K = 1`.
    RectFd,
    /// Quadratic-phase pulse `exp(j pi n^2 / K)` over the first `K` samples.
    Chirp,
}

impl std::fmt::Display for PulseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PulseKind::PeriodicRc { alpha } => write!(f, "rc({alpha})"),
            PulseKind::RectTd => f.write_str("rect-td"),
            PulseKind::RectFd => f.write_str("rect-fd"),
            PulseKind::Chirp => f.write_str("chirp"),
        }
    }
}

/// A unit-energy prototype pulse with its `N`-point spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypePulse {
    pub kind: PulseKind,
    /// Time-domain samples `g[n]`.
    pub g: Vec<C64>,
    /// `g_fd = F_N g`.
    pub g_fd: Vec<C64>,
}

impl PrototypePulse {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.g.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Checks the roll-off constraints of the periodic raised cosine.
pub fn validate_roll_off(alpha: f64, m: usize) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(GfdmError::InvalidRollOff(alpha));
    }
    if alpha > 0.0 && (m as f64) * alpha <= 1.0 {
        return Err(GfdmError::RollOffTooSmall { alpha, m });
    }
    Ok(())
}

/// Raised-cosine magnitude at (possibly fractional) bin offset `x` from the
/// pulse centre, for a subcarrier spacing of `m` bins.
fn raised_cosine(x: f64, m: usize, alpha: f64) -> f64 {
    let m = m as f64;
    let x = x.abs();
    let flat = m * (1.0 - alpha) / 2.0;
    let edge = m * (1.0 + alpha) / 2.0;
    if x <= flat {
        1.0
    } else if x <= edge {
        0.5 * (1.0 + (PI * (x - flat) / (m * alpha)).cos())
    } else {
        0.0
    }
}

/// Builds the prototype pulse of `kind` for the block geometry `params`.
pub fn make_pulse(kind: PulseKind, params: &GfdmParams) -> Result<PrototypePulse> {
    let n = params.n();
    let k = params.k();
    let zero = C64::new(0.0, 0.0);
    let (g, g_fd) = match kind {
        PulseKind::PeriodicRc { alpha } => {
            validate_roll_off(alpha, params.m())?;
            if k < 2 {
                return Err(GfdmError::InvalidParams(
                    "periodic raised cosine needs K >= 2 so neighbouring subcarriers do not alias".into(),
                ));
            }
            // Bins are sampled symmetrically about the subcarrier boundary:
            // for even M the centre sits half a bin off bin 0, which keeps
            // the two overlapping subcarrier tails unequal in every window
            // column (no exact nulls) and gives exactly M bins at alpha = 0.
            let offset = if params.m().is_multiple_of(2) { 0.5 } else { 0.0 };
            let mut spec: Vec<C64> = (0..n)
                .map(|i| {
                    let signed = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                    C64::new(raised_cosine(signed + offset, params.m(), alpha), 0.0)
                })
                .collect();
            let energy: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            let scale = 1.0 / energy.sqrt();
            spec.iter_mut().for_each(|v| *v *= scale);
            (idft(&spec), spec)
        }
        PulseKind::RectTd => {
            let amp = 1.0 / (n as f64).sqrt();
            let mut spec = vec![zero; n];
            spec[0] = C64::new((n as f64).sqrt(), 0.0);
            (vec![C64::new(amp, 0.0); n], spec)
        }
        PulseKind::RectFd => {
            let mut g = vec![zero; n];
            g[0] = C64::new(1.0, 0.0);
            (g, vec![C64::new(1.0, 0.0); n])
        }
        PulseKind::Chirp => {
            let amp = 1.0 / (k as f64).sqrt();
            let g: Vec<C64> = (0..n)
                .map(|i| {
                    if i < k {
                        // n^2 mod 2K keeps the phase argument small.
                        let phase = PI * ((i * i) % (2 * k)) as f64 / k as f64;
                        C64::from_polar(amp, phase)
                    } else {
                        zero
                    }
                })
                .collect();
            let spec = dft(&g);
            (g, spec)
        }
    };
    Ok(PrototypePulse { kind, g, g_fd })
}
