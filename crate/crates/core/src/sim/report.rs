use std::io::Write;

use serde::{Deserialize, Serialize};

use super::scenario::Waveform;
use crate::analysis::SinrGrid;
use crate::error::Result;
use crate::window::{WindowMatrix, WindowRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WindowRecord {
    role: String,
    k: usize,
    m: usize,
    re: f64,
    im: f64,
    magnitude: f64,
    phase_rad: f64,
}

/// Writes windows as CSV, one row per entry:
/// `role,k,m,re,im,magnitude,phase_rad`.
pub fn write_windows_csv<W: Write>(out: W, windows: &[&WindowMatrix]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for win in windows {
        let role = match win.role {
            WindowRole::Tx => "tx",
            WindowRole::Rx => "rx",
        };
        for m in 0..win.m() {
            for k in 0..win.k() {
                let v = win.w[(k, m)];
                w.serialize(WindowRecord {
                    role: role.into(),
                    k,
                    m,
                    re: v.re,
                    im: v.im,
                    magnitude: v.norm(),
                    phase_rad: v.arg(),
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON form of a per-symbol SINR map. Matrices are indexed `[k][m]`;
/// non-finite values serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrMapReport {
    pub waveform: String,
    pub receiver: String,
    pub snr_db: f64,
    pub k: usize,
    pub m: usize,
    pub sinr_db: Vec<Vec<f64>>,
    pub signal: Vec<Vec<f64>>,
    pub isi: Vec<Vec<f64>>,
    pub ici: Vec<Vec<f64>>,
    pub noise: Vec<Vec<f64>>,
    /// Overall gain per subcarrier as `[re, im]`.
    pub gain: Vec<[f64; 2]>,
    pub mean_analytic_ser: f64,
}

fn rows(mat: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    mat.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl SinrMapReport {
    pub fn new(waveform: &Waveform, receiver: &str, snr_db: f64, grid: &SinrGrid, mc: usize) -> Self {
        Self {
            waveform: waveform.label(),
            receiver: receiver.into(),
            snr_db,
            k: grid.k(),
            m: grid.m(),
            sinr_db: rows(&grid.sinr_db()),
            signal: rows(&grid.signal),
            isi: rows(&grid.isi),
            ici: rows(&grid.ici),
            noise: rows(&grid.noise),
            gain: grid.gain.iter().map(|g| [g.re, g.im]).collect(),
            mean_analytic_ser: grid.mean_analytic_ser(mc),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
