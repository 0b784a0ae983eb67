use std::io::{Read, Write};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::scenario::{snr_to_sigma2, Scenario};
use crate::analysis::{empirical_ser, link_sinr, Link};
use crate::channel::{draw_channel, ChannelRealization};
use crate::error::{GfdmError, Result};
use crate::pulse::make_pulse;
use crate::qam::Qam;
use crate::receivers::{ReceiverChain, ReceiverSpec};
use crate::stream::{par_map, stream_rng};
use crate::window::{compute_tx_window, WindowMatrix};

/// Block index reserved for drawing the channel of a stream.
const CHANNEL_BLOCK: u64 = u64::MAX;

/// One aggregated point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub snr_db: f64,
    pub receiver: String,
    pub waveform: String,
    pub avg_ser_empirical: Option<f64>,
    pub avg_ser_analytic: Option<f64>,
    /// `10 log10` of the mean linear SINR over symbols and channels.
    pub avg_sinr_db: Option<f64>,
    pub wall_time_s: f64,
    pub n_symbols: u64,
    /// Channels skipped because the receiver could not invert them.
    pub n_singular_channels: usize,
}

/// Channel realization `c` of a scenario.
pub fn scenario_channel(scenario: &Scenario, c: usize) -> Result<ChannelRealization> {
    let params = scenario.waveform.params()?;
    draw_channel(&scenario.channel, &params, &mut stream_rng(scenario.seed, c as u64, CHANNEL_BLOCK))
}

pub fn scenario_window(scenario: &Scenario) -> Result<WindowMatrix> {
    let params = scenario.waveform.params()?;
    compute_tx_window(&make_pulse(scenario.waveform.pulse(), &params)?, &params)
}

struct ChannelOutcome {
    analytic_ser: f64,
    mean_sinr: f64,
    errors: u64,
    symbols: u64,
}

fn is_singular(err: &GfdmError) -> bool {
    matches!(err, GfdmError::SingularChannel { .. } | GfdmError::SingularWindow { .. })
}

/// Runs every `(receiver, SNR)` point of the scenario. Channel `c` is the
/// same realization for every point, and results do not depend on the
/// number of worker threads.
pub fn run_sweep(scenario: &Scenario) -> Result<Vec<ResultRow>> {
    scenario.validate()?;
    let params = scenario.waveform.params()?;
    let w_tx = scenario_window(scenario)?;
    let qam = Qam::new(scenario.constellation, scenario.es)?;
    let channels =
        par_map(scenario.n_channels, |c| scenario_channel(scenario, c)).into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &chain in &scenario.receivers {
        for &snr_db in &scenario.snr_db {
            let start = Instant::now();
            let sigma2 = snr_to_sigma2(snr_db, scenario.es);
            let spec = ReceiverSpec::new(chain, scenario.es, sigma2)?;
            let outcomes = par_map(channels.len(), |c| -> Result<Option<ChannelOutcome>> {
                let link = Link { params: &params, w_tx: &w_tx, chan: &channels[c], spec: &spec };
                let grid = match link_sinr(&channels[c], &w_tx, &spec, &params) {
                    Ok(g) => g,
                    Err(e) if is_singular(&e) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let est = empirical_ser(&link, &qam, scenario.n_blocks_per_channel, scenario.seed, c as u64)?;
                Ok(Some(ChannelOutcome {
                    analytic_ser: grid.mean_analytic_ser(scenario.constellation),
                    mean_sinr: grid.mean_sinr(),
                    errors: est.errors,
                    symbols: est.n_symbols,
                }))
            });
            let mut used = 0usize;
            let mut singular = 0usize;
            let (mut ser_sum, mut sinr_sum, mut errors, mut symbols) = (0.0, 0.0, 0u64, 0u64);
            for outcome in outcomes {
                match outcome? {
                    Some(o) => {
                        used += 1;
                        ser_sum += o.analytic_ser;
                        sinr_sum += o.mean_sinr;
                        errors += o.errors;
                        symbols += o.symbols;
                    }
                    None => singular += 1,
                }
            }
            if singular > 0 {
                warn!(
                    "{chain} at {snr_db} dB: {singular} of {} channels are not invertible and were skipped",
                    channels.len()
                );
            }
            let row = ResultRow {
                scenario_id: scenario.id.clone(),
                snr_db,
                receiver: chain.to_string(),
                waveform: scenario.waveform.label(),
                avg_ser_empirical: (symbols > 0).then(|| errors as f64 / symbols as f64),
                avg_ser_analytic: (used > 0).then(|| ser_sum / used as f64),
                avg_sinr_db: (used > 0).then(|| 10.0 * (sinr_sum / used as f64).log10()),
                wall_time_s: if scenario.record_timing { start.elapsed().as_secs_f64() } else { 0.0 },
                n_symbols: symbols,
                n_singular_channels: singular,
            };
            info!(
                "{} {} {:>6} dB: analytic {:?}, empirical {:?}",
                row.waveform, row.receiver, snr_db, row.avg_ser_analytic, row.avg_ser_empirical
            );
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Average analytic SER of `chain` over explicit channels; singular
/// channels are skipped. Returns `None` if every channel is singular.
pub fn average_analytic_ser(
    channels: &[ChannelRealization],
    w_tx: &WindowMatrix,
    chain: ReceiverChain,
    scenario: &Scenario,
    snr_db: f64,
) -> Result<Option<f64>> {
    let params = scenario.waveform.params()?;
    let spec = ReceiverSpec::new(chain, scenario.es, snr_to_sigma2(snr_db, scenario.es))?;
    let sers = par_map(channels.len(), |c| match link_sinr(&channels[c], w_tx, &spec, &params) {
        Ok(g) => Ok(Some(g.mean_analytic_ser(scenario.constellation))),
        Err(e) if is_singular(&e) => Ok(None),
        Err(e) => Err(e),
    });
    let mut sum = 0.0;
    let mut used = 0;
    for s in sers {
        if let Some(v) = s? {
            sum += v;
            used += 1;
        }
    }
    Ok((used > 0).then(|| sum / used as f64))
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "scenario_id",
            "snr_db",
            "receiver",
            "waveform",
            "avg_ser_empirical",
            "avg_ser_analytic",
            "avg_sinr_db",
            "wall_time_s",
            "n_symbols",
            "n_singular_channels",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    r.deserialize().map(|row| row.map_err(GfdmError::from)).collect()
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| GfdmError::Io(e.to_string()))
}
