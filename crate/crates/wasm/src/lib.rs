//! Browser bindings for the interactive demo page. Every export returns a
//! JSON string so the page only needs `JSON.parse`.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use wasm_bindgen::prelude::*;

use gfdm_core::analysis::link_sinr;
use gfdm_core::receivers::{ReceiverChain, ReceiverSpec};
use gfdm_core::sim::{
    average_analytic_ser, scenario_channel, scenario_window, snr_to_sigma2, ConfigMap, Scenario, SinrMapReport,
};

type JsResult = Result<String, String>;

#[derive(Serialize)]
struct WindowView {
    label: String,
    k: usize,
    m: usize,
    /// `[k][m]` magnitudes.
    magnitude: Vec<Vec<f64>>,
    /// `[k][m]` phases in radians.
    phase: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SerCurve {
    receiver: String,
    ser: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct SerCurves {
    label: String,
    snr_db: Vec<f64>,
    curves: Vec<SerCurve>,
}

fn scenario(waveform: &str, k: u32, m: u32, alpha: f64, taps: u32, seed: u32) -> Result<Scenario, String> {
    let mut map = ConfigMap::default();
    let cp = (taps.max(2) - 1).min((k * m).saturating_sub(1));
    for (key, value) in [
        ("waveform", waveform.to_string()),
        ("k", k.to_string()),
        ("m", m.to_string()),
        ("alpha", alpha.to_string()),
        ("taps", taps.to_string()),
        ("cp", cp.to_string()),
        ("seed", seed.to_string()),
    ] {
        map.set(key, &value).map_err(|e| e.to_string())?;
    }
    map.to_scenario().map_err(|e| e.to_string())
}

fn json<T: Serialize>(value: &T) -> JsResult {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Magnitude and phase of the transmit window.
#[wasm_bindgen]
pub fn tx_window(waveform: &str, k: u32, m: u32, alpha: f64) -> JsResult {
    let sc = scenario(waveform, k, m, alpha, 1, 0)?;
    let w = scenario_window(&sc).map_err(|e| e.to_string())?;
    let grid = |f: fn(&gfdm_core::C64) -> f64| -> Vec<Vec<f64>> {
        w.w.row_iter().map(|r| r.iter().map(f).collect()).collect()
    };
    json(&WindowView {
        label: sc.waveform.label(),
        k: w.k(),
        m: w.m(),
        magnitude: grid(|v| v.norm()),
        phase: grid(|v| v.arg()),
    })
}

/// Per-symbol SINR map of one channel draw, in the same layout as the
/// command-line `sinr-map` output.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sinr_map(
    waveform: &str,
    k: u32,
    m: u32,
    alpha: f64,
    receiver: &str,
    snr_db: f64,
    taps: u32,
    seed: u32,
    channel_index: u32,
) -> JsResult {
    let sc = scenario(waveform, k, m, alpha, taps, seed)?;
    let chain: ReceiverChain = receiver.parse().map_err(|e: gfdm_core::GfdmError| e.to_string())?;
    let run = || -> gfdm_core::Result<String> {
        let params = sc.waveform.params()?;
        let spec = ReceiverSpec::new(chain, sc.es, snr_to_sigma2(snr_db, sc.es))?;
        let chan = scenario_channel(&sc, channel_index as usize)?;
        let grid = link_sinr(&chan, &scenario_window(&sc)?, &spec, &params)?;
        SinrMapReport::new(&sc.waveform, receiver, snr_db, &grid, sc.constellation).to_json()
    };
    run().map_err(|e| e.to_string())
}

/// Analytic 16-QAM SER averaged over `channels` draws for every receiver,
/// on an SNR grid from `snr_min` to `snr_max` dB.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ser_curve(
    waveform: &str,
    k: u32,
    m: u32,
    alpha: f64,
    taps: u32,
    seed: u32,
    channels: u32,
    snr_min: f64,
    snr_max: f64,
    snr_step: f64,
) -> JsResult {
    if !(snr_step > 0.0) || snr_max < snr_min || (snr_max - snr_min) / snr_step > 200.0 {
        return Err("SNR grid must be increasing with at most 200 points".into());
    }
    let sc = scenario(waveform, k, m, alpha, taps, seed)?;
    let run = || -> gfdm_core::Result<SerCurves> {
        let w_tx = scenario_window(&sc)?;
        let draws =
            (0..channels.max(1) as usize).map(|c| scenario_channel(&sc, c)).collect::<gfdm_core::Result<Vec<_>>>()?;
        let n = ((snr_max - snr_min) / snr_step + 1e-9).floor() as usize + 1;
        let snr_db: Vec<f64> = (0..n).map(|i| snr_min + i as f64 * snr_step).collect();
        let curves = ReceiverChain::ALL
            .iter()
            .map(|&chain| {
                let ser = snr_db
                    .iter()
                    .map(|&s| average_analytic_ser(&draws, &w_tx, chain, &sc, s))
                    .collect::<gfdm_core::Result<_>>()?;
                Ok(SerCurve { receiver: chain.to_string(), ser })
            })
            .collect::<gfdm_core::Result<_>>()?;
        Ok(SerCurves { label: sc.waveform.label(), snr_db, curves })
    };
    json(&run().map_err(|e| e.to_string())?)
}
