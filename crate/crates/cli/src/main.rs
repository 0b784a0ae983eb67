use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use gfdm_core::analysis::link_sinr;
use gfdm_core::channel::ChannelRealization;
use gfdm_core::factors::{build_factors, write_matrix_bin};
use gfdm_core::receivers::{receiver_window, ReceiverSpec};
use gfdm_core::sim::{
    run_sweep, scenario_channel, scenario_window, snr_to_sigma2, verify, write_csv, write_windows_csv, ConfigMap,
    Scenario, SinrMapReport, VerifyOptions,
};
use gfdm_core::GfdmError;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "gfdm", version, about = "GFDM block modem simulator")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average SER and SINR over random channels, written as CSV.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the numerical identities of the modem and receivers.
    Verify {
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Perturb the transmit window to exercise failure reporting.
        #[arg(long, hide = true, default_value_t = 0.0)]
        inject_fault: f64,
    },
    /// Transmit window (and receiver window for a given channel) as CSV.
    Windows {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Channel JSON; adds the receiver window of the chosen receiver.
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the frequency-domain modulation matrix in binary form.
        #[arg(long)]
        dump_bin: Option<PathBuf>,
    },
    /// Per-symbol SINR map for one channel, receiver and SNR, as JSON.
    SinrMap {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Channel JSON; otherwise realization `--channel-index` of the seed.
        #[arg(long, conflicts_with = "channel_index")]
        channel: Option<PathBuf>,
        #[arg(long)]
        channel_index: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export one channel realization of the scenario as JSON.
    Channel {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Scenario settings. A `--config` file is read first and the remaining
/// flags override its keys.
#[derive(Args, Default)]
struct ScenarioArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    id: Option<String>,
    /// gfdm, ofdm, sc or chirp.
    #[arg(long)]
    waveform: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Roll-off of the raised-cosine pulse.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    cp: Option<String>,
    /// zf-zf, diag-lmmse-zf, full-lmmse-zf, zf-lmmse (comma list for sweep).
    #[arg(long)]
    receiver: Option<String>,
    /// uniform, exp or exp:<dB per tap>.
    #[arg(long)]
    pdp: Option<String>,
    #[arg(long)]
    taps: Option<String>,
    /// start:step:stop, a comma list, or inf.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    channels: Option<String>,
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    constellation: Option<String>,
    #[arg(long)]
    es: Option<String>,
    /// Record wall-clock time per row.
    #[arg(long)]
    timing: bool,
}

impl ScenarioArgs {
    fn config_map(&self) -> Result<ConfigMap> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| GfdmError::Config(format!("cannot read {}: {e}", path.display())))?;
                ConfigMap::parse(&text)?
            }
            None => ConfigMap::default(),
        };
        let overrides = [
            ("id", &self.id),
            ("waveform", &self.waveform),
            ("k", &self.k),
            ("m", &self.m),
            ("alpha", &self.alpha),
            ("cp", &self.cp),
            ("receiver", &self.receiver),
            ("pdp", &self.pdp),
            ("taps", &self.taps),
            ("snr", &self.snr),
            ("channels", &self.channels),
            ("blocks", &self.blocks),
            ("seed", &self.seed),
            ("constellation", &self.constellation),
            ("es", &self.es),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                map.set(key, v)?;
            }
        }
        if self.timing {
            map.set("timing", "true")?;
        }
        Ok(map)
    }

    fn scenario(&self) -> Result<Scenario> {
        Ok(self.config_map()?.to_scenario()?)
    }

    /// Scenario restricted to a single receiver and SNR point; the SNR
    /// defaults to `default_snr` when not configured.
    fn single_point(&self, default_snr: &str) -> Result<(Scenario, ReceiverSpec, f64)> {
        let mut map = self.config_map()?;
        if map.get("snr").is_none() {
            map.set("snr", default_snr)?;
        }
        let sc = map.to_scenario()?;
        if sc.receivers.len() != 1 || sc.snr_db.len() != 1 {
            return Err(GfdmError::Config("expected exactly one receiver and one SNR value".into()).into());
        }
        let snr_db = sc.snr_db[0];
        let spec = ReceiverSpec::new(sc.receivers[0], sc.es, snr_to_sigma2(snr_db, sc.es))?;
        Ok((sc, spec, snr_db))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_channel(path: &Path, sc: &Scenario) -> Result<ChannelRealization> {
    let text =
        std::fs::read_to_string(path).map_err(|e| GfdmError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(ChannelRealization::from_json(&text, &sc.waveform.params()?)?)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Sweep { scenario, out } => {
            let sc = scenario.scenario()?;
            info!("scenario {} with seed {}", sc.id, sc.seed);
            let rows = run_sweep(&sc)?;
            let mut w = output(out.as_deref())?;
            write_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Command::Verify { json, out, inject_fault } => {
            let report = verify(&VerifyOptions { window_perturbation: inject_fault });
            let mut w = output(out.as_deref())?;
            if json {
                writeln!(w, "{}", report.to_json()?)?;
            } else {
                write!(w, "{}", report.table())?;
            }
            w.flush()?;
            if let Some(name) = &report.first_failure {
                eprintln!("verification failed: {name}");
                return Ok(EXIT_VERIFY);
            }
        }
        Command::Windows { scenario, channel, out, dump_bin } => {
            let (sc, spec, _) = scenario.single_point("20")?;
            let params = sc.waveform.params()?;
            let w_tx = scenario_window(&sc)?;
            let w_rx = match &channel {
                Some(path) => Some(receiver_window(&load_channel(path, &sc)?, &w_tx, &spec)?),
                None => None,
            };
            let mut windows = vec![&w_tx];
            windows.extend(w_rx.as_ref());
            let mut w = output(out.as_deref())?;
            write_windows_csv(&mut w, &windows)?;
            w.flush()?;
            if let Some(path) = dump_bin {
                let a = build_factors(&w_tx, &params)?.modulation_matrix();
                let mut f =
                    BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                write_matrix_bin(&mut f, &a)?;
                f.flush()?;
            }
        }
        Command::SinrMap { scenario, channel, channel_index, out } => {
            let (sc, spec, snr_db) = scenario.single_point("20")?;
            let params = sc.waveform.params()?;
            let chan = match &channel {
                Some(path) => load_channel(path, &sc)?,
                None => scenario_channel(&sc, channel_index.unwrap_or(0))?,
            };
            let grid = link_sinr(&chan, &scenario_window(&sc)?, &spec, &params)?;
            let report = SinrMapReport::new(&sc.waveform, &spec.chain.to_string(), snr_db, &grid, sc.constellation);
            let mut w = output(out.as_deref())?;
            writeln!(w, "{}", report.to_json()?)?;
            w.flush()?;
        }
        Command::Channel { scenario, index, out } => {
            let sc = scenario.scenario()?;
            let chan = scenario_channel(&sc, index)?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "{}", chan.to_json()?)?;
            w.flush()?;
        }
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<GfdmError>() {
        Some(
            GfdmError::Config(_)
            | GfdmError::InvalidParams(_)
            | GfdmError::InvalidRollOff(_)
            | GfdmError::RollOffTooSmall { .. }
            | GfdmError::InvalidReceiver(_)
            | GfdmError::InvalidChannel(_)
            | GfdmError::CpTooShort { .. }
            | GfdmError::TooLarge { .. }
            | GfdmError::DimensionMismatch { .. },
        ) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
