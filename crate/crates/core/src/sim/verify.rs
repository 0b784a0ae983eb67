//! Identity checks of the modem, the matrix factorization, the receiver
//! equivalences and the SINR analysis at desk scale.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{dense_symbol_sinr, link_sinr};
use crate::channel::{complex_gaussian, ChannelRealization};
use crate::dsp::{dft, idft, max_abs, DftPlan};
use crate::error::Result;
use crate::factors::build_factors;
use crate::modem::{build_modulation_matrix, build_modulation_matrix_fd, modulate_reference_td, FdModem};
use crate::params::GfdmParams;
use crate::pulse::{make_pulse, PulseKind};
use crate::receivers::oracle::{joint_lmmse_filters, joint_lmmse_oracle, zf_then_dense_lmmse};
use crate::receivers::{PreparedReceiver, ReceiverChain, ReceiverSpec};
use crate::window::{compute_tx_window, WindowMatrix};
use crate::{CMat, SymbolGrid, C64};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyOptions {
    /// Adds this multiple of `max |W_tx|` to every transmit-window entry.
    /// Non-zero values exist to exercise failure reporting.
    pub window_perturbation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed error; its meaning depends on the check.
    pub max_error: f64,
    pub tolerance: f64,
    pub instances: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per check.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:<22} {:<4} max_err={:<10.3e} tol={:<8.1e} n={:<3} {}\n",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.max_error,
                c.tolerance,
                c.instances,
                c.detail
            ));
        }
        out
    }
}

/// Tracks the worst error of one check.
struct Check {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    worst_at: String,
    instances: usize,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, worst: 0.0, worst_at: String::new(), instances: 0 }
    }

    fn record(&mut self, err: f64, at: impl FnOnce() -> String) {
        self.instances += 1;
        // NaN counts as a failure.
        if !(err <= self.worst) {
            self.worst = if err.is_nan() { f64::INFINITY } else { err };
            self.worst_at = at();
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.into(),
            passed: self.worst < self.tolerance,
            max_error: self.worst,
            tolerance: self.tolerance,
            instances: self.instances,
            detail: if self.worst_at.is_empty() { String::new() } else { format!("worst at {}", self.worst_at) },
        }
    }

    fn error(self, err: crate::GfdmError) -> CheckResult {
        CheckResult {
            name: self.name.into(),
            passed: false,
            max_error: f64::INFINITY,
            tolerance: self.tolerance,
            instances: self.instances,
            detail: format!("error: {err}"),
        }
    }
}

fn run_check(name: &'static str, tolerance: f64, body: impl FnOnce(&mut Check) -> Result<()>) -> CheckResult {
    let mut check = Check::new(name, tolerance);
    match body(&mut check) {
        Ok(()) => check.finish(),
        Err(e) => check.error(e),
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(f64::MIN_POSITIVE)
}

fn vec_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn vec_max(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn random_grid(k: usize, m: usize, rng: &mut ChaCha8Rng) -> SymbolGrid {
    CMat::from_fn(k, m, |_, _| complex_gaussian(rng, 1.0))
}

fn random_channel(params: &GfdmParams, taps: usize, rng: &mut ChaCha8Rng) -> Result<ChannelRealization> {
    let h = (0..taps).map(|_| complex_gaussian(rng, 1.0 / taps as f64)).collect();
    ChannelRealization::from_taps(h, params)
}

fn perturbed_window(kind: PulseKind, params: &GfdmParams, opts: &VerifyOptions) -> Result<WindowMatrix> {
    let mut w = compute_tx_window(&make_pulse(kind, params)?, params)?;
    if opts.window_perturbation != 0.0 {
        let delta = C64::new(opts.window_perturbation * w.max_abs(), 0.0);
        w.w.iter_mut().for_each(|v| *v += delta);
    }
    Ok(w)
}

/// Pulse kinds exercised at geometry `(k, m)`.
fn pulse_kinds(k: usize, m: usize) -> Vec<PulseKind> {
    let alpha = if m >= 3 { 0.5 } else { 0.6 };
    let mut kinds = vec![PulseKind::RectTd, PulseKind::RectFd, PulseKind::Chirp];
    if k >= 2 {
        kinds.insert(0, PulseKind::PeriodicRc { alpha });
    }
    kinds
}

fn naive_dft(x: &[C64]) -> Vec<C64> {
    let q = x.len();
    (0..q)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(n, v)| v * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((k * n) % q) as f64 / q as f64))
                .sum()
        })
        .collect()
}

fn check_dft(rng: &mut ChaCha8Rng) -> CheckResult {
    run_check("dft", 1e-12, |c| {
        for q in [1, 2, 3, 5, 8, 12, 16, 64, 100] {
            let x: Vec<C64> = (0..q).map(|_| complex_gaussian(rng, 1.0)).collect();
            let fast = dft(&x);
            let slow = naive_dft(&x);
            c.record(rel(vec_diff(&fast, &slow), vec_max(&slow)), || format!("Q={q}"));
            c.record(rel(vec_diff(&idft(&fast), &x), vec_max(&x)), || format!("Q={q} inverse"));
            let mut y = x.clone();
            DftPlan::new(q).adjoint(&mut y);
            let conj: Vec<C64> = x.iter().map(|v| v.conj()).collect();
            let expect: Vec<C64> = naive_dft(&conj).iter().map(|v| v.conj()).collect();
            c.record(rel(vec_diff(&y, &expect), vec_max(&expect)), || format!("Q={q} adjoint"));
        }
        Ok(())
    })
}

fn check_decomposition(opts: &VerifyOptions) -> CheckResult {
    run_check("decomposition", 1e-10, |c| {
        for (k, m) in [(2, 2), (2, 4), (4, 3), (4, 8), (8, 4), (8, 8), (3, 5)] {
            let params = GfdmParams::new(k, m, 0)?;
            for kind in pulse_kinds(k, m) {
                let pulse = make_pulse(kind, &params)?;
                let a_fd = build_modulation_matrix_fd(&pulse, &params)?;
                let w = perturbed_window(kind, &params, opts)?;
                let f = build_factors(&w, &params)?;
                let err = (&a_fd - f.modulation_matrix()).norm() / a_fd.norm();
                c.record(err, || format!("K={k} M={m} {kind}"));
                let n = params.n();
                let eye = CMat::identity(n, n);
                c.record(max_abs(&(f.v_f.adjoint() * &f.v_f - &eye)), || format!("K={k} M={m} V_f unitarity"));
                c.record(max_abs(&(f.u_t.adjoint() * &f.u_t - &eye)), || format!("K={k} M={m} U_t unitarity"));
            }
        }
        Ok(())
    })
}

/// Geometries of the modem equivalence check.
pub const MODEM_GEOMETRIES: [(usize, usize); 4] = [(2, 2), (4, 3), (8, 4), (32, 16)];

fn check_modem(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> CheckResult {
    run_check("modem_equivalence", 1e-9, |c| {
        for (k, m) in MODEM_GEOMETRIES {
            let params = GfdmParams::new(k, m, 0)?;
            let modem = FdModem::new(params);
            for kind in pulse_kinds(k, m) {
                let pulse = make_pulse(kind, &params)?;
                let w = perturbed_window(kind, &params, opts)?;
                let d = random_grid(k, m, rng);
                let fast = modem.modulate(&d, &w)?;
                let a_fd = build_modulation_matrix_fd(&pulse, &params)?;
                let dense: Vec<C64> = (a_fd * DVector::from_column_slice(d.as_slice())).as_slice().to_vec();
                let reference = dft(&modulate_reference_td(&d, &pulse, &params)?);
                let scale = vec_max(&reference);
                c.record(rel(vec_diff(&fast, &dense), scale), || format!("K={k} M={m} {kind} fast vs dense"));
                c.record(rel(vec_diff(&fast, &reference), scale), || format!("K={k} M={m} {kind} fast vs reference"));
            }
        }
        Ok(())
    })
}

/// Orthogonal configurations: `(kind, K, M)`.
pub const ORTHOGONAL_CONFIGS: [(PulseKind, usize, usize); 4] = [
    (PulseKind::PeriodicRc { alpha: 0.0 }, 32, 16),
    (PulseKind::RectTd, 512, 1),
    (PulseKind::RectFd, 1, 512),
    (PulseKind::Chirp, 32, 16),
];

fn check_orthogonality() -> CheckResult {
    run_check("orthogonality", 1e-10, |c| {
        for (kind, k, m) in ORTHOGONAL_CONFIGS {
            let params = GfdmParams::new(k, m, 0)?;
            let a = build_modulation_matrix(&make_pulse(kind, &params)?, &params)?;
            let n = params.n();
            c.record(max_abs(&(a.adjoint() * &a - CMat::identity(n, n))), || format!("{kind} {k}x{m}"));
        }
        Ok(())
    })
}

/// Random small instances for the receiver identities.
struct Instance {
    params: GfdmParams,
    kind: PulseKind,
    chan: ChannelRealization,
    snr_db: f64,
    y: Vec<C64>,
}

fn instances(count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Instance>> {
    (0..count)
        .map(|i| {
            let k = rng.random_range(4..=8);
            let m = rng.random_range(3..=4);
            let params = GfdmParams::new(k, m, 2)?;
            let kind = PulseKind::PeriodicRc { alpha: [0.5, 0.9][i % 2] };
            let chan = random_channel(&params, 3, rng)?;
            let snr_db = [0.0, 10.0, 30.0][i % 3];
            let y = (0..params.n()).map(|_| complex_gaussian(rng, 1.0)).collect();
            Ok(Instance { params, kind, chan, snr_db, y })
        })
        .collect()
}

fn spec_at(chain: ReceiverChain, snr_db: f64) -> Result<ReceiverSpec> {
    ReceiverSpec::new(chain, 1.0, 10f64.powf(-snr_db / 10.0))
}

fn check_chain_equivalence(cases: &[Instance], opts: &VerifyOptions) -> CheckResult {
    run_check("chain_equivalence", 1e-8, |c| {
        for (i, inst) in cases.iter().enumerate() {
            let p = &inst.params;
            let a_fd = build_modulation_matrix_fd(&make_pulse(inst.kind, p)?, p)?;
            let w = perturbed_window(inst.kind, p, opts)?;
            let spec = spec_at(ReceiverChain::FULL_LMMSE_ZF, inst.snr_db)?;
            let joint = joint_lmmse_oracle(&inst.y, &inst.chan, &a_fd, &spec)?;
            let chain = PreparedReceiver::new(&inst.chan, &w, &spec, p)?.apply_fd(&inst.y)?;
            let dense = zf_then_dense_lmmse(&inst.y, &inst.chan, &a_fd, &spec)?;
            let at = || format!("instance {i}: K={} M={} SNR={} dB", p.k(), p.m(), inst.snr_db);
            c.record(max_abs(&(&joint - &chain)), at);
            c.record(max_abs(&(&joint - &dense)), at);
        }
        Ok(())
    })
}

fn check_lmmse_forms(cases: &[Instance]) -> CheckResult {
    run_check("lmmse_forms", 1e-9, |c| {
        for (i, inst) in cases.iter().enumerate() {
            let p = &inst.params;
            let a_fd = build_modulation_matrix_fd(&make_pulse(inst.kind, p)?, p)?;
            let spec = spec_at(ReceiverChain::FULL_LMMSE_ZF, inst.snr_db)?;
            let (cov, info) = joint_lmmse_filters(&inst.chan, &a_fd, &spec)?;
            c.record(rel(max_abs(&(&cov - &info)), max_abs(&cov)), || format!("instance {i}"));
        }
        Ok(())
    })
}

fn check_equal_sinr(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> CheckResult {
    run_check("equal_sinr", 1e-9, |c| {
        for (kind, k, m) in [
            (PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4),
            (PulseKind::PeriodicRc { alpha: 0.0 }, 8, 4),
            (PulseKind::RectFd, 1, 32),
            (PulseKind::Chirp, 4, 6),
        ] {
            let params = GfdmParams::new(k, m, 2)?;
            let a_fd = build_modulation_matrix_fd(&make_pulse(kind, &params)?, &params)?;
            let w = perturbed_window(kind, &params, opts)?;
            for ch in 0..3 {
                let chan = random_channel(&params, 3, rng)?;
                for chain in ReceiverChain::ALL {
                    let spec = spec_at(chain, 10.0)?;
                    let closed = link_sinr(&chan, &w, &spec, &params)?.sinr;
                    let dense = dense_symbol_sinr(&chan, &w, &a_fd, &spec, &params)?;
                    let at = || format!("{kind} {k}x{m} channel {ch} {chain}");
                    let mut spread: f64 = 0.0;
                    let mut mismatch: f64 = 0.0;
                    for kk in 0..k {
                        for mm in 0..m {
                            spread = spread.max(rel((dense[(kk, mm)] - dense[(kk, 0)]).abs(), dense[(kk, 0)]));
                            mismatch = mismatch.max(rel((closed[(kk, mm)] - dense[(kk, mm)]).abs(), dense[(kk, mm)]));
                        }
                    }
                    c.record(spread, at);
                    c.record(mismatch, at);
                }
            }
        }
        Ok(())
    })
}

fn check_zf_interference(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> CheckResult {
    run_check("zf_zero_interference", 1e-9, |c| {
        for (k, m) in [(4, 3), (8, 4)] {
            let params = GfdmParams::new(k, m, 2)?;
            let kind = PulseKind::PeriodicRc { alpha: 0.5 };
            let a_fd = build_modulation_matrix_fd(&make_pulse(kind, &params)?, &params)?;
            let w = perturbed_window(kind, &params, opts)?;
            let chan = random_channel(&params, 3, rng)?;
            let spec = spec_at(ReceiverChain::ZF_ZF, 10.0)?;
            let rx = PreparedReceiver::new(&chan, &w, &spec, &params)?;
            let r = crate::analysis::receiver_matrix(&rx)?;
            let mut ha = a_fd.clone();
            for (row, h) in chan.h_fd.iter().enumerate() {
                let mut line = ha.row_mut(row);
                line *= *h;
            }
            let n = params.n();
            c.record(max_abs(&(r * ha - CMat::identity(n, n))), || format!("K={k} M={m}"));
        }
        Ok(())
    })
}

fn check_diag_full(opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> CheckResult {
    run_check("diag_equals_full", 1e-10, |c| {
        for (kind, k, m) in [
            (PulseKind::PeriodicRc { alpha: 0.0 }, 8, 4),
            (PulseKind::Chirp, 8, 4),
            (PulseKind::RectTd, 32, 1),
            (PulseKind::RectFd, 1, 32),
        ] {
            let params = GfdmParams::new(k, m, 2)?;
            let w = perturbed_window(kind, &params, opts)?;
            let chan = random_channel(&params, 3, rng)?;
            let y: Vec<C64> = (0..params.n()).map(|_| complex_gaussian(rng, 1.0)).collect();
            for snr in [0.0, 10.0, 30.0] {
                let full = PreparedReceiver::new(&chan, &w, &spec_at(ReceiverChain::FULL_LMMSE_ZF, snr)?, &params)?;
                let diag = PreparedReceiver::new(&chan, &w, &spec_at(ReceiverChain::DIAG_LMMSE_ZF, snr)?, &params)?;
                let (a, b) = (full.apply_fd(&y)?, diag.apply_fd(&y)?);
                c.record(max_abs(&(a - b)), || format!("{kind} {k}x{m} SNR={snr} dB"));
            }
        }
        Ok(())
    })
}

/// Runs every check in a fixed order with a fixed seed.
pub fn verify(opts: &VerifyOptions) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6764_666d);
    let mut checks =
        vec![check_dft(&mut rng), check_decomposition(opts), check_modem(opts, &mut rng), check_orthogonality()];
    match instances(20, &mut rng) {
        Ok(cases) => {
            checks.push(check_chain_equivalence(&cases, opts));
            checks.push(check_lmmse_forms(&cases));
        }
        Err(e) => {
            checks.push(Check::new("chain_equivalence", 1e-8).error(e.clone()));
            checks.push(Check::new("lmmse_forms", 1e-9).error(e));
        }
    }
    checks.push(check_equal_sinr(opts, &mut rng));
    checks.push(check_zf_interference(opts, &mut rng));
    checks.push(check_diag_full(opts, &mut rng));
    let first_failure = checks.iter().find(|c| !c.passed).map(|c| c.name.clone());
    VerifyReport { passed: first_failure.is_none(), first_failure, checks }
}
