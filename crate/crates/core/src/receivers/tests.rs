use super::oracle::*;
use super::*;
use crate::channel::{complex_gaussian, ChannelRealization};
use crate::dsp::max_abs;
use crate::factors::build_factors;
use crate::modem::{build_modulation_matrix_fd, FdModem};
use crate::pulse::{make_pulse, PulseKind};
use crate::window::compute_tx_window;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Link {
    params: GfdmParams,
    w_tx: WindowMatrix,
    a_fd: CMat,
    modem: FdModem,
}

fn link(kind: PulseKind, k: usize, m: usize) -> Link {
    let params = GfdmParams::new(k, m, 4.min(k * m - 1)).unwrap();
    let pulse = make_pulse(kind, &params).unwrap();
    let w_tx = compute_tx_window(&pulse, &params).unwrap();
    let a_fd = build_modulation_matrix_fd(&pulse, &params).unwrap();
    Link { params, w_tx, a_fd, modem: FdModem::new(params) }
}

fn random_channel(params: &GfdmParams, taps: usize, rng: &mut ChaCha8Rng) -> ChannelRealization {
    let h = (0..taps).map(|_| complex_gaussian(rng, 1.0 / taps as f64)).collect();
    ChannelRealization::from_taps(h, params).unwrap()
}

fn random_grid(params: &GfdmParams, rng: &mut ChaCha8Rng) -> SymbolGrid {
    CMat::from_fn(params.k(), params.m(), |_, _| complex_gaussian(rng, 1.0))
}

/// Noisy received FD block `H A_fd d + v_fd`.
fn receive(link: &Link, chan: &ChannelRealization, d: &SymbolGrid, sigma2: f64, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let x = link.modem.modulate(d, &link.w_tx).unwrap();
    let n = link.params.n() as f64;
    x.iter().zip(&chan.h_fd).map(|(x, h)| h * x + complex_gaussian(rng, n * sigma2)).collect()
}

fn spec(chain: ReceiverChain, snr_db: f64) -> ReceiverSpec {
    ReceiverSpec::new(chain, 1.0, 10f64.powf(-snr_db / 10.0)).unwrap()
}

fn max_dev(a: &SymbolGrid, b: &SymbolGrid) -> f64 {
    max_abs(&(a - b))
}

#[test]
fn chain_names_roundtrip() {
    for chain in ReceiverChain::ALL {
        assert_eq!(chain.to_string().parse::<ReceiverChain>().unwrap(), chain);
    }
    assert_eq!("diag-lmmse-zf".parse::<ReceiverChain>().unwrap(), ReceiverChain::DIAG_LMMSE_ZF);
    assert!("full-lmmse-lmmse".parse::<ReceiverChain>().is_err());
    assert!("mmse-zf".parse::<ReceiverChain>().is_err());
    assert!(ReceiverSpec::new(ReceiverChain::ZF_ZF, 0.0, 0.1).is_err());
    assert!(ReceiverSpec::new(ReceiverChain::ZF_ZF, 1.0, -0.1).is_err());
}

#[test]
fn zf_equalizer_examples() {
    let params = GfdmParams::new(4, 2, 1).unwrap();
    let y: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
    let flat = ChannelRealization::flat(&params);
    assert_eq!(ceq_zf(&y, &flat).unwrap(), y);
    let two = ChannelRealization::from_taps(vec![C64::new(2.0, 0.0)], &params).unwrap();
    let out = ceq_zf(&y, &two).unwrap();
    for (a, b) in out.iter().zip(&y) {
        assert!((a - b * 0.5).norm() < 1e-15);
    }
}

#[test]
fn zf_rejects_spectral_null() {
    let params = GfdmParams::new(2, 2, 1).unwrap();
    // h = [1, 1] has a null at bin N/2.
    let chan = ChannelRealization::from_taps(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], &params).unwrap();
    assert_eq!(zf_bank(&chan).unwrap_err(), GfdmError::SingularChannel { bin: 2 });
    // LMMSE equalizers stay defined.
    let s = spec(ReceiverChain::DIAG_LMMSE_ZF, 10.0);
    let w = link(PulseKind::PeriodicRc { alpha: 0.6 }, 2, 2).w_tx;
    assert!(diag_lmmse_bank(&chan, &w, &s).is_ok());
    assert!(full_lmmse_bank(&chan, &w, &s).is_ok());
}

#[test]
fn zf_zf_recovers_data_noiselessly() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let l = link(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
    let chan = random_channel(&l.params, 3, &mut rng);
    let d = random_grid(&l.params, &mut rng);
    let y = receive(&l, &chan, &d, 0.0, &mut rng);
    let s = spec(ReceiverChain::ZF_ZF, 10.0);
    let rx = PreparedReceiver::new(&chan, &l.w_tx, &s, &l.params).unwrap();
    assert!(max_dev(&rx.apply_fd(&y).unwrap(), &d) < 1e-9);

    let y_td = crate::dsp::idft(&y);
    assert!(max_dev(&run_receiver(&y_td, &chan, &l.w_tx, &s, &l.params).unwrap(), &d) < 1e-9);
}

#[test]
fn flat_noiseless_any_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let l = link(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
    let flat = ChannelRealization::flat(&l.params);
    let d = random_grid(&l.params, &mut rng);
    let y = receive(&l, &flat, &d, 0.0, &mut rng);
    for chain in ReceiverChain::ALL {
        let s = ReceiverSpec::new(chain, 1.0, 0.0).unwrap();
        let out = PreparedReceiver::new(&flat, &l.w_tx, &s, &l.params).unwrap().apply_fd(&y).unwrap();
        assert!(max_dev(&out, &d) < 1e-9, "{chain}");
    }
}

#[test]
fn lmmse_equalizers_reduce_to_zf_without_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let l = link(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
    let chan = random_channel(&l.params, 3, &mut rng);
    let y: Vec<C64> = (0..32).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
    let zf = ceq_zf(&y, &chan).unwrap();
    let s0 = ReceiverSpec::new(ReceiverChain::FULL_LMMSE_ZF, 1.0, 0.0).unwrap();
    let full = ceq_full_lmmse(&y, &chan, &l.w_tx, &s0).unwrap();
    let diag = ceq_diag_lmmse(&y, &chan, &l.w_tx, &s0).unwrap();
    let scale = zf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for i in 0..32 {
        assert!((full[i] - zf[i]).norm() < 1e-9 * scale);
        assert!((diag[i] - zf[i]).norm() < 1e-9 * scale);
    }
    // Vanishing but nonzero noise approaches the same limit.
    let tiny = ReceiverSpec::new(ReceiverChain::FULL_LMMSE_ZF, 1.0, 1e-12).unwrap();
    let full = ceq_full_lmmse(&y, &chan, &l.w_tx, &tiny).unwrap();
    let diag = ceq_diag_lmmse(&y, &chan, &l.w_tx, &tiny).unwrap();
    for i in 0..32 {
        assert!((full[i] - zf[i]).norm() < 1e-6 * scale);
        assert!((diag[i] - zf[i]).norm() < 1e-6 * scale);
    }
    let w0 = demod_lmmse_window(&chan, &l.w_tx, &ReceiverSpec { sigma2: 1e-12, ..s0 }).unwrap();
    let wzf = crate::window::zf_rx_window(&l.w_tx).unwrap();
    assert!(max_abs(&(&w0.w - &wzf.w)) < 1e-6 * wzf.max_abs());
}

#[test]
fn diag_equals_full_for_equal_amplitude_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for kind in [PulseKind::PeriodicRc { alpha: 0.0 }, PulseKind::Chirp] {
        let l = link(kind, 8, 4);
        let chan = random_channel(&l.params, 3, &mut rng);
        let y: Vec<C64> = (0..32).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let s = spec(ReceiverChain::FULL_LMMSE_ZF, 10.0);
        let full = ceq_full_lmmse(&y, &chan, &l.w_tx, &s).unwrap();
        let diag = ceq_diag_lmmse(&y, &chan, &l.w_tx, &s).unwrap();
        for (a, b) in full.iter().zip(&diag) {
            assert!((a - b).norm() < 1e-10, "{kind}");
        }
    }
}

#[test]
fn unit_window_power_is_k() {
    let w = WindowMatrix::new(CMat::from_element(6, 3, C64::from_polar(1.0, 0.4)), WindowRole::Tx);
    for m in 0..3 {
        assert!((w.column_power(m) - 6.0).abs() < 1e-12);
    }
}

#[test]
fn flat_channel_noise_enhancement_is_k() {
    let params = GfdmParams::new(8, 4, 0).unwrap();
    let flat = ChannelRealization::flat(&params);
    for m in 0..4 {
        assert!((zf_noise_enhancement(&flat, m) - 8.0).abs() < 1e-12);
    }
}

#[test]
fn full_lmmse_chain_matches_joint_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let l = link(PulseKind::PeriodicRc { alpha: 0.5 }, 4, 3);
    let chan = random_channel(&l.params, 3, &mut rng);
    let s = spec(ReceiverChain::FULL_LMMSE_ZF, 10.0);
    let d = random_grid(&l.params, &mut rng);
    let y = receive(&l, &chan, &d, s.sigma2, &mut rng);
    let joint = joint_lmmse_oracle(&y, &chan, &l.a_fd, &s).unwrap();
    let chain = PreparedReceiver::new(&chan, &l.w_tx, &s, &l.params).unwrap().apply_fd(&y).unwrap();
    assert!(max_dev(&joint, &chain) < 1e-8);
    let path2 = zf_then_dense_lmmse(&y, &chan, &l.a_fd, &s).unwrap();
    assert!(max_dev(&joint, &path2) < 1e-8);
}

#[test]
fn orthogonal_diag_lmmse_chain_is_joint_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let l = link(PulseKind::PeriodicRc { alpha: 0.0 }, 8, 4);
    let chan = random_channel(&l.params, 3, &mut rng);
    let s = spec(ReceiverChain::DIAG_LMMSE_ZF, 10.0);
    let d = random_grid(&l.params, &mut rng);
    let y = receive(&l, &chan, &d, s.sigma2, &mut rng);
    let joint = joint_lmmse_oracle(&y, &chan, &l.a_fd, &s).unwrap();
    let chain = PreparedReceiver::new(&chan, &l.w_tx, &s, &l.params).unwrap().apply_fd(&y).unwrap();
    assert!(max_dev(&joint, &chain) < 1e-8);
}

#[test]
fn awgn_lmmse_window_is_joint_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let l = link(PulseKind::PeriodicRc { alpha: 0.0 }, 8, 4);
    let flat = ChannelRealization::flat(&l.params);
    let s = spec(ReceiverChain::ZF_LMMSE, 5.0);
    let d = random_grid(&l.params, &mut rng);
    let y = receive(&l, &flat, &d, s.sigma2, &mut rng);
    let joint = joint_lmmse_oracle(&y, &flat, &l.a_fd, &s).unwrap();
    let chain = PreparedReceiver::new(&flat, &l.w_tx, &s, &l.params).unwrap().apply_fd(&y).unwrap();
    assert!(max_dev(&joint, &chain) < 1e-8);
}

#[test]
fn lmmse_forms_agree_and_reduce_to_zf() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let l = link(PulseKind::PeriodicRc { alpha: 0.5 }, 4, 3);
    let chan = random_channel(&l.params, 2, &mut rng);
    let s = spec(ReceiverChain::FULL_LMMSE_ZF, 0.0);
    let (cov, info) = joint_lmmse_filters(&chan, &l.a_fd, &s).unwrap();
    assert!(max_abs(&(&cov - &info)) < 1e-9 * max_abs(&cov));

    let d = random_grid(&l.params, &mut rng);
    let y = receive(&l, &chan, &d, 0.0, &mut rng);
    let zf = joint_zf(&y, &chan, &l.a_fd).unwrap();
    assert!(max_dev(&zf, &d) < 1e-9);
    let exact = ReceiverSpec::new(ReceiverChain::FULL_LMMSE_ZF, 1.0, 0.0).unwrap();
    assert!(max_dev(&joint_lmmse_oracle(&y, &chan, &l.a_fd, &exact).unwrap(), &zf) < 1e-8);
    let tiny = ReceiverSpec::new(ReceiverChain::FULL_LMMSE_ZF, 1.0, 1e-14).unwrap();
    assert!(max_dev(&joint_lmmse_oracle(&y, &chan, &l.a_fd, &tiny).unwrap(), &zf) < 1e-8);
}

#[test]
fn gamma_rx_is_diagonal_on_flat_channel() {
    let l = link(PulseKind::PeriodicRc { alpha: 0.5 }, 4, 3);
    let flat = ChannelRealization::flat(&l.params);
    let factors = build_factors(&l.w_tx, &l.params).unwrap();
    let gamma = gamma_rx(&factors, &flat, &spec(ReceiverChain::ZF_LMMSE, 10.0)).unwrap();
    let mut off = 0.0f64;
    for r in 0..12 {
        for c in 0..12 {
            if r != c {
                off = off.max(gamma[(r, c)].norm());
            }
        }
    }
    assert!(off < 1e-10, "{off}");

    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let chan = random_channel(&l.params, 3, &mut rng);
    let gamma = gamma_rx(&factors, &chan, &spec(ReceiverChain::ZF_LMMSE, 10.0)).unwrap();
    assert!(gamma[(0, 1)].norm() + gamma[(1, 0)].norm() > 1e-6);
}

#[test]
fn gamma_rx_diagonal_is_the_lmmse_window_on_flat_channel() {
    let l = link(PulseKind::PeriodicRc { alpha: 0.5 }, 4, 3);
    let flat = ChannelRealization::flat(&l.params);
    let s = spec(ReceiverChain::ZF_LMMSE, 10.0);
    let factors = build_factors(&l.w_tx, &l.params).unwrap();
    let gamma = gamma_rx(&factors, &flat, &s).unwrap();
    let window = demod_lmmse_window(&flat, &l.w_tx, &s).unwrap();
    let lambda_rx = factors.lambda_rx(&window);
    for i in 0..12 {
        assert!((gamma[(i, i)] - lambda_rx[i]).norm() < 1e-10);
    }
}
