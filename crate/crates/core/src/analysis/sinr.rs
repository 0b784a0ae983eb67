//! Per-subsymbol effective matrices and the closed-form per-symbol SINR.
//!
//! In the frequency domain the chain decouples into `M` parallel `K x K`
//! systems. For column `m`, `C_m = B_m^H E_m H_m A_m` maps transmit
//! coefficients to demodulator outputs and `Etil_m = B_m^H E_m` maps noise,
//! where `A_m = (1/K) F_K diag(W_tx[:, m]) F_K^H` and `B_m^H` is the same
//! circulant built from `W_rx`.

use nalgebra::DMatrix;

use crate::channel::ChannelRealization;
use crate::dsp::{map_columns, DftPlan};
use crate::error::Result;
use crate::params::GfdmParams;
use crate::receivers::{equalizer_bank, receiver_window, Equalizer, ReceiverChain, ReceiverSpec};
use crate::window::WindowMatrix;
use crate::{CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveMatrices {
    /// `C_m`, one per subsymbol column.
    pub c: Vec<CMat>,
    /// `Etil_m`, one per subsymbol column.
    pub e: Vec<CMat>,
}

impl EffectiveMatrices {
    pub fn k(&self) -> usize {
        self.c.first().map_or(0, |c| c.nrows())
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    /// Overall gain `A_k = (1/M) sum_m C_m[k, k]`.
    pub fn gain(&self) -> Vec<C64> {
        let m = self.m() as f64;
        (0..self.k()).map(|k| self.c.iter().map(|c| c[(k, k)]).sum::<C64>() / m).collect()
    }
}

/// Multiplies every column of `mat` by the circulant
/// `(1/K) F_K diag(w) F_K^H`.
fn apply_circulant(mat: &mut CMat, w: &[C64], plan: &DftPlan) {
    map_columns(mat, |col| {
        plan.inverse(col);
        col.iter_mut().zip(w).for_each(|(v, w)| *v *= w);
        plan.forward(col);
    });
}

pub fn effective_matrices(
    chan: &ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
    params: &GfdmParams,
) -> Result<EffectiveMatrices> {
    params.check_grid("window", w_tx.k(), w_tx.m())?;
    params.check_grid("channel", chan.per_m_diag.nrows(), chan.per_m_diag.ncols())?;
    let bank = equalizer_bank(chan, w_tx, spec)?;
    let w_rx = receiver_window(chan, w_tx, spec)?;
    let k = params.k();
    let plan = DftPlan::new(k);
    let zf_zf = spec.chain == ReceiverChain::ZF_ZF;
    let mut c = Vec::with_capacity(params.m());
    let mut e = Vec::with_capacity(params.m());
    for (m, eq) in bank.per_m.iter().enumerate() {
        let wt: Vec<C64> = w_tx.w.column(m).iter().copied().collect();
        let wr: Vec<C64> = w_rx.w.column(m).iter().copied().collect();
        let h = chan.per_m_diag.column(m);

        let mut noise_map = eq.to_dense();
        apply_circulant(&mut noise_map, &wr, &plan);
        e.push(noise_map);

        if zf_zf {
            // B^H H^{-1} H A cancels exactly.
            c.push(CMat::identity(k, k));
            continue;
        }
        let mut a = CMat::identity(k, k);
        apply_circulant(&mut a, &wt, &plan);
        let mut cm = match eq {
            Equalizer::Diagonal(d) => {
                for (r, mut row) in a.row_iter_mut().enumerate() {
                    row *= d[r] * h[r];
                }
                a
            }
            Equalizer::Dense(mat) => {
                for (r, mut row) in a.row_iter_mut().enumerate() {
                    row *= h[r];
                }
                mat * a
            }
        };
        apply_circulant(&mut cm, &wr, &plan);
        c.push(cm);
    }
    Ok(EffectiveMatrices { c, e })
}

/// Per-symbol power terms and SINR, all linear and `K x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrGrid {
    pub signal: DMatrix<f64>,
    pub isi: DMatrix<f64>,
    pub ici: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub sinr: DMatrix<f64>,
    /// Overall gain `A_k`, shared by all subsymbols of subcarrier `k`.
    pub gain: Vec<C64>,
}

impl SinrGrid {
    pub fn k(&self) -> usize {
        self.sinr.nrows()
    }

    pub fn m(&self) -> usize {
        self.sinr.ncols()
    }

    pub fn sinr_db(&self) -> DMatrix<f64> {
        self.sinr.map(|s| 10.0 * s.log10())
    }

    /// Mean of the analytic SER over all symbols of the block.
    pub fn mean_analytic_ser(&self, mc: usize) -> f64 {
        let n = self.sinr.len() as f64;
        self.sinr.iter().map(|&s| super::analytic_ser_qam(s, mc)).sum::<f64>() / n
    }

    /// Mean SINR over all symbols, linear.
    pub fn mean_sinr(&self) -> f64 {
        self.sinr.iter().sum::<f64>() / self.sinr.len() as f64
    }
}

/// Signal, ISI, ICI and noise power of every symbol:
///
/// * `P = Es |A_k|^2`
/// * `I_isi = (Es/M) sum_m |C_m[k,k]|^2 - P`
/// * `I_ici = (Es/M) sum_m sum_{q != k} |C_m[k,q]|^2`
/// * `noise = (N sigma2 / M^2) sum_m sum_q |Etil_m[k,q]|^2`
///
/// None of these depend on the subsymbol index, so every subsymbol of a
/// subcarrier sees the same SINR.
pub fn closed_form_sinr(eff: &EffectiveMatrices, es: f64, sigma2: f64, params: &GfdmParams) -> SinrGrid {
    let (k_len, m_len) = (params.k(), params.m());
    let mf = m_len as f64;
    let sigma2_fd = params.n() as f64 * sigma2;
    let gain = eff.gain();
    let mut signal = vec![0.0; k_len];
    let mut isi = vec![0.0; k_len];
    let mut ici = vec![0.0; k_len];
    let mut noise = vec![0.0; k_len];
    for k in 0..k_len {
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut enh = 0.0;
        for (c, e) in eff.c.iter().zip(&eff.e) {
            for q in 0..k_len {
                let p = c[(k, q)].norm_sqr();
                if q == k {
                    diag += p;
                } else {
                    off += p;
                }
                enh += e[(k, q)].norm_sqr();
            }
        }
        signal[k] = es * gain[k].norm_sqr();
        isi[k] = (es * diag / mf - signal[k]).max(0.0);
        ici[k] = es * off / mf;
        noise[k] = sigma2_fd * enh / (mf * mf);
    }
    let grid = |v: &[f64]| DMatrix::from_fn(k_len, m_len, |k, _| v[k]);
    let sinr: Vec<f64> = (0..k_len)
        .map(|k| {
            let den = isi[k] + ici[k] + noise[k];
            if den > 0.0 {
                signal[k] / den
            } else {
                f64::INFINITY
            }
        })
        .collect();
    SinrGrid { signal: grid(&signal), isi: grid(&isi), ici: grid(&ici), noise: grid(&noise), sinr: grid(&sinr), gain }
}

/// Effective matrices followed by [`closed_form_sinr`].
pub fn link_sinr(
    chan: &ChannelRealization,
    w_tx: &WindowMatrix,
    spec: &ReceiverSpec,
    params: &GfdmParams,
) -> Result<SinrGrid> {
    let eff = effective_matrices(chan, w_tx, spec, params)?;
    Ok(closed_form_sinr(&eff, spec.es, spec.sigma2, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::dsp::max_abs;
    use crate::pulse::{make_pulse, PulseKind};
    use crate::window::compute_tx_window;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(kind: PulseKind, k: usize, m: usize) -> (GfdmParams, WindowMatrix) {
        let params = GfdmParams::new(k, m, 4).unwrap();
        let w = compute_tx_window(&make_pulse(kind, &params).unwrap(), &params).unwrap();
        (params, w)
    }

    fn random_channel(params: &GfdmParams, seed: u64) -> ChannelRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = (0..3).map(|_| complex_gaussian(&mut rng, 1.0 / 3.0)).collect();
        ChannelRealization::from_taps(h, params).unwrap()
    }

    fn dense_circulant(w: &[C64]) -> CMat {
        let k = w.len();
        let f =
            CMat::from_fn(k, k, |a, b| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (a * b) as f64 / k as f64));
        &f * CMat::from_diagonal(&nalgebra::DVector::from_column_slice(w)) * f.adjoint() / C64::new(k as f64, 0.0)
    }

    #[test]
    fn matches_dense_products() {
        let (params, w) = setup(PulseKind::PeriodicRc { alpha: 0.5 }, 4, 3);
        let chan = random_channel(&params, 1);
        for chain in ReceiverChain::ALL {
            let spec = ReceiverSpec::new(chain, 1.0, 0.05).unwrap();
            let eff = effective_matrices(&chan, &w, &spec, &params).unwrap();
            let bank = equalizer_bank(&chan, &w, &spec).unwrap();
            let w_rx = receiver_window(&chan, &w, &spec).unwrap();
            for m in 0..3 {
                let col = |x: &CMat| x.column(m).iter().copied().collect::<Vec<_>>();
                let a = dense_circulant(&col(&w.w));
                let bh = dense_circulant(&col(&w_rx.w));
                let h = CMat::from_diagonal(&chan.per_m_diag.column(m).into_owned());
                let eq = bank.per_m[m].to_dense();
                let c = &bh * &eq * h * a;
                assert!(max_abs(&(&c - &eff.c[m])) < 1e-12, "{chain}");
                assert!(max_abs(&(bh * eq - &eff.e[m])) < 1e-12, "{chain}");
            }
        }
    }

    #[test]
    fn zf_zf_has_no_interference() {
        let (params, w) = setup(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
        let chan = random_channel(&params, 2);
        let spec = ReceiverSpec::new(ReceiverChain::ZF_ZF, 1.0, 0.1).unwrap();
        let grid = link_sinr(&chan, &w, &spec, &params).unwrap();
        assert!(grid.isi.iter().all(|&v| v == 0.0));
        assert!(grid.ici.iter().all(|&v| v == 0.0));
        assert!(grid.gain.iter().all(|&g| g == C64::new(1.0, 0.0)));

        let noiseless = ReceiverSpec::new(ReceiverChain::ZF_ZF, 1.0, 0.0).unwrap();
        let grid = link_sinr(&chan, &w, &noiseless, &params).unwrap();
        assert!(grid.sinr.iter().all(|s| s.is_infinite()));
        assert_eq!(grid.mean_analytic_ser(16), 0.0);
    }

    #[test]
    fn zf_zf_cancellation_is_numerically_exact() {
        // The generic path, evaluated by hand, agrees with the identity.
        let (params, w) = setup(PulseKind::PeriodicRc { alpha: 0.3 }, 8, 4);
        let chan = random_channel(&params, 3);
        let spec = ReceiverSpec::new(ReceiverChain::ZF_ZF, 1.0, 0.1).unwrap();
        let bank = equalizer_bank(&chan, &w, &spec).unwrap();
        let w_rx = receiver_window(&chan, &w, &spec).unwrap();
        let plan = DftPlan::new(8);
        for m in 0..4 {
            let mut a = CMat::identity(8, 8);
            apply_circulant(&mut a, &w.w.column(m).iter().copied().collect::<Vec<_>>(), &plan);
            let c = bank.per_m[m].to_dense() * CMat::from_diagonal(&chan.per_m_diag.column(m).into_owned()) * a;
            let mut c = c;
            apply_circulant(&mut c, &w_rx.w.column(m).iter().copied().collect::<Vec<_>>(), &plan);
            assert!(max_abs(&(c - CMat::identity(8, 8))) < 1e-9);
        }
    }

    #[test]
    fn flat_channel_zf_zf_noise_map_is_inverse_modulator() {
        let (params, w) = setup(PulseKind::PeriodicRc { alpha: 0.5 }, 4, 3);
        let flat = ChannelRealization::flat(&params);
        let spec = ReceiverSpec::new(ReceiverChain::ZF_ZF, 1.0, 0.1).unwrap();
        let eff = effective_matrices(&flat, &w, &spec, &params).unwrap();
        for m in 0..3 {
            let a = dense_circulant(&w.w.column(m).iter().copied().collect::<Vec<_>>());
            let a_inv = a.try_inverse().unwrap();
            assert!(max_abs(&(a_inv - &eff.e[m])) < 1e-10);
        }
    }

    #[test]
    fn orthonormal_flat_sinr_is_snr() {
        for (kind, k, m) in [
            (PulseKind::PeriodicRc { alpha: 0.0 }, 8, 4),
            (PulseKind::RectTd, 16, 1),
            (PulseKind::RectFd, 1, 16),
            (PulseKind::Chirp, 8, 4),
        ] {
            let (params, w) = setup(kind, k, m);
            let flat = ChannelRealization::flat(&params);
            for chain in ReceiverChain::ALL {
                let spec = ReceiverSpec::new(chain, 1.0, 0.1).unwrap();
                let grid = link_sinr(&flat, &w, &spec, &params).unwrap();
                // LMMSE stages scale the symbol but keep the SINR of a
                // unitary link at Es / sigma2 = 10.
                for &s in grid.sinr.iter() {
                    assert!((s - 10.0).abs() < 1e-9, "{kind} {chain}: {s}");
                }
            }
        }
    }

    #[test]
    fn diag_lmmse_approaches_zf_at_vanishing_noise() {
        let (params, w) = setup(PulseKind::PeriodicRc { alpha: 0.5 }, 8, 4);
        let chan = random_channel(&params, 4);
        let spec = ReceiverSpec::new(ReceiverChain::DIAG_LMMSE_ZF, 1.0, 1e-12).unwrap();
        let eff = effective_matrices(&chan, &w, &spec, &params).unwrap();
        for c in &eff.c {
            assert!(max_abs(&(c - CMat::identity(8, 8))) < 1e-6);
        }
    }

    #[test]
    fn sinr_is_consistent_and_equal_across_subsymbols() {
        let (params, w) = setup(PulseKind::PeriodicRc { alpha: 0.7 }, 8, 4);
        for seed in 0..5 {
            let chan = random_channel(&params, 10 + seed);
            for chain in ReceiverChain::ALL {
                let spec = ReceiverSpec::new(chain, 1.0, 0.03).unwrap();
                let g = link_sinr(&chan, &w, &spec, &params).unwrap();
                for k in 0..8 {
                    for m in 0..4 {
                        let den = g.isi[(k, m)] + g.ici[(k, m)] + g.noise[(k, m)];
                        assert!((g.sinr[(k, m)] - g.signal[(k, m)] / den).abs() <= 1e-12 * g.sinr[(k, m)]);
                        assert!(g.isi[(k, m)] >= 0.0 && g.ici[(k, m)] >= 0.0 && g.noise[(k, m)] >= 0.0);
                        assert_eq!(g.sinr[(k, m)], g.sinr[(k, 0)]);
                    }
                }
            }
        }
    }

    #[test]
    fn full_lmmse_beats_zf_zf() {
        let (params, w) = setup(PulseKind::PeriodicRc { alpha: 0.8 }, 8, 4);
        for seed in 0..5 {
            let chan = random_channel(&params, 20 + seed);
            for sigma2 in [0.3, 0.03, 0.003] {
                let full = link_sinr(
                    &chan,
                    &w,
                    &ReceiverSpec::new(ReceiverChain::FULL_LMMSE_ZF, 1.0, sigma2).unwrap(),
                    &params,
                )
                .unwrap();
                let zf = link_sinr(&chan, &w, &ReceiverSpec::new(ReceiverChain::ZF_ZF, 1.0, sigma2).unwrap(), &params)
                    .unwrap();
                for (a, b) in full.sinr.iter().zip(zf.sinr.iter()) {
                    assert!(*a >= b * (1.0 - 1e-9), "{a} < {b}");
                }
            }
        }
    }
}
