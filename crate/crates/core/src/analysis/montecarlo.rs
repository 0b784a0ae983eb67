//! Monte-Carlo estimators running the full chain: QAM mapping, modulation,
//! cyclic prefix and multipath channel with AWGN, equalization,
//! demodulation and hard decisions.
//!
//! Blocks are processed in fixed-size chunks; each block draws from its own
//! stream and chunk results are combined in index order, so outputs are
//! bit-identical for any thread count.

use nalgebra::DMatrix;

use super::sinr::effective_matrices;
use crate::channel::{apply_channel_cp, ChannelRealization};
use crate::error::Result;
use crate::modem::FdModem;
use crate::params::GfdmParams;
use crate::qam::Qam;
use crate::receivers::{PreparedReceiver, ReceiverSpec};
use crate::stream::{par_map, stream_rng};
use crate::window::WindowMatrix;
use crate::{SymbolGrid, C64};

const CHUNK: usize = 64;

/// One link under test: geometry, transmit window, channel and receiver.
#[derive(Debug, Clone, Copy)]
pub struct Link<'a> {
    pub params: &'a GfdmParams,
    pub w_tx: &'a WindowMatrix,
    pub chan: &'a ChannelRealization,
    pub spec: &'a ReceiverSpec,
}

struct Prepared {
    modem: FdModem,
    rx: PreparedReceiver,
    gain: Vec<C64>,
}

impl Link<'_> {
    fn prepare(&self) -> Result<Prepared> {
        let rx = PreparedReceiver::new(self.chan, self.w_tx, self.spec, self.params)?;
        let gain = effective_matrices(self.chan, self.w_tx, self.spec, self.params)?.gain();
        Ok(Prepared { modem: FdModem::new(*self.params), rx, gain })
    }

    /// Transmits one random block from stream `(seed, stream, block)`;
    /// returns symbol indices, transmitted symbols and the receiver output.
    fn run_block(
        &self,
        prep: &Prepared,
        qam: &Qam,
        seed: u64,
        stream: u64,
        block: usize,
    ) -> Result<(Vec<usize>, SymbolGrid, SymbolGrid)> {
        let mut rng = stream_rng(seed, stream, block as u64);
        let (k, m) = (self.params.k(), self.params.m());
        let idx: Vec<usize> = (0..k * m).map(|_| qam.random_index(&mut rng)).collect();
        let d = SymbolGrid::from_iterator(k, m, idx.iter().map(|&i| qam.point(i)));
        let x = prep.modem.modulate_td(&d, self.w_tx)?;
        let y = apply_channel_cp(&x, &self.chan.h, self.params.cp_len(), self.spec.sigma2, &mut rng)?;
        let d_hat = prep.rx.apply_td(&y)?;
        Ok((idx, d, d_hat))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerEstimate {
    pub errors: u64,
    pub n_symbols: u64,
    /// Symbol errors per `(k, m)` cell.
    pub per_cell: DMatrix<u64>,
    pub blocks: usize,
}

impl SerEstimate {
    pub fn ser(&self) -> f64 {
        if self.n_symbols == 0 {
            0.0
        } else {
            self.errors as f64 / self.n_symbols as f64
        }
    }

    /// Per-cell error fraction.
    pub fn per_cell_ser(&self) -> DMatrix<f64> {
        self.per_cell.map(|e| e as f64 / self.blocks.max(1) as f64)
    }
}

/// Symbol error rate over `n_blocks` blocks. Receiver outputs are divided
/// by the overall gain `A_k` before minimum-distance slicing, which removes
/// the bias of LMMSE stages.
///
/// `stream` separates independent estimates sharing one master `seed`
/// (typically the channel index).
pub fn empirical_ser(link: &Link<'_>, qam: &Qam, n_blocks: usize, seed: u64, stream: u64) -> Result<SerEstimate> {
    let prep = link.prepare()?;
    let (k, m) = (link.params.k(), link.params.m());
    let chunks = n_blocks.div_ceil(CHUNK);
    let partial = par_map(chunks, |c| -> Result<DMatrix<u64>> {
        let mut counts = DMatrix::<u64>::zeros(k, m);
        for b in c * CHUNK..((c + 1) * CHUNK).min(n_blocks) {
            let (idx, _, d_hat) = link.run_block(&prep, qam, seed, stream, b)?;
            for (cell, (&sent, z)) in idx.iter().zip(d_hat.iter()).enumerate() {
                let g = prep.gain[cell % k];
                let z = if g.norm() > 0.0 { z / g } else { *z };
                if qam.decide(z) != sent {
                    counts[cell] += 1;
                }
            }
        }
        Ok(counts)
    });
    let mut per_cell = DMatrix::<u64>::zeros(k, m);
    for p in partial {
        per_cell += p?;
    }
    Ok(SerEstimate { errors: per_cell.iter().sum(), n_symbols: (n_blocks * k * m) as u64, per_cell, blocks: n_blocks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrEstimate {
    /// Per-cell SINR, linear.
    pub per_cell: DMatrix<f64>,
    /// SINR per subcarrier with all subsymbols pooled, linear.
    pub per_subcarrier: Vec<f64>,
    /// Least-squares gain estimate per cell.
    pub gain: DMatrix<C64>,
}

#[derive(Clone)]
struct Moments {
    cross: DMatrix<C64>,
    sent: DMatrix<f64>,
    recv: DMatrix<f64>,
}

impl Moments {
    fn zeros(k: usize, m: usize) -> Self {
        Self { cross: DMatrix::zeros(k, m), sent: DMatrix::zeros(k, m), recv: DMatrix::zeros(k, m) }
    }
}

/// Residual-power ratio `|g|^2 Es / E|d_hat - g d|^2` with `g` the
/// least-squares fit of the receiver output against the sent symbol.
fn ratio(cross: C64, sent: f64, recv: f64, count: f64, es: f64) -> (C64, f64) {
    let g = cross / sent;
    let residual = ((recv - cross.norm_sqr() / sent) / count).max(0.0);
    let sinr = if residual > 0.0 { g.norm_sqr() * es / residual } else { f64::INFINITY };
    (g, sinr)
}

/// Per-symbol SINR estimated from `n_blocks` random QAM blocks.
pub fn empirical_sinr(link: &Link<'_>, qam: &Qam, n_blocks: usize, seed: u64, stream: u64) -> Result<SinrEstimate> {
    let prep = link.prepare()?;
    let (k, m) = (link.params.k(), link.params.m());
    let chunks = n_blocks.div_ceil(CHUNK);
    let partial = par_map(chunks, |c| -> Result<Moments> {
        let mut acc = Moments::zeros(k, m);
        for b in c * CHUNK..((c + 1) * CHUNK).min(n_blocks) {
            let (_, d, d_hat) = link.run_block(&prep, qam, seed, stream, b)?;
            for cell in 0..k * m {
                acc.cross[cell] += d_hat[cell] * d[cell].conj();
                acc.sent[cell] += d[cell].norm_sqr();
                acc.recv[cell] += d_hat[cell].norm_sqr();
            }
        }
        Ok(acc)
    });
    let mut total = Moments::zeros(k, m);
    for p in partial {
        let p = p?;
        total.cross += p.cross;
        total.sent += p.sent;
        total.recv += p.recv;
    }
    let es = qam.es();
    let count = n_blocks as f64;
    let mut per_cell = DMatrix::zeros(k, m);
    let mut gain = DMatrix::zeros(k, m);
    for cell in 0..k * m {
        let (g, s) = ratio(total.cross[cell], total.sent[cell], total.recv[cell], count, es);
        per_cell[cell] = s;
        gain[cell] = g;
    }
    let per_subcarrier = (0..k)
        .map(|r| {
            let cross: C64 = total.cross.row(r).iter().sum();
            let sent: f64 = total.sent.row(r).iter().sum();
            let recv: f64 = total.recv.row(r).iter().sum();
            ratio(cross, sent, recv, count * m as f64, es).1
        })
        .collect();
    Ok(SinrEstimate { per_cell, per_subcarrier, gain })
}
