//! Estimator accumulation and error analysis.
//!
//! The energy estimator is `E = N_b (eps + jz/4) - <n> / beta`; error bars
//! come from a binning analysis with bin-size doubling. Records merge
//! associatively so independent chains can be combined in any order.

use std::collections::BTreeMap;

use super::{LoopOutcome, LoopStats, SseConfig};
use crate::error::{Error, Result};
use crate::model::ChainParams;

/// Per-chain sample series (kept per seed so merges stay associative and
/// binning can respect chain boundaries).
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct ChainSeries {
    /// Operator count n after each sampling sweep.
    pub n_per_sweep: Vec<f64>,
}

/// Mergeable accumulator of everything a chain measures.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct MeasurementRecord {
    pub n_sites: usize,
    pub n_bonds: usize,
    pub sweeps: u64,
    pub sum_n: f64,
    pub sum_n2: f64,
    /// Summed operator counts per (kind, bond): index `(kind-1) * n_bonds + bond`
    /// with kind 1 diagonal, 2 hop-left, 3 hop-right.
    pub op_counts: Vec<u64>,
    /// Winding-number samples (one per sweep under ring boundaries).
    pub winding_hist: BTreeMap<i64, u64>,
    /// Per-bond sum of Sz_b Sz_{b+1} at time zero.
    pub zz_sum: Vec<f64>,
    pub bounces: u64,
    pub exit_draws: u64,
    pub loops: u64,
    pub loops_aborted: u64,
    pub loops_sector_rejected: u64,
    pub legs_visited: u64,
    /// Loops that increased / decreased the winding number.
    pub dw_pos: u64,
    pub dw_neg: u64,
    pub chains: BTreeMap<u64, ChainSeries>,
    #[serde(skip)]
    pending: ChainSeries,
}

impl MeasurementRecord {
    pub fn new(n_sites: usize, n_bonds: usize) -> Self {
        MeasurementRecord {
            n_sites,
            n_bonds,
            op_counts: vec![0; 3 * n_bonds],
            zz_sum: vec![0.0; n_bonds],
            ..Default::default()
        }
    }

    pub(crate) fn record_loop(&mut self, stats: &LoopStats) {
        self.loops += 1;
        self.legs_visited += stats.length as u64;
        self.bounces += stats.bounces;
        self.exit_draws += stats.exit_draws;
        match stats.outcome {
            LoopOutcome::Aborted => self.loops_aborted += 1,
            LoopOutcome::SectorRejected => self.loops_sector_rejected += 1,
            LoopOutcome::Closed => {
                if stats.delta_w > 0 {
                    self.dw_pos += 1;
                } else if stats.delta_w < 0 {
                    self.dw_neg += 1;
                }
            }
        }
    }

    pub(crate) fn record_sweep(&mut self, cfg: &SseConfig) -> Result<()> {
        self.sweeps += 1;
        let n = cfg.n as f64;
        self.sum_n += n;
        self.sum_n2 += n * n;
        self.pending.n_per_sweep.push(n);

        for op in &cfg.ops {
            if !op.is_identity() {
                let kind = op.kind() as usize;
                self.op_counts[(kind - 1) * self.n_bonds + op.bond()] += 1;
            }
        }
        let w = cfg.measure_winding()?;
        *self.winding_hist.entry(w).or_insert(0) += 1;

        for b in 0..self.n_bonds {
            let i = b;
            let j = if b + 1 == self.n_sites { 0 } else { b + 1 };
            let sz = if cfg.alpha[i] == cfg.alpha[j] { 0.25 } else { -0.25 };
            self.zz_sum[b] += sz;
        }
        Ok(())
    }

    pub(crate) fn finish_chain(&mut self, cfg: &SseConfig) {
        let series = std::mem::take(&mut self.pending);
        self.chains.insert(cfg.seed, series);
    }

    /// Associative, commutative merge of records from distinct chains.
    pub fn merge(&mut self, other: &MeasurementRecord) -> Result<()> {
        if self.sweeps == 0 && self.chains.is_empty() {
            *self = other.clone();
            return Ok(());
        }
        if other.sweeps == 0 && other.chains.is_empty() {
            return Ok(());
        }
        if self.n_sites != other.n_sites || self.n_bonds != other.n_bonds {
            return Err(Error::InvalidParams(
                "cannot merge records of different lattices".into(),
            ));
        }
        self.sweeps += other.sweeps;
        self.sum_n += other.sum_n;
        self.sum_n2 += other.sum_n2;
        for (a, b) in self.op_counts.iter_mut().zip(other.op_counts.iter()) {
            *a += b;
        }
        for (&w, &c) in &other.winding_hist {
            *self.winding_hist.entry(w).or_insert(0) += c;
        }
        for (a, b) in self.zz_sum.iter_mut().zip(other.zz_sum.iter()) {
            *a += b;
        }
        self.bounces += other.bounces;
        self.exit_draws += other.exit_draws;
        self.loops += other.loops;
        self.loops_aborted += other.loops_aborted;
        self.loops_sector_rejected += other.loops_sector_rejected;
        self.legs_visited += other.legs_visited;
        self.dw_pos += other.dw_pos;
        self.dw_neg += other.dw_neg;
        for (seed, series) in &other.chains {
            if self.chains.insert(*seed, series.clone()).is_some() {
                return Err(Error::InvalidParams(format!(
                    "merge would duplicate chain seed {seed}"
                )));
            }
        }
        Ok(())
    }

    /// Mean operator count per sweep.
    pub fn mean_n(&self) -> f64 {
        self.sum_n / self.sweeps.max(1) as f64
    }

    /// Mean count of operator `kind` (1..=3) on 0-based `bond`.
    pub fn mean_op_count(&self, kind: usize, bond: usize) -> f64 {
        self.op_counts[(kind - 1) * self.n_bonds + bond] as f64 / self.sweeps.max(1) as f64
    }

    /// Mean `<Sz_b Sz_{b+1}>` on 0-based `bond`.
    pub fn mean_zz(&self, bond: usize) -> f64 {
        self.zz_sum[bond] / self.sweeps.max(1) as f64
    }
}

/// Binning analysis of a set of per-chain series: bin sizes double until
/// the error plateaus (the largest binned error with at least `min_bins`
/// bins is reported). Fewer than 10 bins at the base size is an error
/// demanding longer runs.
pub fn binned_stderr(chains: &[&[f64]], min_bins: usize) -> Result<(f64, usize)> {
    let total: usize = chains.iter().map(|c| c.len()).sum();
    if total < 10 {
        return Err(Error::InsufficientStatistics(format!(
            "binning needs at least 10 samples, got {total}"
        )));
    }
    let mut best = (0.0f64, total);
    let mut bin = 1usize;
    loop {
        let mut means = Vec::new();
        for chain in chains {
            for block in chain.chunks_exact(bin) {
                means.push(block.iter().sum::<f64>() / bin as f64);
            }
        }
        if means.len() < min_bins.max(10) {
            break;
        }
        let m = means.len() as f64;
        let mean = means.iter().sum::<f64>() / m;
        let var = means.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
        let err = (var / m).sqrt();
        if err > best.0 {
            best = (err, means.len());
        }
        bin *= 2;
    }
    if best.1 == total && best.0 == 0.0 {
        return Err(Error::InsufficientStatistics(
            "binning produced no valid bin level".into(),
        ));
    }
    Ok(best)
}

/// Energy estimate `E = N_b (eps + jz/4) - <n> / beta` with a binned
/// standard error. At least 10 bins are required.
pub fn measure_energy(rec: &MeasurementRecord, params: &ChainParams) -> Result<(f64, f64)> {
    if rec.sweeps == 0 {
        return Err(Error::InsufficientStatistics("empty record".into()));
    }
    let series: Vec<&[f64]> = rec
        .chains
        .values()
        .map(|c| c.n_per_sweep.as_slice())
        .collect();
    if series.is_empty() {
        return Err(Error::InsufficientStatistics(
            "record holds no per-chain series".into(),
        ));
    }
    let (err_n, _bins) = binned_stderr(&series, 32)?;
    let nb = params.n_bonds() as f64;
    let energy = nb * params.bond_constant() - rec.mean_n() / params.beta;
    Ok((energy, err_n / params.beta))
}
