//! Fixed-length stochastic series expansion sampling.
//!
//! A configuration is a basis state `alpha` at imaginary time zero plus an
//! operator sequence of fixed length M holding n non-identity bond
//! operators; its sampling weight is
//! `beta^n (M-n)!/M! * prod_p <alpha_p| H_{a_p,b_p} |alpha_{p-1}>`
//! with periodic propagation `|alpha_M> = |alpha_0>`. Diagonal updates
//! exchange identities and diagonal operators slice by slice; directed
//! loops rewire the off-diagonal content at fixed n.

mod checkpoint;
mod loops;
mod measure;

pub use loops::{LoopOutcome, LoopStats};
pub use measure::{binned_stderr, measure_energy, ChainSeries, MeasurementRecord};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{pattern, Boundary, ChainParams, VertexTable};

/// Operator slot: 2 kind bits (0 identity, 1 diagonal, 2 hop-left,
/// 3 hop-right) plus a 0-based bond index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Op(u32);

pub(crate) const KIND_IDENTITY: u32 = 0;
pub(crate) const KIND_DIAGONAL: u32 = 1;
/// `S+_b S-_{b+1}`: an up spin on site b+1 hops left onto b.
pub(crate) const KIND_HOP_LEFT: u32 = 2;
/// `S-_b S+_{b+1}`: an up spin on site b hops right onto b+1.
pub(crate) const KIND_HOP_RIGHT: u32 = 3;

impl Op {
    pub(crate) const IDENTITY: Op = Op(0);

    #[inline]
    pub(crate) fn new(kind: u32, bond: usize) -> Op {
        Op(kind | ((bond as u32) << 2))
    }

    #[inline]
    pub(crate) fn kind(self) -> u32 {
        self.0 & 3
    }

    #[inline]
    pub(crate) fn bond(self) -> usize {
        (self.0 >> 2) as usize
    }

    #[inline]
    pub(crate) fn is_identity(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub(crate) fn raw(self) -> u32 {
        self.0
    }

    pub(crate) fn from_raw(raw: u32) -> Op {
        Op(raw)
    }
}

/// Scheduling knobs for a single Markov chain.
#[derive(Debug, Clone)]
pub struct RunSchedule {
    pub therm_sweeps: usize,
    pub sample_sweeps: usize,
    /// Directed loops per sweep; `None` adapts during thermalization so a
    /// sweep visits about `2 M` legs.
    pub loops_per_sweep: Option<usize>,
    /// Initial sequence length before truncation growth.
    pub m_initial: usize,
    /// Total-Sz sector; loops that would leave it are rejected.
    pub sector: i64,
    /// Start from a configuration pre-wound to this winding number
    /// (ring boundaries only); used for ergodicity experiments.
    pub start_winding: i64,
    /// Abort a loop after `loop_cap_factor * M` visited legs.
    pub loop_cap_factor: usize,
}

impl Default for RunSchedule {
    fn default() -> Self {
        RunSchedule {
            therm_sweeps: 2_000,
            sample_sweeps: 10_000,
            loops_per_sweep: None,
            m_initial: 32,
            sector: 0,
            start_winding: 0,
            loop_cap_factor: 100,
        }
    }
}

/// The Monte Carlo state: spins at time zero, the operator sequence, and
/// the deterministic generator. One chain owns and mutates exactly one of
/// these; parallelism runs independent chains and merges their records.
#[derive(Debug, Clone)]
pub struct SseConfig {
    pub(crate) n_sites: usize,
    pub(crate) n_bonds: usize,
    pub(crate) boundary: Boundary,
    pub(crate) alpha: Vec<bool>,
    pub(crate) ops: Vec<Op>,
    pub(crate) n: usize,
    /// Running totals of hop-left / hop-right operators.
    pub(crate) n_left: i64,
    pub(crate) n_right: i64,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) seed: u64,
    pub(crate) workspace: loops::Workspace,
}

impl SseConfig {
    /// Fresh configuration: `alpha` drawn in the requested total-Sz sector
    /// (half filling by default), all-identity operator sequence.
    pub fn init(params: &ChainParams, m_initial: usize, seed: u64) -> Result<Self> {
        Self::init_in_sector(params, m_initial, seed, 0, 0)
    }

    pub fn init_in_sector(
        params: &ChainParams,
        m_initial: usize,
        seed: u64,
        sector: i64,
        start_winding: i64,
    ) -> Result<Self> {
        params.validate()?;
        if m_initial < 1 {
            return Err(Error::InvalidParams(format!(
                "m_initial must be >= 1, got {m_initial}"
            )));
        }
        if !params.sign_free() {
            return Err(Error::SignProblem("SSE init requires sign-free parameters".into()));
        }
        let n_sites = params.n_sites;
        let half = n_sites as i64 / 2;
        let n_up = half + sector;
        if n_up < 0 || n_up > n_sites as i64 {
            return Err(Error::InvalidParams(format!(
                "sector Sz = {sector} is empty for N = {n_sites}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut cfg = SseConfig {
            n_sites,
            n_bonds: params.n_bonds(),
            boundary: params.boundary,
            alpha: vec![false; n_sites],
            ops: vec![Op::IDENTITY; m_initial],
            n: 0,
            n_left: 0,
            n_right: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            workspace: loops::Workspace::default(),
        };

        if start_winding == 0 {
            // Random positions for the up spins.
            let mut sites: Vec<usize> = (0..n_sites).collect();
            for i in 0..n_sites {
                let j = rng.gen_range(i..n_sites);
                sites.swap(i, j);
            }
            for &s in sites.iter().take(n_up as usize) {
                cfg.alpha[s] = true;
            }
            cfg.rng = rng;
            return Ok(cfg);
        }

        // Pre-wound start: alternating spins, |w| full cyclic shifts of the
        // up sublattice (N compatible off-diagonal operators per unit of
        // winding). Needs a ring and the half-filled sector.
        if params.boundary == Boundary::Open {
            return Err(Error::InvalidParams(
                "pre-wound start requires a ring boundary".into(),
            ));
        }
        if sector != 0 {
            return Err(Error::InvalidParams(
                "pre-wound start is defined in the Sz = 0 sector".into(),
            ));
        }
        for s in (0..n_sites).step_by(2) {
            cfg.alpha[s] = true;
        }
        let rounds = start_winding.unsigned_abs() as usize;
        let mut seq = Vec::with_capacity(rounds * n_sites);
        for _ in 0..rounds {
            if start_winding > 0 {
                // Odd bonds then even bonds move every up spin two sites right.
                for b in (1..=n_sites).step_by(2) {
                    seq.push(Op::new(KIND_HOP_RIGHT, b - 1));
                }
                for b in (2..=n_sites).step_by(2) {
                    seq.push(Op::new(KIND_HOP_RIGHT, b - 1));
                }
            } else {
                for b in (2..=n_sites).step_by(2) {
                    seq.push(Op::new(KIND_HOP_LEFT, b - 1));
                }
                for b in (1..=n_sites).step_by(2) {
                    seq.push(Op::new(KIND_HOP_LEFT, b - 1));
                }
            }
        }
        let vt = VertexTable::build(params)?;
        for op in &seq {
            let (w2, w3) = {
                let bw = vt.bond(op.bond() + 1);
                (bw.w2, bw.w3)
            };
            let w = if op.kind() == KIND_HOP_LEFT { w2 } else { w3 };
            if w <= 0.0 {
                return Err(Error::InvalidParams(
                    "pre-wound start impossible: a required hop has zero weight".into(),
                ));
            }
        }
        let m = m_initial.max(2 * seq.len().max(1));
        cfg.ops = vec![Op::IDENTITY; m];
        for (p, &op) in seq.iter().enumerate() {
            cfg.ops[p] = op;
            match op.kind() {
                KIND_HOP_LEFT => cfg.n_left += 1,
                KIND_HOP_RIGHT => cfg.n_right += 1,
                _ => unreachable!(),
            }
        }
        cfg.n = seq.len();
        cfg.rng = rng;
        debug_assert!(cfg.check_periodicity().is_ok());
        Ok(cfg)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn m(&self) -> usize {
        self.ops.len()
    }

    pub fn n_operators(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[bool] {
        &self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn bond_site_indices(&self, bond: usize) -> (usize, usize) {
        let i = bond;
        let j = if bond + 1 == self.n_sites { 0 } else { bond + 1 };
        (i, j)
    }

    #[inline]
    fn diag_pattern(up_i: bool, up_j: bool) -> u8 {
        match (up_i, up_j) {
            (true, true) => pattern::UU,
            (false, false) => pattern::DD,
            (true, false) => pattern::UD,
            (false, true) => pattern::DU,
        }
    }

    /// One full diagonal sweep: identity <-> diagonal exchanges with the
    /// fixed-length SSE acceptance ratios
    /// `P_insert = min(1, beta N_b W / (M - n))`,
    /// `P_remove = min(1, (M - n + 1) / (beta N_b W))`,
    /// while off-diagonal operators propagate the tracked state.
    pub fn diagonal_update(&mut self, vt: &VertexTable, params: &ChainParams) -> Result<()> {
        let m = self.ops.len();
        let nb = self.n_bonds;
        let beta_nb = params.beta * nb as f64;
        let mut state = self.alpha.clone();
        for p in 0..m {
            let op = self.ops[p];
            match op.kind() {
                KIND_IDENTITY => {
                    let b = self.rng.gen_range(0..nb);
                    let (i, j) = self.bond_site_indices(b);
                    let w = vt.weight(b + 1, Self::diag_pattern(state[i], state[j]));
                    if w > 0.0 {
                        let ratio = beta_nb * w / (m - self.n) as f64;
                        if ratio >= 1.0 || self.rng.gen::<f64>() < ratio {
                            self.ops[p] = Op::new(KIND_DIAGONAL, b);
                            self.n += 1;
                        }
                    }
                }
                KIND_DIAGONAL => {
                    let b = op.bond();
                    let (i, j) = self.bond_site_indices(b);
                    let w = vt.weight(b + 1, Self::diag_pattern(state[i], state[j]));
                    if w <= 0.0 {
                        return Err(Error::Corruption(format!(
                            "diagonal operator on zero-weight vertex at slice {p}, bond {b}"
                        )));
                    }
                    let ratio = (m - self.n + 1) as f64 / (beta_nb * w);
                    if ratio >= 1.0 || self.rng.gen::<f64>() < ratio {
                        self.ops[p] = Op::IDENTITY;
                        self.n -= 1;
                    }
                }
                KIND_HOP_LEFT => {
                    let (i, j) = self.bond_site_indices(op.bond());
                    if state[i] || !state[j] {
                        return Err(Error::Corruption(format!(
                            "hop-left at slice {p} against incompatible state"
                        )));
                    }
                    state[i] = true;
                    state[j] = false;
                }
                KIND_HOP_RIGHT => {
                    let (i, j) = self.bond_site_indices(op.bond());
                    if !state[i] || state[j] {
                        return Err(Error::Corruption(format!(
                            "hop-right at slice {p} against incompatible state"
                        )));
                    }
                    state[i] = false;
                    state[j] = true;
                }
                _ => unreachable!(),
            }
        }
        if state != self.alpha {
            return Err(Error::Corruption(
                "propagated state failed imaginary-time periodicity".into(),
            ));
        }
        Ok(())
    }

    /// Grow the truncation during thermalization: when n exceeds 3/4 of M,
    /// enlarge to `ceil(4n/3)` by inserting identities at uniformly random
    /// positions. Never shrinks.
    pub fn adjust_truncation(&mut self) {
        let m = self.ops.len();
        if 4 * self.n <= 3 * m {
            return;
        }
        let m_new = (4 * self.n).div_ceil(3);
        let extra = m_new - m;
        // Uniformly choose which of the new slots hold identities.
        let mut slots: Vec<u32> = (0..m_new as u32).collect();
        for k in 0..extra {
            let j = self.rng.gen_range(k..m_new);
            slots.swap(k, j);
        }
        let mut is_new = vec![false; m_new];
        for &s in &slots[..extra] {
            is_new[s as usize] = true;
        }
        let mut ops = Vec::with_capacity(m_new);
        let mut old = self.ops.iter();
        for p in 0..m_new {
            if is_new[p] {
                ops.push(Op::IDENTITY);
            } else {
                ops.push(*old.next().expect("slot bookkeeping"));
            }
        }
        self.ops = ops;
    }

    /// Worldline winding number `w = (sum_b n_{3,b} - sum_b n_{2,b}) / N`.
    /// Exact integer division is a structural invariant; its failure means
    /// a corrupted sequence. Open chains always report zero.
    pub fn measure_winding(&self) -> Result<i64> {
        let net = self.n_right - self.n_left;
        match self.boundary {
            Boundary::Open => {
                if net != 0 {
                    return Err(Error::Corruption(format!(
                        "open chain with net hop imbalance {net}"
                    )));
                }
                Ok(0)
            }
            _ => {
                if net.rem_euclid(self.n_sites as i64) != 0 {
                    return Err(Error::Corruption(format!(
                        "hop imbalance {net} not divisible by N = {}",
                        self.n_sites
                    )));
                }
                Ok(net / self.n_sites as i64)
            }
        }
    }

    /// Debug validator: propagate alpha through the full sequence.
    pub fn check_periodicity(&self) -> Result<()> {
        let mut state = self.alpha.clone();
        for (p, op) in self.ops.iter().enumerate() {
            match op.kind() {
                KIND_IDENTITY | KIND_DIAGONAL => {}
                KIND_HOP_LEFT => {
                    let (i, j) = self.bond_site_indices(op.bond());
                    if state[i] || !state[j] {
                        return Err(Error::Corruption(format!("bad hop-left at {p}")));
                    }
                    state[i] = true;
                    state[j] = false;
                }
                KIND_HOP_RIGHT => {
                    let (i, j) = self.bond_site_indices(op.bond());
                    if !state[i] || state[j] {
                        return Err(Error::Corruption(format!("bad hop-right at {p}")));
                    }
                    state[i] = false;
                    state[j] = true;
                }
                _ => unreachable!(),
            }
        }
        if state != self.alpha {
            return Err(Error::Corruption("periodicity violated".into()));
        }
        Ok(())
    }

    /// Total Sz of the time-zero state.
    pub fn total_sz(&self) -> i64 {
        let ups = self.alpha.iter().filter(|&&u| u).count() as i64;
        ups - self.n_sites as i64 / 2
    }
}

/// Run one chain: thermalize (with truncation growth and loop-count
/// adaptation), then sample. One sweep = one diagonal pass, a batch of
/// directed loops, one measurement.
pub fn run_chain(
    params: &ChainParams,
    schedule: &RunSchedule,
    seed: u64,
) -> Result<MeasurementRecord> {
    let vt = VertexTable::build(params)?;
    let mut cfg = SseConfig::init_in_sector(
        params,
        schedule.m_initial,
        seed,
        schedule.sector,
        schedule.start_winding,
    )?;
    let mut rec = MeasurementRecord::new(params.n_sites, params.n_bonds());
    let mut loops_per_sweep = schedule.loops_per_sweep.unwrap_or(4).max(1);
    // Exponential moving average of visited legs per loop, for adaptation.
    let mut legs_ema: f64 = 0.0;

    for sweep in 0..(schedule.therm_sweeps + schedule.sample_sweeps) {
        let sampling = sweep >= schedule.therm_sweeps;
        cfg.diagonal_update(&vt, params)?;
        if !sampling {
            cfg.adjust_truncation();
        }
        if cfg.n > 0 {
            cfg.build_links()?;
            let cap = schedule.loop_cap_factor.saturating_mul(cfg.ops.len()).max(1024);
            for _ in 0..loops_per_sweep {
                let stats = cfg.one_loop(&vt, cap);
                if sampling {
                    rec.record_loop(&stats);
                }
                let length = stats.length as f64;
                legs_ema = if legs_ema == 0.0 {
                    length
                } else {
                    0.95 * legs_ema + 0.05 * length
                };
            }
            cfg.write_back_ops()?;
        }
        if !sampling && schedule.loops_per_sweep.is_none() && legs_ema > 0.0 {
            let target = (2.0 * cfg.ops.len() as f64 / legs_ema).round();
            loops_per_sweep = (target as usize).clamp(1, 512);
        }
        if sampling {
            rec.record_sweep(&cfg)?;
        }
    }
    rec.finish_chain(&cfg);
    Ok(rec)
}

#[cfg(test)]
mod tests;
