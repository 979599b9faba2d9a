//! Directed-loop updates over the linked vertex list.
//!
//! Entering a vertex flips the entrance leg; the exit leg is drawn with
//! heat-bath weights over the four updated-vertex candidates (an exit equal
//! to the entrance is a bounce and restores the vertex, so its weight is
//! the original vertex weight). The walk follows worldline links until it
//! returns to the starting leg's segment. Loops that would change the
//! total-Sz sector are rolled back, as are loops exceeding the visit cap.

use rand::Rng;

use super::{Op, SseConfig, KIND_DIAGONAL, KIND_HOP_LEFT, KIND_HOP_RIGHT};
use crate::error::{Error, Result};
use crate::model::{pattern, Boundary, VertexTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopOutcome {
    Closed,
    /// Exceeded the visit cap; state restored.
    Aborted,
    /// Closed but would have changed total Sz; state restored.
    SectorRejected,
}

/// Telemetry of a single directed loop.
#[derive(Debug, Clone, Copy)]
pub struct LoopStats {
    /// Number of vertex visits (legs entered).
    pub length: usize,
    pub bounces: u64,
    pub exit_draws: u64,
    /// Winding change carried by the loop (zero unless closed).
    pub delta_w: i64,
    pub outcome: LoopOutcome,
}

/// Per-sweep linked-list cache. Legs are numbered `4 v + l` with
/// l = 0 lower-left, 1 lower-right, 2 upper-right, 3 upper-left.
#[derive(Debug, Clone, Default)]
pub(crate) struct Workspace {
    /// Vertex -> position in the operator sequence.
    vpos: Vec<u32>,
    /// Vertex -> 0-based bond.
    vbond: Vec<u32>,
    /// Vertex -> 4-bit leg pattern.
    vlegs: Vec<u8>,
    /// Leg -> leg linked along the worldline (periodic in time).
    link: Vec<u32>,
    /// Site -> first (bottom) leg, or -1 when no operator acts on it.
    first: Vec<i64>,
    last: Vec<i64>,
    /// (vertex, xor-mask) trail of the current loop, for rollback.
    journal: Vec<(u32, u8)>,
}

#[inline]
fn pattern_kind(pat: u8) -> Option<u32> {
    match pat {
        pattern::UU | pattern::DD | pattern::UD | pattern::DU => Some(KIND_DIAGONAL),
        pattern::HOP_LEFT => Some(KIND_HOP_LEFT),
        pattern::HOP_RIGHT => Some(KIND_HOP_RIGHT),
        _ => None,
    }
}

impl SseConfig {
    /// Build the leg-connectivity cache for the current sequence.
    pub(crate) fn build_links(&mut self) -> Result<()> {
        let ws = &mut self.workspace;
        ws.vpos.clear();
        ws.vbond.clear();
        ws.vlegs.clear();
        ws.first.clear();
        ws.first.resize(self.n_sites, -1);
        ws.last.clear();
        ws.last.resize(self.n_sites, -1);

        let mut state = self.alpha.clone();
        for (p, op) in self.ops.iter().enumerate() {
            if op.is_identity() {
                continue;
            }
            let b = op.bond();
            let i = b;
            let j = if b + 1 == self.n_sites { 0 } else { b + 1 };
            let (in_i, in_j) = (state[i], state[j]);
            let legs = match op.kind() {
                KIND_DIAGONAL => Self::diag_pattern(in_i, in_j),
                KIND_HOP_LEFT => {
                    if in_i || !in_j {
                        return Err(Error::Corruption(format!("bad hop-left at slice {p}")));
                    }
                    state[i] = true;
                    state[j] = false;
                    pattern::HOP_LEFT
                }
                KIND_HOP_RIGHT => {
                    if !in_i || state[j] {
                        return Err(Error::Corruption(format!("bad hop-right at slice {p}")));
                    }
                    state[i] = false;
                    state[j] = true;
                    pattern::HOP_RIGHT
                }
                _ => unreachable!(),
            };
            ws.vpos.push(p as u32);
            ws.vbond.push(b as u32);
            ws.vlegs.push(legs);
        }

        let n_v = ws.vpos.len();
        ws.link.clear();
        ws.link.resize(4 * n_v, u32::MAX);
        for v in 0..n_v {
            let b = ws.vbond[v] as usize;
            let i = b;
            let j = if b + 1 == self.n_sites { 0 } else { b + 1 };
            for (site, bottom, top) in [(i, 4 * v, 4 * v + 3), (j, 4 * v + 1, 4 * v + 2)] {
                if ws.last[site] >= 0 {
                    let t = ws.last[site] as usize;
                    ws.link[t] = bottom as u32;
                    ws.link[bottom] = t as u32;
                } else {
                    ws.first[site] = bottom as i64;
                }
                ws.last[site] = top as i64;
            }
        }
        for s in 0..self.n_sites {
            if ws.first[s] >= 0 {
                let f = ws.first[s] as usize;
                let l = ws.last[s] as usize;
                ws.link[l] = f as u32;
                ws.link[f] = l as u32;
            }
        }
        Ok(())
    }

    /// Apply a pair-flip to a vertex, keeping the hop counters in sync.
    #[inline]
    fn apply_mask(&mut self, v: usize, mask: u8) {
        let old = self.workspace.vlegs[v];
        let new = old ^ mask;
        match pattern_kind(old) {
            Some(KIND_HOP_LEFT) => self.n_left -= 1,
            Some(KIND_HOP_RIGHT) => self.n_right -= 1,
            _ => {}
        }
        match pattern_kind(new) {
            Some(KIND_HOP_LEFT) => self.n_left += 1,
            Some(KIND_HOP_RIGHT) => self.n_right += 1,
            _ => {}
        }
        self.workspace.vlegs[v] = new;
    }

    fn rollback_journal(&mut self) {
        let trail = std::mem::take(&mut self.workspace.journal);
        for &(v, mask) in trail.iter().rev() {
            self.apply_mask(v as usize, mask);
        }
        self.workspace.journal = trail;
    }

    /// One directed loop over the prebuilt links. The caller batches loops
    /// and calls [`write_back_ops`] afterwards.
    pub(crate) fn one_loop(&mut self, vt: &VertexTable, cap: usize) -> LoopStats {
        let n_v = self.workspace.vpos.len();
        debug_assert!(n_v > 0);
        let net0 = self.n_right - self.n_left;
        self.workspace.journal.clear();

        let start = self.rng.gen_range(0..4 * n_v) as u32;
        let mut entrance = start;
        let mut stats = LoopStats {
            length: 0,
            bounces: 0,
            exit_draws: 0,
            delta_w: 0,
            outcome: LoopOutcome::Closed,
        };

        loop {
            stats.length += 1;
            if stats.length > cap {
                self.rollback_journal();
                stats.outcome = LoopOutcome::Aborted;
                return stats;
            }
            let v = (entrance / 4) as usize;
            let le = (entrance % 4) as u8;
            let bond = self.workspace.vbond[v] as usize;
            let before = self.workspace.vlegs[v];
            let pats = vt.patterns(bond + 1);

            let entrance_bit = 1u8 << le;
            let mut w = [0.0f64; 4];
            let mut total = 0.0;
            for (x, wx) in w.iter_mut().enumerate() {
                *wx = pats[(before ^ entrance_bit ^ (1 << x)) as usize];
                total += *wx;
            }
            debug_assert!(total > 0.0, "heat-bath denominator vanished");

            let draw = self.rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut exit = 3u8;
            for (x, wx) in w.iter().enumerate() {
                acc += wx;
                if draw < acc {
                    exit = x as u8;
                    break;
                }
            }
            stats.exit_draws += 1;
            if exit == le {
                stats.bounces += 1;
            }

            let mask = entrance_bit ^ (1 << exit);
            if mask != 0 {
                self.apply_mask(v, mask);
                self.workspace.journal.push((v as u32, mask));
            }

            let exit_leg = 4 * v as u32 + exit as u32;
            if exit_leg == start {
                break;
            }
            let next = self.workspace.link[exit_leg as usize];
            if next == start {
                break;
            }
            entrance = next;
        }

        // Candidate time-zero state from the first (bottom) legs; sites with
        // no operators keep their spins (the update stays canonical).
        let mut new_ups: i64 = 0;
        let mut old_ups: i64 = 0;
        for s in 0..self.n_sites {
            old_ups += self.alpha[s] as i64;
            let f = self.workspace.first[s];
            if f >= 0 {
                let v = (f / 4) as usize;
                let l = (f % 4) as u8;
                new_ups += ((self.workspace.vlegs[v] >> l) & 1) as i64;
            } else {
                new_ups += self.alpha[s] as i64;
            }
        }
        if new_ups != old_ups {
            self.rollback_journal();
            stats.outcome = LoopOutcome::SectorRejected;
            return stats;
        }
        for s in 0..self.n_sites {
            let f = self.workspace.first[s];
            if f >= 0 {
                let v = (f / 4) as usize;
                let l = (f % 4) as u8;
                self.alpha[s] = (self.workspace.vlegs[v] >> l) & 1 == 1;
            }
        }

        let net1 = self.n_right - self.n_left;
        let dnet = net1 - net0;
        debug_assert!(
            dnet.rem_euclid(self.n_sites as i64) == 0,
            "loop changed hop imbalance by a non-multiple of N"
        );
        stats.delta_w = match self.boundary {
            Boundary::Open => {
                debug_assert_eq!(dnet, 0);
                0
            }
            _ => dnet / self.n_sites as i64,
        };
        stats.outcome = LoopOutcome::Closed;
        stats
    }

    /// Push the post-loop leg patterns back into the operator sequence.
    pub(crate) fn write_back_ops(&mut self) -> Result<()> {
        for v in 0..self.workspace.vpos.len() {
            let pat = self.workspace.vlegs[v];
            let kind = pattern_kind(pat).ok_or_else(|| {
                Error::Corruption(format!("vertex {v} left with invalid pattern {pat:#06b}"))
            })?;
            let p = self.workspace.vpos[v] as usize;
            self.ops[p] = Op::new(kind, self.workspace.vbond[v] as usize);
        }
        Ok(())
    }

    /// Public single-loop entry point: builds the leg cache, runs one loop,
    /// and writes the sequence back.
    pub fn directed_loop_update(&mut self, vt: &VertexTable, cap: usize) -> Result<LoopStats> {
        if self.n == 0 {
            return Err(Error::InvalidParams(
                "directed loop needs at least one non-identity operator".into(),
            ));
        }
        self.build_links()?;
        let stats = self.one_loop(vt, cap.max(1024));
        self.write_back_ops()?;
        Ok(stats)
    }
}
