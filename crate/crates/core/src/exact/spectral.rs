//! Spectral winding numbers and flux-driven spectrum flows.
//!
//! Both winding integrals accumulate the phase of `det[H - E]` between
//! successive grid points (ratios are immune to the overall determinant
//! scale) and double the grid until two refinements agree.

use num_complex::Complex64;

use super::ed::{sector_eigenvalues, sector_hamiltonian, ED_MAX_SITES};
use super::{lu_logdet, wrap_angle};
use crate::error::{Error, Result};
use crate::model::{Boundary, ChainParams};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn winding_from_phases(args: &[f64]) -> Option<i64> {
    let mut total = 0.0;
    for w in args.windows(2) {
        total += wrap_angle(w[1] - w[0]);
    }
    // Closing segment back to the start.
    total += wrap_angle(args[0] - args[args.len() - 1]);
    let w = total / TWO_PI;
    let rounded = w.round();
    if (w - rounded).abs() > 0.25 {
        return None;
    }
    Some(rounded as i64)
}

/// Winding of the half-filling many-body spectrum around `e_ref` as the
/// boundary flux sweeps a full cycle:
/// `W(E) = (1/2 pi i) \oint d phi  d/d phi  log det[H(phi) - E]`.
pub fn many_body_winding(params: &ChainParams, e_ref: Complex64, n_flux: usize) -> Result<i64> {
    if params.boundary == Boundary::Open {
        return Err(Error::InvalidParams(
            "spectral winding needs a ring boundary".into(),
        ));
    }
    if params.n_sites > ED_MAX_SITES {
        return Err(Error::DimensionGuard {
            n_sites: params.n_sites,
            limit: ED_MAX_SITES,
        });
    }
    let mut n = n_flux.max(8);
    let mut prev: Option<i64> = None;
    while n <= (1 << 16) {
        let mut args = Vec::with_capacity(n);
        for k in 0..n {
            let phi = TWO_PI * k as f64 / n as f64;
            let h = sector_hamiltonian(params, phi, 0)?;
            let dim = h.nrows();
            let mut flat = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    let mut v = h[(i, j)];
                    if i == j {
                        v -= e_ref;
                    }
                    flat.push(v);
                }
            }
            let (_log_abs, arg) = lu_logdet(flat, dim, phi)?;
            args.push(arg);
        }
        if let Some(w) = winding_from_phases(&args) {
            if prev == Some(w) {
                return Ok(w);
            }
            prev = Some(w);
        } else {
            prev = None;
        }
        n *= 2;
    }
    Err(Error::Experiment(
        "many-body winding did not converge under flux refinement".into(),
    ))
}

/// Two-site-cell Bloch matrix of the jz = 0 chain. Bond 1 (odd) is the
/// intra-cell bond, bond 2 (even) the inter-cell bond.
pub fn bloch_matrix(params: &ChainParams, k: f64) -> [[Complex64; 2]; 2] {
    let (t_o_left, t_o_right) = params.offdiagonal_weights(1);
    let (t_e_left, t_e_right) = params.offdiagonal_weights(2);
    let mu = Complex64::new(-params.mu, 0.0);
    let phase_m = Complex64::new(0.0, -k).exp();
    let phase_p = Complex64::new(0.0, k).exp();
    // A-row picks up intra-cell left-hop t_o^+ and inter-cell e^{-ik} t_e^-.
    let ab = Complex64::new(t_o_left, 0.0) + phase_m * t_e_right;
    let ba = Complex64::new(t_o_right, 0.0) + phase_p * t_e_left;
    [[mu, ab], [ba, mu]]
}

/// Spectral winding of the Bloch bands around `e_p`:
/// `W(E_P) = (1/2 pi i) \int_0^{2 pi} dk  d/dk  log det[H(k) - E_P]`.
pub fn bloch_winding(params: &ChainParams, e_p: Complex64, n_k: usize) -> Result<i64> {
    if params.jz != 0.0 {
        return Err(Error::NotFreeFermion(params.jz));
    }
    let mut n = n_k.max(16);
    // Guard: e_p must keep a point gap to the band spectrum.
    let mut min_dist = f64::INFINITY;
    for kk in 0..256 {
        let k = TWO_PI * kk as f64 / 256.0;
        let m = bloch_matrix(params, k);
        let tr_half = (m[0][0] + m[1][1]) / 2.0;
        let disc = ((m[0][0] - m[1][1]) / 2.0).powu(2) + m[0][1] * m[1][0];
        let root = disc.sqrt();
        for band in [tr_half + root, tr_half - root] {
            min_dist = min_dist.min((band - e_p).norm());
        }
    }
    if min_dist < 1e-9 {
        return Err(Error::OnSpectrum(min_dist));
    }

    let mut prev: Option<i64> = None;
    while n <= (1 << 22) {
        let mut args = Vec::with_capacity(n);
        for kk in 0..n {
            let k = TWO_PI * kk as f64 / n as f64;
            let m = bloch_matrix(params, k);
            let det = (m[0][0] - e_p) * (m[1][1] - e_p) - m[0][1] * m[1][0];
            args.push(det.arg());
        }
        if let Some(w) = winding_from_phases(&args) {
            if prev == Some(w) {
                return Ok(w);
            }
            prev = Some(w);
        } else {
            prev = None;
        }
        n *= 2;
    }
    Err(Error::Experiment(
        "Bloch winding did not converge under k refinement".into(),
    ))
}

/// Many-body eigenvalue tracks continued through a full flux cycle.
#[derive(Debug, Clone)]
pub struct SpectrumFlow {
    /// Flux grid, phi_k = 2 pi k / n for k = 0..=n (endpoint included).
    pub phis: Vec<f64>,
    /// `tracks[i][k]` follows eigenvalue i by nearest-neighbor continuation.
    pub tracks: Vec<Vec<Complex64>>,
    /// True when some continuation step had two candidates within 1e-6.
    pub ambiguous: bool,
}

impl SpectrumFlow {
    /// Permutation induced on the spectrum by one flux cycle: entry i is
    /// the index (in the phi = 0 ordering) of the eigenvalue that track i
    /// ends on.
    pub fn cycle_permutation(&self) -> Vec<usize> {
        let start: Vec<Complex64> = self.tracks.iter().map(|t| t[0]).collect();
        self.tracks
            .iter()
            .map(|t| {
                let end = *t.last().unwrap();
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (j, s) in start.iter().enumerate() {
                    let d = (end - s).norm();
                    if d < best_d {
                        best_d = d;
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    /// Does the lowest-real-part track return to itself after one cycle?
    /// Merged spectral loops make the ground track flow into an excited
    /// state instead.
    pub fn ground_track_closes(&self) -> bool {
        self.cycle_permutation()[0] == 0
    }
}

/// Track the half-filling sector spectrum through phi in [0, 2 pi] with
/// `n_phi` steps, matching eigenvalues between neighboring flux points by
/// smallest distance.
pub fn spectrum_flow(params: &ChainParams, n_phi: usize) -> Result<SpectrumFlow> {
    if params.boundary == Boundary::Open {
        return Err(Error::InvalidParams(
            "spectrum flow needs a ring boundary".into(),
        ));
    }
    let n_phi = n_phi.max(8);
    let phis: Vec<f64> = (0..=n_phi).map(|k| TWO_PI * k as f64 / n_phi as f64).collect();

    let mut first = sector_eigenvalues(params, 0.0, 0)?;
    first.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let dim = first.len();
    let mut tracks: Vec<Vec<Complex64>> = first.iter().map(|&e| vec![e]).collect();
    let mut ambiguous = false;

    let mut current = first;
    for &phi in &phis[1..] {
        let next = sector_eigenvalues(params, phi, 0)?;
        // Greedy global matching: closest pairs claim each other first.
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
        for (i, c) in current.iter().enumerate() {
            for (j, x) in next.iter().enumerate() {
                pairs.push(((c - x).norm(), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut takes = vec![usize::MAX; dim];
        let mut used = vec![false; dim];
        let mut assigned = 0;
        let mut best_for: Vec<f64> = vec![f64::INFINITY; dim];
        for &(d, i, j) in &pairs {
            if takes[i] != usize::MAX || used[j] {
                if takes[i] != usize::MAX && !used[j] && (d - best_for[i]).abs() < 1e-6 {
                    ambiguous = true;
                }
                continue;
            }
            takes[i] = j;
            best_for[i] = d;
            used[j] = true;
            assigned += 1;
            if assigned == dim {
                break;
            }
        }
        let matched: Vec<Complex64> = (0..dim).map(|i| next[takes[i]]).collect();
        for (i, &e) in matched.iter().enumerate() {
            tracks[i].push(e);
        }
        current = matched;
    }

    Ok(SpectrumFlow {
        phis,
        tracks,
        ambiguous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, jz: f64, dj: f64, delta: f64, mu: f64) -> ChainParams {
        ChainParams::new(n, jz, dj, delta, 0.0, mu, 10.0, Boundary::Periodic).unwrap()
    }

    #[test]
    fn hermitian_bloch_winding_is_zero() {
        // dj = 0.2 bands sweep +-[0.2, 1.0] on the real axis; probe the
        // line gap, above the bands, and off-axis.
        let params = p(8, 0.0, 0.2, 0.0, 0.0);
        for e in [
            Complex64::new(0.05, 0.0),
            Complex64::new(1.5, 0.0),
            Complex64::new(0.6, 0.3),
        ] {
            assert_eq!(bloch_winding(&params, e, 64).unwrap(), 0, "at {e}");
        }
    }

    #[test]
    fn bloch_winding_point_gap_transition() {
        // |delta| > |dj|: nontrivial winding around 0; |dj| > |delta|: zero.
        let nontrivial = bloch_winding(&p(8, 0.0, 0.2, 0.5, 0.0), Complex64::new(0.0, 0.0), 64)
            .unwrap();
        assert_ne!(nontrivial, 0);
        let trivial = bloch_winding(&p(8, 0.0, 0.5, 0.2, 0.0), Complex64::new(0.0, 0.0), 64)
            .unwrap();
        assert_eq!(trivial, 0);
    }

    #[test]
    fn bloch_rejects_on_spectrum() {
        // E on the band for the gapless XX point.
        let r = bloch_winding(&p(8, 0.0, 0.0, 0.0, 0.0), Complex64::new(0.0, 0.0), 64);
        assert!(matches!(r, Err(Error::OnSpectrum(_))));
    }

    #[test]
    fn hermitian_many_body_winding_is_zero() {
        let params = p(6, 0.5, 0.2, 0.0, 0.0);
        let w = many_body_winding(&params, Complex64::new(0.1, 0.2), 16).unwrap();
        assert_eq!(w, 0);
    }

    #[test]
    fn flow_tracks_close_for_hermitian_chain() {
        let flow = spectrum_flow(&p(6, 0.3, 0.2, 0.0, 0.0), 24).unwrap();
        assert!(flow.ground_track_closes());
        // Hermitian flux flow returns every track to itself or a degenerate
        // partner; the ground state is gapped here and must come home.
        let perm = flow.cycle_permutation();
        assert_eq!(perm[0], 0);
    }

    #[test]
    fn free_fermion_flow_transition_matches_line_gap() {
        // dj = 0.3: ground track closed for delta < 0.3, open for delta > 0.3.
        let closed = spectrum_flow(&p(6, 0.0, 0.3, 0.15, 0.0), 48).unwrap();
        assert!(closed.ground_track_closes());
        let open = spectrum_flow(&p(6, 0.0, 0.3, 0.45, 0.0), 48).unwrap();
        assert!(!open.ground_track_closes());
    }
}
