//! Winding-number statistics and ergodicity telemetry: histograms,
//! Gaussian peak fits for the dominant sector, transition ratios, and the
//! semi-quantitative bounce-probability estimate built from vertex
//! abundances.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{pattern, ChainParams, VertexTable};
use crate::sse::MeasurementRecord;

/// Histogram of sampled winding numbers plus the transition counters.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WindingHistogram {
    pub counts: BTreeMap<i64, u64>,
    pub total: u64,
    pub dw_pos: u64,
    pub dw_neg: u64,
    pub loops: u64,
}

impl WindingHistogram {
    pub fn from_record(rec: &MeasurementRecord) -> Self {
        let total = rec.winding_hist.values().sum();
        WindingHistogram {
            counts: rec.winding_hist.clone(),
            total,
            dw_pos: rec.dw_pos,
            dw_neg: rec.dw_neg,
            loops: rec.loops,
        }
    }

    pub fn merge(&mut self, other: &WindingHistogram) {
        for (&w, &c) in &other.counts {
            *self.counts.entry(w).or_insert(0) += c;
        }
        self.total += other.total;
        self.dw_pos += other.dw_pos;
        self.dw_neg += other.dw_neg;
        self.loops += other.loops;
    }

    /// Normalized ratios r_w = N_w / sum N_w.
    pub fn ratios(&self) -> Vec<(i64, f64)> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|(&w, &c)| (w, c as f64 / t)).collect()
    }

    /// CSV emission with columns `w,N_w,r_w`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("w,N_w,r_w\n");
        for (w, r) in self.ratios() {
            let c = self.counts[&w];
            s.push_str(&format!("{w},{c},{r:.17e}\n"));
        }
        s
    }
}

/// Result of a Gaussian peak fit to the winding distribution.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct PeakFit {
    /// Fitted peak center (vertex of the log-space parabola).
    pub w_opt: f64,
    /// Gaussian sigma from the fitted curvature.
    pub width: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// True when the fit fell back to a count-weighted mean.
    pub degenerate: bool,
}

/// Bins with fewer counts carry too much log-noise to be useful.
const FIT_MIN_COUNT: u64 = 5;

fn weighted_moments(h: &WindingHistogram) -> (f64, f64) {
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swx2 = 0.0;
    for (&w, &c) in &h.counts {
        let c = c as f64;
        sw += c;
        swx += c * w as f64;
        swx2 += c * (w as f64) * (w as f64);
    }
    let mean = swx / sw;
    let var = (swx2 / sw - mean * mean).max(0.0);
    (mean, var.sqrt())
}

/// Count-weighted quadratic least squares of `log r_w` over bins with at
/// least [`FIT_MIN_COUNT`] samples; the peak sits at the parabola vertex.
/// Histograms with under three usable support points (or non-concave
/// fits) fall back to the count-weighted mean and set the degenerate flag.
pub fn fit_gaussian_peak(h: &WindingHistogram) -> PeakFit {
    let support: Vec<(f64, f64, f64)> = h
        .counts
        .iter()
        .filter(|&(_, &c)| c >= FIT_MIN_COUNT)
        .map(|(&w, &c)| (w as f64, (c as f64 / h.total.max(1) as f64).ln(), c as f64))
        .collect();

    let fallback = |h: &WindingHistogram| {
        let (mean, width) = weighted_moments(h);
        PeakFit {
            w_opt: mean,
            width,
            residual: 0.0,
            degenerate: true,
        }
    };
    if support.len() < 3 {
        return fallback(h);
    }

    // Weighted normal equations for y = a x^2 + b x + c.
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for &(x, y, wgt) in &support {
        let mut xp = 1.0;
        for k in 0..5 {
            s[k] += wgt * xp;
            if k < 3 {
                t[k] += wgt * y * xp;
            }
            xp *= x;
        }
    }
    // Solve [[s4,s3,s2],[s3,s2,s1],[s2,s1,s0]] (a,b,c)^T = (t2,t1,t0)^T.
    let m = [
        [s[4], s[3], s[2]],
        [s[3], s[2], s[1]],
        [s[2], s[1], s[0]],
    ];
    let rhs = [t[2], t[1], t[0]];
    let det3 = |m: &[[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-12 {
        return fallback(h);
    }
    let mut sol = [0.0f64; 3];
    for k in 0..3 {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = rhs[r];
        }
        sol[k] = det3(&mk) / d;
    }
    let (a, b, _c) = (sol[0], sol[1], sol[2]);
    if a >= 0.0 {
        return fallback(h);
    }
    let w_opt = -b / (2.0 * a);
    let width = (-1.0 / (2.0 * a)).sqrt();
    let mut ss = 0.0;
    let mut wg = 0.0;
    for &(x, y, wgt) in &support {
        let fit = sol[0] * x * x + sol[1] * x + sol[2];
        ss += wgt * (y - fit) * (y - fit);
        wg += wgt;
    }
    PeakFit {
        w_opt,
        width,
        residual: (ss / wg).sqrt(),
        degenerate: false,
    }
}

/// Ergodicity telemetry of a run.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ErgodicityReport {
    /// Fraction of loops that changed the winding number.
    pub r_nonzero: f64,
    /// Accepted bounces over total exit draws.
    pub bounce: f64,
    pub loops: u64,
    pub aborted_fraction: f64,
}

pub fn ergodicity_report(rec: &MeasurementRecord) -> Result<ErgodicityReport> {
    if rec.loops == 0 {
        return Err(Error::InsufficientStatistics(
            "ergodicity report needs at least one loop".into(),
        ));
    }
    Ok(ErgodicityReport {
        r_nonzero: (rec.dw_pos + rec.dw_neg) as f64 / rec.loops as f64,
        bounce: rec.bounces as f64 / rec.exit_draws.max(1) as f64,
        loops: rec.loops,
        aborted_fraction: rec.loops_aborted as f64 / rec.loops as f64,
    })
}

/// JSON summary of a winding analysis (peak fit plus telemetry).
pub fn summary_json(fit: &PeakFit, report: &ErgodicityReport) -> String {
    serde_json::json!({
        "w_opt": fit.w_opt,
        "width": fit.width,
        "residual": fit.residual,
        "degenerate": fit.degenerate,
        "R_dw_nonzero": report.r_nonzero,
        "bounce": report.bounce,
        "loops": report.loops,
        "aborted_fraction": report.aborted_fraction,
    })
    .to_string()
}

const VERTEX_PATTERNS: [u8; 6] = [
    pattern::UU,
    pattern::DD,
    pattern::UD,
    pattern::DU,
    pattern::HOP_LEFT,
    pattern::HOP_RIGHT,
];

/// Bounce probability of one vertex averaged uniformly over its four
/// entrance legs.
fn vertex_bounce(pats: &[f64; 16], legs: u8) -> f64 {
    let own = pats[legs as usize];
    let mut acc = 0.0;
    for e in 0..4u8 {
        let mut denom = 0.0;
        for x in 0..4u8 {
            denom += pats[(legs ^ (1 << e) ^ (1 << x)) as usize];
        }
        acc += own / denom;
    }
    acc / 4.0
}

/// Semi-quantitative bounce estimate: vertex abundances follow from the
/// bond correlators (`n_1` split among the four diagonal vertices in
/// proportion to their weights; `n_2 = w2 pm`, `n_3 = w3 mp` with `pm`,
/// `mp` in the abundance-positive sign convention), and each vertex
/// contributes its entrance-averaged bounce probability.
pub fn estimate_bounce(
    params: &ChainParams,
    zz: &[f64],
    pm: &[f64],
    mp: &[f64],
) -> Result<f64> {
    let vt = VertexTable::build(params)?;
    let n_b = params.n_bonds();
    if zz.len() != n_b || pm.len() != n_b || mp.len() != n_b {
        return Err(Error::InvalidParams(format!(
            "correlator slices must have one entry per bond ({n_b})"
        )));
    }
    let mut weighted = 0.0;
    let mut total = 0.0;
    for b in 0..n_b {
        let bw = vt.bond(b + 1);
        let n1 = params.bond_constant() - params.jz * zz[b];
        let n2 = bw.w2 * pm[b];
        let n3 = bw.w3 * mp[b];
        for (name, v) in [("n1", n1), ("n2", n2), ("n3", n3)] {
            if v < -1e-9 {
                return Err(Error::NegativeAbundance(format!(
                    "{name} = {v} on bond {}",
                    b + 1
                )));
            }
        }
        let diag_sum = bw.w11 + bw.w12 + bw.w13 + bw.w14;
        let abundances = [
            if diag_sum > 0.0 { n1.max(0.0) * bw.w11 / diag_sum } else { 0.0 },
            if diag_sum > 0.0 { n1.max(0.0) * bw.w12 / diag_sum } else { 0.0 },
            if diag_sum > 0.0 { n1.max(0.0) * bw.w13 / diag_sum } else { 0.0 },
            if diag_sum > 0.0 { n1.max(0.0) * bw.w14 / diag_sum } else { 0.0 },
            n2.max(0.0),
            n3.max(0.0),
        ];
        let pats = vt.patterns(b + 1);
        for (k, &nk) in abundances.iter().enumerate() {
            if nk <= 0.0 {
                continue;
            }
            weighted += nk * vertex_bounce(pats, VERTEX_PATTERNS[k]);
            total += nk;
        }
    }
    if total <= 0.0 {
        return Err(Error::NegativeAbundance(
            "all vertex abundances vanish".into(),
        ));
    }
    Ok(weighted / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;

    fn hist(entries: &[(i64, u64)]) -> WindingHistogram {
        let mut h = WindingHistogram::default();
        for &(w, c) in entries {
            h.counts.insert(w, c);
            h.total += c;
        }
        h
    }

    #[test]
    fn symmetric_gaussian_peaks_at_center() {
        let mut entries = Vec::new();
        for k in -6i64..=6 {
            let c = (1e7 * (-(k as f64) * (k as f64) / 8.0).exp()).round() as u64;
            if c > 0 {
                entries.push((3 + k, c));
            }
        }
        let h = hist(&entries);
        let fit = fit_gaussian_peak(&h);
        assert!(!fit.degenerate);
        assert!((fit.w_opt - 3.0).abs() < 1e-9, "w_opt = {}", fit.w_opt);
        assert!((fit.width - 2.0).abs() < 0.05, "width = {}", fit.width);
    }

    #[test]
    fn point_mass_falls_back_degenerate() {
        let h = hist(&[(5, 1000)]);
        let fit = fit_gaussian_peak(&h);
        assert!(fit.degenerate);
        assert_eq!(fit.w_opt, 5.0);

        let h2 = hist(&[(4, 500), (6, 500)]);
        let fit2 = fit_gaussian_peak(&h2);
        assert!(fit2.degenerate);
        assert!((fit2.w_opt - 5.0).abs() < 1e-12);
        assert!(fit2.width > 0.0);
    }

    #[test]
    fn sparse_bins_are_ignored() {
        // Outlier bins below the count threshold must not drag the peak.
        let mut entries = vec![(0i64, 1000u64), (1, 2000), (2, 1000)];
        entries.push((40, 2));
        let fit = fit_gaussian_peak(&hist(&entries));
        assert!(!fit.degenerate);
        assert!((fit.w_opt - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_merge_adds_counts() {
        let mut a = hist(&[(0, 10), (1, 20)]);
        let b = hist(&[(1, 5), (2, 7)]);
        a.merge(&b);
        assert_eq!(a.counts[&0], 10);
        assert_eq!(a.counts[&1], 25);
        assert_eq!(a.counts[&2], 7);
        assert_eq!(a.total, 42);
    }

    fn params(jz: f64, dj: f64, delta: f64, eps: f64) -> ChainParams {
        ChainParams::new(8, jz, dj, delta, eps, 0.0, 10.0, Boundary::Periodic).unwrap()
    }

    #[test]
    fn pure_exchange_chain_always_bounces() {
        // delta = 0, jz = 0, eps = 0: hop vertices have weight 1/2, every
        // diagonal vertex vanishes; by direct enumeration of the four-leg
        // cases the walk can only bounce.
        let p = params(0.0, 0.0, 0.0, 0.0);
        let zz = vec![0.0; 8];
        let pm = vec![0.5; 8];
        let mp = vec![0.5; 8];
        let est = estimate_bounce(&p, &zz, &pm, &mp).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_eps_limit_is_one_half() {
        // Diagonal vertices dominate; each entrance sees its own weight
        // (~eps) against one other diagonal (~eps) plus a bounded hop.
        let p = params(0.3, 0.1, 0.2, 1e8);
        let zz = vec![-0.1; 8];
        let pm = vec![0.4; 8];
        let mp = vec![0.45; 8];
        let est = estimate_bounce(&p, &zz, &pm, &mp).unwrap();
        assert!((est - 0.5).abs() < 1e-3, "est = {est}");
    }

    #[test]
    fn bounce_estimate_decreases_with_eps() {
        let zz = vec![-0.05; 8];
        let pm = vec![0.45; 8];
        let mp = vec![0.55; 8];
        let mut prev = f64::INFINITY;
        for &eps in &[0.0, 0.25, 0.5, 1.0] {
            let est = estimate_bounce(&params(0.1, 0.0, 0.3, eps), &zz, &pm, &mp).unwrap();
            assert!(est < prev, "bounce must fall as eps grows");
            prev = est;
        }
    }

    #[test]
    fn negative_abundance_is_rejected() {
        let p = params(0.1, 0.0, 0.2, 0.5);
        let zz = vec![0.0; 8];
        let mut pm = vec![0.5; 8];
        let mp = vec![0.5; 8];
        pm[3] = -0.2;
        assert!(matches!(
            estimate_bounce(&p, &zz, &pm, &mp),
            Err(Error::NegativeAbundance(_))
        ));
    }
}
