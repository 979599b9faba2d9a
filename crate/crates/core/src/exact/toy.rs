//! Winding-sector weights of the exactly solvable ring toy model
//! `H = -d^2/d theta^2 + alpha d/d theta`.
//!
//! Its path integral collapses onto a sum over winding sectors with
//! weight `exp[-(2 pi w - alpha beta)^2 / (4 beta)]` per sector (up to a
//! w-independent prefactor that cancels in ratios), so the dominant
//! sector sits at `w = alpha beta / 2 pi`.

/// Relative weight of winding sector `w`.
pub fn toy_weight(alpha: f64, beta: f64, w: i64) -> f64 {
    assert!(beta > 0.0, "toy_weight needs beta > 0");
    let x = 2.0 * std::f64::consts::PI * w as f64 - alpha * beta;
    (-x * x / (4.0 * beta)).exp()
}

/// Continuous optimum of the sector weight, `alpha beta / 2 pi`.
pub fn toy_optimal_winding(alpha: f64, beta: f64) -> f64 {
    alpha * beta / (2.0 * std::f64::consts::PI)
}

/// Integer sector of largest weight over a symmetric search window.
pub fn toy_argmax(alpha: f64, beta: f64, w_window: i64) -> i64 {
    let center = toy_optimal_winding(alpha, beta).round() as i64;
    (center - w_window..=center + w_window)
        .max_by(|&a, &b| {
            toy_weight(alpha, beta, a)
                .partial_cmp(&toy_weight(alpha, beta, b))
                .unwrap()
        })
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_weight_peaks_at_zero_and_is_even() {
        for w in 1..6 {
            assert!(toy_weight(0.0, 50.0, 0) > toy_weight(0.0, 50.0, w));
            assert!((toy_weight(0.0, 50.0, w) - toy_weight(0.0, 50.0, -w)).abs() < 1e-15);
        }
    }

    #[test]
    fn argmax_tracks_alpha_beta_over_two_pi() {
        for &(alpha, beta) in &[(0.1, 80.0), (0.35, 100.0), (-0.2, 60.0)] {
            let w_star = toy_argmax(alpha, beta, 8);
            let cont = toy_optimal_winding(alpha, beta);
            assert!(
                (w_star as f64 - cont).abs() <= 0.5 + 1e-12,
                "argmax {w_star} vs continuous {cont}"
            );
        }
    }

    #[test]
    fn explicit_optimum() {
        // alpha = 0.2 pi, beta = 100: continuous optimum exactly 10.
        let alpha = 0.2 * std::f64::consts::PI;
        assert!((toy_optimal_winding(alpha, 100.0) - 10.0).abs() < 1e-12);
        assert_eq!(toy_argmax(alpha, 100.0, 6), 10);
    }
}
