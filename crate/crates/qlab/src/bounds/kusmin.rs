//! The Kusmin-Landau inequality: for real phases with increasing gaps
//! δ_n = φ_{n+1} - φ_n all lying in [λ, 2π - λ], the exponential sum obeys
//! |Σ e^{iφ_n}| <= cot(λ/4) <= 2π/λ.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Validates the gap hypotheses and returns the cot(λ/4) bound with the
/// largest admissible λ for the given sequence.
pub fn kusmin_landau_bound(phases: &[f64]) -> Result<f64> {
    if phases.len() < 2 {
        return Err(Error::InvalidParameter(
            "Kusmin-Landau needs at least two phases".into(),
        ));
    }
    let gaps: Vec<f64> = phases.windows(2).map(|w| w[1] - w[0]).collect();
    for w in gaps.windows(2) {
        if w[1] < w[0] - 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "gaps not increasing: {} after {}",
                w[1], w[0]
            )));
        }
    }
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lambda = min_gap.min(2.0 * PI - max_gap);
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gaps leave no margin λ > 0 (min {min_gap}, max {max_gap})"
        )));
    }
    Ok(1.0 / (lambda / 4.0).tan())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn direct_sum(phases: &[f64]) -> f64 {
        phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .sum::<Complex64>()
            .norm()
    }

    #[test]
    fn bound_holds_on_quadratic_phases() {
        // φ_n = c n²: gaps c(2n+1), increasing; pick c so gaps stay in range
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.random_range(10..200);
            let c = rng.random_range(1e-4..(PI / (2.0 * n as f64 + 1.0)));
            let phases: Vec<f64> = (1..=n).map(|k| c * (k * k) as f64).collect();
            let bound = kusmin_landau_bound(&phases).unwrap();
            let actual = direct_sum(&phases);
            assert!(
                actual <= bound * (1.0 + 1e-12),
                "|Σ| = {actual} exceeds cot bound {bound}"
            );
            // and the cruder 2π/λ form dominates the cot form
            let gaps: Vec<f64> = phases.windows(2).map(|w| w[1] - w[0]).collect();
            let lambda = gaps
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
                .min(2.0 * PI - gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            assert!(bound <= 2.0 * PI / lambda + 1e-9);
        }
    }

    #[test]
    fn rejects_non_monotone_or_wrapping_gaps() {
        assert!(kusmin_landau_bound(&[0.0, 1.0, 1.5]).is_err()); // gaps decrease
        assert!(kusmin_landau_bound(&[0.0, 3.0, 9.5]).is_err()); // gap beyond 2π
    }
}
