//! Numerical checks of the analytic estimates behind the forward theory.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contrast::{pow_abs, Contrast};

/// Absolute slack allowed for rounding in [`lemma_a1_check`].
pub const LEMMA_SLACK: f64 = 1e-12;

/// `| |a|^alpha a - |b|^alpha b | <= 2 (|a| + |b|)^alpha |a - b|`.
pub fn lemma_a1_check(a: Complex64, b: Complex64, alpha: f64) -> bool {
    assert!(alpha > 0.0, "alpha must be positive");
    let lhs = (a * a.norm().powf(alpha) - b * b.norm().powf(alpha)).norm();
    let rhs = 2.0 * (a.norm() + b.norm()).powf(alpha) * (a - b).norm();
    lhs <= rhs + LEMMA_SLACK * (1.0 + rhs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    /// Largest sampled quotient
    /// `|q(|z1|)z1 - q(|z2|)z2 - q0 (z1 - z2)| / ((|z1|^a + |z2|^a) |z1 - z2|)`.
    pub empirical_constant: f64,
    /// `sum_l ||q_l||_inf` over the nonlinear terms.
    pub coefficient_bound: f64,
    /// `empirical_constant / coefficient_bound` (zero for a linear medium).
    pub worst_ratio: f64,
    /// Largest sampled value of the numerator alone.
    pub max_numerator: f64,
}

/// Uniform sample from the closed unit disk.
fn unit_disk_sample(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = rng.gen::<f64>().sqrt();
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, t)
}

/// Samples `samples` pairs `|z1|, |z2| <= 1` and reports the empirical
/// constant of the contrast contract with `alpha = alpha_1`.
pub fn assumption_check(contrast: &Contrast, samples: usize, seed: u64) -> AssumptionReport {
    let terms = contrast.nonlinear_terms();
    let bound: f64 = terms.iter().map(|t| t.coefficient.sup_norm()).sum();
    let Some(alpha) = terms.first().map(|t| t.exponent) else {
        return AssumptionReport {
            empirical_constant: 0.0,
            coefficient_bound: 0.0,
            worst_ratio: 0.0,
            max_numerator: 0.0,
        };
    };

    // distinct coefficient tuples over the grid; piecewise constant media
    // collapse to a handful
    let mut tuples: Vec<Vec<f64>> = (0..contrast.grid().len())
        .map(|i| terms.iter().map(|t| t.coefficient[i]).collect())
        .collect();
    tuples.sort_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
    tuples.dedup();

    let exponents: Vec<f64> = terms.iter().map(|t| t.exponent).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut max_numerator: f64 = 0.0;
    for _ in 0..samples {
        let z1 = unit_disk_sample(&mut rng);
        let z2 = unit_disk_sample(&mut rng);
        let diffs: Vec<Complex64> = exponents
            .iter()
            .map(|&a| z1 * pow_abs(z1.norm(), a) - z2 * pow_abs(z2.norm(), a))
            .collect();
        let numerator = tuples
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&diffs)
                    .map(|(ci, d)| d * *ci)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max);
        let denominator = (pow_abs(z1.norm(), alpha) + pow_abs(z2.norm(), alpha)) * (z1 - z2).norm();
        max_numerator = max_numerator.max(numerator);
        if denominator > 0.0 {
            worst = worst.max(numerator / denominator);
        }
    }
    AssumptionReport {
        empirical_constant: worst,
        coefficient_bound: bound,
        worst_ratio: if bound > 0.0 { worst / bound } else { 0.0 },
        max_numerator,
    }
}
