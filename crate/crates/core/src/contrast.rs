//! Generalized Kerr-type contrast `q(x, |z|) = q0(x) + sum_l q_l(x) |z|^{alpha_l}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimates;
use crate::field::RealField;
use crate::grid::{Grid2D, SupportMask};

/// One term `q_l(x) |z|^{alpha_l}` of the material law.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastTerm {
    pub coefficient: RealField,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contrast {
    terms: Vec<ContrastTerm>,
    support: SupportMask,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastDiagnostics {
    /// Minimum of `1 + q0` over the support.
    pub essinf_one_plus_q0: f64,
    /// Minimum of `q0` over the support.
    pub q0_min: f64,
    /// Empirical Lipschitz-type constant of the nonlinear part over
    /// `|z1|, |z2| <= 1`; zero for a linear medium.
    pub lipschitz_constant: f64,
    /// Lowest nonlinear exponent `alpha_1`, if any.
    pub alpha: Option<f64>,
}

/// Sample pairs used by [`Contrast::validate`] for the Lipschitz estimate.
pub const VALIDATION_SAMPLES: usize = 10_000;
pub const VALIDATION_SEED: u64 = 0x6b65_7272;

impl Contrast {
    /// Builds a contrast from its terms. The first term must carry exponent
    /// zero (it is `q0`) and exponents must increase strictly.
    pub fn new(terms: Vec<ContrastTerm>, support: SupportMask) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvariantViolation("contrast has no terms".into()));
        };
        if first.exponent != 0.0 {
            return Err(Error::InvariantViolation(format!(
                "first term must have exponent 0, got {}",
                first.exponent
            )));
        }
        for pair in terms.windows(2) {
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(pair[1].exponent > pair[0].exponent) {
                return Err(Error::InvariantViolation(format!(
                    "exponents must increase strictly ({} after {})",
                    pair[1].exponent, pair[0].exponent
                )));
            }
        }
        let grid = *support.grid();
        for term in &terms {
            if term.coefficient.grid() != &grid {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    actual: term.coefficient.grid().len(),
                });
            }
            if !term.exponent.is_finite() || term.coefficient.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvariantViolation("non-finite coefficient".into()));
            }
            let leaks = term
                .coefficient
                .values()
                .iter()
                .zip(support.flags())
                .any(|(v, &inside)| !inside && *v != 0.0);
            if leaks {
                return Err(Error::InvariantViolation(
                    "coefficient does not vanish outside the support".into(),
                ));
            }
        }
        Ok(Self { terms, support })
    }

    /// `q = q0`, a linear medium.
    pub fn linear(q0: RealField, support: SupportMask) -> Result<Self> {
        Self::new(
            vec![ContrastTerm {
                coefficient: q0,
                exponent: 0.0,
            }],
            support,
        )
    }

    /// Constant Kerr medium `q = q0 + q1 |z|^2` on `support`.
    pub fn kerr(support: &SupportMask, q0: f64, q1: f64) -> Result<Self> {
        let mut terms = vec![ContrastTerm {
            coefficient: RealField::indicator(support, q0),
            exponent: 0.0,
        }];
        if q1 != 0.0 {
            terms.push(ContrastTerm {
                coefficient: RealField::indicator(support, q1),
                exponent: 2.0,
            });
        }
        Self::new(terms, support.clone())
    }

    /// Material law `sum_l c_l |z|^{alpha_l}` given as `(c_l, alpha_l)` pairs,
    /// weighted per cell by the covered area fraction. The support is the
    /// set of cells with positive coverage.
    pub fn from_coverage(coverage: &RealField, law: &[(f64, f64)]) -> Result<Self> {
        if coverage.values().iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidParameter("coverage fractions must lie in [0, 1]".into()));
        }
        let grid = *coverage.grid();
        let support = SupportMask::from_flags(grid, coverage.values().iter().map(|&c| c > 0.0).collect())?;
        let terms = law
            .iter()
            .filter(|(c, e)| *c != 0.0 || *e == 0.0)
            .map(|&(c, exponent)| ContrastTerm {
                coefficient: coverage.scaled(c),
                exponent,
            })
            .collect();
        Self::new(terms, support)
    }

    pub fn grid(&self) -> &Grid2D {
        self.support.grid()
    }

    pub fn support(&self) -> &SupportMask {
        &self.support
    }

    pub fn terms(&self) -> &[ContrastTerm] {
        &self.terms
    }

    pub fn q0(&self) -> &RealField {
        &self.terms[0].coefficient
    }

    pub fn nonlinear_terms(&self) -> &[ContrastTerm] {
        &self.terms[1..]
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinear_terms()
            .iter()
            .all(|t| t.coefficient.values().iter().all(|&v| v == 0.0))
    }

    /// `q(x_idx, |u|) u`.
    pub fn apply(&self, idx: usize, u: Complex64) -> Complex64 {
        self.q0()[idx] * u + self.apply_nonlinear(idx, u)
    }

    /// `sum_{l >= 1} q_l(x_idx) |u|^{alpha_l} u`.
    pub fn apply_nonlinear(&self, idx: usize, u: Complex64) -> Complex64 {
        let r = u.norm();
        let mut s = 0.0;
        for t in self.nonlinear_terms() {
            let c = t.coefficient[idx];
            if c != 0.0 {
                s += c * pow_abs(r, t.exponent);
            }
        }
        u * s
    }

    /// The same medium seen by fields rescaled as `u / tau`:
    /// `q_l -> tau^{alpha_l} q_l`.
    pub fn rescaled(&self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rescale factor must be positive, got {tau}"
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| ContrastTerm {
                coefficient: t.coefficient.scaled(tau.powf(t.exponent)),
                exponent: t.exponent,
            })
            .collect();
        Self::new(terms, self.support.clone())
    }

    /// Checks `essinf(1 + q0) > 0` on the support and estimates the
    /// Lipschitz-type constant of the nonlinear part.
    pub fn validate(&self) -> Result<ContrastDiagnostics> {
        let inside = self.support.indices();
        let q0 = self.q0();
        let q0_min = inside
            .iter()
            .map(|&i| q0[i])
            .fold(f64::INFINITY, f64::min);
        let q0_min = if inside.is_empty() { 0.0 } else { q0_min };
        let essinf = 1.0 + q0_min;
        if essinf <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "essinf(1 + q0) = {essinf} must be positive"
            )));
        }
        let report = estimates::assumption_check(self, VALIDATION_SAMPLES, VALIDATION_SEED);
        Ok(ContrastDiagnostics {
            essinf_one_plus_q0: essinf,
            q0_min,
            lipschitz_constant: report.empirical_constant,
            alpha: self.nonlinear_terms().first().map(|t| t.exponent),
        })
    }

    /// Additional requirement of the reconstruction methods: `q0 >= q0_min > 0`
    /// on the support. Returns `q0_min`.
    pub fn require_positive_q0(&self) -> Result<f64> {
        let d = self.validate()?;
        if d.q0_min <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "reconstruction needs q0 bounded below by a positive constant on the support, min q0 = {}",
                d.q0_min
            )));
        }
        Ok(d.q0_min)
    }
}

#[inline]
pub(crate) fn pow_abs(r: f64, exponent: f64) -> f64 {
    if exponent == 2.0 {
        r * r
    } else if exponent == 1.0 {
        r
    } else {
        r.powf(exponent)
    }
}
