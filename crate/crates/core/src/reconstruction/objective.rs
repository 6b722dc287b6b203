use std::cell::Cell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::herglotz::{project_density, Density, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Factorization,
    Monotonicity,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Factorization => "factorization",
            ObjectiveKind::Monotonicity => "monotonicity",
        }
    }

    /// Combines `<F(g), g>` and `<g, phi_z>` into the objective value.
    pub fn value(self, numerator: Complex64, denominator: Complex64) -> f64 {
        match self {
            ObjectiveKind::Factorization => (numerator / (denominator * denominator)).norm(),
            ObjectiveKind::Monotonicity => numerator.re / denominator.norm_sqr(),
        }
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "factorization" => Ok(Self::Factorization),
            "monotonicity" => Ok(Self::Monotonicity),
            other => Err(Error::InvalidParameter(format!("unknown objective kind {other:?}"))),
        }
    }
}

/// `phi_z(x_m) = exp(-i k z . x_m)` at the scene's quadrature nodes,
/// with its trapezoid Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub z: [f64; 2],
    pub values: Vec<Complex64>,
    coeffs: Density,
}

impl TestFunction {
    pub fn new(z: [f64; 2], scene: &Scene) -> Result<Self> {
        let quad = scene.quadrature();
        let k = scene.wavenumber();
        let values: Vec<Complex64> = (0..quad.nodes())
            .map(|m| {
                let d = quad.direction(m);
                Complex64::from_polar(1.0, -k * (z[0] * d[0] + z[1] * d[1]))
            })
            .collect();
        let coeffs = project_density(&values, scene.modes(), quad)?;
        Ok(Self { z, values, coeffs })
    }

    /// `||phi_z||` under the trapezoid rule.
    pub fn norm(&self, scene: &Scene) -> f64 {
        scene.quadrature().inner(&self.values, &self.values).re.sqrt()
    }

    /// `<g, phi_z>` with the trapezoid rule. For a trigonometric polynomial
    /// of degree below `M / 2` this equals `sum_n g_n conj(phi_n)`.
    pub fn pairing(&self, g: &Density) -> Complex64 {
        g.inner(&self.coeffs)
    }
}

/// Objective at one sampling point, counting far-field evaluations.
pub struct PointObjective<'a> {
    pub kind: ObjectiveKind,
    pub scene: &'a Scene,
    pub test: TestFunction,
    pub floor: f64,
    evaluations: Cell<usize>,
}

impl<'a> PointObjective<'a> {
    pub fn new(kind: ObjectiveKind, z: [f64; 2], scene: &'a Scene, floor: f64) -> Result<Self> {
        Ok(Self {
            kind,
            scene,
            test: TestFunction::new(z, scene)?,
            floor,
            evaluations: Cell::new(0),
        })
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    /// Rejects degenerate denominators before spending a forward solve.
    pub fn denominator(&self, g: &Density) -> Result<Complex64> {
        let d = self.test.pairing(g);
        if d.norm() < self.floor {
            return Err(Error::DegenerateDenominator {
                value: d.norm(),
                floor: self.floor,
            });
        }
        Ok(d)
    }

    pub fn eval(&self, g: &Density) -> Result<f64> {
        let d = self.denominator(g)?;
        self.evaluations.set(self.evaluations.get() + 1);
        let numerator = self.scene.far_field_form(g)?;
        Ok(self.kind.value(numerator, d))
    }
}

/// The objective for density `g` at sampling point `z`.
pub fn objective(kind: ObjectiveKind, g: &Density, z: [f64; 2], scene: &Scene, floor: f64) -> Result<f64> {
    PointObjective::new(kind, z, scene, floor)?.eval(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::fixtures::scene;

    fn density(parts: &[(f64, f64)]) -> Density {
        Density::new(parts.iter().map(|&(a, b)| Complex64::new(a, b)).collect())
            .unwrap()
            .normalized_to(1.0)
            .unwrap()
    }

    #[test]
    fn zero_medium_gives_zero() {
        let s = scene(0.0, 0.0);
        let g = density(&[(0.3, 0.1), (1.0, 0.0), (0.2, -0.5), (0.0, 0.4)]);
        for kind in [ObjectiveKind::Factorization, ObjectiveKind::Monotonicity] {
            assert_eq!(objective(kind, &g, [0.3, -0.2], &s, 1e-10).unwrap(), 0.0);
        }
    }

    #[test]
    fn test_function_is_unimodular() {
        let s = scene(1.16, 0.0);
        let t = TestFunction::new([0.7, -1.1], &s).unwrap();
        assert!(t.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
        assert!((t.norm(&s) - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn factorization_ignores_global_phase() {
        let s = scene(1.16, 0.26);
        let g = density(&[(0.3, 0.1), (1.0, 0.0), (0.2, -0.5), (0.0, 0.4)]);
        let a = objective(ObjectiveKind::Factorization, &g, [0.2, 0.1], &s, 1e-10).unwrap();
        let rotated = g.scaled(Complex64::from_polar(1.0, 0.77));
        let b = objective(ObjectiveKind::Factorization, &rotated, [0.2, 0.1], &s, 1e-10).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn linear_objective_matches_nodal_quadrature() {
        let s = scene(1.16, 0.0);
        let z = [0.25, -0.4];
        let t = TestFunction::new(z, &s).unwrap();
        let g = project_density(&t.values, 4, s.quadrature()).unwrap().normalized_to(1.0).unwrap();
        let quad = s.quadrature();
        let nodal = s.nodal(&g).unwrap();
        let f = s.far_field_operator(&g).unwrap();
        let num = quad.inner(&f.samples, &nodal);
        let den = quad.inner(&nodal, &t.values);
        let direct = (num / (den * den)).norm();
        let got = objective(ObjectiveKind::Factorization, &g, z, &s, 1e-10).unwrap();
        assert!((got - direct).abs() < 1e-12 * direct);
        let mono = objective(ObjectiveKind::Monotonicity, &g, z, &s, 1e-10).unwrap();
        assert!((mono - num.re / den.norm_sqr()).abs() < 1e-12 * direct);
    }

    #[test]
    fn degenerate_denominator_is_rejected_before_solving() {
        let s = scene(1.16, 0.26);
        let g = density(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let p = PointObjective::new(ObjectiveKind::Monotonicity, [0.0, 0.0], &s, 10.0).unwrap();
        assert!(matches!(p.eval(&g), Err(Error::DegenerateDenominator { .. })));
        assert_eq!(p.evaluations(), 0);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [ObjectiveKind::Factorization, ObjectiveKind::Monotonicity] {
            assert_eq!(kind.name().parse::<ObjectiveKind>().unwrap(), kind);
        }
        assert!("sampling".parse::<ObjectiveKind>().is_err());
    }
}
