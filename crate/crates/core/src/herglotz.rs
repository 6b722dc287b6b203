//! Herglotz operator, its adjoint, truncated Fourier densities and the
//! nonlinear far field operator `F(g) = (V(Hg))^inf`.
//!
//! All angular integrals use the same `M`-point trapezoid rule, so that
//! `F0 = H^* T0 H` also holds for the discretized operators.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::contrast::Contrast;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::forward::{self, FarFieldPattern, FixedPointConfig, ForwardResult};
use crate::grid::{Grid2D, SupportMask};
use crate::kernel::ConvolutionKernel;
use crate::krylov::LinearSolveConfig;

/// `M` equispaced nodes `phi_m = 2 pi m / M` on the unit circle with
/// weights `2 pi / M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngularQuadrature {
    nodes: usize,
}

impl AngularQuadrature {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 quadrature nodes, got {nodes}"
            )));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn weight(&self) -> f64 {
        TAU / self.nodes as f64
    }

    pub fn angle(&self, m: usize) -> f64 {
        TAU * m as f64 / self.nodes as f64
    }

    pub fn direction(&self, m: usize) -> [f64; 2] {
        let (s, c) = self.angle(m).sin_cos();
        [c, s]
    }

    /// Trapezoid approximation of `<a, b>_{L2(S1)} = int a conj(b)`.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        debug_assert_eq!(a.len(), self.nodes);
        debug_assert_eq!(b.len(), self.nodes);
        self.weight() * a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>()
    }

    pub fn check_modes(&self, modes: usize) -> Result<()> {
        if self.nodes < 2 * modes {
            return Err(Error::Aliasing {
                nodes: self.nodes,
                modes,
            });
        }
        Ok(())
    }
}

/// Fourier coefficients `g_n`, `n = -N/2 .. N/2 - 1`, of
/// `g(t) = sum_n g_n e^{int} / sqrt(2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    coeffs: Vec<Complex64>,
}

impl Density {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "number of Fourier modes must be even and at least 2, got {n}"
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite Fourier coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(modes: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); modes])
    }

    /// The single mode `e^{i n t} / sqrt(2 pi)` scaled by `value`.
    pub fn mode(modes: usize, n: i64, value: Complex64) -> Result<Self> {
        let mut d = Self::zeros(modes)?;
        let slot = d.slot(n).ok_or_else(|| {
            Error::InvalidParameter(format!("mode {n} outside -{}..{}", modes / 2, modes / 2))
        })?;
        d.coeffs[slot] = value;
        Ok(d)
    }

    /// Packs `[Re g; Im g]`.
    pub fn from_real(parts: &[f64]) -> Result<Self> {
        let n = parts.len() / 2;
        Self::new((0..n).map(|i| Complex64::new(parts[i], parts[n + i])).collect())
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.re)
            .chain(self.coeffs.iter().map(|c| c.im))
            .collect()
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Fourier index of storage slot `i`.
    pub fn frequency(&self, i: usize) -> i64 {
        i as i64 - (self.coeffs.len() / 2) as i64
    }

    pub fn slot(&self, n: i64) -> Option<usize> {
        let s = n + (self.coeffs.len() / 2) as i64;
        (0..self.coeffs.len() as i64).contains(&s).then_some(s as usize)
    }

    /// `||g||_{L2(S1)}` by Parseval.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Rescales to norm `radius`; `None` for the zero density.
    pub fn normalized_to(&self, radius: f64) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scaled(Complex64::new(radius / n, 0.0)))
    }

    pub fn inner(&self, other: &Density) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

/// `e^{i n phi_m} / sqrt(2 pi)` for every slot and node, slot-major.
fn mode_table(modes: usize, quad: &AngularQuadrature) -> Vec<Complex64> {
    let half = (modes / 2) as i64;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut t = Vec::with_capacity(modes * quad.nodes());
    for s in 0..modes as i64 {
        let n = (s - half) as f64;
        for m in 0..quad.nodes() {
            t.push(Complex64::from_polar(norm, n * quad.angle(m)));
        }
    }
    t
}

/// Nodal values `g(phi_m)`.
pub fn evaluate_density(g: &Density, quad: &AngularQuadrature) -> Result<Vec<Complex64>> {
    quad.check_modes(g.modes())?;
    let table = mode_table(g.modes(), quad);
    let m = quad.nodes();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (s, c) in g.coeffs().iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        for (o, e) in out.iter_mut().zip(&table[s * m..(s + 1) * m]) {
            *o += c * e;
        }
    }
    Ok(out)
}

/// Trapezoid projection of nodal values onto `modes` Fourier modes:
/// `g_n = <v, e_n>`.
pub fn project_density(values: &[Complex64], modes: usize, quad: &AngularQuadrature) -> Result<Density> {
    quad.check_modes(modes)?;
    if values.len() != quad.nodes() {
        return Err(Error::DimensionMismatch {
            expected: quad.nodes(),
            actual: values.len(),
        });
    }
    let table = mode_table(modes, quad);
    let m = quad.nodes();
    Density::new(
        (0..modes)
            .map(|s| quad.inner(values, &table[s * m..(s + 1) * m]))
            .collect(),
    )
}

/// `(Hg)(x) = sum_m (2 pi / M) g(phi_m) exp(i k x . theta_m)` on the grid.
pub fn herglotz(g: &Density, grid: &Grid2D, k: f64, quad: &AngularQuadrature) -> Result<ComplexField> {
    let values = evaluate_density(g, quad)?;
    Ok(herglotz_nodal(&values, grid, k, quad))
}

pub(crate) fn herglotz_nodal(values: &[Complex64], grid: &Grid2D, k: f64, quad: &AngularQuadrature) -> ComplexField {
    let w = quad.weight();
    let active: Vec<(usize, Complex64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(m, v)| (m, v * w))
        .collect();
    let dirs: Vec<[f64; 2]> = (0..quad.nodes()).map(|m| quad.direction(m)).collect();
    ComplexField::from_fn(*grid, |p| {
        active
            .iter()
            .map(|&(m, gv)| gv * Complex64::from_polar(1.0, k * (p[0] * dirs[m][0] + p[1] * dirs[m][1])))
            .sum()
    })
}

/// `(H^* phi)(x_m) = h^2 sum_{y in mask} phi(y) exp(-i k x_m . y)`.
pub fn herglotz_adjoint(
    phi: &ComplexField,
    mask: &SupportMask,
    k: f64,
    quad: &AngularQuadrature,
) -> Result<Vec<Complex64>> {
    phi.check_grid(mask.grid())?;
    let grid = mask.grid();
    let h2 = grid.step() * grid.step();
    let support: Vec<(usize, [f64; 2])> = mask.indices().into_iter().map(|i| (i, grid.point(i))).collect();
    Ok((0..quad.nodes())
        .map(|m| {
            let d = quad.direction(m);
            h2 * support
                .iter()
                .map(|&(i, y)| phi[i] * Complex64::from_polar(1.0, -k * (d[0] * y[0] + d[1] * y[1])))
                .sum::<Complex64>()
        })
        .collect())
}

/// Immutable forward-problem setup shared by far-field evaluations.
///
/// The incident field `Hg` and the linear scattered field are linear in
/// `g`, so both are cached per Fourier mode; an evaluation of `F(g)` then
/// only runs the fixed-point iteration.
#[derive(Debug)]
pub struct Scene {
    kernel: ConvolutionKernel,
    contrast: Contrast,
    quad: AngularQuadrature,
    modes: usize,
    pub fixed_point: FixedPointConfig,
    pub linear: LinearSolveConfig,
    mode_incident: Vec<ComplexField>,
    mode_scattered: Vec<ComplexField>,
    support: Vec<usize>,
    /// `k^2 h^2 exp(-i k x_m . y)` per node, over the support.
    far_phase: Vec<Vec<Complex64>>,
    nodal_table: Vec<Complex64>,
}

impl Scene {
    pub fn new(
        kernel: ConvolutionKernel,
        contrast: Contrast,
        quad: AngularQuadrature,
        modes: usize,
        fixed_point: FixedPointConfig,
        linear: LinearSolveConfig,
    ) -> Result<Self> {
        quad.check_modes(modes)?;
        Density::zeros(modes)?;
        fixed_point.validate()?;
        linear.validate()?;
        if contrast.grid() != kernel.grid() {
            return Err(Error::DimensionMismatch {
                expected: kernel.grid().len(),
                actual: contrast.grid().len(),
            });
        }
        contrast.validate()?;

        let grid = *kernel.grid();
        let k = kernel.wavenumber();
        let mut mode_incident = Vec::with_capacity(modes);
        let mut mode_scattered = Vec::with_capacity(modes);
        for s in 0..modes {
            let n = s as i64 - (modes / 2) as i64;
            let e = Density::mode(modes, n, Complex64::new(1.0, 0.0))?;
            let ui = herglotz(&e, &grid, k, &quad)?;
            let us = forward::solve_linear(&kernel, &contrast, &ui, &linear)?;
            mode_incident.push(ui);
            mode_scattered.push(us);
        }
        let support = contrast.support().indices();
        let h2 = grid.step() * grid.step();
        let far_phase = (0..quad.nodes())
            .map(|m| {
                let d = quad.direction(m);
                support
                    .iter()
                    .map(|&i| {
                        let y = grid.point(i);
                        k * k * h2 * Complex64::from_polar(1.0, -k * (d[0] * y[0] + d[1] * y[1]))
                    })
                    .collect()
            })
            .collect();
        let nodal_table = mode_table(modes, &quad);
        Ok(Self {
            kernel,
            contrast,
            quad,
            modes,
            fixed_point,
            linear,
            mode_incident,
            mode_scattered,
            support,
            far_phase,
            nodal_table,
        })
    }

    pub fn kernel(&self) -> &ConvolutionKernel {
        &self.kernel
    }

    pub fn contrast(&self) -> &Contrast {
        &self.contrast
    }

    pub fn quadrature(&self) -> &AngularQuadrature {
        &self.quad
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn wavenumber(&self) -> f64 {
        self.kernel.wavenumber()
    }

    pub fn grid(&self) -> &Grid2D {
        self.kernel.grid()
    }

    fn check_density(&self, g: &Density) -> Result<()> {
        if g.modes() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                actual: g.modes(),
            });
        }
        Ok(())
    }

    /// Nodal values of `g` on this scene's quadrature.
    pub fn nodal(&self, g: &Density) -> Result<Vec<Complex64>> {
        self.check_density(g)?;
        let m = self.quad.nodes();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for (s, c) in g.coeffs().iter().enumerate() {
            for (o, e) in out.iter_mut().zip(&self.nodal_table[s * m..(s + 1) * m]) {
                *o += c * e;
            }
        }
        Ok(out)
    }

    fn combine(&self, g: &Density, basis: &[ComplexField]) -> ComplexField {
        let mut out = ComplexField::zeros(*self.grid());
        for (c, f) in g.coeffs().iter().zip(basis) {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (o, v) in out.values_mut().iter_mut().zip(f.values()) {
                *o += c * v;
            }
        }
        out
    }

    /// `Hg` on the grid.
    pub fn incident(&self, g: &Density) -> Result<ComplexField> {
        self.check_density(g)?;
        Ok(self.combine(g, &self.mode_incident))
    }

    /// Forward solve driven by `Hg`; returns `(Hg, result)`.
    pub fn forward(&self, g: &Density) -> Result<(ComplexField, ForwardResult)> {
        self.check_density(g)?;
        let ui = self.combine(g, &self.mode_incident);
        let u0s = self.combine(g, &self.mode_scattered);
        let result = if self.contrast.is_linear() {
            ForwardResult {
                w: ComplexField::zeros(*self.grid()),
                u0s,
                iterations_used: 0,
                increment_history: Vec::new(),
            }
        } else {
            forward::solve_correction(&self.kernel, &self.contrast, &ui, u0s, &self.fixed_point, &self.linear)?
        };
        Ok((ui, result))
    }

    /// Far field of the total field `u = ui + u0s + w`.
    pub fn far_field_of(&self, ui: &ComplexField, r: &ForwardResult) -> FarFieldPattern {
        let source: Vec<Complex64> = self
            .support
            .iter()
            .map(|&i| self.contrast.apply(i, ui[i] + r.u0s[i] + r.w[i]))
            .collect();
        FarFieldPattern {
            samples: self
                .far_phase
                .iter()
                .map(|row| row.iter().zip(&source).map(|(p, s)| p * s).sum())
                .collect(),
        }
    }

    /// The nonlinear far field operator `F(g)`.
    pub fn far_field_operator(&self, g: &Density) -> Result<FarFieldPattern> {
        let (ui, r) = self.forward(g)?;
        Ok(self.far_field_of(&ui, &r))
    }

    /// `<F(g), g>_{L2(S1)}` with the trapezoid rule.
    pub fn far_field_form(&self, g: &Density) -> Result<Complex64> {
        let f = self.far_field_operator(g)?;
        Ok(self.quad.inner(&f.samples, &self.nodal(g)?))
    }
}

/// `F(g)` for a prepared scene.
pub fn far_field_operator(g: &Density, scene: &Scene) -> Result<FarFieldPattern> {
    scene.far_field_operator(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, Shape};
    use crate::special::bessel_j0;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(modes: usize, rng: &mut ChaCha8Rng) -> Density {
        Density::new(
            (0..modes)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn density_construction() {
        assert!(Density::zeros(0).is_err());
        assert!(Density::zeros(3).is_err());
        let d = Density::mode(16, -8, Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(d.coeffs()[0], Complex64::new(2.0, 0.0));
        assert!(Density::mode(16, 8, Complex64::new(1.0, 0.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_density(8, &mut rng);
        assert_eq!(Density::from_real(&g.to_real()).unwrap(), g);
        assert!((g.normalized_to(3.0).unwrap().norm() - 3.0).abs() < 1e-14);
        assert!(Density::zeros(8).unwrap().normalized_to(1.0).is_none());
    }

    #[test]
    fn nodal_values_of_single_modes() {
        let quad = AngularQuadrature::new(64).unwrap();
        let c = 1.0 / (2.0 * PI).sqrt();
        let g0 = Density::mode(16, 0, Complex64::new(1.0, 0.0)).unwrap();
        for v in evaluate_density(&g0, &quad).unwrap() {
            assert!((v - c).norm() < 1e-15);
        }
        let g1 = Density::mode(16, 1, Complex64::new(1.0, 0.0)).unwrap();
        for (m, v) in evaluate_density(&g1, &quad).unwrap().iter().enumerate() {
            assert!((v - Complex64::from_polar(c, quad.angle(m))).norm() < 1e-15);
        }
        let coarse = AngularQuadrature::new(31).unwrap();
        assert!(matches!(evaluate_density(&g1, &coarse), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn parseval_and_projection() {
        let quad = AngularQuadrature::new(40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let g = random_density(20, &mut rng);
            let v = evaluate_density(&g, &quad).unwrap();
            let trap = quad.weight() * v.iter().map(|x| x.norm_sqr()).sum::<f64>();
            assert!((trap - g.norm().powi(2)).abs() < 1e-12 * (1.0 + trap));
            let back = project_density(&v, 20, &quad).unwrap();
            for (a, b) in back.coeffs().iter().zip(g.coeffs()) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn herglotz_of_constant_density_is_bessel() {
        let grid = Grid2D::new(5.0, 20).unwrap();
        let quad = AngularQuadrature::new(256).unwrap();
        let g = Density::mode(16, 0, Complex64::new((2.0 * PI).sqrt(), 0.0)).unwrap();
        let hg = herglotz(&g, &grid, 1.0, &quad).unwrap();
        for (i, p) in grid.points().enumerate() {
            let r = p[0].hypot(p[1]);
            if r <= 5.0 {
                assert!((hg[i] - 2.0 * PI * bessel_j0(r)).norm() <= 1e-8);
            }
        }
        let zero = herglotz(&Density::zeros(16).unwrap(), &grid, 1.0, &quad).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn herglotz_sup_bound() {
        let grid = Grid2D::new(3.0, 6).unwrap();
        let quad = AngularQuadrature::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let g = random_density(16, &mut rng);
            let hg = herglotz(&g, &grid, 1.0, &quad).unwrap();
            assert!(hg.sup_norm() <= (2.0 * PI).sqrt() * g.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn adjoint_of_point_mass_and_zero() {
        let grid = Grid2D::new(2.0, 4).unwrap();
        let quad = AngularQuadrature::new(16).unwrap();
        let mask = rasterize(&Shape::disk([0.0, 0.0], 1.0), &grid).unwrap();
        let zero = herglotz_adjoint(&ComplexField::zeros(grid), &mask, 1.0, &quad).unwrap();
        assert!(zero.iter().all(|v| v.norm() == 0.0));
        let mut delta = ComplexField::zeros(grid);
        delta[grid.index(0, 0)] = Complex64::new(0.7, -0.2);
        let h2 = grid.step().powi(2);
        for v in herglotz_adjoint(&delta, &mask, 1.0, &quad).unwrap() {
            assert!((v - h2 * Complex64::new(0.7, -0.2)).norm() < 1e-15);
        }
    }

    #[test]
    fn scene_caches_match_direct_solves() {
        let grid = Grid2D::new(3.0, 9).unwrap();
        let kernel = ConvolutionKernel::new(grid, 1.0).unwrap();
        let mask = rasterize(&Shape::disk([0.0, 0.0], 1.0), &grid).unwrap();
        let q = Contrast::kerr(&mask, 1.16, 0.26).unwrap();
        let lin = LinearSolveConfig { tolerance: 1e-12, ..Default::default() };
        let scene = Scene::new(
            ConvolutionKernel::new(grid, 1.0).unwrap(),
            q.clone(),
            AngularQuadrature::new(32).unwrap(),
            8,
            FixedPointConfig::default(),
            lin,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_density(8, &mut rng).normalized_to(0.5).unwrap();
        let ui = herglotz(&g, &grid, 1.0, scene.quadrature()).unwrap();
        let direct = forward::solve_nonlinear(&kernel, &q, &ui, &scene.fixed_point, &lin).unwrap();
        let ff_direct = forward::far_field(&kernel, &q, &ui, &direct.u0s, &direct.w, 32).unwrap();
        let ff = scene.far_field_operator(&g).unwrap();
        for (a, b) in ff.samples.iter().zip(&ff_direct.samples) {
            assert!((a - b).norm() < 1e-8 * (1.0 + b.norm()));
        }
    }
}
