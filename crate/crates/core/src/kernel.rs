//! Cubature of the volume potential `f -> k^2 (Phi_k * f)` on a grid.
//!
//! Off the diagonal the kernel is sampled at the lattice lags; at lag zero
//! the sample is replaced by the average of `Phi_k` over one grid cell. The
//! discrete convolution is evaluated with FFTs on a zero-padded domain of
//! side at least `2(2J+1) - 1`, so the circular convolution reproduces the
//! linear one exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid2D;
use crate::krylov::{gmres, GmresReport, LinearSolveConfig};
use crate::special::fundamental_solution;

/// Smallest integer `>= n` whose prime factors are all in {2, 3, 5}.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Average of `Phi_k(y) = (i/4) H0(k|y|)` over the square cell
/// `[-h/2, h/2]^2`.
///
/// The logarithmic part `-(1/2pi) ln|y|` is averaged in closed form; the
/// continuous remainder is integrated with a tensor Gauss rule.
pub fn cell_average(k: f64, h: f64) -> Complex64 {
    let a = 0.5 * h;
    // mean of ln|y| over [-a, a]^2
    let mean_log = a.ln() + 0.5 * 2f64.ln() + PI / 4.0 - 1.5;
    let singular = -mean_log / (2.0 * PI);

    let (nodes, weights) = gauss_legendre(24);
    let mut remainder = Complex64::new(0.0, 0.0);
    // by symmetry one quadrant [0, a]^2 suffices
    for (xi, wi) in nodes.iter().zip(&weights) {
        for (yj, wj) in nodes.iter().zip(&weights) {
            let x = 0.5 * a * (xi + 1.0);
            let y = 0.5 * a * (yj + 1.0);
            let r = x.hypot(y);
            let phi = fundamental_solution(k, r).expect("r > 0 at Gauss nodes");
            remainder += wi * wj * (phi + r.ln() / (2.0 * PI));
        }
    }
    // weights sum to 4 on the reference square
    remainder /= 4.0;
    remainder + singular
}

/// Precomputed Fourier multipliers of the discrete kernel `k^2 h^2 Phi_k`.
#[derive(Clone)]
pub struct ConvolutionKernel {
    grid: Grid2D,
    wavenumber: f64,
    padded: usize,
    /// Stored transposed: index `kx * padded + ky`.
    multiplier: Vec<Complex64>,
    diagonal: Complex64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ConvolutionKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionKernel")
            .field("grid", &self.grid)
            .field("wavenumber", &self.wavenumber)
            .field("padded", &self.padded)
            .finish()
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], p: usize) {
    for r in 0..p {
        for c in 0..p {
            dst[c * p + r] = src[r * p + c];
        }
    }
}

impl ConvolutionKernel {
    pub fn new(grid: Grid2D, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavenumber must be positive, got {k}"
            )));
        }
        let n = grid.side();
        let p = next_smooth(2 * n - 1);
        let h = grid.step();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(p);
        let inverse = planner.plan_fft_inverse(p);

        let scale = k * k * h * h;
        let diagonal = scale * cell_average(k, h);
        let lag = |m: usize| -> i64 {
            if m < n {
                m as i64
            } else {
                m as i64 - p as i64
            }
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); p * p];
        for r in 0..p {
            let b = lag(r);
            if b.unsigned_abs() as usize >= n {
                continue;
            }
            for c in 0..p {
                let a = lag(c);
                if a.unsigned_abs() as usize >= n {
                    continue;
                }
                buf[r * p + c] = if a == 0 && b == 0 {
                    diagonal
                } else {
                    let dist = h * (a as f64).hypot(b as f64);
                    scale * fundamental_solution(k, dist)?
                };
            }
        }

        let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len()];
        forward.process_with_scratch(&mut buf, &mut scratch);
        let mut multiplier = vec![Complex64::new(0.0, 0.0); p * p];
        transpose(&buf, &mut multiplier, p);
        forward.process_with_scratch(&mut multiplier, &mut scratch);
        let norm = 1.0 / (p * p) as f64;
        multiplier.iter_mut().for_each(|v| *v *= norm);

        Ok(Self {
            grid,
            wavenumber: k,
            padded: p,
            multiplier,
            diagonal,
            forward,
            inverse,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// Side of the zero-padded FFT domain.
    pub fn padded_side(&self) -> usize {
        self.padded
    }

    /// The lag-zero weight `k^2 h^2 <Phi_k>_cell`.
    pub fn diagonal_weight(&self) -> Complex64 {
        self.diagonal
    }

    /// Fourier multipliers in the `(kx, ky)` layout.
    pub fn multipliers(&self) -> &[Complex64] {
        &self.multiplier
    }

    /// Writes `k^2 (Phi_k * f)` sampled on the grid into `out`.
    pub fn apply_into(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.side();
        let p = self.padded;
        debug_assert_eq!(f.len(), n * n);
        debug_assert_eq!(out.len(), n * n);
        let zero = Complex64::new(0.0, 0.0);

        let mut rows = vec![zero; n * p];
        for y in 0..n {
            rows[y * p..y * p + n].copy_from_slice(&f[y * n..(y + 1) * n]);
        }
        let mut scratch = vec![
            zero;
            self.forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len())
        ];
        // x transform on the n populated rows only
        self.forward.process_with_scratch(&mut rows, &mut scratch);

        let mut cols = vec![zero; p * p];
        for y in 0..n {
            for kx in 0..p {
                cols[kx * p + y] = rows[y * p + kx];
            }
        }
        self.forward.process_with_scratch(&mut cols, &mut scratch);
        for (c, m) in cols.iter_mut().zip(&self.multiplier) {
            *c *= m;
        }
        self.inverse.process_with_scratch(&mut cols, &mut scratch);

        for y in 0..n {
            for kx in 0..p {
                rows[y * p + kx] = cols[kx * p + y];
            }
        }
        self.inverse.process_with_scratch(&mut rows, &mut scratch);
        for y in 0..n {
            out[y * n..(y + 1) * n].copy_from_slice(&rows[y * p..y * p + n]);
        }
    }

    /// `k^2 (Phi_k * f)` on the grid.
    pub fn apply_potential(&self, f: &ComplexField) -> Result<ComplexField> {
        f.check_grid(&self.grid)?;
        let mut out = ComplexField::zeros(self.grid);
        self.apply_into(f.values(), out.values_mut());
        Ok(out)
    }

    /// Solves `x - k^2 Phi_k * (q0 x) = rhs` by restarted GMRES from `x = 0`.
    pub fn solve_linearized(
        &self,
        q0: &RealField,
        rhs: &ComplexField,
        cfg: &LinearSolveConfig,
    ) -> Result<ComplexField> {
        let mut x = ComplexField::zeros(self.grid);
        self.solve_linearized_from(q0, rhs, &mut x, cfg)?;
        Ok(x)
    }

    /// As [`Self::solve_linearized`], starting from the contents of `x`.
    pub fn solve_linearized_from(
        &self,
        q0: &RealField,
        rhs: &ComplexField,
        x: &mut ComplexField,
        cfg: &LinearSolveConfig,
    ) -> Result<GmresReport> {
        cfg.validate()?;
        rhs.check_grid(&self.grid)?;
        x.check_grid(&self.grid)?;
        if q0.grid() != &self.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                actual: q0.grid().len(),
            });
        }
        let q = q0.values();
        if q.iter().all(|&v| v == 0.0) {
            x.values_mut().copy_from_slice(rhs.values());
            return Ok(GmresReport {
                iterations: 0,
                residual: 0.0,
            });
        }
        let mut weighted = vec![Complex64::new(0.0, 0.0); q.len()];
        gmres(
            |v, out| {
                for ((w, vi), qi) in weighted.iter_mut().zip(v).zip(q) {
                    *w = vi * qi;
                }
                self.apply_into(&weighted, out);
                for (o, vi) in out.iter_mut().zip(v) {
                    *o = vi - *o;
                }
            },
            rhs.values(),
            x.values_mut(),
            cfg,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid2D, rng: &mut ChaCha8Rng) -> ComplexField {
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexField::from_values(grid, values).unwrap()
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(81), 81);
        assert_eq!(next_smooth(41), 45);
        assert_eq!(next_smooth(7), 8);
        assert_eq!(next_smooth(161), 162);
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        for deg in 0..20 {
            let exact = if deg % 2 == 0 { 2.0 / (deg + 1) as f64 } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn cell_average_matches_subdivided_midpoint_rule() {
        // Subdivide the cell, handle the centre subcell by its own
        // closed-form log average, midpoint elsewhere.
        let (k, h) = (1.3, 0.25);
        let m = 301;
        let s = h / m as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let x = -0.5 * h + (i as f64 + 0.5) * s;
                let y = -0.5 * h + (j as f64 + 0.5) * s;
                if i == m / 2 && j == m / 2 {
                    sum += cell_average(k, s);
                } else {
                    sum += fundamental_solution(k, x.hypot(y)).unwrap();
                }
            }
        }
        let reference = sum / (m * m) as f64;
        let value = cell_average(k, h);
        assert!((value - reference).norm() < 1e-6 * value.norm(), "{value} vs {reference}");
    }

    #[test]
    fn multiplier_layout_and_symmetry() {
        let grid = Grid2D::new(5.0, 20).unwrap();
        let kernel = ConvolutionKernel::new(grid, 1.0).unwrap();
        let p = kernel.padded_side();
        assert!(p >= 81);
        assert_eq!(kernel.multipliers().len(), p * p);
        // radial kernel: multiplier even under index negation and transpose
        let m = kernel.multipliers();
        for a in 0..p {
            for b in 0..p {
                let v = m[a * p + b];
                let neg = m[((p - a) % p) * p + (p - b) % p];
                let tr = m[b * p + a];
                assert!((v - neg).norm() < 1e-12 * (1.0 + v.norm()));
                assert!((v - tr).norm() < 1e-12 * (1.0 + v.norm()));
            }
        }
        assert!(ConvolutionKernel::new(grid, 0.0).is_err());
        assert!(ConvolutionKernel::new(grid, -1.0).is_err());
    }

    #[test]
    fn point_source_response() {
        let grid = Grid2D::new(5.0, 20).unwrap();
        let k = 1.0;
        let kernel = ConvolutionKernel::new(grid, k).unwrap();
        let mut delta = ComplexField::zeros(grid);
        delta[grid.index(0, 0)] = Complex64::new(1.0, 0.0);
        let out = kernel.apply_potential(&delta).unwrap();
        let h = grid.step();
        for idx in 0..grid.len() {
            let p = grid.point(idx);
            let r = p[0].hypot(p[1]);
            if r >= 5.0 * h {
                let expect = h * h * k * k * fundamental_solution(k, r).unwrap();
                assert!((out[idx] - expect).norm() < 1e-13);
            }
        }
        assert!((out[grid.index(0, 0)] - kernel.diagonal_weight()).norm() < 1e-14);
    }

    #[test]
    fn linear_and_zero_preserving() {
        let grid = Grid2D::new(2.0, 8).unwrap();
        let kernel = ConvolutionKernel::new(grid, 2.0).unwrap();
        let zero = kernel.apply_potential(&ComplexField::zeros(grid)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_field(grid, &mut rng);
        let g = random_field(grid, &mut rng);
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.7));
        let lhs = kernel
            .apply_potential(&f.scaled(a).add(&g.scaled(b)).unwrap())
            .unwrap();
        let rhs = kernel
            .apply_potential(&f)
            .unwrap()
            .scaled(a)
            .add(&kernel.apply_potential(&g).unwrap().scaled(b))
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-12 * rhs.sup_norm());
    }

    #[test]
    fn matches_direct_summation_on_disk() {
        let grid = Grid2D::new(2.5, 10).unwrap();
        let k = 1.0;
        let kernel = ConvolutionKernel::new(grid, k).unwrap();
        let mask = rasterize(&Shape::disk([0.0, 0.0], 1.0), &grid).unwrap();
        let f = ComplexField::from_fn(grid, |_| Complex64::new(1.0, 0.0)).restricted(&mask);
        let fast = kernel.apply_potential(&f).unwrap();

        let h = grid.step();
        let mut direct = ComplexField::zeros(grid);
        for i in 0..grid.len() {
            let x = grid.point(i);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..grid.len() {
                if f[j].norm() == 0.0 {
                    continue;
                }
                let y = grid.point(j);
                let w = if i == j {
                    kernel.diagonal_weight()
                } else {
                    let r = (x[0] - y[0]).hypot(x[1] - y[1]);
                    k * k * h * h * fundamental_solution(k, r).unwrap()
                };
                s += w * f[j];
            }
            direct[i] = s;
        }
        let dev = fast.sub(&direct).unwrap().sup_norm() / direct.sup_norm();
        assert!(dev <= 1e-10, "relative deviation {dev}");
    }

    #[test]
    fn commutes_with_negation_and_is_symmetric() {
        let grid = Grid2D::new(3.0, 9).unwrap();
        let kernel = ConvolutionKernel::new(grid, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(grid, &mut rng);
        let g = random_field(grid, &mut rng);

        // negation-symmetric input gives negation-symmetric output
        let sym = ComplexField::from_values(
            grid,
            (0..grid.len()).map(|i| f[i] + f[grid.negated(i)]).collect(),
        )
        .unwrap();
        let out = kernel.apply_potential(&sym).unwrap();
        for i in 0..grid.len() {
            assert!((out[i] - out[grid.negated(i)]).norm() < 1e-12);
        }

        // sum_x (K f)(x) g(x) = sum_x f(x) (K g)(x): the kernel is even
        let kf = kernel.apply_potential(&f).unwrap();
        let kg = kernel.apply_potential(&g).unwrap();
        let lhs: Complex64 = (0..grid.len()).map(|i| kf[i] * g[i]).sum();
        let rhs: Complex64 = (0..grid.len()).map(|i| f[i] * kg[i]).sum();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    }

    #[test]
    fn refinement_convergence_for_smooth_density() {
        let k = 1.0;
        let f = |p: [f64; 2]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            Complex64::new((-2.0 * r2).exp(), 0.0)
        };
        let mut errs = Vec::new();
        let coarse = Grid2D::new(3.0, 6).unwrap();
        let mut grids = vec![coarse];
        for _ in 0..3 {
            grids.push(grids.last().unwrap().refined());
        }
        let results: Vec<ComplexField> = grids
            .iter()
            .map(|g| {
                ConvolutionKernel::new(*g, k)
                    .unwrap()
                    .apply_potential(&ComplexField::from_fn(*g, f))
                    .unwrap()
            })
            .collect();
        for w in results.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let ga = a.grid();
            let gb = b.grid();
            let mut e: f64 = 0.0;
            for idx in 0..ga.len() {
                let (i, j) = ga.lattice(idx);
                e = e.max((a[idx] - b[gb.index(2 * i, 2 * j)]).norm());
            }
            errs.push(e);
        }
        for pair in errs.windows(2) {
            assert!(pair[0] / pair[1] >= 3.0, "{errs:?}");
        }
    }

    #[test]
    fn linearized_solve() {
        let grid = Grid2D::new(5.0, 20).unwrap();
        let kernel = ConvolutionKernel::new(grid, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rhs = random_field(grid, &mut rng);
        let cfg = LinearSolveConfig::default();

        let x = kernel.solve_linearized(&RealField::zeros(grid), &rhs, &cfg).unwrap();
        assert_eq!(x, rhs);

        let mask = rasterize(&Shape::disk([0.0, 0.0], 1.0), &grid).unwrap();
        let q0 = RealField::indicator(&mask, 1.16);
        let x = kernel.solve_linearized(&q0, &rhs, &cfg).unwrap();
        let qx = ComplexField::from_values(
            grid,
            (0..grid.len()).map(|i| x[i] * q0[i]).collect(),
        )
        .unwrap();
        let residual = x.sub(&kernel.apply_potential(&qx).unwrap()).unwrap().sub(&rhs).unwrap();
        let rel = residual.l2_norm() / rhs.l2_norm();
        assert!(rel <= cfg.tolerance, "{rel}");
    }
}
