//! Separation-of-variables solution for plane-wave scattering by a
//! homogeneous disk, used as a reference for the volume solver.
//!
//! For a disk of radius `a` centred at the origin with constant contrast
//! `q0`, the interior wavenumber is `kappa = k sqrt(1 + q0)`. Matching
//! `J_n(kappa r)` inside against `i^n J_n(k r) + b_n H_n(k r)` outside in
//! value and normal derivative gives
//!
//! ```text
//! b_n = i^n (k J_n'(ka) J_n(kappa a) - kappa J_n(ka) J_n'(kappa a))
//!          / (kappa H_n(ka) J_n'(kappa a) - k H_n'(ka) J_n(kappa a))
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid2D;
use crate::special::{bessel_jn, bessel_jn_prime, hankel1_n, hankel1_n_prime};

pub const DEFAULT_MODES: usize = 40;

#[derive(Debug, Clone)]
pub struct DiskTransmission {
    k: f64,
    kappa: f64,
    radius: f64,
    angle: f64,
    /// `(a_n, b_n)` for `n = 0..=modes`; negative orders follow by symmetry.
    coefficients: Vec<(Complex64, Complex64)>,
}

fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl DiskTransmission {
    pub fn new(k: f64, q0: f64, radius: f64, angle: f64, modes: usize) -> Result<Self> {
        if !(k > 0.0 && radius > 0.0) || q0 <= -1.0 {
            return Err(Error::InvalidParameter(format!(
                "disk oracle needs k > 0, radius > 0, q0 > -1 (got {k}, {radius}, {q0})"
            )));
        }
        let kappa = k * (1.0 + q0).sqrt();
        let (ka, kpa) = (k * radius, kappa * radius);
        let mut coefficients = Vec::with_capacity(modes + 1);
        for n in 0..=modes {
            let ni = n as i32;
            let (jn, jnp) = (bessel_jn(ni, ka), bessel_jn_prime(ni, ka));
            let (jk, jkp) = (bessel_jn(ni, kpa), bessel_jn_prime(ni, kpa));
            let (hn, hnp) = (hankel1_n(ni, ka)?, hankel1_n_prime(ni, ka)?);
            let den = kappa * hn * jkp - k * hnp * jk;
            let b = i_pow(n) * (k * jnp * jk - kappa * jn * jkp) / den;
            let a = if jk.abs() > 1e-300 {
                (i_pow(n) * jn + b * hn) / jk
            } else {
                Complex64::new(0.0, 0.0)
            };
            if !(b.re.is_finite() && b.im.is_finite() && a.re.is_finite() && a.im.is_finite()) {
                break;
            }
            coefficients.push((a, b));
        }
        Ok(Self {
            k,
            kappa,
            radius,
            angle,
            coefficients,
        })
    }

    pub fn modes(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Scattered field `u - u^i` at `x`.
    pub fn scattered(&self, x: [f64; 2]) -> Complex64 {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]) - self.angle;
        if r <= self.radius {
            let total: Complex64 = self
                .coefficients
                .iter()
                .enumerate()
                .map(|(n, (a, _))| {
                    let w = if n == 0 { 1.0 } else { 2.0 * (n as f64 * theta).cos() };
                    a * bessel_jn(n as i32, self.kappa * r) * w
                })
                .sum();
            let (s, c) = self.angle.sin_cos();
            total - Complex64::from_polar(1.0, self.k * (c * x[0] + s * x[1]))
        } else {
            self.coefficients
                .iter()
                .enumerate()
                .map(|(n, (_, b))| {
                    let w = if n == 0 { 1.0 } else { 2.0 * (n as f64 * theta).cos() };
                    b * hankel1_n(n as i32, self.k * r).expect("r > radius > 0") * w
                })
                .sum()
        }
    }

    pub fn scattered_field(&self, grid: &Grid2D) -> ComplexField {
        ComplexField::from_fn(*grid, |p| self.scattered(p))
    }

    /// Far field pattern in the normalization `u^s ~ e^{i pi/4}/sqrt(8 pi k) e^{ikr}/sqrt(r) u_inf`.
    pub fn far_field(&self, direction: f64) -> Complex64 {
        let theta = direction - self.angle;
        let s: Complex64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(n, (_, b))| {
                let w = if n == 0 { 1.0 } else { 2.0 * (n as f64 * theta).cos() };
                b * i_pow(n).conj() * w
            })
            .sum();
        Complex64::new(0.0, -4.0) * s
    }
}
