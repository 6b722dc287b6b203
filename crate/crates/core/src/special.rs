//! Bessel and Hankel functions of integer order and real argument.
//!
//! The fundamental solution of the 2D Helmholtz operator is
//! `(i/4) H0(k|x|)`, and the disk transmission oracle needs `J_n`, `Y_n`
//! and their derivatives. Evaluation is delegated to the fdlibm ports in
//! `libm`, which switch from rational ascending approximations to the
//! Hankel asymptotic form with rational corrections past a fixed break
//! point and are accurate to a few ulp.

use num_complex::Complex64;

use crate::error::{Error, Result};

fn require_positive(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { function, x })
    }
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Bessel function of the first kind of integer order `n`.
pub fn bessel_jn(n: i32, x: f64) -> f64 {
    libm::jn(n, x)
}

/// Bessel function of the second kind, order zero. Rejects `x <= 0`.
pub fn bessel_y0(x: f64) -> Result<f64> {
    require_positive("Y0", x)?;
    Ok(libm::y0(x))
}

pub fn bessel_y1(x: f64) -> Result<f64> {
    require_positive("Y1", x)?;
    Ok(libm::y1(x))
}

pub fn bessel_yn(n: i32, x: f64) -> Result<f64> {
    require_positive("Yn", x)?;
    Ok(libm::yn(n, x))
}

/// `H0(x) = J0(x) + i Y0(x)`, the outgoing Hankel function of order zero.
pub fn hankel1_0(x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j0(x), bessel_y0(x)?))
}

pub fn hankel1_n(n: i32, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_jn(n, x), bessel_yn(n, x)?))
}

/// Derivative `J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`.
pub fn bessel_jn_prime(n: i32, x: f64) -> f64 {
    0.5 * (bessel_jn(n - 1, x) - bessel_jn(n + 1, x))
}

/// Derivative of `H_n^{(1)}` by the same recurrence.
pub fn hankel1_n_prime(n: i32, x: f64) -> Result<Complex64> {
    Ok(0.5 * (hankel1_n(n - 1, x)? - hankel1_n(n + 1, x)?))
}

/// The outgoing fundamental solution `(i/4) H0(k r)` of the 2D Helmholtz
/// operator, for `r > 0`.
pub fn fundamental_solution(k: f64, r: f64) -> Result<Complex64> {
    Ok(Complex64::new(0.0, 0.25) * hankel1_0(k * r)?)
}
