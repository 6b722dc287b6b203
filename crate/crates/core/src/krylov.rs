//! Restarted GMRES for matrix-free complex operators.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveConfig {
    /// Relative residual `||b - A x|| / ||b||` at which to stop.
    pub tolerance: f64,
    /// Total Arnoldi steps across all restart cycles.
    pub max_iterations: usize,
    /// Krylov dimension per cycle.
    pub restart: usize,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 2000,
            restart: 50,
        }
    }
}

impl LinearSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "krylov tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_iterations < 1 || self.restart < 1 {
            return Err(Error::InvalidParameter(
                "max_iterations and restart must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub residual: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // <a, b> = sum conj(a) b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        (1.0, Complex64::new(0.0, 0.0))
    } else if na == 0.0 {
        (0.0, b.conj() / nb)
    } else {
        let t = na.hypot(nb);
        (na / t, (a / na) * b.conj() / t)
    }
}

/// Solves `A x = b` starting from the contents of `x`.
///
/// `apply(v, out)` must write `A v` into `out`.
pub fn gmres<A>(
    mut apply: A,
    b: &[Complex64],
    x: &mut [Complex64],
    cfg: &LinearSolveConfig,
) -> Result<GmresReport>
where
    A: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(zero);
        return Ok(GmresReport {
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = cfg.tolerance * b_norm;
    let m = cfg.restart.min(n).max(1);

    let mut r = vec![zero; n];
    let mut w = vec![zero; n];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    // column-major Hessenberg, h[j][i] = H(i, j)
    let mut h = vec![vec![zero; m + 1]; m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![zero; m];
    let mut g = vec![zero; m + 1];
    let mut iterations = 0;

    loop {
        apply(x, &mut w);
        for ((ri, bi), wi) in r.iter_mut().zip(b).zip(&w) {
            *ri = bi - wi;
        }
        let beta = norm(&r);
        if !beta.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: f64::NAN,
            });
        }
        if beta <= target {
            return Ok(GmresReport {
                iterations,
                residual: beta / b_norm,
            });
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual: beta / b_norm,
            });
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(zero);
        g[0] = Complex64::new(beta, 0.0);

        let mut k = 0;
        while k < m && iterations < cfg.max_iterations {
            apply(&basis[k], &mut w);
            // modified Gram-Schmidt with one reorthogonalization pass
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[k][i] += c;
                    for (wj, vj) in w.iter_mut().zip(v) {
                        *wj -= c * vj;
                    }
                }
            }
            let wn = norm(&w);
            h[k][k + 1] = Complex64::new(wn, 0.0);

            for i in 0..k {
                let (a, bb) = (h[k][i], h[k][i + 1]);
                h[k][i] = cs[i] * a + sn[i] * bb;
                h[k][i + 1] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (c, s) = givens(h[k][k], h[k][k + 1]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k][k + 1];
            h[k][k + 1] = zero;
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;

            iterations += 1;
            k += 1;
            if g[k].norm() <= target || wn <= 1e-14 * b_norm {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // back substitution on the k x k triangle
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        for col in h.iter_mut().take(k) {
            col.fill(zero);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, seed: u64) -> (Vec<Vec<Complex64>>, Vec<Complex64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    * (0.5 / n as f64).sqrt();
            }
            row[i] += Complex64::new(2.0, 0.5);
        }
        let b = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        (a, b)
    }

    fn matvec(a: &[Vec<Complex64>], v: &[Complex64], out: &mut [Complex64]) {
        for (o, row) in out.iter_mut().zip(a) {
            *o = row.iter().zip(v).map(|(x, y)| x * y).sum();
        }
    }

    #[test]
    fn solves_dense_system_with_restarts() {
        let (a, b) = random_system(60, 3);
        let cfg = LinearSolveConfig {
            tolerance: 1e-12,
            max_iterations: 500,
            restart: 7,
        };
        let mut x = vec![Complex64::new(0.0, 0.0); 60];
        let report = gmres(|v, o| matvec(&a, v, o), &b, &mut x, &cfg).unwrap();
        let mut ax = vec![Complex64::new(0.0, 0.0); 60];
        matvec(&a, &x, &mut ax);
        let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        assert!(res <= 1e-12 * norm(&b) * 1.0001);
        assert!(report.residual <= 1e-12);
    }

    #[test]
    fn zero_rhs_and_identity() {
        let cfg = LinearSolveConfig::default();
        let mut x = vec![Complex64::new(1.0, 1.0); 4];
        gmres(|v, o| o.copy_from_slice(v), &[Complex64::new(0.0, 0.0); 4], &mut x, &cfg).unwrap();
        assert!(x.iter().all(|v| v.norm() == 0.0));

        let b: Vec<_> = (0..5).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let mut x = vec![Complex64::new(0.0, 0.0); 5];
        let rep = gmres(|v, o| o.copy_from_slice(v), &b, &mut x, &cfg).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(x.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1e-14));
    }

    #[test]
    fn reports_no_convergence() {
        let (a, b) = random_system(40, 9);
        let cfg = LinearSolveConfig {
            tolerance: 1e-14,
            max_iterations: 3,
            restart: 50,
        };
        let mut x = vec![Complex64::new(0.0, 0.0); 40];
        assert!(matches!(
            gmres(|v, o| matvec(&a, v, o), &b, &mut x, &cfg),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(LinearSolveConfig::default().validate().is_ok());
        let bad = LinearSolveConfig {
            tolerance: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LinearSolveConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
