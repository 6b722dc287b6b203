//! Projected gradient descent on the sphere `||g|| = rho` in the `2N` real
//! coefficients of a density.

use crate::error::{Error, Result};
use crate::herglotz::{Density, Scene};

use super::objective::{ObjectiveKind, PointObjective};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Sphere radius `rho`.
    pub rho: f64,
    /// Central difference step in coefficient space.
    pub fd_step: f64,
    /// Far field evaluations allowed per sampling point.
    pub max_evals: usize,
    /// Backtracking factor.
    pub step_shrink: f64,
    /// Armijo sufficient decrease constant.
    pub armijo: f64,
    /// Stop when the relative decrease over `stall_window` accepted steps
    /// falls below this.
    pub stall_tolerance: f64,
    pub stall_window: usize,
    /// Stop when `rho * ||grad||` falls below this.
    pub gradient_tolerance: f64,
    /// Denominators `|<g, phi_z>|` below this are treated as degenerate.
    pub denominator_floor: f64,
}

impl OptimizerConfig {
    pub fn new(rho: f64) -> Self {
        Self {
            rho,
            fd_step: 1e-4 * rho,
            max_evals: 400,
            step_shrink: 0.5,
            armijo: 1e-4,
            stall_tolerance: 1e-4,
            stall_window: 10,
            gradient_tolerance: 1e-8,
            denominator_floor: 1e-10 * rho * (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rho > 0.0
            && self.rho.is_finite()
            && self.fd_step > 0.0
            && self.max_evals > 0
            && self.step_shrink > 0.0
            && self.step_shrink < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.stall_tolerance >= 0.0
            && self.stall_window > 0
            && self.gradient_tolerance >= 0.0
            && self.denominator_floor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid optimizer config {self:?}")))
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::new(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Stationary,
    Stalled,
    Budget,
    /// No step along the descent direction passed the Armijo test.
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub density: Density,
    pub value: f64,
    pub initial_value: f64,
    pub evaluations: usize,
    pub accepted_steps: usize,
    pub stop: StopReason,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn retract(x: &mut [f64], rho: f64) {
    let n = norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v *= rho / n);
    }
}

/// Minimizes the objective at `z` over `||g|| = rho` starting from `g0`.
pub fn minimize_on_sphere(
    kind: ObjectiveKind,
    z: [f64; 2],
    g0: &Density,
    scene: &Scene,
    cfg: &OptimizerConfig,
) -> Result<MinimizeOutcome> {
    let objective = PointObjective::new(kind, z, scene, cfg.denominator_floor)?;
    minimize_with(&objective, g0, None, cfg)
}

/// As [`minimize_on_sphere`], optionally reusing a known value at `g0`.
pub(crate) fn minimize_with(
    objective: &PointObjective<'_>,
    g0: &Density,
    known: Option<f64>,
    cfg: &OptimizerConfig,
) -> Result<MinimizeOutcome> {
    cfg.validate()?;
    let rho = cfg.rho;
    let mut x = g0.to_real();
    retract(&mut x, rho);
    if norm(&x) == 0.0 {
        return Err(Error::InvalidParameter("initial density is zero".into()));
    }
    let start_evals = objective.evaluations();
    let eval = |x: &[f64]| -> Result<Option<f64>> {
        let g = Density::from_real(x)?;
        match objective.eval(&g) {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            Ok(_) | Err(Error::DegenerateDenominator { .. }) | Err(Error::NoContraction { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let used = || objective.evaluations() - start_evals;

    let mut f = match known {
        Some(v) => v,
        None => {
            let g = Density::from_real(&x)?;
            objective.eval(&g)?
        }
    };
    let initial_value = f;
    let dim = x.len();
    let mut history = vec![f];
    let mut trial = 0.5 * rho;
    let mut accepted_steps = 0;

    let stop = loop {
        if used() + 2 * dim + 1 > cfg.max_evals {
            break StopReason::Budget;
        }
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            let mut xp = x.clone();
            xp[i] += cfg.fd_step;
            retract(&mut xp, rho);
            let mut xm = x.clone();
            xm[i] -= cfg.fd_step;
            retract(&mut xm, rho);
            grad[i] = match (eval(&xp)?, eval(&xm)?) {
                (Some(p), Some(m)) => (p - m) / (2.0 * cfg.fd_step),
                (Some(p), None) => (p - f) / cfg.fd_step,
                (None, Some(m)) => (f - m) / cfg.fd_step,
                (None, None) => 0.0,
            };
        }
        let radial = grad.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / (rho * rho);
        grad.iter_mut().zip(&x).for_each(|(gi, xi)| *gi -= radial * xi);
        let gnorm = norm(&grad);
        if rho * gnorm < cfg.gradient_tolerance || gnorm == 0.0 {
            break StopReason::Stationary;
        }

        let mut step = trial;
        let mut accepted = None;
        while step > 1e-12 * rho && used() < cfg.max_evals {
            let t = step / gnorm;
            let mut y: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - t * b).collect();
            retract(&mut y, rho);
            if let Some(fy) = eval(&y)? {
                if fy <= f - cfg.armijo * t * gnorm * gnorm {
                    accepted = Some((y, fy));
                    break;
                }
            }
            step *= cfg.step_shrink;
        }
        let Some((y, fy)) = accepted else {
            break if used() >= cfg.max_evals {
                StopReason::Budget
            } else {
                StopReason::StepUnderflow
            };
        };
        x = y;
        f = fy;
        accepted_steps += 1;
        trial = (2.0 * step).min(rho);
        history.push(f);
        if history.len() > cfg.stall_window {
            let past = history[history.len() - 1 - cfg.stall_window];
            if past - f <= cfg.stall_tolerance * past.abs() {
                break StopReason::Stalled;
            }
        }
    };

    Ok(MinimizeOutcome {
        density: Density::from_real(&x)?,
        value: f,
        initial_value,
        evaluations: used(),
        accepted_steps,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::fixtures::scene;
    use num_complex::Complex64;

    fn start() -> Density {
        Density::new(vec![
            Complex64::new(0.2, 0.1),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.3, -0.2),
            Complex64::new(0.0, 0.1),
        ])
        .unwrap()
        .normalized_to(1.0)
        .unwrap()
    }

    #[test]
    fn default_config_matches_documented_values() {
        let c = OptimizerConfig::new(2.0);
        assert_eq!(c.fd_step, 2e-4);
        assert_eq!(c.max_evals, 400);
        assert_eq!(c.step_shrink, 0.5);
        assert!((c.denominator_floor - 2e-10 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-24);
        c.validate().unwrap();
        assert!(OptimizerConfig { step_shrink: 1.0, ..c }.validate().is_err());
        assert!(OptimizerConfig::new(0.0).validate().is_err());
    }

    #[test]
    fn zero_medium_stays_at_zero() {
        let s = scene(0.0, 0.0);
        let out = minimize_on_sphere(ObjectiveKind::Monotonicity, [0.1, 0.0], &start(), &s, &OptimizerConfig::new(1.0)).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.stop, StopReason::Stationary);
        assert_eq!(out.accepted_steps, 0);
    }

    #[test]
    fn descent_stays_on_sphere_and_within_budget() {
        let s = scene(1.16, 0.26);
        for kind in [ObjectiveKind::Factorization, ObjectiveKind::Monotonicity] {
            let cfg = OptimizerConfig::new(1.0).with_max_evals(120);
            let out = minimize_on_sphere(kind, [1.2, 0.3], &start(), &s, &cfg).unwrap();
            assert!((out.density.norm() - 1.0).abs() <= 1e-12);
            assert!(out.value <= out.initial_value);
            assert!(out.evaluations <= 120);
            assert!(out.accepted_steps > 0);
        }
    }

    #[test]
    fn restart_at_result_barely_moves() {
        let s = scene(1.16, 0.0);
        let cfg = OptimizerConfig::new(1.0).with_max_evals(2000);
        let first = minimize_on_sphere(ObjectiveKind::Factorization, [1.0, 0.0], &start(), &s, &cfg).unwrap();
        let again = minimize_on_sphere(ObjectiveKind::Factorization, [1.0, 0.0], &first.density, &s, &cfg).unwrap();
        assert!(again.value <= first.value);
        assert!(first.value - again.value <= 1e-2 * first.value.abs());
    }
}
