//! Nonlinear forward scattering via the Lippmann-Schwinger equation.
//!
//! With `L = I - k^2 Phi_k * (q0 .)` the scattered field splits into the
//! linear part `u0s = L^{-1} k^2 Phi_k * (q0 ui)` and a correction `w`
//! obtained from the fixed-point iteration
//!
//! ```text
//! w_{l+1} = L^{-1} k^2 Phi_k * ( sum_{m>=1} q_m |u_l|^{a_m} u_l ),  u_l = ui + u0s + w_l,
//! ```
//!
//! started at `w_0 = 0` and stopped once
//! `||w_{l+1} - w_l||_inf / ||w_{l+1}||_inf < eps`.

use num_complex::Complex64;

use crate::contrast::Contrast;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::herglotz::{herglotz_adjoint, AngularQuadrature};
use crate::kernel::ConvolutionKernel;
use crate::krylov::LinearSolveConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Relative sup-norm increment at which the iteration stops.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_sweeps: 100,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fixed-point tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_sweeps < 1 {
            return Err(Error::InvalidParameter("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Consecutive sweeps without a shrinking increment that count as
/// divergence.
pub const STALL_SWEEPS: usize = 5;

/// `||w_{l+1}||_inf` below which the correction is taken to be zero.
const ZERO_CORRECTION: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// Scattered field of the linearized medium.
    pub u0s: ComplexField,
    /// Nonlinear correction `u^s - u0s`.
    pub w: ComplexField,
    pub iterations_used: usize,
    /// Relative increments, one per sweep.
    pub increment_history: Vec<f64>,
}

impl ForwardResult {
    pub fn scattered(&self) -> ComplexField {
        self.u0s.add(&self.w).expect("fields share a grid")
    }

    pub fn total(&self, ui: &ComplexField) -> Result<ComplexField> {
        ui.add(&self.u0s)?.add(&self.w)
    }
}

/// Far field samples at `phi_m = 2 pi m / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub samples: Vec<Complex64>,
}

impl FarFieldPattern {
    pub fn nodes(&self) -> usize {
        self.samples.len()
    }

    pub fn angle(&self, m: usize) -> f64 {
        std::f64::consts::TAU * m as f64 / self.samples.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        let w = std::f64::consts::TAU / self.samples.len() as f64;
        (w * self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }
}

fn check_scene(kernel: &ConvolutionKernel, q: &Contrast, ui: &ComplexField) -> Result<()> {
    ui.check_grid(kernel.grid())?;
    if q.grid() != kernel.grid() {
        return Err(Error::DimensionMismatch {
            expected: kernel.grid().len(),
            actual: q.grid().len(),
        });
    }
    Ok(())
}

/// `u0s = L^{-1} (k^2 Phi_k * (q0 ui))`.
pub fn solve_linear(
    kernel: &ConvolutionKernel,
    q: &Contrast,
    ui: &ComplexField,
    cfg: &LinearSolveConfig,
) -> Result<ComplexField> {
    check_scene(kernel, q, ui)?;
    let q0 = q.q0();
    let source = ComplexField::from_values(
        *ui.grid(),
        ui.values().iter().zip(q0.values()).map(|(u, c)| u * c).collect(),
    )?;
    let rhs = kernel.apply_potential(&source)?;
    kernel.solve_linearized(q0, &rhs, cfg)
}

fn nonlinear_source(q: &Contrast, ui: &ComplexField, u0s: &ComplexField, w: &ComplexField) -> ComplexField {
    let mut s = ComplexField::zeros(*ui.grid());
    for idx in q.support().indices() {
        s[idx] = q.apply_nonlinear(idx, ui[idx] + u0s[idx] + w[idx]);
    }
    s
}

/// One application of the fixed-point map `G(w) = L^{-1} k^2 Phi_k * N(ui + u0s + w)`.
pub fn fixed_point_map(
    kernel: &ConvolutionKernel,
    q: &Contrast,
    ui: &ComplexField,
    u0s: &ComplexField,
    w: &ComplexField,
    cfg: &LinearSolveConfig,
) -> Result<ComplexField> {
    check_scene(kernel, q, ui)?;
    let rhs = kernel.apply_potential(&nonlinear_source(q, ui, u0s, w))?;
    let mut next = w.clone();
    kernel.solve_linearized_from(q.q0(), &rhs, &mut next, cfg)?;
    Ok(next)
}

/// Full nonlinear forward solve.
pub fn solve_nonlinear(
    kernel: &ConvolutionKernel,
    q: &Contrast,
    ui: &ComplexField,
    fp: &FixedPointConfig,
    lin: &LinearSolveConfig,
) -> Result<ForwardResult> {
    let u0s = solve_linear(kernel, q, ui, lin)?;
    solve_correction(kernel, q, ui, u0s, fp, lin)
}

/// Fixed-point iteration for `w` given a precomputed `u0s`.
pub fn solve_correction(
    kernel: &ConvolutionKernel,
    q: &Contrast,
    ui: &ComplexField,
    u0s: ComplexField,
    fp: &FixedPointConfig,
    lin: &LinearSolveConfig,
) -> Result<ForwardResult> {
    fp.validate()?;
    check_scene(kernel, q, ui)?;
    u0s.check_grid(kernel.grid())?;

    let mut w = ComplexField::zeros(*kernel.grid());
    let mut history = Vec::new();
    let mut previous_step = f64::INFINITY;
    let mut stalled = 0;
    let no_contraction = |history: Vec<f64>| Error::NoContraction {
        sweeps: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    };

    for _ in 0..fp.max_sweeps {
        let source = nonlinear_source(q, ui, &u0s, &w);
        if !source.is_finite() {
            history.push(f64::INFINITY);
            return Err(no_contraction(history));
        }
        let rhs = kernel.apply_potential(&source)?;
        let mut next = w.clone();
        match kernel.solve_linearized_from(q.q0(), &rhs, &mut next, lin) {
            Ok(_) => {}
            Err(Error::NoConvergence { residual, .. }) if !residual.is_finite() => {
                history.push(f64::INFINITY);
                return Err(no_contraction(history));
            }
            Err(e) => return Err(e),
        }

        let size = next.sup_norm();
        let step = next.sub(&w)?.sup_norm();
        if !(size.is_finite() && step.is_finite()) {
            history.push(f64::INFINITY);
            return Err(no_contraction(history));
        }
        w = next;
        if size < ZERO_CORRECTION {
            history.push(0.0);
            w = ComplexField::zeros(*kernel.grid());
            return Ok(ForwardResult {
                u0s,
                w,
                iterations_used: history.len(),
                increment_history: history,
            });
        }
        let relative = step / size;
        history.push(relative);
        if relative < fp.tolerance {
            return Ok(ForwardResult {
                u0s,
                w,
                iterations_used: history.len(),
                increment_history: history,
            });
        }
        if step >= previous_step {
            stalled += 1;
            if stalled >= STALL_SWEEPS {
                return Err(no_contraction(history));
            }
        } else {
            stalled = 0;
        }
        previous_step = step;
    }
    Err(no_contraction(history))
}

/// `u_inf(x_m) = k^2 h^2 sum_{y in D} q(y, |u|) u(y) exp(-i k x_m . y)`,
/// `u = ui + u0s + w`.
pub fn far_field(
    kernel: &ConvolutionKernel,
    q: &Contrast,
    ui: &ComplexField,
    u0s: &ComplexField,
    w: &ComplexField,
    nodes: usize,
) -> Result<FarFieldPattern> {
    check_scene(kernel, q, ui)?;
    u0s.check_grid(kernel.grid())?;
    w.check_grid(kernel.grid())?;
    let quad = AngularQuadrature::new(nodes)?;
    let k = kernel.wavenumber();
    let mut source = ComplexField::zeros(*kernel.grid());
    for idx in q.support().indices() {
        source[idx] = k * k * q.apply(idx, ui[idx] + u0s[idx] + w[idx]);
    }
    let samples = herglotz_adjoint(&source, q.support(), k, &quad)?;
    Ok(FarFieldPattern { samples })
}
