//! Support indicators from the nonlinear far field operator.
//!
//! For every sampling point `z` the indicator is the (approximate) minimum
//! over densities `||g|| = rho` with `<g, phi_z> != 0` of
//!
//! * factorization: `|<F(g), g> / <g, phi_z>^2|`
//! * monotonicity: `Re <F(g), g> / |<phi_z, g>|^2`
//!
//! where `phi_z(x) = exp(-i k z . x)`. Values stay away from zero inside
//! the scatterer and approach zero outside. The minimization starts from
//! the best member of a family of shifted single-mode densities and then
//! runs a projected gradient descent on the sphere.

mod indicator;
mod objective;
mod optimize;
mod probing;
mod search;

pub use indicator::{indicator_map, indicator_maps, IndicatorMap, PointStatus};
pub use objective::{objective, ObjectiveKind, PointObjective, TestFunction};
pub use optimize::{minimize_on_sphere, MinimizeOutcome, OptimizerConfig, StopReason};
pub use probing::{probing_form_on_mask, probing_quadratic_form};
pub use search::{global_search_init, Candidate, CandidateCache, ShiftSet};

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::contrast::Contrast;
    use crate::forward::FixedPointConfig;
    use crate::grid::{coverage, Grid2D, Shape, SupportMask};
    use crate::herglotz::{AngularQuadrature, Scene};
    use crate::kernel::ConvolutionKernel;
    use crate::krylov::LinearSolveConfig;

    pub fn grid() -> Grid2D {
        Grid2D::new(2.0, 6).unwrap()
    }

    /// Disk of radius 0.8 with `q = q0 + q1 |u|^2`, 16 nodes, 4 modes.
    pub fn scene(q0: f64, q1: f64) -> Scene {
        let grid = grid();
        let contrast = if q0 == 0.0 && q1 == 0.0 {
            Contrast::kerr(&SupportMask::empty(grid), 0.0, 0.0).unwrap()
        } else {
            let cov = coverage(&Shape::disk([0.0, 0.0], 0.8), &grid).unwrap();
            Contrast::from_coverage(&cov, &[(q0, 0.0), (q1, 2.0)]).unwrap()
        };
        Scene::new(
            ConvolutionKernel::new(grid, 1.0).unwrap(),
            contrast,
            AngularQuadrature::new(16).unwrap(),
            4,
            FixedPointConfig::default(),
            LinearSolveConfig::default(),
        )
        .unwrap()
    }
}
