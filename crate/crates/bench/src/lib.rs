//! Fixtures shared by the benchmarks.

use nlhelm::{
    rasterize, AngularQuadrature, ComplexField, Contrast, ConvolutionKernel, FixedPointConfig, Grid2D,
    LinearSolveConfig, Result, Scene, Shape,
};

/// Kerr disk of radius 1 in `[-R, R]^2` with `k = 1`.
pub struct DiskSetup {
    pub kernel: ConvolutionKernel,
    pub contrast: Contrast,
    pub incident: ComplexField,
}

pub fn disk_setup(half_count: usize, q0: f64, q1: f64) -> Result<DiskSetup> {
    let grid = Grid2D::new(3.0, half_count)?;
    let kernel = ConvolutionKernel::new(grid, 1.0)?;
    let mask = rasterize(&Shape::disk([0.0, 0.0], 1.0), &grid)?;
    let contrast = Contrast::kerr(&mask, q0, q1)?;
    let incident = ComplexField::plane_wave(grid, 1.0, 0.0);
    Ok(DiskSetup {
        kernel,
        contrast,
        incident,
    })
}

pub fn disk_scene(half_count: usize, nodes: usize, modes: usize) -> Result<Scene> {
    let s = disk_setup(half_count, 1.16, 0.26)?;
    Scene::new(
        s.kernel,
        s.contrast,
        AngularQuadrature::new(nodes)?,
        modes,
        FixedPointConfig::default(),
        LinearSolveConfig::default(),
    )
}
