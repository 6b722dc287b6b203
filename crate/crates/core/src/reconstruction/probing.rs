use crate::error::Result;
use crate::grid::{rasterize, Shape, SupportMask};
use crate::herglotz::{Density, Scene};

/// `k^2 h^2 sum_{B} |Hg|^2`, the discrete `k^2 ||Hg||^2_{L2(B)}`.
pub fn probing_form_on_mask(mask: &SupportMask, g: &Density, scene: &Scene) -> Result<f64> {
    let ui = scene.incident(g)?;
    ui.check_grid(mask.grid())?;
    let k = scene.wavenumber();
    let h = scene.grid().step();
    Ok(k * k * h * h * mask.indices().iter().map(|&i| ui[i].norm_sqr()).sum::<f64>())
}

/// As [`probing_form_on_mask`] for the cells of `shape`.
pub fn probing_quadratic_form(shape: &Shape, g: &Density, scene: &Scene) -> Result<f64> {
    probing_form_on_mask(&rasterize(shape, scene.grid())?, g, scene)
}
