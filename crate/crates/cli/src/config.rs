//! Run configuration (TOML) and scene assembly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nlhelm::forward::FixedPointConfig;
use nlhelm::reconstruction::{ObjectiveKind, OptimizerConfig, ShiftSet};
use nlhelm::{
    coverage, rasterize, AngularQuadrature, Contrast, ContrastTerm, ConvolutionKernel, Density, Grid2D,
    LinearSolveConfig, RealField, Scene, Shape, SupportMask,
};
use serde::Deserialize;

use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub wavenumber: f64,
    pub grid: GridSpec,
    #[serde(rename = "contrast")]
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub discretization: Discretization,
    pub rescale: Option<RescaleSpec>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub incident: IncidentSpec,
    pub reconstruction: Option<ReconstructionSpec>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Half width `R` of the square `[-R, R]^2`.
    pub half_width: f64,
    /// `J`: the grid has `2J + 1` points per side.
    pub half_count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    /// Coefficients weighted by the covered area of each cell.
    #[default]
    Coverage,
    /// Coefficients sampled at cell centres.
    Pointwise,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeSpec {
    Disk { center: [f64; 2], radius: f64 },
    Kite {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "unit")]
        scale: f64,
    },
    Polygon { vertices: Vec<[f64; 2]> },
}

fn unit() -> f64 {
    1.0
}

impl ShapeSpec {
    pub fn shape(&self) -> Shape {
        match self {
            ShapeSpec::Disk { center, radius } => Shape::disk(*center, *radius),
            ShapeSpec::Kite { center, scale } => Shape::kite(*center, *scale),
            ShapeSpec::Polygon { vertices } => Shape::polygon(vertices.clone()),
        }
    }
}

/// One term `q_l(x) |u|^{alpha_l}`. The spatial profile is either a shape
/// with constant `coefficient` or a raster CSV (`i,j,value`) scaled by
/// `coefficient`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub shape: Option<ShapeSpec>,
    pub raster: Option<PathBuf>,
    pub coefficient: Option<f64>,
    #[serde(default)]
    pub exponent: f64,
}

/// Coefficients, incident amplitudes, density files and `rho` are given in
/// physical units and mapped to `u / tau`, `tau^alpha q`, `rho / tau`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleSpec {
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub modes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: 256, modes: 16 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub linear_tolerance: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let fp = FixedPointConfig::default();
        Self {
            tolerance: fp.tolerance,
            max_sweeps: fp.max_sweeps,
            linear_tolerance: LinearSolveConfig::default().tolerance,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncidentSpec {
    /// Plane-wave direction angle in radians.
    pub angle: f64,
    pub amplitude: f64,
    /// Density CSV (`n,re,im`); replaces the plane wave when set.
    pub density: Option<PathBuf>,
}

impl Default for IncidentSpec {
    fn default() -> Self {
        Self {
            angle: 0.0,
            amplitude: 1.0,
            density: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSpec {
    #[serde(default = "all_kinds")]
    pub kinds: Vec<String>,
    pub rho: f64,
    #[serde(default = "default_budget")]
    pub max_evals: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn all_kinds() -> Vec<String> {
    vec!["factorization".into(), "monotonicity".into()]
}

fn default_budget() -> usize {
    400
}

fn default_stride() -> usize {
    4
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::parse(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn tau(&self) -> f64 {
        self.rescale.map_or(1.0, |r| r.tau)
    }

    pub fn grid(&self) -> Result<Grid2D, CliError> {
        Ok(Grid2D::new(self.grid.half_width, self.grid.half_count)?)
    }

    pub fn quadrature(&self) -> Result<AngularQuadrature, CliError> {
        let quad = AngularQuadrature::new(self.quadrature.nodes)?;
        quad.check_modes(self.quadrature.modes)?;
        Ok(quad)
    }

    pub fn fixed_point(&self) -> Result<FixedPointConfig, CliError> {
        let fp = FixedPointConfig {
            tolerance: self.solver.tolerance,
            max_sweeps: self.solver.max_sweeps,
        };
        fp.validate()?;
        Ok(fp)
    }

    pub fn linear(&self) -> Result<LinearSolveConfig, CliError> {
        let lin = LinearSolveConfig {
            tolerance: self.solver.linear_tolerance,
            ..LinearSolveConfig::default()
        };
        lin.validate()?;
        Ok(lin)
    }

    pub fn kernel(&self) -> Result<ConvolutionKernel, CliError> {
        if !(self.wavenumber > 0.0 && self.wavenumber.is_finite()) {
            return Err(CliError::invariant(format!("wavenumber must be positive, got {}", self.wavenumber)));
        }
        Ok(ConvolutionKernel::new(self.grid()?, self.wavenumber)?)
    }

    /// Assembles the (rescaled) contrast. Terms sharing an exponent add up.
    pub fn contrast(&self) -> Result<Contrast, CliError> {
        let grid = self.grid()?;
        if let Some(r) = self.rescale {
            if !(r.tau > 0.0 && r.tau.is_finite()) {
                return Err(CliError::invariant(format!("rescale tau must be positive, got {}", r.tau)));
            }
        }
        if self.terms.is_empty() {
            return Err(CliError::invariant("no contrast terms"));
        }
        let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        let mut support = SupportMask::empty(grid);
        for term in &self.terms {
            if !(term.exponent >= 0.0 && term.exponent.is_finite()) {
                return Err(CliError::invariant(format!("exponent must be non-negative, got {}", term.exponent)));
            }
            let (field, mask) = self.term_profile(term, &grid)?;
            support = support.union(&mask)?;
            let entry = groups
                .entry(term.exponent.to_bits())
                .or_insert_with(|| (term.exponent, vec![0.0; grid.len()]));
            entry.1.iter_mut().zip(field.values()).for_each(|(a, b)| *a += b);
        }
        let mut terms: Vec<ContrastTerm> = groups
            .into_values()
            .map(|(exponent, values)| {
                Ok(ContrastTerm {
                    coefficient: RealField::from_values(grid, values)?,
                    exponent,
                })
            })
            .collect::<Result<_, CliError>>()?;
        terms.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        if terms[0].exponent != 0.0 {
            terms.insert(
                0,
                ContrastTerm {
                    coefficient: RealField::zeros(grid),
                    exponent: 0.0,
                },
            );
        }
        let contrast = Contrast::new(terms, support)?;
        match self.rescale {
            Some(r) => Ok(contrast.rescaled(r.tau)?),
            None => Ok(contrast),
        }
    }

    fn term_profile(&self, term: &TermSpec, grid: &Grid2D) -> Result<(RealField, SupportMask), CliError> {
        match (&term.shape, &term.raster) {
            (Some(spec), None) => {
                let c = term
                    .coefficient
                    .ok_or_else(|| CliError::parse("a shape term needs a coefficient"))?;
                let shape = spec.shape();
                shape.validate()?;
                match self.discretization {
                    Discretization::Coverage => {
                        let cov = coverage(&shape, grid)?;
                        let flags = cov.values().iter().map(|&v| v > 0.0).collect();
                        Ok((cov.scaled(c), SupportMask::from_flags(*grid, flags)?))
                    }
                    Discretization::Pointwise => {
                        let mask = rasterize(&shape, grid)?;
                        Ok((RealField::indicator(&mask, c), mask))
                    }
                }
            }
            (None, Some(path)) => {
                let raster = io::read_raster(&self.resolve(path), grid)?;
                let c = term.coefficient.unwrap_or(1.0);
                let flags = raster.values().iter().map(|&v| v != 0.0).collect();
                Ok((raster.scaled(c), SupportMask::from_flags(*grid, flags)?))
            }
            _ => Err(CliError::parse("each contrast term needs exactly one of `shape` or `raster`")),
        }
    }

    /// Precomputed scene for density-driven commands.
    pub fn scene(&self, contrast: Contrast) -> Result<Scene, CliError> {
        Ok(Scene::new(
            self.kernel()?,
            contrast,
            self.quadrature()?,
            self.quadrature.modes,
            self.fixed_point()?,
            self.linear()?,
        )?)
    }

    /// Reads a density file (physical units) and rescales it.
    pub fn density(&self, path: &Path) -> Result<Density, CliError> {
        let g = io::read_density(path, self.quadrature.modes)?;
        Ok(g.scaled(num_complex::Complex64::new(1.0 / self.tau(), 0.0)))
    }

    pub fn reconstruction(&self) -> Result<Reconstruction, CliError> {
        let spec = self
            .reconstruction
            .as_ref()
            .ok_or_else(|| CliError::parse("missing [reconstruction] section"))?;
        let kinds = spec
            .kinds
            .iter()
            .map(|k| k.parse::<ObjectiveKind>().map_err(|e| CliError::parse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if kinds.is_empty() {
            return Err(CliError::parse("reconstruction.kinds is empty"));
        }
        let optimizer = OptimizerConfig::new(spec.rho / self.tau()).with_max_evals(spec.max_evals);
        optimizer.validate()?;
        if spec.stride == 0 {
            return Err(CliError::invariant("shift stride must be positive"));
        }
        Ok(Reconstruction {
            kinds,
            optimizer,
            shifts: ShiftSet::Grid { stride: spec.stride },
        })
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<Contrast, CliError> {
        self.kernel()?;
        self.quadrature()?;
        self.fixed_point()?;
        self.linear()?;
        if self.threads == 0 {
            return Err(CliError::invariant("threads must be positive"));
        }
        if !(self.incident.amplitude.is_finite() && self.incident.angle.is_finite()) {
            return Err(CliError::invariant("incident angle and amplitude must be finite"));
        }
        let contrast = self.contrast()?;
        contrast.validate()?;
        if self.reconstruction.is_some() {
            self.reconstruction()?;
        }
        Ok(contrast)
    }
}

pub struct Reconstruction {
    pub kinds: Vec<ObjectiveKind>,
    pub optimizer: OptimizerConfig,
    pub shifts: ShiftSet,
}
