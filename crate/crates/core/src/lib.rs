//! Forward scattering and qualitative shape reconstruction for the 2D
//! Helmholtz equation with a generalized Kerr-type refractive index
//! `n^2 = 1 + q0(x) + sum_l q_l(x) |u|^{alpha_l}`.
//!
//! The forward problem is solved through the nonlinear Lippmann-Schwinger
//! equation: one linear solve for the scattered field of the linearized
//! medium, then a fixed-point iteration for the nonlinear correction. The
//! nonlinear far field operator built on top of it drives two support
//! indicators, an inf-criterion of factorization type and a monotonicity
//! criterion.

pub mod contrast;
pub mod disk;
pub mod error;
pub mod estimates;
pub mod field;
pub mod forward;
pub mod grid;
pub mod herglotz;
pub mod kernel;
pub mod krylov;
pub mod reconstruction;
pub mod special;

pub use contrast::{Contrast, ContrastDiagnostics, ContrastTerm};
pub use error::{Error, Result};
pub use field::{ComplexField, RealField};
pub use forward::{FarFieldPattern, FixedPointConfig, ForwardResult};
pub use grid::{coverage, rasterize, Grid2D, Shape, SupportMask};
pub use herglotz::{AngularQuadrature, Density, Scene};
pub use kernel::ConvolutionKernel;
pub use krylov::LinearSolveConfig;
pub use reconstruction::{IndicatorMap, ObjectiveKind, OptimizerConfig};
