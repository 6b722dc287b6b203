use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, SupportMask};

/// Complex samples on every point of a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid2D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        Self {
            grid,
            values: grid.points().map(f).collect(),
        }
    }

    /// The plane wave `exp(i k d . x)` with `d = (cos angle, sin angle)`.
    pub fn plane_wave(grid: Grid2D, k: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_fn(grid, |p| Complex64::from_polar(1.0, k * (c * p[0] + s * p[1])))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        if self.grid != *grid {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: self.grid.len(),
            });
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `h^2`-weighted L2 norm over the whole grid.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.step();
        h * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        other.check_grid(&self.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        other.check_grid(&self.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Zeroes every sample outside `mask`.
    pub fn restricted(&self, mask: &SupportMask) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(mask.flags())
                .map(|(v, &inside)| if inside { *v } else { Complex64::new(0.0, 0.0) })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl Index<usize> for ComplexField {
    type Output = Complex64;
    fn index(&self, index: usize) -> &Complex64 {
        &self.values[index]
    }
}

impl IndexMut<usize> for ComplexField {
    fn index_mut(&mut self, index: usize) -> &mut Complex64 {
        &mut self.values[index]
    }
}

/// Real samples on a grid; used for contrast coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// `value` on the mask, zero elsewhere.
    pub fn indicator(mask: &SupportMask, value: f64) -> Self {
        Self {
            grid: *mask.grid(),
            values: mask
                .flags()
                .iter()
                .map(|&inside| if inside { value } else { 0.0 })
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

impl Index<usize> for RealField {
    type Output = f64;
    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}
