//! CSV, PGM and JSON-lines output, plus the CSV inputs (rasters, densities).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nlhelm::{ComplexField, Density, FarFieldPattern, Grid2D, IndicatorMap, RealField};
use num_complex::Complex64;

use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Data rows of a CSV file with the expected header, split on commas.
fn read_rows(path: &Path, header: &str) -> Result<Vec<Vec<String>>, CliError> {
    let file = File::open(path).map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first.trim() != header {
        return Err(CliError::parse(format!(
            "{}: expected header `{header}`, found `{}`",
            path.display(),
            first.trim()
        )));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(row: &[String], col: usize, path: &Path) -> Result<T, CliError> {
    row.get(col)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::parse(format!("{}: malformed row `{}`", path.display(), row.join(","))))
}

pub fn write_field(path: &Path, field: &ComplexField) -> Result<(), CliError> {
    let grid = field.grid();
    let mut w = create(path)?;
    writeln!(w, "i,j,x,y,re,im")?;
    for (idx, v) in field.values().iter().enumerate() {
        let (i, j) = grid.lattice(idx);
        let [x, y] = grid.point(idx);
        writeln!(w, "{i},{j},{x:.16e},{y:.16e},{:.16e},{:.16e}", v.re, v.im)?;
    }
    Ok(w.flush()?)
}

pub fn write_far_field(path: &Path, pattern: &FarFieldPattern) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "phi,re,im")?;
    for (m, v) in pattern.samples.iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", pattern.angle(m), v.re, v.im)?;
    }
    Ok(w.flush()?)
}

pub fn write_density(path: &Path, g: &Density) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "n,re,im")?;
    for (s, c) in g.coeffs().iter().enumerate() {
        writeln!(w, "{},{:.16e},{:.16e}", g.frequency(s), c.re, c.im)?;
    }
    Ok(w.flush()?)
}

/// Reads `n,re,im` rows into a density with `modes` coefficients. Missing
/// frequencies are zero.
pub fn read_density(path: &Path, modes: usize) -> Result<Density, CliError> {
    let mut g = Density::zeros(modes)?;
    let mut coeffs = g.coeffs().to_vec();
    for row in read_rows(path, "n,re,im")? {
        let n: i64 = field(&row, 0, path)?;
        let slot = g
            .slot(n)
            .ok_or_else(|| CliError::parse(format!("{}: frequency {n} outside the {modes} modes", path.display())))?;
        coeffs[slot] = Complex64::new(field(&row, 1, path)?, field(&row, 2, path)?);
    }
    g = Density::new(coeffs)?;
    Ok(g)
}

/// Reads `i,j,value` rows into a grid function. Missing cells are zero.
pub fn read_raster(path: &Path, grid: &Grid2D) -> Result<RealField, CliError> {
    let mut values = vec![0.0; grid.len()];
    let jj = grid.half_count() as i64;
    for row in read_rows(path, "i,j,value")? {
        let (i, j): (i64, i64) = (field(&row, 0, path)?, field(&row, 1, path)?);
        if i.abs() > jj || j.abs() > jj {
            return Err(CliError::parse(format!("{}: cell ({i}, {j}) outside the grid", path.display())));
        }
        let v: f64 = field(&row, 2, path)?;
        if !v.is_finite() {
            return Err(CliError::parse(format!("{}: non-finite value at ({i}, {j})", path.display())));
        }
        values[grid.index(i, j)] = v;
    }
    Ok(RealField::from_values(*grid, values)?)
}

pub fn write_indicator(path: &Path, map: &IndicatorMap, values: &[f64]) -> Result<(), CliError> {
    let grid = &map.grid;
    let mut w = create(path)?;
    writeln!(w, "i,j,x,y,value,evals,status")?;
    for (idx, v) in values.iter().enumerate() {
        let (i, j) = grid.lattice(idx);
        let [x, y] = grid.point(idx);
        let status = if map.status[idx].is_ok() { "ok" } else { "failed" };
        writeln!(w, "{i},{j},{x:.16e},{y:.16e},{v:.16e},{},{status}", map.evaluations[idx])?;
    }
    Ok(w.flush()?)
}

/// Min-max normalized 8-bit PGM, top row `j = +J`, with a `min`/`max`
/// sidecar next to it. Non-finite values are drawn as 0.
pub fn write_heatmap(path: &Path, grid: &Grid2D, values: &[f64]) -> Result<(), CliError> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let side = grid.side();
    let jj = grid.half_count() as i64;
    let mut pixels = Vec::with_capacity(side * side);
    for j in (-jj..=jj).rev() {
        for i in -jj..=jj {
            let v = values[grid.index(i, j)];
            let t = if v.is_finite() && hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
            pixels.push((255.0 * t).round() as u8);
        }
    }
    let mut w = create(path)?;
    write!(w, "P5\n{side} {side}\n255\n")?;
    w.write_all(&pixels)?;
    w.flush()?;
    let mut side_file = create(&path.with_extension("pgm.txt"))?;
    writeln!(side_file, "min {lo:.16e}\nmax {hi:.16e}")?;
    Ok(side_file.flush()?)
}

/// Append-only JSON-lines log.
pub struct RunLog {
    out: BufWriter<File>,
}

impl RunLog {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        Ok(Self { out: create(path)? })
    }

    pub fn record(&mut self, value: serde_json::Value) -> Result<(), CliError> {
        writeln!(self.out, "{value}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        Ok(self.out.flush()?)
    }
}
