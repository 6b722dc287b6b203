//! Preliminary global search over shifted single-mode densities
//! `g_{p,l,z'}(t) = rho i^p e^{i l t} e^{-i k (z'_1 cos t + z'_2 sin t)} / sqrt(2 pi)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::herglotz::{project_density, Density, Scene};

use super::objective::{ObjectiveKind, PointObjective};

/// The shift points `z'` of the candidate family.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSet {
    /// Every sampling point whose lattice indices are multiples of `stride`.
    Grid { stride: usize },
    Points(Vec<[f64; 2]>),
}

impl ShiftSet {
    pub fn points(&self, sampling: &Grid2D) -> Result<Vec<[f64; 2]>> {
        match self {
            ShiftSet::Grid { stride } => {
                if *stride == 0 {
                    return Err(Error::InvalidParameter("shift stride must be positive".into()));
                }
                let s = *stride as i64;
                Ok((0..sampling.len())
                    .filter(|&idx| {
                        let (i, j) = sampling.lattice(idx);
                        i % s == 0 && j % s == 0
                    })
                    .map(|idx| sampling.point(idx))
                    .collect())
            }
            ShiftSet::Points(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub phase: u8,
    pub mode: i64,
    pub shift: [f64; 2],
    pub density: Density,
    /// `<F(g), g>`, or `None` when the forward solve failed.
    pub numerator: Option<Complex64>,
}

/// Candidate densities with their `z`-independent numerators.
#[derive(Debug, Clone)]
pub struct CandidateCache {
    candidates: Vec<Candidate>,
}

impl CandidateCache {
    /// Builds the family in `(p, l, z')` lexicographic order and evaluates
    /// `<F(g), g>` once per candidate, in parallel.
    pub fn build(scene: &Scene, shifts: &[[f64; 2]], rho: f64) -> Result<Self> {
        let quad = scene.quadrature();
        let k = scene.wavenumber();
        let modes = scene.modes();
        let half = (modes / 2) as i64;
        let norm = rho / (2.0 * std::f64::consts::PI).sqrt();
        let mut specs = Vec::with_capacity(2 * modes * shifts.len());
        for phase in 0..2u8 {
            for mode in -half..half {
                for shift in shifts {
                    specs.push((phase, mode, *shift));
                }
            }
        }
        let candidates = specs
            .into_par_iter()
            .map(|(phase, mode, shift)| -> Result<Option<Candidate>> {
                let ip = if phase == 0 { Complex64::new(norm, 0.0) } else { Complex64::new(0.0, norm) };
                let values: Vec<Complex64> = (0..quad.nodes())
                    .map(|m| {
                        let t = quad.angle(m);
                        let d = quad.direction(m);
                        ip * Complex64::from_polar(1.0, mode as f64 * t - k * (shift[0] * d[0] + shift[1] * d[1]))
                    })
                    .collect();
                let Some(density) = project_density(&values, modes, quad)?.normalized_to(rho) else {
                    return Ok(None);
                };
                let numerator = scene.far_field_form(&density).ok();
                Ok(Some(Candidate {
                    phase,
                    mode,
                    shift,
                    density,
                    numerator,
                }))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(Self { candidates })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Index and value of the best candidate for the objective; the first
    /// candidate wins ties.
    pub fn best(&self, objective: &PointObjective<'_>) -> Result<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.candidates.iter().enumerate() {
            let Some(num) = c.numerator else { continue };
            let Ok(den) = objective.denominator(&c.density) else { continue };
            let v = objective.kind.value(num, den);
            if !v.is_finite() {
                continue;
            }
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        best.ok_or(Error::AllDegenerate)
    }
}

/// Best candidate density and its objective value at sampling point `z`.
pub fn global_search_init(
    kind: ObjectiveKind,
    z: [f64; 2],
    scene: &Scene,
    shifts: &ShiftSet,
    sampling: &Grid2D,
    rho: f64,
    floor: f64,
) -> Result<(Density, f64)> {
    let cache = CandidateCache::build(scene, &shifts.points(sampling)?, rho)?;
    let objective = PointObjective::new(kind, z, scene, floor)?;
    let (i, v) = cache.best(&objective)?;
    Ok((cache.candidates[i].density.clone(), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::fixtures::{grid, scene};

    #[test]
    fn shift_points_follow_the_stride() {
        let g = Grid2D::new(3.0, 10).unwrap();
        let pts = ShiftSet::Grid { stride: 4 }.points(&g).unwrap();
        assert_eq!(pts.len(), 25);
        assert!(pts.contains(&[0.0, 0.0]));
        assert_eq!(ShiftSet::Grid { stride: 1 }.points(&g).unwrap().len(), 441);
        assert!(ShiftSet::Grid { stride: 0 }.points(&g).is_err());
    }

    #[test]
    fn candidate_family_size_and_norm() {
        let s = scene(1.16, 0.26);
        let cache = CandidateCache::build(&s, &[[0.5, 0.0]], 1.0).unwrap();
        assert_eq!(cache.len(), 2 * 4);
        assert!(cache.candidates().iter().all(|c| (c.density.norm() - 1.0).abs() < 1e-14));
        assert!(cache.candidates().iter().all(|c| c.numerator.is_some()));
        let order: Vec<(u8, i64)> = cache.candidates().iter().map(|c| (c.phase, c.mode)).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
    }

    #[test]
    fn zero_medium_ties_resolve_to_first_candidate() {
        let s = scene(0.0, 0.0);
        let sampling = grid();
        let shifts = ShiftSet::Grid { stride: 3 };
        let cache = CandidateCache::build(&s, &shifts.points(&sampling).unwrap(), 1.0).unwrap();
        let obj = PointObjective::new(ObjectiveKind::Factorization, [0.0, 0.0], &s, 1e-10).unwrap();
        let (i, v) = cache.best(&obj).unwrap();
        assert_eq!((i, v), (0, 0.0));
        let first = &cache.candidates()[0];
        let corner = -6.0 * sampling.step();
        assert_eq!((first.phase, first.mode, first.shift), (0, -2, [corner, corner]));
    }

    #[test]
    fn search_returns_the_minimum_over_candidates() {
        let s = scene(1.16, 0.26);
        let sampling = grid();
        let z = [0.1, 0.2];
        let shifts = ShiftSet::Points(vec![z, [1.0, 0.0]]);
        let (g, v) = global_search_init(ObjectiveKind::Monotonicity, z, &s, &shifts, &sampling, 1.0, 1e-10).unwrap();
        let cache = CandidateCache::build(&s, &shifts.points(&sampling).unwrap(), 1.0).unwrap();
        let obj = PointObjective::new(ObjectiveKind::Monotonicity, z, &s, 1e-10).unwrap();
        for c in cache.candidates() {
            if let Ok(x) = obj.eval(&c.density) {
                assert!(v <= x);
            }
        }
        assert_eq!(obj.eval(&g).unwrap(), v);
    }

    #[test]
    fn floor_above_every_pairing_is_all_degenerate() {
        let s = scene(1.16, 0.0);
        let r = global_search_init(
            ObjectiveKind::Factorization,
            [0.0, 0.0],
            &s,
            &ShiftSet::Points(vec![[0.0, 0.0]]),
            &grid(),
            1.0,
            1e6,
        );
        assert!(matches!(r, Err(Error::AllDegenerate)));
    }
}
