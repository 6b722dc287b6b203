use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::herglotz::Scene;

use super::objective::{ObjectiveKind, PointObjective};
use super::optimize::{minimize_with, OptimizerConfig, StopReason};
use super::search::{CandidateCache, ShiftSet};

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok(StopReason),
    Failed(String),
}

impl PointStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PointStatus::Ok(StopReason::Stationary) => "stationary",
            PointStatus::Ok(StopReason::Stalled) => "stalled",
            PointStatus::Ok(StopReason::Budget) => "budget",
            PointStatus::Ok(StopReason::StepUnderflow) => "step_underflow",
            PointStatus::Failed(_) => "failed",
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok(_))
    }
}

/// One indicator value per sampling point. Failed points hold `NaN`.
#[derive(Debug, Clone)]
pub struct IndicatorMap {
    pub grid: Grid2D,
    pub kind: ObjectiveKind,
    /// Best global-search value per point.
    pub initial: Vec<f64>,
    pub values: Vec<f64>,
    pub evaluations: Vec<usize>,
    pub status: Vec<PointStatus>,
    pub seconds: Vec<f64>,
    pub candidates: usize,
}

impl IndicatorMap {
    pub fn failures(&self) -> usize {
        self.status.iter().filter(|s| !s.is_ok()).count()
    }

    /// Mean value over the points selected by `select`, skipping failures.
    pub fn mean_where(&self, select: impl Fn(usize) -> bool) -> f64 {
        let (sum, n) = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, v)| select(*i) && v.is_finite())
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        sum / n as f64
    }
}

/// Indicator map of `kind` over `sampling`.
pub fn indicator_map(
    kind: ObjectiveKind,
    sampling: &Grid2D,
    scene: &Scene,
    cfg: &OptimizerConfig,
    shifts: &ShiftSet,
) -> Result<IndicatorMap> {
    Ok(indicator_maps(&[kind], sampling, scene, cfg, shifts)?.remove(0))
}

/// Maps for several objectives sharing one candidate cache.
pub fn indicator_maps(
    kinds: &[ObjectiveKind],
    sampling: &Grid2D,
    scene: &Scene,
    cfg: &OptimizerConfig,
    shifts: &ShiftSet,
) -> Result<Vec<IndicatorMap>> {
    cfg.validate()?;
    let cache = CandidateCache::build(scene, &shifts.points(sampling)?, cfg.rho)?;
    if cache.is_empty() {
        return Err(Error::AllDegenerate);
    }
    kinds
        .iter()
        .map(|&kind| {
            let points: Vec<_> = (0..sampling.len())
                .into_par_iter()
                .map(|idx| solve_point(kind, sampling.point(idx), scene, cfg, &cache))
                .collect();
            let mut map = IndicatorMap {
                grid: *sampling,
                kind,
                initial: Vec::with_capacity(points.len()),
                values: Vec::with_capacity(points.len()),
                evaluations: Vec::with_capacity(points.len()),
                status: Vec::with_capacity(points.len()),
                seconds: Vec::with_capacity(points.len()),
                candidates: cache.len(),
            };
            for p in points {
                map.initial.push(p.initial);
                map.values.push(p.value);
                map.evaluations.push(p.evaluations);
                map.status.push(p.status);
                map.seconds.push(p.seconds);
            }
            Ok(map)
        })
        .collect()
}

struct PointResult {
    initial: f64,
    value: f64,
    evaluations: usize,
    status: PointStatus,
    seconds: f64,
}

fn solve_point(
    kind: ObjectiveKind,
    z: [f64; 2],
    scene: &Scene,
    cfg: &OptimizerConfig,
    cache: &CandidateCache,
) -> PointResult {
    let start = Instant::now();
    let run = || -> Result<(f64, f64, usize, StopReason)> {
        let objective = PointObjective::new(kind, z, scene, cfg.denominator_floor)?;
        let (best, initial) = cache.best(&objective)?;
        let density = &cache.candidates()[best].density;
        let out = minimize_with(&objective, density, Some(initial), cfg)?;
        Ok((initial, out.value, out.evaluations, out.stop))
    };
    match run() {
        Ok((initial, value, evaluations, stop)) => PointResult {
            initial,
            value,
            evaluations,
            status: PointStatus::Ok(stop),
            seconds: start.elapsed().as_secs_f64(),
        },
        Err(e) => PointResult {
            initial: f64::NAN,
            value: f64::NAN,
            evaluations: 0,
            status: PointStatus::Failed(e.to_string()),
            seconds: start.elapsed().as_secs_f64(),
        },
    }
}
