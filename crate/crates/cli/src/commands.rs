use std::path::{Path, PathBuf};
use std::time::Instant;

use nlhelm::disk::{DiskTransmission, DEFAULT_MODES};
use nlhelm::estimates::assumption_check;
use nlhelm::forward;
use nlhelm::herglotz::herglotz;
use nlhelm::reconstruction::indicator_maps;
use nlhelm::{ComplexField, Contrast, ConvolutionKernel, Density, ForwardResult, Grid2D};
use num_complex::Complex64;
use serde_json::json;

use crate::config::{Discretization, RunConfig, ShapeSpec};
use crate::error::CliError;
use crate::io::{self, RunLog};

/// Samples used by `validate` for the empirical contrast constant.
const VALIDATE_SAMPLES: usize = 10_000;

/// Fraction of sampling points that must succeed for `reconstruct` to exit 0.
const MIN_SUCCESS: f64 = 0.9;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn out_dir(&self) -> Result<&Path, CliError> {
        std::fs::create_dir_all(&self.out)?;
        Ok(&self.out)
    }

    fn file(&self, name: &str) -> Result<PathBuf, CliError> {
        Ok(self.out_dir()?.join(name))
    }
}

pub fn validate(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let q = cfg.validate()?;
    let d = q.validate()?;
    let report = assumption_check(&q, VALIDATE_SAMPLES, ctx.seed);
    let grid = cfg.grid()?;
    let kernel = cfg.kernel()?;
    println!("wavenumber: {}", cfg.wavenumber);
    println!(
        "grid: R = {}, J = {}, h = {}, {} x {} points",
        grid.half_width(),
        grid.half_count(),
        grid.step(),
        grid.side(),
        grid.side()
    );
    println!("fft: {0} x {0}", kernel.padded_side());
    println!("discretization: {}", match cfg.discretization {
        Discretization::Coverage => "coverage",
        Discretization::Pointwise => "pointwise",
    });
    if let Some(r) = cfg.rescale {
        println!("rescale: tau = {:e}", r.tau);
    }
    println!("support cells: {}", q.support().count());
    for t in q.terms() {
        println!("term: exponent {}, sup coefficient {:.6e}", t.exponent, t.coefficient.sup_norm());
    }
    println!("essinf(1 + q0): {:.6}", d.essinf_one_plus_q0);
    println!("min q0 on support: {:.6e}", d.q0_min);
    match d.alpha {
        Some(alpha) => println!(
            "empirical C_q: {:.6} (alpha = {alpha}, sum of sup coefficients {:.6}, seed {})",
            report.empirical_constant, report.coefficient_bound, ctx.seed
        ),
        None => println!("empirical C_q: 0 (linear medium)"),
    }
    println!("quadrature: M = {}, N = {}", cfg.quadrature.nodes, cfg.quadrature.modes);
    println!("valid");
    Ok(())
}

/// Incident field from `--density`, the config density, or the plane wave.
fn incident(
    ctx: &Context,
    grid: &Grid2D,
    angle: Option<f64>,
    density: Option<&Path>,
) -> Result<(ComplexField, Option<Density>), CliError> {
    let cfg = &ctx.config;
    let path = density
        .map(Path::to_path_buf)
        .or_else(|| angle.is_none().then(|| cfg.incident.density.as_ref().map(|p| cfg.resolve(p))).flatten());
    match path {
        Some(p) => {
            let g = cfg.density(&p)?;
            Ok((herglotz(&g, grid, cfg.wavenumber, &cfg.quadrature()?)?, Some(g)))
        }
        None => {
            let theta = angle.unwrap_or(cfg.incident.angle);
            let amp = cfg.incident.amplitude / cfg.tau();
            Ok((ComplexField::plane_wave(*grid, cfg.wavenumber, theta).scaled(Complex64::new(amp, 0.0)), None))
        }
    }
}

fn solve(
    ctx: &Context,
    kernel: &ConvolutionKernel,
    q: &Contrast,
    ui: &ComplexField,
    log: &mut RunLog,
) -> Result<ForwardResult, CliError> {
    let cfg = &ctx.config;
    match forward::solve_nonlinear(kernel, q, ui, &cfg.fixed_point()?, &cfg.linear()?) {
        Ok(r) => {
            for (s, inc) in r.increment_history.iter().enumerate() {
                log.record(json!({"event": "sweep", "sweep": s + 1, "increment": inc}))?;
            }
            Ok(r)
        }
        Err(e) => {
            let err = CliError::from(e);
            if let Some(h) = &err.history {
                for (s, inc) in h.iter().enumerate() {
                    log.record(json!({"event": "sweep", "sweep": s + 1, "increment": inc}))?;
                }
            }
            log.record(json!({"event": "error", "message": err.message}))?;
            Err(err)
        }
    }
}

pub fn forward(ctx: &Context, angle: Option<f64>, density: Option<&Path>) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let q = cfg.validate()?;
    let kernel = cfg.kernel()?;
    let grid = *kernel.grid();
    let (ui, g) = incident(ctx, &grid, angle, density)?;
    let mut log = RunLog::create(&ctx.file("run.jsonl")?)?;
    log.record(json!({"event": "start", "command": "forward", "seed": ctx.seed, "tau": cfg.tau()}))?;
    let start = Instant::now();
    let result = solve(ctx, &kernel, &q, &ui, &mut log);
    let r = match result {
        Ok(r) => r,
        Err(e) => {
            log.finish()?;
            return Err(e);
        }
    };
    io::write_field(&ctx.file("u0s.csv")?, &r.u0s)?;
    io::write_field(&ctx.file("w.csv")?, &r.w)?;
    io::write_field(&ctx.file("total.csv")?, &r.total(&ui)?)?;
    if let Some(g) = &g {
        io::write_density(&ctx.file("density.csv")?, g)?;
    }
    let seconds = start.elapsed().as_secs_f64();
    log.record(json!({
        "event": "done",
        "sweeps": r.iterations_used,
        "u0s_sup": r.u0s.sup_norm(),
        "w_sup": r.w.sup_norm(),
        "seconds": seconds,
    }))?;
    log.finish()?;
    println!(
        "converged in {} sweeps, |u0s| = {:.6e}, |w| = {:.6e}",
        r.iterations_used,
        r.u0s.sup_norm(),
        r.w.sup_norm()
    );
    if let Some(last) = r.increment_history.last() {
        println!("last increment: {last:.3e}");
    }
    Ok(())
}

pub fn farfield(ctx: &Context, density: Option<&Path>) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let q = cfg.validate()?;
    let path = density
        .map(Path::to_path_buf)
        .or_else(|| cfg.incident.density.as_ref().map(|p| cfg.resolve(p)))
        .ok_or_else(|| CliError::parse("farfield needs --density or incident.density"))?;
    let g = cfg.density(&path)?;
    if cfg.reconstruction.is_some() {
        let rho = cfg.reconstruction()?.optimizer.rho;
        if g.norm() > rho * (1.0 + 1e-12) {
            return Err(CliError::invariant(format!("density norm {:.6e} exceeds rho {rho:.6e}", g.norm())));
        }
    }
    let kernel = cfg.kernel()?;
    let grid = *kernel.grid();
    let ui = herglotz(&g, &grid, cfg.wavenumber, &cfg.quadrature()?)?;
    let mut log = RunLog::create(&ctx.file("run.jsonl")?)?;
    log.record(json!({"event": "start", "command": "farfield", "seed": ctx.seed, "tau": cfg.tau()}))?;
    let r = match solve(ctx, &kernel, &q, &ui, &mut log) {
        Ok(r) => r,
        Err(e) => {
            log.finish()?;
            return Err(e);
        }
    };
    let pattern = forward::far_field(&kernel, &q, &ui, &r.u0s, &r.w, cfg.quadrature.nodes)?;
    io::write_far_field(&ctx.file("farfield.csv")?, &pattern)?;
    log.record(json!({"event": "done", "nodes": pattern.nodes(), "l2": pattern.l2_norm()}))?;
    log.finish()?;
    println!("far field: {} nodes, L2 norm {:.6e}", pattern.nodes(), pattern.l2_norm());
    Ok(())
}

pub fn reconstruct(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let q = cfg.validate()?;
    let rec = cfg.reconstruction()?;
    let warning = q.require_positive_q0().err().map(|e| e.to_string());
    if let Some(w) = &warning {
        eprintln!("warning: {w}");
    }
    let start = Instant::now();
    let scene = cfg.scene(q)?;
    let sampling = *scene.grid();
    let maps = indicator_maps(&rec.kinds, &sampling, &scene, &rec.optimizer, &rec.shifts)?;

    let mut log = RunLog::create(&ctx.file("run.jsonl")?)?;
    log.record(json!({
        "event": "start",
        "command": "reconstruct",
        "seed": ctx.seed,
        "tau": cfg.tau(),
        "rho": rec.optimizer.rho,
        "max_evals": rec.optimizer.max_evals,
        "candidates": maps[0].candidates,
        "warning": warning,
    }))?;
    let mut failed = 0;
    let mut total = 0;
    for map in &maps {
        let name = map.kind.name();
        io::write_indicator(&ctx.file(&format!("{name}_initial.csv"))?, map, &map.initial)?;
        io::write_indicator(&ctx.file(&format!("{name}.csv"))?, map, &map.values)?;
        io::write_heatmap(&ctx.file(&format!("{name}_initial.pgm"))?, &sampling, &map.initial)?;
        io::write_heatmap(&ctx.file(&format!("{name}.pgm"))?, &sampling, &map.values)?;
        for idx in 0..sampling.len() {
            let (i, j) = sampling.lattice(idx);
            let status = &map.status[idx];
            let detail = match status {
                nlhelm::reconstruction::PointStatus::Failed(msg) => msg.clone(),
                _ => String::new(),
            };
            log.record(json!({
                "event": "point",
                "kind": name,
                "i": i,
                "j": j,
                "initial": finite_or_null(map.initial[idx]),
                "value": finite_or_null(map.values[idx]),
                "evals": map.evaluations[idx],
                "stop": status.label(),
                "detail": detail,
                "seconds": map.seconds[idx],
            }))?;
        }
        failed += map.failures();
        total += sampling.len();
        println!("{name}: {} of {} points ok", sampling.len() - map.failures(), sampling.len());
    }
    let seconds = start.elapsed().as_secs_f64();
    log.record(json!({"event": "done", "failed": failed, "points": total, "seconds": seconds}))?;
    log.finish()?;
    let ok = (total - failed) as f64 / total as f64;
    if ok < MIN_SUCCESS {
        return Err(CliError {
            code: 4,
            message: format!("only {:.1}% of sampling points succeeded", 100.0 * ok),
            history: None,
        });
    }
    Ok(())
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

pub fn oracle_disk(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    cfg.validate()?;
    let [term] = cfg.terms.as_slice() else {
        return Err(CliError::invariant("oracle-disk needs exactly one contrast term"));
    };
    let (Some(ShapeSpec::Disk { center, radius }), Some(q0), 0.0) = (&term.shape, term.coefficient, term.exponent)
    else {
        return Err(CliError::invariant("oracle-disk needs a constant-q0 disk term"));
    };
    if *center != [0.0, 0.0] {
        return Err(CliError::invariant("oracle-disk needs a disk centred at the origin"));
    }
    let (k, angle) = (cfg.wavenumber, cfg.incident.angle);
    let exact = DiskTransmission::new(k, q0, *radius, angle, DEFAULT_MODES)?;
    let coarse = cfg.grid()?;
    let mut log = RunLog::create(&ctx.file("run.jsonl")?)?;
    log.record(json!({"event": "start", "command": "oracle-disk", "q0": q0, "radius": radius, "k": k}))?;
    let mut errors = Vec::new();
    for grid in [coarse, coarse.refined()] {
        let mut level = cfg.clone();
        level.grid.half_count = grid.half_count();
        let q = level.contrast()?;
        let kernel = ConvolutionKernel::new(grid, k)?;
        let ui = ComplexField::plane_wave(grid, k, angle);
        let us = forward::solve_linear(&kernel, &q, &ui, &cfg.linear()?)?;
        let reference = exact.scattered_field(&grid);
        let abs = us.sub(&reference)?.sup_norm();
        let scale = reference.sup_norm();
        let rel = if scale > 0.0 { abs / scale } else { abs };
        println!("h = {}: sup error {abs:.6e}, relative {rel:.6e}", grid.step());
        log.record(json!({"event": "level", "h": grid.step(), "sup_error": abs, "relative": rel}))?;
        errors.push(abs);
    }
    let ratio = if errors[1] > 0.0 { errors[0] / errors[1] } else { f64::INFINITY };
    println!("convergence factor: {ratio:.3}");
    log.record(json!({"event": "done", "ratio": finite_or_null(ratio)}))?;
    log.finish()
}
