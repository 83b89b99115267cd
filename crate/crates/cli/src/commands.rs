use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use minkowski_core::pipeline::{self, Stage};
use minkowski_core::shooting::{self, class_changes, classify_scan, classify_scan_with_threads, Problem, ShootConfig, ShotRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{self, ScanRow, Summary};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ASSUMPTION: u8 = 2;
pub const EXIT_BRACKET: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

fn stage_code(stage: Stage) -> u8 {
    match stage {
        Stage::Thresholds | Stage::Assumptions => EXIT_ASSUMPTION,
        Stage::Bracket | Stage::Bisection => EXIT_BRACKET,
        Stage::Verification => EXIT_VERIFICATION,
    }
}

struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    fn start(cfg: &RunConfig) -> Self {
        Self { start: Instant::now(), enabled: cfg.run.wall_clock }
    }

    fn stamp(&self, timings: &mut BTreeMap<&'static str, Value>) {
        if self.enabled {
            timings.insert("wall_seconds", json!(self.start.elapsed().as_secs_f64()));
        }
    }
}

fn finish(mut summary: Summary, clock: &Clock, code: u8) -> Result<u8> {
    clock.stamp(&mut summary.timings);
    summary.exit_code = code;
    summary.emit()?;
    Ok(code)
}

/// Builds the problem, or records a threshold failure in `summary`.
fn problem_or_fail(cfg: &RunConfig, summary: &mut Summary) -> Result<Option<Problem<f64>>> {
    let dimension = cfg.dimension()?;
    let nl = cfg.nonlinearity()?;
    match Problem::new(nl.clone(), dimension) {
        Ok(p) => {
            summary.thresholds = output::json(p.thresholds())?;
            summary.assumption_report = output::json(&p.assumptions())?;
            Ok(Some(p))
        }
        Err(e) => {
            summary.assumption_report = output::json(&nl.check_assumptions(dimension))?;
            summary.failure = Some(json!({ "stage": "thresholds", "message": e.to_string() }));
            Ok(None)
        }
    }
}

pub fn thresholds(cfg: &RunConfig) -> Result<u8> {
    let clock = Clock::start(cfg);
    let mut summary = Summary::new("thresholds", cfg);
    let Some(problem) = problem_or_fail(cfg, &mut summary)? else {
        return finish(summary, &clock, EXIT_ASSUMPTION);
    };
    let failures = problem.assumptions().failures();
    if failures.is_empty() {
        finish(summary, &clock, EXIT_OK)
    } else {
        summary.failure = Some(json!({ "stage": "assumptions", "message": format!("assumptions {failures:?} fail") }));
        finish(summary, &clock, EXIT_ASSUMPTION)
    }
}

pub fn shoot(cfg: &RunConfig) -> Result<u8> {
    let clock = Clock::start(cfg);
    let xi = cfg.shooting.xi.context("missing xi (pass --xi or set shooting.xi)")?;
    let shoot_cfg = cfg.shoot_config()?;
    let mut summary = Summary::new("shoot", cfg);
    let Some(problem) = problem_or_fail(cfg, &mut summary)? else {
        return finish(summary, &clock, EXIT_ASSUMPTION);
    };
    problem.check_height(xi)?;
    let shot = shooting::shoot(&problem, xi, &shoot_cfg)?;
    if let Some(path) = &cfg.output.profile {
        output::write_profile(path, &shot.profile)?;
    }
    summary.timings.insert("accepted_steps", json!(shot.stats.accepted));
    summary.timings.insert("rejected_steps", json!(shot.stats.rejected));
    summary.timings.insert("rhs_evaluations", json!(shot.stats.evaluations));
    summary.timings.insert("profile_rows", json!(shot.profile.len()));
    summary.outcome = Some(output::json(&shot)?);
    finish(summary, &clock, EXIT_OK)
}

fn scan_row(xi: f64, shot: &Result<ShotRecord<f64>, minkowski_core::Error>) -> ScanRow {
    match shot {
        Ok(s) => ScanRow { xi, class: s.outcome.name(), event_r: Some(s.final_state.r), max_residual: Some(s.max_energy_residual) },
        Err(_) => ScanRow { xi, class: "Error", event_r: None, max_residual: None },
    }
}

fn run_scan(problem: &Problem<f64>, grid: &[f64], cfg: &ShootConfig<f64>, threads: usize) -> Result<Vec<Result<ShotRecord<f64>, minkowski_core::Error>>> {
    Ok(if threads == 0 { classify_scan(problem, grid, cfg) } else { classify_scan_with_threads(problem, grid, cfg, threads)? })
}

pub fn scan(cfg: &RunConfig) -> Result<u8> {
    let clock = Clock::start(cfg);
    let shoot_cfg = ShootConfig { record_profile: false, ..cfg.shoot_config()? };
    let mut summary = Summary::new("scan", cfg);
    let Some(problem) = problem_or_fail(cfg, &mut summary)? else {
        return finish(summary, &clock, EXIT_ASSUMPTION);
    };
    let th = problem.thresholds();
    let lo = cfg.scan.xi_min.unwrap_or(th.alpha + 1e-3);
    let hi = cfg.scan.xi_max.unwrap_or(problem.upper() - 1e-3);
    let points = cfg.scan.points.unwrap_or(101);
    if points < 2 {
        bail!("points must be at least 2, got {points}");
    }
    if !(lo < hi) {
        bail!("xi_min ({lo}) must be below xi_max ({hi})");
    }
    problem.check_height(lo)?;
    problem.check_height(hi)?;
    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect();

    let shots = run_scan(&problem, &grid, &shoot_cfg, cfg.run.threads)?;
    let rows: Vec<ScanRow> = grid.iter().zip(&shots).map(|(&xi, s)| scan_row(xi, s)).collect();
    if let Some(path) = &cfg.output.scan_csv {
        output::write_scan(path, &rows)?;
    }
    let changes = class_changes(&shots);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &rows {
        *counts.entry(r.class).or_default() += 1;
    }
    let errors: Vec<Value> = grid
        .iter()
        .zip(&shots)
        .filter_map(|(xi, s)| s.as_ref().err().map(|e| json!({ "xi": xi, "error": e.to_string() })))
        .collect();

    let near_change = |i: usize| {
        let class = rows[i].class;
        (i > 0 && rows[i - 1].class != class) || (i + 1 < rows.len() && rows[i + 1].class != class)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut picks = Vec::new();
    let mut skipped = 0usize;
    for _ in 0..cfg.run.checks {
        let i = rng.gen_range(0..rows.len());
        let delta = 1e-6 * rng.gen_range(-1.0..1.0) * step;
        let xi = grid[i] + delta;
        if rows[i].class == "Error" || near_change(i) || problem.check_height(xi).is_err() {
            skipped += 1;
        } else {
            picks.push((i, xi));
        }
    }
    let perturbed: Vec<f64> = picks.iter().map(|&(_, xi)| xi).collect();
    let rechecked = run_scan(&problem, &perturbed, &shoot_cfg, cfg.run.threads)?;
    let mut disagreements = Vec::new();
    for (&(i, xi), shot) in picks.iter().zip(&rechecked) {
        let class = scan_row(xi, shot).class;
        if class != rows[i].class {
            disagreements.push(json!({ "xi": xi, "grid_xi": grid[i], "class": class, "grid_class": rows[i].class }));
        }
    }

    let work: usize = shots.iter().chain(&rechecked).filter_map(|s| s.as_ref().ok()).map(|s| s.stats.evaluations).sum();
    summary.timings.insert("rhs_evaluations", json!(work));
    summary.timings.insert("shots", json!(shots.len() + rechecked.len()));
    summary.scan = Some(json!({
        "xi_min": lo,
        "xi_max": hi,
        "points": points,
        "counts": counts,
        "class_changes": output::json(&changes)?,
        "errors": errors,
        "stability": {
            "seed": cfg.run.seed,
            "requested": cfg.run.checks,
            "performed": picks.len(),
            "skipped": skipped,
            "disagreements": disagreements,
        },
    }));
    finish(summary, &clock, EXIT_OK)
}

pub fn solve(cfg: &RunConfig) -> Result<u8> {
    let clock = Clock::start(cfg);
    let dimension = cfg.dimension()?;
    let nl = cfg.nonlinearity()?;
    let solve_cfg = cfg.solve_config()?;
    let report = pipeline::solve(nl.clone(), dimension, &solve_cfg);

    let mut summary = Summary::new("solve", cfg);
    summary.thresholds = output::json(&report.thresholds)?;
    summary.assumption_report = match &report.assumption_report {
        Some(r) => output::json(r)?,
        None => output::json(&nl.check_assumptions(dimension))?,
    };
    summary.solution = Some(json!({
        "variational": output::json(&report.variational)?,
        "variational_error": report.variational_error,
        "bracket": output::json(&report.bracket)?,
        "ground_state": output::json(&report.solution)?,
    }));
    summary.verification = report.verification.as_ref().map(output::json).transpose()?;
    summary.failure = report.failure.as_ref().map(output::json).transpose()?;

    if let Some(sol) = &report.solution {
        summary.timings.insert("bisection_iterations", json!(sol.iterations));
        summary.timings.insert("profile_rows", json!(sol.profile.len()));
        if let Some(path) = &cfg.output.profile {
            output::write_profile(path, &sol.profile)?;
        }
    }
    if let Some(v) = &report.variational {
        summary.timings.insert("minimizer_iterations", json!(v.minimization.iterations));
    }
    if let (Some(grid), Some(path)) = (&report.minimizer, &cfg.output.variational_csv) {
        let problem = Problem::new(nl, dimension)?;
        output::write_profile(path, &grid.profile_rows(dimension, problem.nonlinearity())?)?;
    }
    let code = report.failure.as_ref().map_or(EXIT_OK, |f| stage_code(f.stage));
    finish(summary, &clock, code)
}
