//! Shooting on the initial height `ξ`.
//!
//! Every shot integrates the radial Cauchy problem from `u(0) = ξ, u'(0) = 0`
//! and stops at the first decisive event:
//!
//! * `Turning`: `u'` returns to zero while `u > 0` (the set `I₊`);
//! * `Crossing`: `u` reaches zero while `u' < 0` (the set `I₋`).
//!
//! Both sets are open and disjoint, so bisection between a turning and a
//! crossing height converges to a height whose trajectory does neither: a
//! ground state.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{taylor_start, Integrator, IntegratorConfig, IntegratorStats, ProfileRow, RadialState};
use crate::nonlinearity::{bisect, AssumptionReport, Nonlinearity, Thresholds};
use crate::scalar::Real;

/// A radial problem: dimension, `f̃` (truncated when `β < ∞`) and thresholds.
#[derive(Clone, Debug)]
pub struct Problem<T: Real> {
    dimension: u32,
    original: Nonlinearity<T>,
    truncated: Nonlinearity<T>,
    thresholds: Thresholds<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(nl: Nonlinearity<T>, dimension: u32) -> Result<Self> {
        let thresholds = nl.compute_thresholds(dimension)?;
        let truncated = nl.truncate_at_beta(&thresholds);
        Ok(Self { dimension, original: nl, truncated, thresholds })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    /// `f̃`, the nonlinearity every shot uses.
    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        &self.truncated
    }

    pub fn original(&self) -> &Nonlinearity<T> {
        &self.original
    }

    pub fn thresholds(&self) -> &Thresholds<T> {
        &self.thresholds
    }

    pub fn assumptions(&self) -> AssumptionReport<T> {
        self.original.check_assumptions(self.dimension)
    }

    /// `min(β, scan_max)`, the upper end of the admissible heights.
    pub fn upper(&self) -> T {
        self.thresholds.beta.min(self.original.scan_max())
    }

    pub fn check_height(&self, xi: T) -> Result<()> {
        let (lower, upper) = (self.thresholds.alpha, self.upper());
        if xi > lower && xi < upper && xi.is_finite() {
            Ok(())
        } else {
            Err(Error::HeightOutOfRange { xi: xi.as_f64(), lower: lower.as_f64(), upper: upper.as_f64() })
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShootConfig<T> {
    pub integrator: IntegratorConfig<T>,
    pub r_max: T,
    pub u_tol: T,
    pub q_tol: T,
    pub xi_tol: T,
    /// Width to which event radii are localized.
    pub event_tol: T,
    pub max_bisections: usize,
    /// Stop as soon as `u < u_tol` and `|q| < q_tol`. When false the shot
    /// keeps going to a decisive event and only records where that happened.
    pub stop_at_candidate: bool,
    pub record_profile: bool,
}

impl<T: Real> Default for ShootConfig<T> {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            r_max: T::lit(100.0),
            u_tol: T::lit(1e-4),
            q_tol: T::lit(1e-4),
            xi_tol: T::lit(1e-10),
            event_tol: T::lit(1e-12),
            max_bisections: 200,
            stop_at_candidate: true,
            record_profile: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum Outcome<T> {
    Turning { r_turn: T },
    Crossing { r_cross: T },
    GroundCandidate { r_reached: T, u_final: T, q_final: T },
    Undetermined { r_max: T },
}

impl<T: Real> Outcome<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Turning { .. } => "Turning",
            Outcome::Crossing { .. } => "Crossing",
            Outcome::GroundCandidate { .. } => "GroundCandidate",
            Outcome::Undetermined { .. } => "Undetermined",
        }
    }

    /// Radius of a decisive event, if any.
    pub fn event_radius(&self) -> Option<T> {
        match *self {
            Outcome::Turning { r_turn } => Some(r_turn),
            Outcome::Crossing { r_cross } => Some(r_cross),
            _ => None,
        }
    }

    pub fn is_decisive(&self) -> bool {
        self.event_radius().is_some()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShotRecord<T: Real> {
    pub xi: T,
    pub outcome: Outcome<T>,
    /// State at the event or at termination.
    pub final_state: RadialState<T>,
    /// First radius where `u < u_tol` and `|q| < q_tol` held.
    pub candidate_radius: Option<T>,
    pub max_energy_residual: T,
    /// `min(1 - |u'|)` over the emitted rows.
    pub min_slope_margin: T,
    pub min_u: T,
    pub stats: IntegratorStats,
    #[serde(skip)]
    pub profile: Vec<ProfileRow<T>>,
}

struct RowTracker<T: Real> {
    keep: bool,
    rows: Vec<ProfileRow<T>>,
    max_residual: T,
    min_margin: T,
    min_u: T,
}

impl<T: Real> RowTracker<T> {
    fn push(&mut self, row: ProfileRow<T>) {
        self.max_residual = self.max_residual.max(row.energy_residual.abs());
        self.min_margin = self.min_margin.min(T::one() - row.uprime.abs());
        self.min_u = self.min_u.min(row.u);
        if self.keep {
            self.rows.push(row);
        }
    }
}

/// Integrates one shot from height `xi` and classifies it.
pub fn shoot<T: Real>(problem: &Problem<T>, xi: T, cfg: &ShootConfig<T>) -> Result<ShotRecord<T>> {
    problem.check_height(xi)?;
    let nl = problem.nonlinearity();
    let dim = problem.dimension();
    let mut it = Integrator::new(dim, nl, cfg.integrator)?;
    let stride = cfg.integrator.sample_stride;
    let mut tracker = RowTracker {
        keep: cfg.record_profile,
        rows: Vec::new(),
        max_residual: T::zero(),
        min_margin: T::one(),
        min_u: xi,
    };
    tracker.push(ProfileRow { r: T::zero(), u: xi, uprime: T::zero(), q: T::zero(), dissipation: T::zero(), energy_residual: T::zero() });

    let mut state = taylor_start(dim, nl, xi, cfg.integrator.r_start);
    let mut next_sample = 1usize;
    let mut candidate_radius = None;

    let finish = |it: &Integrator<T>, tracker: RowTracker<T>, outcome, final_state, candidate_radius| ShotRecord {
        xi,
        outcome,
        final_state,
        candidate_radius,
        max_energy_residual: tracker.max_residual,
        min_slope_margin: tracker.min_margin,
        min_u: tracker.min_u,
        stats: it.stats,
        profile: tracker.rows,
    };

    loop {
        if state.r >= cfg.r_max {
            return Ok(finish(&it, tracker, Outcome::Undetermined { r_max: cfg.r_max }, state, candidate_radius));
        }
        let new = it.step_adaptive(&state, cfg.r_max)?;

        let turning = new.q >= T::zero();
        let crossing = new.u <= T::zero();
        if turning || crossing {
            let locate = |it: &mut Integrator<T>, pred: &dyn Fn(&RadialState<T>) -> bool| {
                let mut probe = |r: T| pred(&it.step_exact(&state, r));
                bisect(&mut probe, state.r, new.r, cfg.event_tol)
            };
            let r_turn = turning.then(|| locate(&mut it, &|s| s.q >= T::zero()));
            let r_cross = crossing.then(|| locate(&mut it, &|s| s.u <= T::zero()));
            let (r_event, is_turn) = match (r_turn, r_cross) {
                (Some(a), Some(b)) if b < a => (b, false),
                (Some(a), _) => (a, true),
                (None, Some(b)) => (b, false),
                (None, None) => unreachable!(),
            };
            let at_event = it.step_exact(&state, r_event);
            // A turning point with u ≤ 0 is already past the crossing.
            let is_turn = is_turn && at_event.u > T::zero();
            emit_samples(&mut it, &mut tracker, &mut next_sample, stride, xi, &state, r_event, false)?;
            tracker.push(it.row(xi, &at_event)?);
            let outcome = if is_turn { Outcome::Turning { r_turn: r_event } } else { Outcome::Crossing { r_cross: r_event } };
            return Ok(finish(&it, tracker, outcome, at_event, candidate_radius));
        }

        emit_samples(&mut it, &mut tracker, &mut next_sample, stride, xi, &state, new.r, true)?;

        if new.u < cfg.u_tol && new.q.abs() < cfg.q_tol {
            if cfg.stop_at_candidate {
                if T::from_count(next_sample - 1) * stride != new.r {
                    tracker.push(it.row(xi, &new)?);
                }
                let outcome = Outcome::GroundCandidate { r_reached: new.r, u_final: new.u, q_final: new.q };
                return Ok(finish(&it, tracker, outcome, new, Some(new.r)));
            }
            candidate_radius.get_or_insert(new.r);
        }
        state = new;
    }
}

// Rows at multiples of the stride in (from.r, to] (or (from.r, to) when
// `inclusive` is false), each produced by a sub-step from `from`.
#[allow(clippy::too_many_arguments)]
fn emit_samples<T: Real>(
    it: &mut Integrator<T>,
    tracker: &mut RowTracker<T>,
    next_sample: &mut usize,
    stride: T,
    xi: T,
    from: &RadialState<T>,
    to: T,
    inclusive: bool,
) -> Result<()> {
    loop {
        let rs = T::from_count(*next_sample) * stride;
        if rs > to || (!inclusive && rs == to) {
            return Ok(());
        }
        let sample = it.step_exact(from, rs);
        tracker.push(it.row(xi, &sample)?);
        *next_sample += 1;
    }
}

/// Shots over a grid of heights, in parallel, results in grid order.
pub fn classify_scan<T: Real>(problem: &Problem<T>, grid: &[T], cfg: &ShootConfig<T>) -> Vec<Result<ShotRecord<T>>> {
    grid.par_iter().map(|&xi| shoot(problem, xi, cfg)).collect()
}

/// [`classify_scan`] on a dedicated pool of `threads` workers.
pub fn classify_scan_with_threads<T: Real>(
    problem: &Problem<T>,
    grid: &[T],
    cfg: &ShootConfig<T>,
    threads: usize,
) -> Result<Vec<Result<ShotRecord<T>>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| classify_scan(problem, grid, cfg)))
}

/// Adjacent scan heights whose classifications differ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassChange<T> {
    pub left: T,
    pub right: T,
    pub left_class: &'static str,
    pub right_class: &'static str,
    pub width: T,
}

/// Class changes between consecutive successful shots of a scan.
pub fn class_changes<T: Real>(records: &[Result<ShotRecord<T>>]) -> Vec<ClassChange<T>> {
    let shots: Vec<&ShotRecord<T>> = records.iter().filter_map(|r| r.as_ref().ok()).collect();
    shots
        .windows(2)
        .filter(|w| w[0].outcome.name() != w[1].outcome.name())
        .map(|w| ClassChange {
            left: w[0].xi,
            right: w[1].xi,
            left_class: w[0].outcome.name(),
            right_class: w[1].outcome.name(),
            width: (w[1].xi - w[0].xi).abs(),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Variational,
    Scan,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bracket<T> {
    /// A height in `I₊`.
    pub xi_plus: T,
    /// A height in `I₋`.
    pub xi_minus: T,
    pub source: SeedSource,
    pub notes: Vec<String>,
}

/// Classifies with a full run to a decisive event, ignoring the candidate test.
fn decisive_cfg<T: Real>(cfg: &ShootConfig<T>) -> ShootConfig<T> {
    ShootConfig { stop_at_candidate: false, record_profile: false, ..*cfg }
}

/// Finds `ξ₊ ∈ I₊` inside `(α, ξ₀)` and `ξ₋ ∈ I₋`, trying `seed` (the
/// variational height) first and scanning upward from `ξ₀` otherwise.
pub fn find_bracket<T: Real>(problem: &Problem<T>, cfg: &ShootConfig<T>, seed: Option<T>) -> Result<Bracket<T>> {
    let report = problem.assumptions();
    if !report.passes() {
        return Err(Error::AssumptionFailure(format!(
            "{} fails {:?} for N = {}",
            problem.original().label(),
            report.failures(),
            problem.dimension()
        )));
    }
    let th = *problem.thresholds();
    let run = decisive_cfg(cfg);
    let mut notes = Vec::new();

    let xi_plus = [0.5, 0.25, 0.75]
        .iter()
        .map(|&w| th.alpha + T::lit(w) * (th.xi0 - th.alpha))
        .find(|&xi| matches!(shoot(problem, xi, &run).map(|s| s.outcome), Ok(Outcome::Turning { .. })))
        .ok_or_else(|| Error::AssumptionFailure("no turning height found in (alpha, xi0)".into()))?;

    if let Some(seed) = seed {
        match shoot(problem, seed, &run) {
            Ok(shot) if matches!(shot.outcome, Outcome::Crossing { .. }) => {
                return Ok(Bracket { xi_plus, xi_minus: seed, source: SeedSource::Variational, notes });
            }
            Ok(shot) => notes.push(format!("variational seed {seed} classified {}; falling back to scan", shot.outcome.name())),
            Err(e) => notes.push(format!("variational seed {seed} rejected: {e}; falling back to scan")),
        }
    }

    let upper = problem.upper();
    let mut gap = upper - th.xi0;
    for _ in 0..60 {
        gap = gap * T::lit(0.5);
        let xi = upper - gap;
        if let Ok(shot) = shoot(problem, xi, &run) {
            if matches!(shot.outcome, Outcome::Crossing { .. }) {
                return Ok(Bracket { xi_plus, xi_minus: xi, source: SeedSource::Scan, notes });
            }
        }
    }
    Err(Error::BracketNotFound { upper: upper.as_f64() })
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateSolution<T: Real> {
    pub xi_star: T,
    /// Last turning height of the bisection.
    pub xi_turning: T,
    /// Last crossing height of the bisection.
    pub xi_crossing: T,
    pub bracket_width: T,
    pub iterations: usize,
    pub r_max_used: T,
    /// True when an undetermined midpoint ended the bisection.
    pub accepted_undetermined: bool,
    /// Classification of the shot from `xi_star` that produced the profile.
    pub final_outcome: Outcome<T>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub profile: Vec<ProfileRow<T>>,
}

/// Bisects between a turning and a crossing height.
pub fn bisect_ground_state<T: Real>(problem: &Problem<T>, bracket: (T, T), cfg: &ShootConfig<T>) -> Result<GroundStateSolution<T>> {
    let mut run = decisive_cfg(cfg);
    let (a, b) = bracket;
    let class_a = shoot(problem, a, &run)?.outcome;
    let class_b = shoot(problem, b, &run)?.outcome;
    let (mut lo, mut hi) = match (class_a, class_b) {
        (Outcome::Turning { .. }, Outcome::Crossing { .. }) => (a, b),
        (Outcome::Crossing { .. }, Outcome::Turning { .. }) => (b, a),
        _ => return Err(Error::InvalidBracket { left: class_a.name().into(), right: class_b.name().into() }),
    };
    let mut notes = Vec::new();
    if lo > hi {
        notes.push("turning height lies above crossing height".to_string());
    }
    let half = T::lit(0.5);
    let mut iterations = 0;
    let mut accepted_undetermined = false;
    let mut doubled = false;
    while (hi - lo).abs() > cfg.xi_tol {
        if iterations >= cfg.max_bisections {
            return Err(Error::FlipFlop { iterations });
        }
        let mid = half * (lo + hi);
        if mid == lo || mid == hi {
            notes.push("bracket reached floating point resolution".into());
            break;
        }
        iterations += 1;
        let mut outcome = shoot(problem, mid, &run)?.outcome;
        if matches!(outcome, Outcome::Undetermined { .. }) && !doubled {
            doubled = true;
            run.r_max = run.r_max * T::lit(2.0);
            notes.push(format!("undetermined midpoint {mid}: r_max doubled to {}", run.r_max));
            outcome = shoot(problem, mid, &run)?.outcome;
        }
        match outcome {
            Outcome::Turning { .. } => lo = mid,
            Outcome::Crossing { .. } => hi = mid,
            _ => {
                notes.push(format!("midpoint {mid} undetermined at r_max = {}; accepted as ground candidate", run.r_max));
                accepted_undetermined = true;
                break;
            }
        }
    }

    let xi_star = half * (lo + hi);
    let final_cfg = ShootConfig { stop_at_candidate: true, record_profile: true, r_max: run.r_max, ..*cfg };
    let shot = shoot(problem, xi_star, &final_cfg)?;
    let mut profile = shot.profile;
    if let Some(r) = shot.outcome.event_radius() {
        // The event row itself has u' = 0 or u = 0; keep the strictly monotone part.
        profile.pop();
        notes.push(format!("profile ends before the {} event at r = {r}", shot.outcome.name()));
    }
    Ok(GroundStateSolution {
        xi_star,
        xi_turning: lo,
        xi_crossing: hi,
        bracket_width: (hi - lo).abs(),
        iterations,
        r_max_used: run.r_max,
        accepted_undetermined,
        final_outcome: shot.outcome,
        notes,
        profile,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerifyConfig<T> {
    /// Smallest accepted value of `u`, `-u'` and successive decrements of `u`.
    pub sign_tol: T,
    pub margin_tol: T,
    pub res_tol: T,
    pub decay_tol: T,
    pub fd_tol: T,
}

impl<T: Real> Default for VerifyConfig<T> {
    fn default() -> Self {
        Self { sign_tol: T::lit(1e-10), margin_tol: T::lit(1e-3), res_tol: T::lit(1e-7), decay_tol: T::lit(1e-3), fd_tol: T::lit(1e-5) }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckResult<T> {
    pub passed: bool,
    pub value: T,
    pub tolerance: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport<T> {
    /// `u > 0`, `u' < 0` and `u` strictly decreasing for `r > 0`.
    pub positive_decreasing: CheckResult<T>,
    pub slope_margin: CheckResult<T>,
    pub energy_residual: CheckResult<T>,
    pub tail_decay: CheckResult<T>,
    pub ode_residual: CheckResult<T>,
    pub all_passed: bool,
}

/// Checks a sampled profile: positivity and monotonicity, slope margin,
/// energy residual, tail decay, and a nine-point finite-difference residual of
/// `u' = q/sqrt(1+q²)`, `q' + (N-1)q/r + f(u) = 0`.
pub fn verify_profile<T: Real>(profile: &[ProfileRow<T>], problem: &Problem<T>, stride: T, vcfg: &VerifyConfig<T>) -> VerificationReport<T> {
    let inner: Vec<&ProfileRow<T>> = profile.iter().filter(|p| p.r > T::zero()).collect();
    let mut worst_sign = T::infinity();
    for (k, row) in inner.iter().enumerate() {
        worst_sign = worst_sign.min(row.u).min(-row.uprime);
        if k > 0 {
            worst_sign = worst_sign.min(inner[k - 1].u - row.u);
        }
    }
    if inner.is_empty() {
        worst_sign = -T::one();
    }
    let positive_decreasing = CheckResult { passed: worst_sign > vcfg.sign_tol, value: worst_sign, tolerance: vcfg.sign_tol };

    let margin = profile.iter().map(|p| T::one() - p.uprime.abs()).fold(T::one(), |a, b| a.min(b));
    let slope_margin = CheckResult { passed: margin >= vcfg.margin_tol, value: margin, tolerance: vcfg.margin_tol };

    let residual = profile.iter().map(|p| p.energy_residual.abs()).fold(T::zero(), |a, b| a.max(b));
    let energy_residual = CheckResult { passed: residual <= vcfg.res_tol, value: residual, tolerance: vcfg.res_tol };

    let tail = profile.last().map(|p| p.u).unwrap_or(T::infinity());
    let tail_decay = CheckResult { passed: tail <= vcfg.decay_tol, value: tail, tolerance: vcfg.decay_tol };

    let fd = fd_residual(profile, problem, stride);
    let ode_residual = CheckResult { passed: fd <= vcfg.fd_tol, value: fd, tolerance: vcfg.fd_tol };

    let all_passed = [positive_decreasing.passed, slope_margin.passed, energy_residual.passed, tail_decay.passed, ode_residual.passed]
        .iter()
        .all(|&p| p);
    VerificationReport { positive_decreasing, slope_margin, energy_residual, tail_decay, ode_residual, all_passed }
}

/// Verifies a bisection result.
pub fn verify_ground_state<T: Real>(sol: &GroundStateSolution<T>, problem: &Problem<T>, stride: T, vcfg: &VerifyConfig<T>) -> VerificationReport<T> {
    verify_profile(&sol.profile, problem, stride, vcfg)
}

fn fd_residual<T: Real>(profile: &[ProfileRow<T>], problem: &Problem<T>, stride: T) -> T {
    // Leading run of rows on the uniform grid r_k = k * stride.
    let tol = stride * T::lit(1e-9);
    let grid: Vec<&ProfileRow<T>> = profile
        .iter()
        .enumerate()
        .take_while(|(k, p)| (p.r - T::from_count(*k) * stride).abs() <= tol)
        .map(|(_, p)| p)
        .collect();
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    if grid.len() < 2 * C.len() + 1 {
        return T::infinity();
    }
    let nl = problem.nonlinearity();
    let damping = T::from_count(problem.dimension() as usize - 1);
    let d = |v: fn(&ProfileRow<T>) -> T, i: usize| {
        C.iter().enumerate().map(|(k, &c)| T::lit(c) * (v(grid[i + k + 1]) - v(grid[i - k - 1]))).sum::<T>() / stride
    };
    let mut worst = T::zero();
    for i in C.len()..grid.len() - C.len() {
        let row = grid[i];
        let du = d(|p| p.u, i) - row.uprime;
        let dq = d(|p| p.q, i) + damping * row.q / row.r + nl.f(row.u);
        let local = du.abs().max(dq.abs());
        if !(local <= worst) {
            worst = local;
        }
    }
    worst
}
