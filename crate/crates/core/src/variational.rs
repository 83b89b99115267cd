//! The functional `J(u) = Ψ(u) - ∫ r^{N-1} F̃(u)` on radial functions over
//! `[0, ρ]` with `|u'| ≤ 1` and `u(ρ) = 0`, discretized on a uniform grid.
//!
//! Unknowns are the cell slopes `s_i`, with nodal values reconstructed from the
//! right end (`u_n = 0`, `u_i = u_{i+1} - s_i h`), so the admissible set is a box.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{kinetic_from_flux, ProfileRow};
use crate::nonlinearity::{Nonlinearity, Thresholds};
use crate::scalar::{flux_from_slope, phi, NeumaierSum, Real};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction<T> {
    rho: T,
    slopes: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(rho: T, slopes: Vec<T>) -> Result<Self> {
        if !(rho > T::zero() && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive and finite, got {rho}")));
        }
        if slopes.len() < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 cells, got {}", slopes.len())));
        }
        if let Some(s) = slopes.iter().find(|s| !(s.abs() <= T::one())) {
            return Err(Error::InvalidParameter(format!("slope {s} outside [-1, 1]")));
        }
        Ok(Self { rho, slopes })
    }

    pub fn zero(rho: T, cells: usize) -> Result<Self> {
        Self::new(rho, vec![T::zero(); cells])
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn cells(&self) -> usize {
        self.slopes.len()
    }

    pub fn h(&self) -> T {
        self.rho / T::from_count(self.cells())
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    pub fn node(&self, i: usize) -> T {
        T::from_count(i) * self.h()
    }

    /// Nodal values `u_0, ..., u_n` with `u_n = 0`.
    pub fn values(&self) -> Vec<T> {
        let h = self.h();
        let n = self.cells();
        let mut u = vec![T::zero(); n + 1];
        for i in (0..n).rev() {
            u[i] = u[i + 1] - self.slopes[i] * h;
        }
        u
    }

    pub fn value_at_origin(&self) -> T {
        -self.slopes.iter().copied().collect::<NeumaierSum<T>>().value() * self.h()
    }

    pub fn max_abs_slope(&self) -> T {
        self.slopes.iter().fold(T::zero(), |m, s| m.max(s.abs()))
    }

    /// Rows in the shooting profile layout: `u' = s` on the cell to the right
    /// of each node (the last node reuses the last cell), `D` accumulated by the
    /// midpoint rule, and the energy residual relative to `u_0`.
    pub fn profile_rows(&self, dimension: u32, nl: &Nonlinearity<T>) -> Result<Vec<ProfileRow<T>>> {
        let u = self.values();
        let n = self.cells();
        let h = self.h();
        let damping = T::from_count(dimension as usize - 1);
        let f_top = nl.primitive(u[0])?;
        let mut dissipation = NeumaierSum::new();
        let mut rows = Vec::with_capacity(n + 1);
        for (i, &ui) in u.iter().enumerate() {
            let s = self.slopes[i.min(n - 1)];
            let q = flux_from_slope(s);
            let d = dissipation.value();
            let residual = kinetic_from_flux(q) + damping * d - f_top + nl.primitive(ui)?;
            rows.push(ProfileRow { r: self.node(i), u: ui, uprime: s, q, dissipation: d, energy_residual: residual });
            if i < n {
                let mid = (T::from_count(i) + T::lit(0.5)) * h;
                dissipation.add(h * q * q / (mid * (T::one() + q * q).sqrt()));
            }
        }
        Ok(rows)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    /// Projected gradient with Armijo backtracking.
    ProjectedGradient,
    /// Newton step on nodal values (tridiagonal Hessian), projected and
    /// backtracked, with a projected gradient step when it fails to descend.
    ProjectedNewton,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MinimizeConfig<T> {
    pub max_iters: usize,
    pub policy: StepPolicy,
    pub grad_tol: T,
    pub eps_s: T,
    pub cells: usize,
    pub armijo: T,
    pub max_backtracks: usize,
    pub relax_eps: bool,
}

impl<T: Real> Default for MinimizeConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            policy: StepPolicy::ProjectedNewton,
            grad_tol: T::lit(1e-8),
            eps_s: T::lit(1e-6),
            cells: 2000,
            armijo: T::lit(1e-4),
            max_backtracks: 60,
            relax_eps: true,
        }
    }
}

impl<T: Real> MinimizeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.grad_tol > T::zero()
            && self.eps_s > T::zero()
            && self.eps_s < T::one()
            && self.cells >= 2
            && self.armijo > T::zero()
            && self.armijo < T::one()
            && self.max_backtracks > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid minimizer configuration {self:?}")))
        }
    }
}

struct Weights<T> {
    /// `r_{i+1/2}^{N-1}` per cell.
    cell: Vec<T>,
    /// Trapezoid weight times `r_j^{N-1}` per node.
    node: Vec<T>,
}

fn weights<T: Real>(dimension: u32, rho: T, n: usize) -> Weights<T> {
    let h = rho / T::from_count(n);
    let e = dimension as i32 - 1;
    let cell = (0..n).map(|i| ((T::from_count(i) + T::lit(0.5)) * h).powi(e)).collect();
    let node = (0..=n)
        .map(|j| {
            let w = if j == 0 || j == n { T::lit(0.5) * h } else { h };
            w * (T::from_count(j) * h).powi(e)
        })
        .collect();
    Weights { cell, node }
}

fn primitives<T: Real>(nl: &Nonlinearity<T>, u: &[T]) -> Result<Vec<T>> {
    u.iter().map(|&x| nl.primitive(x)).collect()
}

/// Midpoint rule for `Ψ`, trapezoid rule for `∫ r^{N-1} F̃(u)`.
pub fn discrete_j<T: Real>(dimension: u32, nl: &Nonlinearity<T>, gf: &GridFunction<T>) -> Result<T> {
    let w = weights(dimension, gf.rho, gf.cells());
    let big_f = primitives(nl, &gf.values())?;
    Ok(j_from_parts(&w, gf.h(), &gf.slopes, &big_f))
}

fn j_from_parts<T: Real>(w: &Weights<T>, h: T, slopes: &[T], big_f: &[T]) -> T {
    let mut acc = NeumaierSum::new();
    for (&s, &r) in slopes.iter().zip(&w.cell) {
        acc.add(h * r * phi(s));
    }
    for (&f, &wj) in big_f.iter().zip(&w.node) {
        acc.add(-wj * f);
    }
    acc.value()
}

/// Gradient of [`discrete_j`] with respect to the slopes.
pub fn gradient<T: Real>(dimension: u32, nl: &Nonlinearity<T>, gf: &GridFunction<T>) -> Vec<T> {
    let w = weights(dimension, gf.rho, gf.cells());
    gradient_with(&w, gf.h(), &gf.slopes, &gf.values(), nl)
}

fn gradient_with<T: Real>(w: &Weights<T>, h: T, slopes: &[T], u: &[T], nl: &Nonlinearity<T>) -> Vec<T> {
    let mut prefix = NeumaierSum::new();
    slopes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            prefix.add(w.node[i] * nl.f(u[i]));
            h * w.cell[i] * flux_from_slope(s) + h * prefix.value()
        })
        .collect()
}

/// `w_ρ`: equal to `γ` on `[0, ρ - 2γ]`, then `(ρ - r)/2`, sampled on `cells` cells.
pub fn trial_w_rho<T: Real>(rho: T, gamma: T, cells: usize) -> Result<GridFunction<T>> {
    if !(gamma > T::zero()) || !(rho > T::lit(2.0) * gamma) {
        return Err(Error::TrialRadius { rho: rho.as_f64(), gamma: gamma.as_f64() });
    }
    let h = rho / T::from_count(cells);
    let knee = rho - T::lit(2.0) * gamma;
    let half = T::lit(0.5);
    let slopes = (0..cells)
        .map(|i| {
            let left = T::from_count(i) * h;
            let right = T::from_count(i + 1) * h;
            if left >= knee {
                -half
            } else if right <= knee {
                T::zero()
            } else {
                -half * (right - knee) / h
            }
        })
        .collect();
    GridFunction::new(rho, slopes)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RhoChoice<T> {
    pub rho: T,
    pub j_trial: T,
    pub doublings: usize,
}

pub const MAX_RHO_DOUBLINGS: usize = 20;

/// Smallest `ρ = 4γ 2^k` with `J(w_ρ) < -tol_neg`.
pub fn choose_rho<T: Real>(dimension: u32, nl: &Nonlinearity<T>, gamma: T, cells: usize, tol_neg: T) -> Result<RhoChoice<T>> {
    let fg = nl.primitive(gamma)?;
    if !(fg > T::zero()) {
        return Err(Error::InvalidParameter(format!("F(gamma) must be positive, got F({gamma}) = {fg}")));
    }
    let mut rho = T::lit(4.0) * gamma;
    let mut j = T::zero();
    for doublings in 0..=MAX_RHO_DOUBLINGS {
        j = discrete_j(dimension, nl, &trial_w_rho(rho, gamma, cells)?)?;
        if j < -tol_neg {
            return Ok(RhoChoice { rho, j_trial: j, doublings });
        }
        if doublings < MAX_RHO_DOUBLINGS {
            rho = rho * T::lit(2.0);
        }
    }
    Err(Error::RhoSearch { doublings: MAX_RHO_DOUBLINGS, rho: rho.as_f64(), j: j.as_f64() })
}

/// The `γ` used for `w_ρ`: a height above `ξ₀` where `F > 0`, namely
/// `min(2ξ₀, (ξ₀ + β)/2, scan_max)`.
pub fn witness_gamma<T: Real>(nl: &Nonlinearity<T>, th: &Thresholds<T>) -> T {
    let two = T::lit(2.0);
    let mut g = (two * th.xi0).min(nl.scan_max());
    if th.beta_is_finite() {
        g = g.min((th.xi0 + th.beta) / two);
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Projected gradient norm at or below `grad_tol`.
    GradientTolerance,
    /// No step could lower `J` by more than its rounding error.
    RoundingFloor,
    /// Newton steps kept being cut short by the slope bound.
    BoundLimited,
    MaxIterations,
}

#[derive(Clone, Debug, Serialize)]
pub struct Minimization<T> {
    pub grid: GridFunction<T>,
    pub j: T,
    pub j_trial: T,
    pub iterations: usize,
    pub projected_gradient_norm: T,
    pub converged: bool,
    pub stop: StopReason,
    /// Slope margin in force at the end.
    pub eps_s: T,
    /// Some slope rests on `±(1 - eps_s)`.
    pub bound_active: bool,
    pub newton_steps: usize,
    pub gradient_steps: usize,
    /// `J` after every accepted step, starting with `J(w_ρ)`.
    pub history: Vec<T>,
}

struct Minimizer<'a, T: Real> {
    nl: &'a Nonlinearity<T>,
    w: Weights<T>,
    h: T,
    bound: T,
    armijo: T,
    max_backtracks: usize,
}

struct Point<T> {
    s: Vec<T>,
    u: Vec<T>,
    j: T,
    /// Sum of the magnitudes of the terms of `j`.
    scale: T,
}

impl<T: Real> Minimizer<'_, T> {
    fn point(&self, s: Vec<T>) -> Result<Point<T>> {
        let n = s.len();
        let mut u = vec![T::zero(); n + 1];
        for i in (0..n).rev() {
            u[i] = u[i + 1] - s[i] * self.h;
        }
        let big_f = primitives(self.nl, &u)?;
        let j = j_from_parts(&self.w, self.h, &s, &big_f);
        let scale = s.iter().zip(&self.w.cell).map(|(&si, &r)| self.h * r * phi(si)).sum::<T>()
            + big_f.iter().zip(&self.w.node).map(|(&f, &w)| (w * f).abs()).sum::<T>();
        Ok(Point { s, u, j, scale })
    }

    fn clip(&self, x: T) -> T {
        x.max(-self.bound).min(self.bound)
    }

    fn projected_gradient_norm(&self, p: &Point<T>, g: &[T]) -> T {
        p.s.iter().zip(g).map(|(&s, &gi)| (self.clip(s - gi) - s).powi(2)).sum::<T>().sqrt()
    }

    /// Backtracks along `t ↦ clip(s + t d)` until the Armijo condition holds.
    fn search(&self, p: &Point<T>, g: &[T], d: &[T], t0: T) -> Result<Option<(Point<T>, T)>> {
        let mut t = t0;
        for _ in 0..self.max_backtracks {
            let s: Vec<T> = p.s.iter().zip(d).map(|(&s, &di)| self.clip(s + t * di)).collect();
            let slope = s.iter().zip(&p.s).zip(g).map(|((&a, &b), &gi)| gi * (a - b)).sum::<T>();
            if slope < T::zero() {
                let trial = self.point(s)?;
                if trial.j <= p.j + self.armijo * slope {
                    return Ok(Some((trial, t)));
                }
            }
            t = t * T::lit(0.5);
        }
        Ok(None)
    }

    /// Drops components that push an active bound outward.
    fn feasible_direction(&self, s: &[T], mut d: Vec<T>) -> Vec<T> {
        for (di, &si) in d.iter_mut().zip(s) {
            if (si >= self.bound && *di > T::zero()) || (si <= -self.bound && *di < T::zero()) {
                *di = T::zero();
            }
        }
        d
    }

    /// Some slope within a thousandth of the margin from the bound.
    fn near_bound(&self, s: &[T]) -> bool {
        let eps = T::one() - self.bound;
        s.iter().any(|x| self.bound - x.abs() <= T::lit(1e-3) * eps)
    }

    /// Largest `t ≤ 1` keeping every slope at least halfway from the bound.
    fn step_to_boundary(&self, s: &[T], d: &[T]) -> T {
        let half = T::lit(0.5);
        s.iter().zip(d).fold(T::one(), |t, (&si, &di)| {
            let room = if di > T::zero() {
                self.bound - si
            } else if di < T::zero() {
                self.bound + si
            } else {
                return t;
            };
            t.min(half * room / di.abs())
        })
    }

    /// Newton direction in nodal values mapped to slopes; `None` when the
    /// solve breaks down.
    fn newton_direction(&self, p: &Point<T>, g: &[T]) -> Option<Vec<T>> {
        let n = p.s.len();
        let h = self.h;
        let curv: Vec<T> = p.s.iter().zip(&self.w.cell).map(|(&s, &r)| r * (T::one() - s * s).powf(T::lit(-1.5)) / h).collect();
        // Gradient in nodal values u_0..u_{n-1}: g_u,j = (g_{j-1} - g_j) / h.
        let gu: Vec<T> = (0..n).map(|j| (if j > 0 { g[j - 1] } else { T::zero() } - g[j]) / h).collect();
        let solve = |convexify: bool| -> Option<Vec<T>> {
            let mut diag: Vec<T> = (0..n)
                .map(|j| {
                    let mut v = curv[j] - self.w.node[j] * self.nl.derivative(p.u[j]);
                    if convexify {
                        v = curv[j] + (-self.w.node[j] * self.nl.derivative(p.u[j])).max(T::zero());
                    }
                    if j > 0 {
                        v = v + curv[j - 1];
                    }
                    v
                })
                .collect();
            let mut rhs: Vec<T> = gu.iter().map(|&x| -x).collect();
            for j in 1..n {
                if !(diag[j - 1] > T::zero()) {
                    return None;
                }
                let m = -curv[j - 1] / diag[j - 1];
                diag[j] = diag[j] + m * curv[j - 1];
                rhs[j] = rhs[j] - m * rhs[j - 1];
            }
            if !(diag[n - 1] > T::zero()) {
                return None;
            }
            let mut du = vec![T::zero(); n + 1];
            du[n - 1] = rhs[n - 1] / diag[n - 1];
            for j in (0..n - 1).rev() {
                du[j] = (rhs[j] + curv[j] * du[j + 1]) / diag[j];
            }
            let ds: Vec<T> = (0..n).map(|i| (du[i + 1] - du[i]) / h).collect();
            ds.iter().all(|x| x.is_finite()).then_some(ds)
        };
        solve(false).or_else(|| solve(true))
    }
}

/// Smallest slope margin `ε_s` reached by relaxation.
pub const MIN_EPS_S: f64 = 1e-12;

/// Consecutive bound-limited Newton steps before the bound counts as active.
const BOUND_PATIENCE: usize = 8;

struct Log<T> {
    history: Vec<T>,
    iterations: usize,
    newton_steps: usize,
    gradient_steps: usize,
}

impl<T: Real> Minimizer<'_, T> {
    fn descend(&self, p: &mut Point<T>, cfg: &MinimizeConfig<T>, log: &mut Log<T>, watch_bound: bool) -> Result<(StopReason, T)> {
        let mut t_grad = T::one();
        let mut cut_short = 0;
        loop {
            let g = gradient_with(&self.w, self.h, &p.s, &p.u, self.nl);
            let pg = self.projected_gradient_norm(p, &g);
            if pg <= cfg.grad_tol {
                return Ok((StopReason::GradientTolerance, pg));
            }
            if log.iterations >= cfg.max_iters {
                return Ok((StopReason::MaxIterations, pg));
            }
            log.iterations += 1;
            let floor = T::lit(64.0) * T::epsilon() * p.scale;
            let mut promised = t_grad * pg * pg;

            if cfg.policy == StepPolicy::ProjectedNewton {
                if let Some(d) = self.newton_direction(p, &g) {
                    let d = self.feasible_direction(&p.s, d);
                    let decrement = -g.iter().zip(&d).map(|(&a, &b)| a * b).sum::<T>();
                    let t0 = self.step_to_boundary(&p.s, &d);
                    cut_short = if t0 < T::one() && self.near_bound(&p.s) { cut_short + 1 } else { 0 };
                    if watch_bound && cut_short >= BOUND_PATIENCE {
                        return Ok((StopReason::BoundLimited, pg));
                    }
                    if decrement > T::zero() && decrement <= floor {
                        // J no longer resolves the progress: judge full steps by stationarity.
                        let trial = self.point(p.s.iter().zip(&d).map(|(&s, &di)| self.clip(s + t0 * di)).collect())?;
                        let g_trial = gradient_with(&self.w, self.h, &trial.s, &trial.u, self.nl);
                        let pg_trial = self.projected_gradient_norm(&trial, &g_trial);
                        if pg_trial < T::lit(0.5) * pg && trial.j <= p.j + floor {
                            *p = trial;
                            log.history.push(p.j);
                            log.newton_steps += 1;
                            continue;
                        }
                        return Ok((StopReason::RoundingFloor, pg));
                    }
                    if decrement > T::zero() {
                        promised = decrement;
                    }
                    if let Some((q, _)) = self.search(p, &g, &d, t0)? {
                        *p = q;
                        log.history.push(p.j);
                        log.newton_steps += 1;
                        continue;
                    }
                }
            }

            let d: Vec<T> = g.iter().map(|&x| -x).collect();
            if let Some((q, t)) = self.search(p, &g, &d, t_grad)? {
                t_grad = t * T::lit(2.0);
                *p = q;
                log.history.push(p.j);
                log.gradient_steps += 1;
                continue;
            }
            if promised <= floor {
                return Ok((StopReason::RoundingFloor, pg));
            }
            return Err(Error::NoDescent { iteration: log.iterations });
        }
    }
}

/// Minimizes `J` over slopes in `[-(1-ε_s), 1-ε_s]`, starting from `w_ρ`.
///
/// With `relax_eps`, a minimizer that rests on the slope bound is restarted
/// with `ε_s` reduced a thousandfold, down to [`MIN_EPS_S`].
pub fn minimize_j<T: Real>(dimension: u32, nl: &Nonlinearity<T>, rho: T, gamma: T, cfg: &MinimizeConfig<T>) -> Result<Minimization<T>> {
    cfg.validate()?;
    let start = trial_w_rho(rho, gamma, cfg.cells)?;
    let mut eps = cfg.eps_s;
    let mut m = Minimizer {
        nl,
        w: weights(dimension, rho, cfg.cells),
        h: start.h(),
        bound: T::one() - eps,
        armijo: cfg.armijo,
        max_backtracks: cfg.max_backtracks,
    };
    let mut p = m.point(start.slopes.iter().map(|&s| m.clip(s)).collect())?;
    let j_trial = p.j;
    let mut log = Log { history: vec![p.j], iterations: 0, newton_steps: 0, gradient_steps: 0 };
    loop {
        let next_eps = eps * T::lit(1e-3);
        let can_relax = cfg.relax_eps && next_eps >= T::lit(MIN_EPS_S);
        let (mut stop, mut pg) = m.descend(&mut p, cfg, &mut log, can_relax)?;
        let bound_active = stop == StopReason::BoundLimited || m.near_bound(&p.s);
        if bound_active && can_relax && stop != StopReason::MaxIterations {
            eps = next_eps;
            m.bound = T::one() - eps;
            continue;
        }
        if stop == StopReason::BoundLimited {
            (stop, pg) = m.descend(&mut p, cfg, &mut log, false)?;
        }
        return Ok(Minimization {
            grid: GridFunction::new(rho, p.s)?,
            j: p.j,
            j_trial,
            iterations: log.iterations,
            projected_gradient_norm: pg,
            converged: stop != StopReason::MaxIterations,
            stop,
            eps_s: eps,
            bound_active,
            newton_steps: log.newton_steps,
            gradient_steps: log.gradient_steps,
            history: log.history,
        });
    }
}

/// `ξ̄ = u(0)`, required to lie in `(α, β)`.
pub fn seed_from_minimizer<T: Real>(gf: &GridFunction<T>, th: &Thresholds<T>) -> Result<T> {
    let seed = gf.value_at_origin();
    if seed > th.alpha && seed < th.beta {
        Ok(seed)
    } else {
        Err(Error::SeedOutOfRange { seed: seed.as_f64(), alpha: th.alpha.as_f64(), beta: th.beta.as_f64() })
    }
}

/// Maximum over interior nodes of
/// `|R_{i+1/2} φ'(s_i) - R_{i-1/2} φ'(s_{i-1}) + h r_i^{N-1} f(u_i)| / (h r_i^{N-1})`.
pub fn ode_residual_of_minimizer<T: Real>(gf: &GridFunction<T>, nl: &Nonlinearity<T>, dimension: u32) -> T {
    let n = gf.cells();
    let h = gf.h();
    let e = dimension as i32 - 1;
    let u = gf.values();
    let flux = |i: usize| ((T::from_count(i) + T::lit(0.5)) * h).powi(e) * flux_from_slope(gf.slopes[i]);
    (1..n)
        .map(|i| {
            let ri = (T::from_count(i) * h).powi(e);
            ((flux(i) - flux(i - 1) + h * ri * nl.f(u[i])) / (h * ri)).abs()
        })
        .fold(T::zero(), |a, b| if b > a || b.is_nan() { b } else { a })
}

/// Radii of interior nodes where the reconstruction is not positive.
pub fn interior_zeros<T: Real>(gf: &GridFunction<T>) -> Vec<T> {
    let u = gf.values();
    (0..gf.cells()).filter(|&i| u[i] <= T::zero()).map(|i| gf.node(i)).collect()
}

/// `-(ρ^N / N) max_{[0, ρ]} |F|`, sampled on the grid nodes and `ρ`.
pub fn lower_bound<T: Real>(dimension: u32, nl: &Nonlinearity<T>, rho: T, samples: usize) -> Result<T> {
    let mut worst = T::zero();
    for k in 0..=samples {
        let s = rho * T::from_count(k) / T::from_count(samples);
        worst = worst.max(nl.primitive(s)?.abs());
    }
    Ok(-rho.powi(dimension as i32) / T::from_count(dimension as usize) * worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalSeed<T> {
    pub gamma: T,
    pub rho: RhoChoice<T>,
    pub minimization: MinimizationSummary<T>,
    pub seed: Option<T>,
    pub seed_error: Option<String>,
    pub ode_residual: T,
    pub interior_zeros: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizationSummary<T> {
    pub j: T,
    pub j_trial: T,
    pub iterations: usize,
    pub projected_gradient_norm: T,
    pub converged: bool,
    pub stop: StopReason,
    pub eps_s: T,
    pub bound_active: bool,
    pub newton_steps: usize,
    pub gradient_steps: usize,
    pub max_abs_slope: T,
}

impl<T: Real> From<&Minimization<T>> for MinimizationSummary<T> {
    fn from(m: &Minimization<T>) -> Self {
        Self {
            j: m.j,
            j_trial: m.j_trial,
            iterations: m.iterations,
            projected_gradient_norm: m.projected_gradient_norm,
            converged: m.converged,
            stop: m.stop,
            eps_s: m.eps_s,
            bound_active: m.bound_active,
            newton_steps: m.newton_steps,
            gradient_steps: m.gradient_steps,
            max_abs_slope: m.grid.max_abs_slope(),
        }
    }
}

/// `γ`, `ρ`, the minimizer and its seed, in one call.
pub fn variational_seed<T: Real>(
    dimension: u32,
    nl: &Nonlinearity<T>,
    th: &Thresholds<T>,
    cfg: &MinimizeConfig<T>,
    tol_neg: T,
) -> Result<(VariationalSeed<T>, GridFunction<T>)> {
    let gamma = witness_gamma(nl, th);
    let rho = choose_rho(dimension, nl, gamma, cfg.cells, tol_neg)?;
    let min = minimize_j(dimension, nl, rho.rho, gamma, cfg)?;
    let (seed, seed_error) = match seed_from_minimizer(&min.grid, th) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = VariationalSeed {
        gamma,
        rho,
        minimization: MinimizationSummary::from(&min),
        seed,
        seed_error,
        ode_residual: ode_residual_of_minimizer(&min.grid, nl, dimension),
        interior_zeros: interior_zeros(&min.grid).len(),
    };
    Ok((report, min.grid))
}
