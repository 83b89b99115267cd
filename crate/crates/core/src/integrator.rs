//! Radial Cauchy problem in flux variables.
//!
//! With `q = u'/sqrt(1 - u'^2)` the radial equation becomes the first order
//! system
//!
//! ```text
//! u' = q / sqrt(1 + q²)
//! q' = -(N - 1) q / r - f(u)
//! D' = q² / (r sqrt(1 + q²))
//! ```
//!
//! where `D` accumulates the dissipation integral of the energy identity
//! `H(u') + (N - 1) D(r) = F(ξ) - F(u(r))`. The slope recovered from `q` is
//! always strictly inside `(-1, 1)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::scalar::Real;

/// Inverse of `φ'`: the slope `q / sqrt(1 + q²) ∈ (-1, 1)`.
#[inline]
pub fn slope_from_flux<T: Real>(q: T) -> T {
    q / (T::one() + q * q).sqrt()
}

/// `H(u') = (1 - sqrt(1 - u'^2)) / sqrt(1 - u'^2)` written in the flux variable.
#[inline]
pub fn kinetic_from_flux<T: Real>(q: T) -> T {
    // sqrt(1 + q²) - 1 without cancellation.
    q * q / ((T::one() + q * q).sqrt() + T::one())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialState<T> {
    pub r: T,
    pub u: T,
    /// Flux `q = φ'(u')`.
    pub q: T,
    /// Dissipation `D(r) = ∫₀^r (u')² / (s sqrt(1 - u'^2)) ds`.
    pub dissipation: T,
}

impl<T: Real> RadialState<T> {
    pub fn slope(&self) -> T {
        slope_from_flux(self.q)
    }

    fn vector(&self) -> [T; 3] {
        [self.u, self.q, self.dissipation]
    }

    fn from_vector(r: T, y: [T; 3]) -> Self {
        Self { r, u: y[0], q: y[1], dissipation: y[2] }
    }
}

/// One dense-output row: `r, u, u', q, D, energy residual`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileRow<T> {
    pub r: T,
    pub u: T,
    pub uprime: T,
    pub q: T,
    pub dissipation: T,
    pub energy_residual: T,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntegratorConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub r_start: T,
    pub h_max: T,
    pub sample_stride: T,
    /// Step sizes below this are reported as stiffness.
    pub min_step: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            rel_tol: T::lit(1e-10),
            r_start: T::lit(1e-4),
            h_max: T::lit(0.1),
            sample_stride: T::lit(0.01),
            min_step: T::lit(1e-14),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: T| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
            }
        };
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        positive("r_start", self.r_start)?;
        positive("h_max", self.h_max)?;
        positive("sample_stride", self.sample_stride)?;
        positive("min_step", self.min_step)?;
        if self.sample_stride <= self.r_start {
            return Err(Error::InvalidParameter("sample_stride must exceed r_start".into()));
        }
        Ok(())
    }
}

/// `(u', q', D')` at a state with `r > 0`.
pub fn vector_field<T: Real>(dimension: u32, nl: &Nonlinearity<T>, s: &RadialState<T>) -> Result<[T; 3]> {
    if !(s.r > T::zero()) {
        return Err(Error::SingularRadius);
    }
    Ok(rhs(T::from_count(dimension as usize - 1), nl, s.r, [s.u, s.q, s.dissipation]))
}

#[inline]
fn rhs<T: Real>(damping: T, nl: &Nonlinearity<T>, r: T, y: [T; 3]) -> [T; 3] {
    let q = y[1];
    let root = (T::one() + q * q).sqrt();
    [q / root, -damping * q / r - nl.f(y[0]), q * q / (r * root)]
}

/// Series start at `r0`: `u = ξ + a r² + b r⁴`, with `a = -f(ξ)/(2N)` from
/// `u''(0) = -f(ξ)/N` and `b` from the next order of the flux equation.
pub fn taylor_start<T: Real>(dimension: u32, nl: &Nonlinearity<T>, xi: T, r0: T) -> RadialState<T> {
    let n = T::from_count(dimension as usize);
    let f = nl.f(xi);
    let df = nl.derivative(xi);
    let df = if df.is_finite() { df } else { T::zero() };
    let a = -f / (T::lit(2.0) * n);
    let c3 = -df * a / (n + T::lit(2.0));
    let b = c3 / T::lit(4.0) - a * a * a;
    let r2 = r0 * r0;
    RadialState {
        r: r0,
        u: xi + r2 * (a + b * r2),
        q: r0 * (T::lit(2.0) * a + c3 * r2),
        dissipation: r2 * (T::lit(2.0) * a * a + (a * c3 - T::lit(2.0) * a * a * a * a) * r2),
    }
}

/// `H + (N - 1) D - F(ξ) + F(u)`, which vanishes along exact trajectories.
pub fn energy_residual<T: Real>(nl: &Nonlinearity<T>, dimension: u32, xi: T, s: &RadialState<T>) -> Result<T> {
    let damping = T::from_count(dimension as usize - 1);
    Ok(kinetic_from_flux(s.q) + damping * s.dissipation - nl.primitive(xi)? + nl.primitive(s.u)?)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Result of [`Integrator::advance`].
#[derive(Clone, Debug)]
pub struct Advance<T> {
    pub state: RadialState<T>,
    pub samples: Vec<ProfileRow<T>>,
}

/// Adaptive Dormand–Prince integrator for one trajectory.
pub struct Integrator<'a, T: Real> {
    dimension: u32,
    damping: T,
    nl: &'a Nonlinearity<T>,
    cfg: IntegratorConfig<T>,
    step: T,
    pub stats: IntegratorStats,
}

impl<'a, T: Real> Integrator<'a, T> {
    pub fn new(dimension: u32, nl: &'a Nonlinearity<T>, cfg: IntegratorConfig<T>) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {dimension}")));
        }
        cfg.validate()?;
        Ok(Self {
            dimension,
            damping: T::from_count(dimension as usize - 1),
            nl,
            step: cfg.r_start.min(cfg.h_max),
            cfg,
            stats: IntegratorStats::default(),
        })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn nonlinearity(&self) -> &'a Nonlinearity<T> {
        self.nl
    }

    pub fn config(&self) -> &IntegratorConfig<T> {
        &self.cfg
    }

    fn eval(&mut self, r: T, y: [T; 3]) -> [T; 3] {
        self.stats.evaluations += 1;
        rhs(self.damping, self.nl, r, y)
    }

    // One Dormand–Prince step of size h; returns the 5th order solution and the
    // embedded error vector.
    fn dp_step(&mut self, r: T, y: [T; 3], h: T) -> ([T; 3], [T; 3]) {
        let mut k = [[T::zero(); 3]; 7];
        k[0] = self.eval(r, y);
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = T::lit(A[stage][j]);
                if a != T::zero() {
                    for c in 0..3 {
                        ys[c] = ys[c] + h * a * kj[c];
                    }
                }
            }
            if stage == 6 {
                // The last stage is evaluated at the new solution (FSAL row).
                k[6] = self.eval(r + h, ys);
                let mut err = [T::zero(); 3];
                for (j, kj) in k.iter().enumerate() {
                    let e = T::lit(E[j]);
                    for c in 0..3 {
                        err[c] = err[c] + h * e * kj[c];
                    }
                }
                return (ys, err);
            }
            k[stage] = self.eval(r + T::lit(C[stage]) * h, ys);
        }
        unreachable!("loop returns at the final stage")
    }

    /// A single uncontrolled step from `s` to radius `to`. Used for event
    /// localization and dense samples inside an accepted step, whose error
    /// estimate already bounds the shorter sub-step.
    pub fn step_exact(&mut self, s: &RadialState<T>, to: T) -> RadialState<T> {
        if to == s.r {
            return *s;
        }
        let (y, _) = self.dp_step(s.r, s.vector(), to - s.r);
        RadialState::from_vector(to, y)
    }

    fn error_norm(&self, y: [T; 3], y_new: [T; 3], err: [T; 3]) -> T {
        let mut acc = T::zero();
        for c in 0..3 {
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * y[c].abs().max(y_new[c].abs());
            let e = err[c] / scale;
            acc = acc + e * e;
        }
        (acc / T::lit(3.0)).sqrt()
    }

    /// Takes one accepted adaptive step from `s`, never passing `r_limit`.
    pub fn step_adaptive(&mut self, s: &RadialState<T>, r_limit: T) -> Result<RadialState<T>> {
        if !(s.r > T::zero()) {
            return Err(Error::SingularRadius);
        }
        let safety = T::lit(0.9);
        let exponent = T::lit(-0.2);
        let mut r_limit = r_limit;
        let mut at_kink = false;
        loop {
            let mut h = self.step.min(self.cfg.h_max);
            let remaining = r_limit - s.r;
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            if h < self.cfg.min_step && !clipped {
                return Err(Error::Stiffness {
                    r: s.r.as_f64(),
                    u: s.u.as_f64(),
                    q: s.q.as_f64(),
                    dissipation: s.dissipation.as_f64(),
                    step: h.as_f64(),
                });
            }
            let y = s.vector();
            let (y_new, err) = self.dp_step(s.r, y, h);
            let norm = self.error_norm(y, y_new, err);
            if norm <= T::one() && y_new.iter().all(|v| v.is_finite()) {
                if !at_kink {
                    if let Some(k) = self.nl.kink_between(s.u, y_new[0]) {
                        r_limit = s.r + self.kink_offset(s, h, k);
                        at_kink = true;
                        continue;
                    }
                }
                self.stats.accepted += 1;
                let factor = if norm == T::zero() { T::lit(5.0) } else { (safety * norm.powf(exponent)).min(T::lit(5.0)) };
                let factor = factor.max(T::lit(0.2));
                // Keep the controller's proposal when the step was only clipped to hit r_limit.
                if !clipped || factor < T::one() {
                    self.step = (h * factor).min(self.cfg.h_max);
                }
                // f is not smooth at a kink, so the next step restarts small.
                if at_kink && clipped {
                    self.step = self.step.min(self.cfg.r_start);
                }
                let r_new = if clipped { r_limit } else { s.r + h };
                return Ok(RadialState::from_vector(r_new, y_new));
            }
            self.stats.rejected += 1;
            let factor = if norm.is_finite() { (safety * norm.powf(exponent)).max(T::lit(0.1)) } else { T::lit(0.1) };
            self.step = h * factor.min(T::lit(0.9));
            if self.step < self.cfg.min_step {
                return Err(Error::Stiffness {
                    r: s.r.as_f64(),
                    u: s.u.as_f64(),
                    q: s.q.as_f64(),
                    dissipation: s.dissipation.as_f64(),
                    step: self.step.as_f64(),
                });
            }
        }
    }

    // Smallest sub-step (to bisection width) after which `u` has reached `k`.
    fn kink_offset(&mut self, s: &RadialState<T>, h: T, k: T) -> T {
        let before = s.u < k;
        let (mut lo, mut hi) = (T::zero(), h);
        for _ in 0..60 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (y, _) = self.dp_step(s.r, s.vector(), mid);
            if (y[0] < k) == before {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Builds a profile row; `xi` is the initial height the residual refers to.
    pub fn row(&self, xi: T, s: &RadialState<T>) -> Result<ProfileRow<T>> {
        Ok(ProfileRow {
            r: s.r,
            u: s.u,
            uprime: s.slope(),
            q: s.q,
            dissipation: s.dissipation,
            energy_residual: energy_residual(self.nl, self.dimension, xi, s)?,
        })
    }

    /// Integrates from `s` to `r_target`, emitting rows at every multiple of
    /// `sample_stride` in `(s.r, r_target]`.
    pub fn advance(&mut self, s: &RadialState<T>, r_target: T, xi: T) -> Result<Advance<T>> {
        if !(s.r < r_target) {
            return Err(Error::InvalidParameter(format!("advance needs r_target > r (r = {}, target = {r_target})", s.r)));
        }
        let stride = self.cfg.sample_stride;
        let mut next_sample = ((s.r / stride).floor() + T::one()).to_usize().unwrap_or(usize::MAX);
        let mut state = *s;
        let mut samples = Vec::new();
        while state.r < r_target {
            let new = self.step_adaptive(&state, r_target)?;
            loop {
                let rs = T::from_count(next_sample) * stride;
                if rs > new.r {
                    break;
                }
                let sample = if rs == new.r { new } else { self.step_exact(&state, rs) };
                samples.push(self.row(xi, &sample)?);
                next_sample += 1;
            }
            state = new;
        }
        Ok(Advance { state, samples })
    }
}
