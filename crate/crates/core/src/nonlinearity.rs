//! The nonlinearity `f`, its primitive `F`, the structural thresholds
//! `α, ξ₀, β, γ` and a sampling checker for the hypotheses (f1)–(f6).
//!
//! `f` is always extended by zero on the negative half-line, so `F(s) = 0` for
//! `s < 0`. A truncated copy (`f̃ = 0` above `β`) is produced by
//! [`Nonlinearity::truncate_at_beta`].

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalar::Real;

/// Number of uniform scan points on `(0, scan_max]` used to bracket thresholds.
pub const SCAN_POINTS: usize = 10_000;
/// Bracket width at which threshold bisection stops.
pub const BISECTION_WIDTH: f64 = 1e-12;
/// Absolute tolerance of the primitive when it is computed by quadrature.
pub const PRIMITIVE_TOL: f64 = 1e-12;
/// Difference-quotient bound of the (f2) local Lipschitz heuristic.
pub const LIPSCHITZ_BOUND: f64 = 1e6;
/// Lower bound the (f4) difference quotients must clear.
pub const F4_MIN_QUOTIENT: f64 = 1e-6;

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Monotone piecewise-cubic (Fritsch–Butland) interpolant of tabulated samples.
#[derive(Clone, Debug)]
pub struct MonotoneCubic<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
    // Running integral of the interpolant at each knot.
    cumulative: Vec<T>,
}

impl<T: Real> MonotoneCubic<T> {
    pub fn new(points: &[(T, T)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("a table needs at least two samples".into()));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidParameter("table contains non-finite samples".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("table abscissae must be strictly increasing".into()));
        }
        if points[0].0 != T::zero() {
            return Err(Error::InvalidParameter("table must start at s = 0".into()));
        }
        let xs: Vec<T> = points.iter().map(|p| p.0).collect();
        let ys: Vec<T> = points.iter().map(|p| p.1).collect();
        let n = xs.len();
        let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![T::zero(); n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        let two = T::lit(2.0);
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 * d1 <= T::zero() {
                slopes[k] = T::zero();
            } else {
                let w1 = two * h[k] + h[k - 1];
                let w2 = h[k] + two * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        let mut table = Self { xs, ys, slopes, cumulative: vec![T::zero(); n] };
        for k in 0..n - 1 {
            // Simpson's rule is exact on each cubic piece.
            let (a, b) = (table.xs[k], table.xs[k + 1]);
            let mid = T::lit(0.5) * (a + b);
            let piece = (b - a) / T::lit(6.0) * (table.ys[k] + T::lit(4.0) * table.eval(mid) + table.ys[k + 1]);
            table.cumulative[k + 1] = table.cumulative[k] + piece;
        }
        Ok(table)
    }

    pub fn last_knot(&self) -> T {
        *self.xs.last().expect("non-empty table")
    }

    fn cell(&self, x: T) -> usize {
        let k = self.xs.partition_point(|&xk| xk <= x);
        k.saturating_sub(1).min(self.xs.len() - 2)
    }

    /// Interpolated value; flat extrapolation beyond the last knot.
    pub fn eval(&self, x: T) -> T {
        if x >= self.last_knot() {
            return *self.ys.last().unwrap();
        }
        let k = self.cell(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, x: T) -> T {
        if x >= self.last_knot() {
            return T::zero();
        }
        let k = self.cell(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let six = T::lit(6.0);
        let d00 = (six * t2 - six * t) / h;
        let d10 = T::lit(3.0) * t2 - T::lit(4.0) * t + T::one();
        let d01 = (six * t - six * t2) / h;
        let d11 = T::lit(3.0) * t2 - T::lit(2.0) * t;
        d00 * self.ys[k] + d10 * self.slopes[k] + d01 * self.ys[k + 1] + d11 * self.slopes[k + 1]
    }

    /// Exact integral of the interpolant over `[0, x]`, `x ≥ 0`.
    pub fn integral(&self, x: T) -> T {
        let last = self.last_knot();
        if x >= last {
            return *self.cumulative.last().unwrap() + (x - last) * *self.ys.last().unwrap();
        }
        let k = self.cell(x);
        let a = self.xs[k];
        let mid = T::lit(0.5) * (a + x);
        self.cumulative[k] + (x - a) / T::lit(6.0) * (self.ys[k] + T::lit(4.0) * self.eval(mid) + self.eval(x))
    }
}

/// The concrete shape of `f` on `[0, ∞)`.
#[derive(Clone)]
pub enum Family<T: Real> {
    /// `f(s) = -λ s + s^q`, `λ > 0`, `q > 1`.
    Power { lambda: T, q: T },
    /// `f(s) = -s sin(s) |sin(s)|^{q-1}`, `q ≥ 1`.
    Sine { q: T },
    /// Monotone-cubic interpolation of user samples.
    Tabulated(MonotoneCubic<T>),
    /// Arbitrary closure with an optional closed-form primitive.
    Custom { label: String, f: ScalarFn<T>, primitive: Option<ScalarFn<T>> },
}

impl<T: Real> fmt::Debug for Family<T> {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Power { lambda, q } => write!(fmt, "Power {{ lambda: {lambda}, q: {q} }}"),
            Family::Sine { q } => write!(fmt, "Sine {{ q: {q} }}"),
            Family::Tabulated(t) => write!(fmt, "Tabulated({} knots)", t.xs.len()),
            Family::Custom { label, primitive, .. } => {
                write!(fmt, "Custom {{ label: {label:?}, closed_primitive: {} }}", primitive.is_some())
            }
        }
    }
}

/// Optional brackets that replace the uniform scan for individual thresholds.
#[derive(Clone, Copy, Debug, Default)]
pub struct ThresholdHints<T> {
    pub alpha: Option<(T, T)>,
    pub xi0: Option<(T, T)>,
    pub beta: Option<(T, T)>,
}

#[derive(Clone, Debug)]
pub struct Nonlinearity<T: Real> {
    family: Family<T>,
    cutoff: Option<T>,
    scan_max: T,
    pub hints: ThresholdHints<T>,
}

fn serialize_extended<S: Serializer, T: Real + Serialize>(x: &T, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        x.serialize(ser)
    } else {
        ser.serialize_str(if *x > T::zero() { "inf" } else { "-inf" })
    }
}

/// Structural thresholds of `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds<T: Real> {
    /// `α = inf{ξ > 0 | f(ξ) ≥ 0}`.
    pub alpha: T,
    /// `ξ₀ = inf{ξ > 0 | F(ξ) > 0}`.
    pub xi0: T,
    /// `β = inf{ξ > ξ₀ | f(ξ) = 0}`, `+∞` when `f` keeps its sign up to `scan_max`.
    #[serde(serialize_with = "serialize_extended")]
    pub beta: T,
    /// A witness with `F(γ) > 0`.
    pub gamma: T,
}

impl<T: Real> Thresholds<T> {
    pub fn beta_is_finite(&self) -> bool {
        self.beta.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sample<T> {
    pub s: T,
    pub value: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check<T> {
    pub verdict: Verdict,
    pub note: String,
    pub evidence: Vec<Sample<T>>,
}

impl<T> Check<T> {
    fn new(verdict: Verdict, note: impl Into<String>, evidence: Vec<Sample<T>>) -> Self {
        Self { verdict, note: note.into(), evidence }
    }
}

/// Sampling-based verdicts for (f1)–(f6).
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport<T: Real> {
    pub dimension: u32,
    pub family: String,
    pub tabulated: bool,
    pub f1: Check<T>,
    pub f2: Check<T>,
    pub f3: Check<T>,
    pub f4: Check<T>,
    pub f5: Check<T>,
    pub f6: Check<T>,
    pub f4_limit_estimate: Option<T>,
    pub thresholds: Option<Thresholds<T>>,
}

impl<T: Real> AssumptionReport<T> {
    fn checks(&self) -> [(&'static str, &Check<T>); 6] {
        [("f1", &self.f1), ("f2", &self.f2), ("f3", &self.f3), ("f4", &self.f4), ("f5", &self.f5), ("f6", &self.f6)]
    }

    pub fn passes(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks().iter().filter(|(_, c)| c.verdict == Verdict::Fail).map(|(n, _)| *n).collect()
    }
}

impl<T: Real> Nonlinearity<T> {
    fn with_family(family: Family<T>, scan_max: T) -> Self {
        Self { family, cutoff: None, scan_max, hints: ThresholdHints::default() }
    }

    pub fn power(lambda: T, q: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("power family needs lambda > 0, got {lambda}")));
        }
        if !(q > T::one() && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("power family needs q > 1, got {q}")));
        }
        Ok(Self::with_family(Family::Power { lambda, q }, T::lit(50.0)))
    }

    pub fn sine(q: T) -> Result<Self> {
        if !(q >= T::one() && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("sine family needs q >= 1, got {q}")));
        }
        Ok(Self::with_family(Family::Sine { q }, T::lit(50.0)))
    }

    /// Tabulated `(s, f(s))` samples starting at `s = 0`; `scan_max` defaults
    /// to the last knot.
    pub fn tabulated(points: &[(T, T)]) -> Result<Self> {
        let table = MonotoneCubic::new(points)?;
        let scan_max = table.last_knot();
        Ok(Self::with_family(Family::Tabulated(table), scan_max))
    }

    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::with_family(Family::Custom { label: label.into(), f: Arc::new(f), primitive: None }, T::lit(50.0))
    }

    pub fn custom_with_primitive<F, G>(label: impl Into<String>, f: F, primitive: G) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        G: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::with_family(
            Family::Custom { label: label.into(), f: Arc::new(f), primitive: Some(Arc::new(primitive)) },
            T::lit(50.0),
        )
    }

    pub fn with_scan_max(mut self, scan_max: T) -> Result<Self> {
        if !(scan_max > T::zero() && scan_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("scan_max must be positive and finite, got {scan_max}")));
        }
        self.scan_max = scan_max;
        Ok(self)
    }

    pub fn with_hints(mut self, hints: ThresholdHints<T>) -> Self {
        self.hints = hints;
        self
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn scan_max(&self) -> T {
        self.scan_max
    }

    /// The truncation level, when this is an `f̃`.
    pub fn cutoff(&self) -> Option<T> {
        self.cutoff
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.family, Family::Tabulated(_))
    }

    pub fn label(&self) -> String {
        let base = match &self.family {
            Family::Power { lambda, q } => format!("power(lambda={lambda}, q={q})"),
            Family::Sine { q } => format!("sine(q={q})"),
            Family::Tabulated(t) => format!("tabulated({} knots)", t.xs.len()),
            Family::Custom { label, .. } => format!("custom({label})"),
        };
        match self.cutoff {
            Some(b) => format!("{base} truncated at {b}"),
            None => base,
        }
    }

    fn raw_f(&self, s: T) -> T {
        match &self.family {
            Family::Power { lambda, q } => -*lambda * s + s.powf(*q),
            Family::Sine { q } => {
                let sn = s.sin();
                if *q == T::one() {
                    -s * sn
                } else {
                    -s * sn * sn.abs().powf(*q - T::one())
                }
            }
            Family::Tabulated(t) => t.eval(s),
            Family::Custom { f, .. } => f(s),
        }
    }

    /// `f(s)` with the zero extension on `s < 0` and the optional truncation.
    #[inline]
    pub fn f(&self, s: T) -> T {
        if s < T::zero() {
            return T::zero();
        }
        if let Some(b) = self.cutoff {
            if s > b {
                return T::zero();
            }
        }
        self.raw_f(s)
    }

    /// Checked evaluation of `f`; non-finite arguments are rejected.
    pub fn eval_f(&self, s: T) -> Result<T> {
        if !s.is_finite() {
            return Err(Error::NonFinite(s.as_f64()));
        }
        Ok(self.f(s))
    }

    /// `f'(s)`. Analytic for the built-in families, central differences for
    /// custom closures. Only used for curvature information.
    pub fn derivative(&self, s: T) -> T {
        if s < T::zero() {
            return T::zero();
        }
        if let Some(b) = self.cutoff {
            if s > b {
                return T::zero();
            }
        }
        match &self.family {
            Family::Power { lambda, q } => -*lambda + *q * s.powf(*q - T::one()),
            Family::Sine { q } => {
                let (sn, cs) = s.sin_cos();
                let qm1 = *q - T::one();
                let pw = if qm1 == T::zero() { T::one() } else { sn.abs().powf(qm1) };
                -sn * pw - s * *q * pw * cs
            }
            Family::Tabulated(t) => t.derivative(s),
            Family::Custom { .. } => {
                let h = T::epsilon().cbrt() * (T::one() + s.abs());
                let lo = (s - h).max(T::zero());
                (self.f(s + h) - self.f(lo)) / (s + h - lo)
            }
        }
    }

    fn closed_primitive(&self, s: T) -> Option<T> {
        match &self.family {
            Family::Power { lambda, q } => {
                let qp1 = *q + T::one();
                Some(-*lambda * s * s / T::lit(2.0) + s.powf(qp1) / qp1)
            }
            Family::Sine { q } if *q == T::one() => {
                let (sn, cs) = s.sin_cos();
                Some(s * cs - sn)
            }
            Family::Tabulated(t) => Some(t.integral(s)),
            Family::Custom { primitive: Some(p), .. } => Some(p(s)),
            _ => None,
        }
    }

    fn breakpoints(&self, upper: T) -> Vec<T> {
        match &self.family {
            Family::Sine { .. } => {
                let pi = T::PI();
                let count = (upper / pi).floor().to_usize().unwrap_or(0);
                (1..=count).map(|k| T::from_count(k) * pi).collect()
            }
            _ => Vec::new(),
        }
    }

    /// The kink of `f̃` nearest to `a` strictly between `a` and `b`, if any.
    /// Steps of the integrator end there so no step straddles one.
    pub fn kink_between(&self, a: T, b: T) -> Option<T> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut found: Option<T> = None;
        let mut take = |k: T| {
            if k > lo && k < hi && found.is_none_or(|f| (k - a).abs() < (f - a).abs()) {
                found = Some(k);
            }
        };
        if let Family::Sine { q } = &self.family {
            if *q != T::one() && lo >= T::zero() {
                let pi = T::PI();
                let k = if a <= b { (a / pi).floor() + T::one() } else { (a / pi).ceil() - T::one() };
                take(k * pi);
            }
        }
        if let Some(c) = self.cutoff {
            take(c);
        }
        found
    }

    /// `∫₀^s f` of the untruncated `f` by adaptive quadrature.
    pub fn primitive_by_quadrature(&self, s: T) -> Result<T> {
        if !s.is_finite() {
            return Err(Error::NonFinite(s.as_f64()));
        }
        if s <= T::zero() {
            return Ok(T::zero());
        }
        let tol = T::lit(PRIMITIVE_TOL).max(T::epsilon() * T::lit(64.0));
        let q = quadrature::integrate_with_breaks(|t| self.raw_f(t), T::zero(), s, &self.breakpoints(s), tol)?;
        Ok(q.value)
    }

    fn raw_primitive(&self, s: T) -> Result<T> {
        if s <= T::zero() {
            return Ok(T::zero());
        }
        match self.closed_primitive(s) {
            Some(v) => Ok(v),
            None => self.primitive_by_quadrature(s),
        }
    }

    /// `F(s) = ∫₀^s f`, honouring the zero extension and any truncation.
    pub fn primitive(&self, s: T) -> Result<T> {
        if !s.is_finite() {
            return Err(Error::NonFinite(s.as_f64()));
        }
        match self.cutoff {
            Some(b) if s > b => self.raw_primitive(b),
            _ => self.raw_primitive(s),
        }
    }

    // ∫_a^b f for 0 ≤ a ≤ b, without truncation.
    fn raw_increment(&self, a: T, b: T) -> Result<T> {
        if self.closed_primitive(a).is_some() {
            return Ok(self.raw_primitive(b)? - self.raw_primitive(a)?);
        }
        let tol = T::lit(PRIMITIVE_TOL * 1e-3).max(T::epsilon() * T::lit(64.0));
        let breaks = self.breakpoints(b);
        Ok(quadrature::integrate_with_breaks(|t| self.raw_f(t), a, b, &breaks, tol)?.value)
    }

    /// Returns `f̃`: `f` on `s ≤ β`, zero above. Identity when `β = +∞`.
    pub fn truncate_at_beta(&self, th: &Thresholds<T>) -> Self {
        let mut out = self.clone();
        if th.beta.is_finite() {
            out.cutoff = Some(match self.cutoff {
                Some(b) => b.min(th.beta),
                None => th.beta,
            });
        }
        out
    }

    fn scan_grid(&self) -> impl Iterator<Item = T> + '_ {
        let step = self.scan_max / T::from_count(SCAN_POINTS);
        (1..=SCAN_POINTS).map(move |k| T::from_count(k) * step)
    }

    /// Locates `α`, `ξ₀`, `β` by sign scans refined with bisection, and picks
    /// the witness `γ`.
    pub fn compute_thresholds(&self, dimension: u32) -> Result<Thresholds<T>> {
        if dimension < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {dimension}")));
        }
        let width = T::lit(BISECTION_WIDTH);

        // α: first point where f ≥ 0.
        let alpha_bracket = match self.hints.alpha.filter(|&(lo, hi)| self.f(lo) < T::zero() && self.f(hi) >= T::zero()) {
            Some(b) => Some(b),
            None => {
                let mut prev = T::zero();
                let mut found = None;
                for s in self.scan_grid() {
                    if self.f(s) >= T::zero() {
                        found = Some((prev, s));
                        break;
                    }
                    prev = s;
                }
                found
            }
        };
        let (lo, hi) = alpha_bracket.ok_or(Error::NoAlpha { scan_max: self.scan_max.as_f64() })?;
        let alpha = bisect(|s| self.f(s) >= T::zero(), lo, hi, width);
        if alpha <= width {
            return Err(Error::NoAlpha { scan_max: self.scan_max.as_f64() });
        }

        // ξ₀: first point where F > 0, scanned with incremental primitives.
        let mut gamma_scan = None;
        let xi0_bracket = match self.hints.xi0 {
            Some((lo, hi)) if self.primitive(lo)? <= T::zero() && self.primitive(hi)? > T::zero() => Some((lo, hi)),
            _ => {
                let mut prev = T::zero();
                let mut big_f = T::zero();
                let mut found = None;
                for s in self.scan_grid() {
                    big_f = big_f + self.raw_increment(prev, s)?;
                    if big_f > T::zero() {
                        gamma_scan = Some(s);
                        found = Some((prev, s));
                        break;
                    }
                    prev = s;
                }
                found
            }
        };
        let (lo, hi) = xi0_bracket.ok_or(Error::NoGamma { scan_max: self.scan_max.as_f64() })?;
        let mut first_error = None;
        let xi0 = bisect(
            |s| match self.primitive(s) {
                Ok(v) => v > T::zero(),
                Err(e) => {
                    first_error.get_or_insert(e);
                    false
                }
            },
            lo,
            hi,
            width,
        );
        if let Some(e) = first_error {
            return Err(e);
        }

        // γ: first positive scan point, refined once toward ξ₀.
        let coarse = gamma_scan.unwrap_or(hi);
        let refined = T::lit(0.5) * (coarse + xi0);
        let gamma = if refined > xi0 && self.primitive(refined)? > T::zero() { refined } else { coarse };

        // β: first zero of f beyond ξ₀.
        let beta_bracket = match self.hints.beta.filter(|&(lo, hi)| self.f(lo) > T::zero() && self.f(hi) <= T::zero()) {
            Some(b) => Some(b),
            None => {
                let mut prev = xi0;
                let mut found = None;
                for s in self.scan_grid().filter(|&s| s > xi0) {
                    if self.f(s) <= T::zero() {
                        found = Some((prev, s));
                        break;
                    }
                    prev = s;
                }
                found
            }
        };
        let beta = match beta_bracket {
            Some((lo, hi)) => bisect(|s| self.f(s) <= T::zero(), lo, hi, width),
            None => T::infinity(),
        };

        Ok(Thresholds { alpha, xi0, beta, gamma })
    }

    /// Verdicts for (f1)–(f6). Failures are reported, never raised.
    pub fn check_assumptions(&self, dimension: u32) -> AssumptionReport<T> {
        let f0 = self.f(T::zero());
        let f1 = Check::new(
            if f0 == T::zero() { Verdict::Pass } else { Verdict::Fail },
            "f(0) = 0",
            vec![Sample { s: T::zero(), value: f0 }],
        );

        let thresholds = self.compute_thresholds(dimension);
        let upper = match &thresholds {
            Ok(th) if th.beta.is_finite() => th.beta.min(self.scan_max),
            _ => self.scan_max,
        };
        let f2 = self.lipschitz_check(upper);

        let (f3, f5) = match &thresholds {
            Ok(th) => (
                Check::new(Verdict::Pass, "alpha located", vec![Sample { s: th.alpha, value: self.f(th.alpha) }]),
                Check::new(
                    Verdict::Pass,
                    "gamma witness with F(gamma) > 0",
                    vec![Sample { s: th.gamma, value: self.primitive(th.gamma).unwrap_or(T::nan()) }],
                ),
            ),
            Err(Error::NoAlpha { .. }) => (
                Check::new(Verdict::Fail, "no alpha > 0 with f(alpha) >= 0 in scan range", vec![]),
                Check::new(Verdict::Fail, "not evaluated: alpha missing", vec![]),
            ),
            Err(e) => (
                Check::new(Verdict::Pass, "alpha located", vec![]),
                Check::new(Verdict::Fail, e.to_string(), vec![]),
            ),
        };

        let (f4, f4_limit_estimate) = match (&thresholds, dimension) {
            (_, 2) => (Check::new(Verdict::NotApplicable, "not required for N = 2", vec![]), None),
            (Ok(th), _) => self.f4_check(th.alpha),
            (Err(_), _) => (Check::new(Verdict::Fail, "thresholds unavailable", vec![]), None),
        };

        let f6 = match &thresholds {
            Ok(th) => self.positivity_check(th.alpha, th.xi0),
            Err(_) => Check::new(Verdict::Fail, "thresholds unavailable", vec![]),
        };

        AssumptionReport {
            dimension,
            family: self.label(),
            tabulated: self.is_tabulated(),
            f1,
            f2,
            f3,
            f4,
            f5,
            f6,
            f4_limit_estimate,
            thresholds: thresholds.ok(),
        }
    }

    // Heuristic: difference quotients on a dyadic grid of [0, upper].
    fn lipschitz_check(&self, upper: T) -> Check<T> {
        let bound = T::lit(LIPSCHITZ_BOUND);
        let mut evidence = Vec::new();
        let mut worst = T::zero();
        for level in [8usize, 12, 16] {
            let cells = 1usize << level;
            let h = upper / T::from_count(cells);
            let mut prev = self.f(T::zero());
            let mut level_max = T::zero();
            let mut at = T::zero();
            for k in 1..=cells {
                let s = T::from_count(k) * h;
                let v = self.f(s);
                let quotient = ((v - prev) / h).abs();
                if !(quotient <= level_max) {
                    level_max = quotient;
                    at = s;
                }
                prev = v;
            }
            evidence.push(Sample { s: at, value: level_max });
            worst = if level_max.is_nan() { level_max } else { worst.max(level_max) };
        }
        let ok = worst <= bound;
        Check::new(
            if ok { Verdict::Pass } else { Verdict::Fail },
            format!("heuristic: dyadic difference quotients on [0, {upper}] bounded by {LIPSCHITZ_BOUND:e}"),
            evidence,
        )
    }

    fn f4_check(&self, alpha: T) -> (Check<T>, Option<T>) {
        let evidence: Vec<Sample<T>> = (3..=8)
            .map(|k| {
                let d = T::lit(10f64.powi(-k));
                Sample { s: alpha + d, value: self.f(alpha + d) / d }
            })
            .collect();
        let min = evidence.iter().map(|e| e.value).fold(T::infinity(), |a, b| a.min(b));
        let first = evidence[0].value;
        let last = evidence[evidence.len() - 1].value;
        let growing = evidence.windows(2).all(|w| w[1].value > w[0].value) && last > T::lit(10.0) * first.abs();
        let note = if growing {
            "quotients grow without bound as s -> alpha+; limit may be +inf".to_string()
        } else {
            format!("min quotient over s = alpha + 10^-k, k = 3..8, must exceed {F4_MIN_QUOTIENT:e}")
        };
        let ok = min > T::lit(F4_MIN_QUOTIENT);
        // Richardson-extrapolated one-sided quotient; subtracting f(α) cancels
        // the bisection error in α to first order.
        let fa = self.f(alpha);
        let quotient = |d: T| (self.f(alpha + d) - fa) / d;
        let d = T::lit(1e-5);
        let estimate = T::lit(2.0) * quotient(T::lit(0.5) * d) - quotient(d);
        (Check::new(if ok { Verdict::Pass } else { Verdict::Fail }, note, evidence), Some(estimate))
    }

    fn positivity_check(&self, alpha: T, xi0: T) -> Check<T> {
        let samples = SCAN_POINTS;
        let span = xi0 - alpha;
        let mut worst = Sample { s: xi0, value: self.f(xi0) };
        for k in 1..=samples {
            let s = alpha + span * T::from_count(k) / T::from_count(samples);
            let v = self.f(s);
            if !(v >= worst.value) {
                worst = Sample { s, value: v };
            }
        }
        let ok = worst.value > T::zero();
        Check::new(
            if ok { Verdict::Pass } else { Verdict::Fail },
            format!("f > 0 on {samples} samples of (alpha, xi0]; minimum recorded"),
            vec![worst],
        )
    }
}

/// Shrinks `[lo, hi]` around the point where `pred` switches from false to
/// true, stopping at `width` or when the midpoint no longer splits the bracket.
pub(crate) fn bisect<T: Real>(mut pred: impl FnMut(T) -> bool, mut lo: T, mut hi: T, width: T) -> T {
    let half = T::lit(0.5);
    while hi - lo > width {
        let mid = half * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    half * (lo + hi)
}
