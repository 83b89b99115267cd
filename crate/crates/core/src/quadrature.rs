//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::{NeumaierSum, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 20_000;

/// Outcome of a successful integration.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let centre = half * (a + b);
    let radius = half * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Intervals are bisected until each piece carries an error estimate below its
/// share of the tolerance, proportional to its length.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<Quadrature<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite(if a.is_finite() { b.as_f64() } else { a.as_f64() }));
    }
    if a == b {
        return Ok(Quadrature { value: T::zero(), error: T::zero() });
    }
    if b < a {
        let q = integrate(f, b, a, tol)?;
        return Ok(Quadrature { value: -q.value, error: q.error });
    }
    let total = b - a;
    let floor = T::epsilon() * T::lit(50.0);
    let mut stack = vec![(a, b)];
    let mut value = NeumaierSum::new();
    let mut error = T::zero();
    let mut processed = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        processed += 1;
        let (v, e) = gk15(&f, lo, hi);
        let share = tol * (hi - lo) / total;
        let mid = T::lit(0.5) * (lo + hi);
        let tiny = mid <= lo || mid >= hi;
        if e <= share || e <= floor * v.abs() || tiny {
            value.add(v);
            error = error + e;
        } else if processed >= MAX_INTERVALS {
            return Err(Error::Quadrature { a: a.as_f64(), b: b.as_f64(), estimate: (error + e).as_f64() });
        } else {
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(Quadrature { value: value.value(), error })
}

/// Integrates over `[a, b]` splitting at the supplied breakpoints (those inside
/// the interval only), which lets kinks of the integrand land on panel edges.
pub fn integrate_with_breaks<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, breaks: &[T], tol: T) -> Result<Quadrature<T>> {
    if b < a {
        let q = integrate_with_breaks(f, b, a, breaks, tol)?;
        return Ok(Quadrature { value: -q.value, error: q.error });
    }
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);
    let pieces = T::from_count(knots.len() - 1);
    let mut value = NeumaierSum::new();
    let mut error = T::zero();
    for w in knots.windows(2) {
        let q = integrate(&f, w[0], w[1], tol / pieces)?;
        value.add(q.value);
        error = error + q.error;
    }
    Ok(Quadrature { value: value.value(), error })
}
