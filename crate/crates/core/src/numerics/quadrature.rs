//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite rays are mapped onto the unit interval by s = a + u/(1 − u),
//! ds = du/(1 − u)², before adaptive refinement; (−∞, b] uses the mirror image
//! s = b − u/(1 − u). The upper half u ∈ [1/2, 1) is parameterized by
//! t = 1 − u so that refinement toward infinity is not limited by the spacing
//! of doubles near 1. The whole line is split at 0 into two rays.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Real;
use crate::error::{domain, Error, Result};

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> QuadratureSpec<T> {
    pub fn new(abs_tol: T, rel_tol: T, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > T::zero()) || !(rel_tol > T::zero()) || max_subdivisions == 0 {
            return Err(domain(
                "quadrature tolerances must be positive and max_subdivisions >= 1",
            ));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    pub fn with_tolerances(self, abs_tol: T, rel_tol: T) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..self
        }
    }
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        // floor the tolerances for single precision
        let floor = T::epsilon() * T::lit(64.0);
        Self {
            abs_tol: T::lit(1e-10).max(floor),
            rel_tol: T::lit(1e-8).max(floor),
            max_subdivisions: 1 << 14,
        }
    }
}

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain<T> {
    Finite(T, T),
    /// [a, ∞)
    UpperRay(T),
    /// (−∞, b]
    LowerRay(T),
    Line,
}

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Result<Segment<T>> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut res_k = fc * T::lit(WGK[7]);
    let mut res_g = fc * T::lit(WG[3]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    if !res_k.is_finite() {
        return Err(Error::Divergent(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half_len;
    let res_abs = res_abs * half_len.abs();
    let res_asc = res_asc * half_len.abs();
    let mut error = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && error != T::zero() {
        let scale = (T::lit(200.0) * error / res_asc).powf(T::lit(1.5));
        error = res_asc * scale.min(T::one());
    }
    let roundoff = T::lit(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) {
        error = error.max(roundoff);
    }
    Ok(Segment { a, b, value, error })
}

fn adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let first = kronrod(&mut f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    // segments too narrow to split keep their error here
    let mut frozen_err = T::zero();
    let mut subdivisions = 1usize;
    let tol = |v: T| spec.abs_tol.max(spec.rel_tol * v.abs());
    while total_err > tol(total) {
        let Some(seg) = heap.pop() else { break };
        let mid = T::lit(0.5) * (seg.a + seg.b);
        let width = (seg.b - seg.a).abs();
        let scale = seg.a.abs().max(seg.b.abs()).max(T::min_positive_value());
        if width <= T::lit(16.0) * T::epsilon() * scale || mid == seg.a || mid == seg.b {
            frozen_err = frozen_err + seg.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if subdivisions >= spec.max_subdivisions {
            heap.push(seg);
            return Err(Error::NonConvergence {
                subdivisions,
                estimate: total.to_f64_lossy(),
                error: total_err.to_f64_lossy(),
            });
        }
        let left = kronrod(&mut f, seg.a, mid)?;
        let right = kronrod(&mut f, mid, seg.b)?;
        subdivisions += 1;
        total = total - seg.value + left.value + right.value;
        total_err = total_err - seg.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        if subdivisions.is_multiple_of(64) {
            // refresh sums to shed accumulated cancellation error
            total = heap.iter().fold(T::zero(), |s, g| s + g.value);
            total_err = heap.iter().fold(frozen_err, |s, g| s + g.error);
        }
    }
    total = heap.iter().fold(T::zero(), |s, g| s + g.value);
    total_err = heap.iter().fold(frozen_err, |s, g| s + g.error);
    if total_err > tol(total) * T::lit(10.0) {
        return Err(Error::NonConvergence {
            subdivisions,
            estimate: total.to_f64_lossy(),
            error: total_err.to_f64_lossy(),
        });
    }
    Ok(total)
}

fn ray<T: Real, F: Fn(T) -> T>(f: &F, origin: T, sign: T, spec: &QuadratureSpec<T>) -> Result<T> {
    // u ∈ [0, 1/2] is integrated in u itself; u ∈ [1/2, 1) in t = 1 − u so
    // that the far end sits at t = 0, where floating point is densest.
    let half_spec = spec.with_tolerances(spec.abs_tol * T::lit(0.5), spec.rel_tol);
    let half = T::lit(0.5);
    let near = adaptive(
        |u: T| {
            let w = T::one() - u;
            let v = f(origin + sign * u / w);
            if v == T::zero() {
                T::zero()
            } else {
                v / (w * w)
            }
        },
        T::zero(),
        half,
        &half_spec,
    )?;
    let far = adaptive(
        |t: T| {
            if t <= T::zero() {
                return T::zero();
            }
            let v = f(origin + sign * (T::one() - t) / t);
            if v == T::zero() {
                T::zero()
            } else {
                v / (t * t)
            }
        },
        T::zero(),
        half,
        &half_spec,
    )?;
    Ok(near + far)
}

/// Integrates `f` over `domain` to the tolerances in `spec`.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    domain: Domain<T>,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    match domain {
        Domain::Finite(a, b) => {
            if !a.is_finite() || !b.is_finite() {
                return Err(crate::error::domain("finite domain needs finite endpoints"));
            }
            if b < a {
                return Ok(-adaptive(&f, b, a, spec)?);
            }
            adaptive(&f, a, b, spec)
        }
        Domain::UpperRay(a) => ray(&f, a, T::one(), spec),
        Domain::LowerRay(b) => ray(&f, b, -T::one(), spec),
        Domain::Line => {
            let half = spec.with_tolerances(spec.abs_tol * T::lit(0.5), spec.rel_tol);
            Ok(ray(&f, T::zero(), -T::one(), &half)? + ray(&f, T::zero(), T::one(), &half)?)
        }
    }
}
