//! Calibration functions G with `G(t)/t^p` increasing to infinity and `E[G(|X|)] < ∞`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::TailFunction;
use crate::error::{domain, Error, Result};
use crate::numerics::{integrate, Domain, QuadratureSpec};

type GFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A calibration function together with its expectation under the measure.
#[derive(Clone)]
pub struct CalibrationFunction {
    label: String,
    p: f64,
    eval: GFn,
    expected_g: f64,
    expected_g_stderr: f64,
}

impl fmt::Debug for CalibrationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CalibrationFunction")
            .field("label", &self.label)
            .field("p", &self.p)
            .field("expected_g", &self.expected_g)
            .finish()
    }
}

impl CalibrationFunction {
    /// Wraps an arbitrary `G` with a known (or estimated) expectation.
    pub fn from_fn(
        label: impl Into<String>,
        p: f64,
        eval: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
        expected_g: f64,
        expected_g_stderr: f64,
    ) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(domain("calibration needs p >= 1"));
        }
        if !(expected_g >= 0.0) || !(expected_g_stderr >= 0.0) {
            return Err(domain("expected G must be a nonnegative number"));
        }
        Ok(Self {
            label: label.into(),
            p,
            eval: Arc::new(eval),
            expected_g,
            expected_g_stderr,
        })
    }

    /// `G_μ(t) = ∫_0^t p s^{p−1}/√H_μ(s) ds` with H cached on a geometric grid.
    ///
    /// `E[G_μ(|X|)] = ∫ −H'/√H = 2√H_μ(0)`, so the expectation is exact.
    pub fn canonical(tail: &TailFunction) -> Result<Self> {
        let cache = Arc::new(HCache::build(tail)?);
        let expected = 2.0 * tail.m_p_pow().sqrt();
        let c = Arc::clone(&cache);
        Self::from_fn("canonical", tail.p(), move |t| c.g(t), expected, 0.0)
    }

    /// `G(t) = t^p (log(1+t))^α`, with `E[G(|X|)]` integrated against the tail.
    pub fn zygmund(alpha: f64, tail: &TailFunction) -> Result<Self> {
        let p = tail.p();
        if !(alpha > 0.0) {
            return Err(domain("zygmund calibration needs alpha > 0"));
        }
        let ln_deriv = move |v: f64| -> f64 {
            // ln G'(e^v) = (p−1)v + ln(p L^α + α L^{α−1}/(1+e^{−v})), L = ln(1+e^v)
            let l = softplus(v);
            (p - 1.0) * v
                + (p * l.powf(alpha) + alpha * l.powf(alpha - 1.0) / (1.0 + (-v).exp())).ln()
        };
        let expected = expectation_by_tail(tail, ln_deriv)?;
        Self::from_fn(
            format!("zygmund(alpha={alpha})"),
            p,
            move |t| Ok(g_mu_zygmund(p, alpha, t)),
            expected,
            0.0,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain("G is defined on [0, ∞)"));
        }
        (self.eval)(t)
    }

    /// `E[G(|X|)]`.
    pub fn expected_g(&self) -> f64 {
        self.expected_g
    }

    /// Zero when the expectation is exact or integrated.
    pub fn expected_g_stderr(&self) -> f64 {
        self.expected_g_stderr
    }

    /// Evaluates the five defining properties on `grid` (positive, increasing `t`).
    pub fn check_properties(&self, grid: &[f64]) -> Result<PropertyReport> {
        if grid.len() < 4 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
            return Err(domain(
                "property grid needs at least 4 increasing positive points",
            ));
        }
        let values = grid
            .iter()
            .map(|&t| self.eval(t))
            .collect::<Result<Vec<_>>>()?;
        let p = self.p;
        let r_p: Vec<f64> = grid
            .iter()
            .zip(&values)
            .map(|(t, g)| g / t.powf(p))
            .collect();
        let r_q: Vec<f64> = grid
            .iter()
            .zip(&values)
            .map(|(t, g)| g / t.powf(p + 1.0))
            .collect();
        let half = grid.len() / 2;
        let tol = 1e-12;
        Ok(PropertyReport {
            positive: values.iter().all(|&g| g > 0.0 && g.is_finite()),
            finite_expectation: self.expected_g.is_finite(),
            ratio_p_grows: r_p[half..].windows(2).all(|w| w[1] > w[0])
                && r_p[r_p.len() - 1] > r_p[0],
            ratio_p_monotone: r_p.windows(2).all(|w| w[1] >= w[0] * (1.0 - tol)),
            ratio_q_vanishes: r_q[half..].windows(2).all(|w| w[1] < w[0])
                && r_q[r_q.len() - 1] < r_q[0],
        })
    }
}

/// Outcome of the grid checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PropertyReport {
    /// `G > 0` on the grid.
    pub positive: bool,
    /// `E[G(|X|)] < ∞`.
    pub finite_expectation: bool,
    /// `G(t)/t^p` strictly increasing over the upper half of the grid.
    pub ratio_p_grows: bool,
    /// `G(t)/t^p` non-decreasing over the whole grid.
    pub ratio_p_monotone: bool,
    /// `G(t)/t^{p+1}` strictly decreasing over the upper half of the grid.
    pub ratio_q_vanishes: bool,
}

impl PropertyReport {
    pub fn all(&self) -> bool {
        self.positive
            && self.finite_expectation
            && self.ratio_p_grows
            && self.ratio_p_monotone
            && self.ratio_q_vanishes
    }
}

/// Geometric grid from `lo` to `hi` with `per_decade` points per factor of ten.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let steps = ((hi / lo).log10() * per_decade as f64).round().max(1.0) as usize;
    (0..=steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / steps as f64))
        .collect()
}

/// `t^p (log(1+t))^α`.
pub fn g_mu_zygmund(p: f64, alpha: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    t.powf(p) * t.ln_1p().powf(alpha)
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn tight_quadrature() -> QuadratureSpec<f64> {
    QuadratureSpec::new(1e-300, 1e-10, 1 << 14).expect("valid constants")
}

/// `E[G(|X|)] = ∫_0^∞ G'(s) P(|X|>s) ds` for `G(0) = 0`, given `v ↦ ln G'(e^v)`.
///
/// Beyond `s = e` the substitution `s = e^{1/w}` maps logarithmically
/// decaying integrands to bounded ones on `w ∈ (0, 1]`.
pub fn expectation_by_tail(tail: &TailFunction, ln_deriv: impl Fn(f64) -> f64) -> Result<f64> {
    let quad = tight_quadrature();
    let surv = tail.survival();
    let at_log = |v: f64| -> f64 {
        let ls = surv.ln_at_exp(v);
        if ls == f64::NEG_INFINITY {
            return 0.0;
        }
        (ln_deriv(v) + ls + v).exp()
    };
    let near = integrate(
        |s: f64| if s <= 0.0 { 0.0 } else { at_log(s.ln()) / s },
        Domain::Finite(0.0, 1.0),
        &quad,
    )?;
    let mid = integrate(at_log, Domain::Finite(0.0, 1.0), &quad)?;
    let far = integrate(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let v = 1.0 / w;
            at_log(v) * v * v
        },
        Domain::Finite(0.0, 1.0),
        &quad,
    )?;
    let total = near + mid + far;
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Divergent("E[G(|X|)] is not finite".into()))
    }
}

const CACHE_LO: f64 = 1e-8;
const CACHE_HI: f64 = 1e15;
const PER_DECADE: usize = 64;
const H_FLOOR: f64 = 1e-290;

/// H_μ on geometric knots with monotone cubic interpolation of `ln H` in `ln s`,
/// plus cumulative G at the knots.
struct HCache {
    p: f64,
    h0: f64,
    s: Vec<f64>,
    ln_s: Vec<f64>,
    ln_h: Vec<f64>,
    slope: Vec<f64>,
    g: Vec<f64>,
    /// Set when H dropped below the floor inside the grid.
    vanishes_after: Option<f64>,
}

impl HCache {
    fn build(tail: &TailFunction) -> Result<Self> {
        let p = tail.p();
        let quad = tight_quadrature();
        let mut s = geometric_grid(CACHE_LO, CACHE_HI, PER_DECADE);
        let surv = tail.survival();
        let top = surv.power_tail_integral(p, CACHE_HI, &quad)?;
        let pieces = s
            .par_windows(2)
            .map(|w| {
                integrate(
                    |x: f64| p * x.powf(p - 1.0) * surv.eval(x),
                    Domain::Finite(w[0], w[1]),
                    &quad,
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut h = vec![0.0; s.len()];
        h[s.len() - 1] = top;
        for i in (0..pieces.len()).rev() {
            h[i] = h[i + 1] + pieces[i];
        }
        let keep = h.iter().position(|&x| !(x > H_FLOOR)).unwrap_or(h.len());
        if keep < 2 {
            return Err(Error::VanishingTail(s[keep.min(s.len() - 1)]));
        }
        let vanishes_after = (keep < h.len()).then(|| s[keep - 1]);
        s.truncate(keep);
        h.truncate(keep);
        let ln_s: Vec<f64> = s.iter().map(|x| x.ln()).collect();
        let ln_h: Vec<f64> = h.iter().map(|x| x.ln()).collect();
        let slope = pchip_slopes(&ln_s, &ln_h);
        let mut cache = Self {
            p,
            h0: tail.m_p_pow(),
            s,
            ln_s,
            ln_h,
            slope,
            g: Vec::new(),
            vanishes_after,
        };
        let first = cache.g_segment_head(cache.s[0])?;
        let increments = (0..cache.s.len() - 1)
            .into_par_iter()
            .map(|i| cache.g_piece(i, cache.s[i + 1]))
            .collect::<Result<Vec<f64>>>()?;
        let mut g = Vec::with_capacity(cache.s.len());
        g.push(first);
        for inc in increments {
            g.push(g[g.len() - 1] + inc);
        }
        cache.g = g;
        Ok(cache)
    }

    // H on [0, s_0] by linear interpolation from H(0).
    fn h_head(&self, x: f64) -> f64 {
        let h1 = self.ln_h[0].exp();
        self.h0 + (h1 - self.h0) * (x / self.s[0])
    }

    fn h_in(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.ln_s[i], self.ln_s[i + 1]);
        let dx = x1 - x0;
        let u = (x.ln() - x0) / dx;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u),
            u * (1.0 - u) * (1.0 - u),
            u * u * (3.0 - 2.0 * u),
            u * u * (u - 1.0),
        );
        (h00 * self.ln_h[i]
            + h10 * dx * self.slope[i]
            + h01 * self.ln_h[i + 1]
            + h11 * dx * self.slope[i + 1])
            .exp()
    }

    fn g_segment_head(&self, t: f64) -> Result<f64> {
        let p = self.p;
        integrate(
            |x: f64| p * x.powf(p - 1.0) / self.h_head(x).sqrt(),
            Domain::Finite(0.0, t),
            &tight_quadrature(),
        )
    }

    fn g_piece(&self, i: usize, t: f64) -> Result<f64> {
        let p = self.p;
        integrate(
            |x: f64| p * x.powf(p - 1.0) / self.h_in(i, x).sqrt(),
            Domain::Finite(self.s[i], t),
            &tight_quadrature(),
        )
    }

    fn g(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        if t <= self.s[0] {
            return self.g_segment_head(t);
        }
        let last = self.s.len() - 1;
        if t > self.s[last] {
            return Err(match self.vanishes_after {
                Some(_) => Error::VanishingTail(t),
                None => domain(format!("G evaluated beyond the cached range {CACHE_HI:e}")),
            });
        }
        let i = self
            .s
            .partition_point(|&x| x <= t)
            .saturating_sub(1)
            .min(last - 1);
        Ok(self.g[i] + self.g_piece(i, t)?)
    }
}

// Fritsch–Carlson slopes for monotone cubic Hermite interpolation.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1)
        .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            m[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{zygmund_spec, zygmund_tail};
    use crate::numerics::Survival;

    fn exp_tail() -> TailFunction {
        TailFunction::new(
            Survival::new(|t: f64| (-t).exp()).with_log_form(|v: f64| -v.exp()),
            1.0,
        )
        .unwrap()
    }

    fn zyg_tail(p: f64, a: f64) -> TailFunction {
        TailFunction::from_spec(&zygmund_spec(p, a).unwrap(), p).unwrap()
    }

    #[test]
    fn canonical_exponential_matches_closed_form() {
        let g = CalibrationFunction::canonical(&exp_tail()).unwrap();
        assert_eq!(g.eval(0.0).unwrap(), 0.0);
        for &t in &[1e-9, 1e-3, 0.5, 1.0, 3.0, 10.0, 20.0, 50.0] {
            let exact = 2.0 * ((t / 2.0f64).exp_m1());
            let v = g.eval(t).unwrap();
            assert!((v - exact).abs() <= 1e-6 * exact, "t={t}: {v} vs {exact}");
        }
        assert!((g.expected_g() - 2.0).abs() < 1e-9);
        assert!(matches!(g.eval(1e4), Err(Error::VanishingTail(_))));
    }

    #[test]
    fn canonical_zygmund_properties() {
        for &(p, a) in &[(1.0, 1.0), (2.0, 0.5)] {
            let g = CalibrationFunction::canonical(&zyg_tail(p, a)).unwrap();
            let grid = geometric_grid(0.1, 1e8, 8);
            let report = g.check_properties(&grid).unwrap();
            assert!(report.all(), "{p},{a}: {report:?}");
        }
    }

    #[test]
    fn zygmund_calibration_properties_and_expectation() {
        let tail = zyg_tail(1.0, 1.0);
        let g = CalibrationFunction::zygmund(1.0, &tail).unwrap();
        assert_eq!(g_mu_zygmund(1.0, 1.0, 0.0), 0.0);
        let e1 = std::f64::consts::E - 1.0;
        assert!((g_mu_zygmund(1.0, 1.0, e1) - e1).abs() < 1e-15);
        assert!(g
            .check_properties(&geometric_grid(0.1, 1e8, 8))
            .unwrap()
            .all());
        // oracle: midpoint rule in w after s = e^{1/w}, plus direct pieces
        let f = |s: f64| (s.ln_1p() + s / (1.0 + s)) * zygmund_tail(1.0, 1.0, s);
        let n = 200_000;
        let mut acc = 0.0;
        let h = std::f64::consts::E / n as f64;
        for i in 0..n {
            acc += f((i as f64 + 0.5) * h) * h;
        }
        let hw = 1.0 / n as f64;
        for i in 0..n {
            let w = (i as f64 + 0.5) * hw;
            let v = 1.0 / w;
            let s = v.exp();
            let val = if s.is_finite() {
                f(s) * s / (w * w)
            } else {
                // integrand → 1 + O(w) in this region
                1.0 + w
            };
            acc += val * hw;
        }
        assert!(
            (g.expected_g() - acc).abs() < 1e-4 * acc,
            "{} vs {acc}",
            g.expected_g()
        );
    }

    #[test]
    fn exponential_fails_only_the_upper_growth_property() {
        let g = CalibrationFunction::canonical(&exp_tail()).unwrap();
        let r = g.check_properties(&geometric_grid(0.1, 200.0, 8)).unwrap();
        assert!(r.positive && r.finite_expectation && r.ratio_p_grows && r.ratio_p_monotone);
        assert!(!r.ratio_q_vanishes);
    }

    #[test]
    fn pchip_is_monotone() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = vec![5.0, 4.0, 3.9, 3.8, 0.0, -1.0, -1.0, -2.0, -10.0, -10.5];
        let m = pchip_slopes(&x, &y);
        assert!(m.iter().all(|&s| s <= 0.0));
    }
}
