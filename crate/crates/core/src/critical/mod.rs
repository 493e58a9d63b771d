//! Tail integrals, calibration functions and the resulting rate bounds for
//! measures with only a p-th moment.

mod calibration;

pub use calibration::{
    expectation_by_tail, g_mu_zygmund, geometric_grid, CalibrationFunction, PropertyReport,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::c_pd;
use crate::error::{domain, Error, Result};
use crate::measures::{stream_rng, MeasureSpec};
use crate::numerics::{pairwise_sum, QuadratureSpec, Real, Survival};

/// `t ↦ P(|X| > t)` paired with a moment order p for which `M_p` is finite.
#[derive(Debug, Clone)]
pub struct TailFunction {
    survival: Survival<f64>,
    p: f64,
    m_p_pow: f64,
}

impl TailFunction {
    /// Fails with [`Error::Divergent`] when `∫ p t^{p−1} P(|X|>t) dt` is infinite.
    pub fn new(survival: Survival<f64>, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(domain("tail function needs p >= 1"));
        }
        let s0 = survival.eval(0.0);
        if !(0.0..=1.0).contains(&s0) {
            return Err(domain("P(|X| > 0) must lie in [0, 1]"));
        }
        let m_p_pow = survival.power_tail_integral(p, 0.0, &tail_quadrature())?;
        Ok(Self {
            survival,
            p,
            m_p_pow,
        })
    }

    pub fn from_spec(spec: &MeasureSpec, p: f64) -> Result<Self> {
        let tail = spec
            .tail()
            .ok_or_else(|| Error::TailUnbounded(spec.name().to_string()))?;
        Self::new(tail.clone(), p)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn survival(&self) -> &Survival<f64> {
        &self.survival
    }

    /// `M_p^p = H_μ(0)`.
    pub fn m_p_pow(&self) -> f64 {
        self.m_p_pow
    }
}

fn tail_quadrature() -> QuadratureSpec<f64> {
    QuadratureSpec::new(1e-300, 1e-10, 1 << 14).expect("valid constants")
}

/// `H_μ(t) = ∫_t^∞ p s^{p−1} P(|X|>s) ds`.
pub fn h_mu(tail: &TailFunction, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain("H is defined on [0, ∞)"));
    }
    if t == 0.0 {
        return Ok(tail.m_p_pow);
    }
    tail.survival
        .power_tail_integral(tail.p, t, &tail_quadrature())
}

/// `γ_ε = p/(2(p+ε)(p+d))`.
pub fn gamma_eps<T: Real>(p: T, d: usize, eps: T) -> Result<T> {
    if !(eps > T::zero()) || !(p >= T::one()) || d == 0 {
        return Err(domain("gamma_eps needs p >= 1, d >= 1, eps > 0"));
    }
    let d = T::lit(d as f64);
    Ok(p / (T::lit(2.0) * (p + eps) * (p + d)))
}

/// `C = max{2^{p−1} C_{p,d}^p, 2^{3p−2}}`.
pub fn section3_constant<T: Real>(p: T, d: usize) -> Result<T> {
    let two = T::lit(2.0);
    let a = two.powf(p - T::one()) * c_pd(p, d)?.powf(p);
    let b = two.powf(T::lit(3.0) * p - two);
    Ok(a.max(b))
}

/// Terms of the bound at sample size N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateGBound {
    pub leading: f64,
    pub remainder: f64,
    pub sigma_used: f64,
}

/// `C(1 + E[G(|X|)]) N^{pγ}/G(N^γ)` and the smoothing remainder, with `σ = N^γ/G(N^γ)^{1/p}`.
pub fn rate_g_bound(
    p: f64,
    d: usize,
    eps: f64,
    g: &CalibrationFunction,
    n: f64,
) -> Result<RateGBound> {
    if !(n >= 2.0) {
        return Err(domain("rate_g_bound needs N >= 2"));
    }
    let gamma = gamma_eps(p, d, eps)?;
    let c = section3_constant(p, d)?;
    let t = n.powf(gamma);
    let gt = g.eval(t)?;
    if !(gt > 0.0) {
        return Err(domain("G must be positive at N^γ"));
    }
    let base = n.powf(p * gamma) / gt;
    let df = d as f64;
    Ok(RateGBound {
        leading: c * (1.0 + g.expected_g()) * base,
        remainder: base * (gt / n.powf((p + eps) * gamma)).powf((p + df) / p),
        sigma_used: t / gt.powf(1.0 / p),
    })
}

/// `C(1 + E[|X|^p (log(1+|X|))^α]) / (log(1+N^γ))^α`.
pub fn zygmund_bound<T: Real>(
    p: T,
    alpha: T,
    d: usize,
    eps: T,
    zygmund_moment: T,
    n: T,
) -> Result<T> {
    if !(n >= T::lit(2.0)) || !(zygmund_moment >= T::zero()) || !(alpha > T::zero()) {
        return Err(domain(
            "zygmund_bound needs N >= 2, alpha > 0 and a nonnegative moment",
        ));
    }
    let gamma = gamma_eps(p, d, eps)?;
    let c = section3_constant(p, d)?;
    Ok(c * (T::one() + zygmund_moment) / n.powf(gamma).ln_1p().powf(alpha))
}

/// Monte Carlo estimates of the three sides of the truncation chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationCheck {
    /// `E[|X|^p 1{|X| ≥ c}]`.
    pub lhs: f64,
    /// `(c^p/G(c)) E[G(|X|) 1{|X| ≥ c}]`.
    pub mid: f64,
    /// `(c^p/G(c)) E[G(|X|)]`.
    pub rhs: f64,
    pub lhs_se: f64,
    pub mid_se: f64,
    pub rhs_se: f64,
}

impl TruncationCheck {
    /// `lhs ≤ mid ≤ rhs` up to three combined standard errors.
    pub fn holds(&self) -> bool {
        let slack = |a: f64, b: f64| 3.0 * (a * a + b * b).sqrt();
        self.lhs <= self.mid + slack(self.lhs_se, self.mid_se)
            && self.mid <= self.rhs + slack(self.mid_se, self.rhs_se)
    }
}

const MC_CHUNK: usize = 1 << 16;

/// Sample mean and standard error of `f(|X|)` with `X ~ spec`, chunked so the
/// result does not depend on the thread count.
pub fn monte_carlo_mean(
    spec: &MeasureSpec,
    n: usize,
    seed: u64,
    f: impl Fn(f64) -> Result<f64> + Sync,
) -> Result<(f64, f64)> {
    let parts = monte_carlo_columns(spec, n, seed, |r| Ok(vec![f(r)?]))?;
    Ok(parts[0])
}

fn monte_carlo_columns(
    spec: &MeasureSpec,
    n: usize,
    seed: u64,
    f: impl Fn(f64) -> Result<Vec<f64>> + Sync,
) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(domain("Monte Carlo needs at least 2 samples"));
    }
    let chunks = n.div_ceil(MC_CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<(f64, f64)>> {
            let mut rng = stream_rng(seed, c as u64);
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            let mut buf = vec![0.0; spec.dim()];
            let mut acc: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
            for _ in 0..len {
                spec.draw(&mut rng, &mut buf)?;
                let r = buf.iter().map(|x| x * x).sum::<f64>().sqrt();
                let vals = f(r)?;
                if acc.is_empty() {
                    acc = vec![(Vec::with_capacity(len), Vec::with_capacity(len)); vals.len()];
                }
                for (slot, v) in acc.iter_mut().zip(vals) {
                    slot.0.push(v);
                    slot.1.push(v * v);
                }
            }
            Ok(acc
                .into_iter()
                .map(|(a, b)| (pairwise_sum(&a), pairwise_sum(&b)))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = sums[0].len();
    let nf = n as f64;
    Ok((0..cols)
        .map(|k| {
            let s: Vec<f64> = sums.iter().map(|c| c[k].0).collect();
            let s2: Vec<f64> = sums.iter().map(|c| c[k].1).collect();
            let mean = pairwise_sum(&s) / nf;
            let var = ((pairwise_sum(&s2) / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
            (mean, (var / nf).sqrt())
        })
        .collect())
}

/// Monte Carlo evaluation of `E[|X|^p 1{|X|≥c}] ≤ (c^p/G(c))E[G(|X|)1{|X|≥c}] ≤ (c^p/G(c))E[G(|X|)]`.
pub fn truncation_bound_check(
    g: &CalibrationFunction,
    spec: &MeasureSpec,
    c: f64,
    n_mc: usize,
    seed: u64,
) -> Result<TruncationCheck> {
    if !(c > 0.0) {
        return Err(domain("truncation level must be positive"));
    }
    let gc = g.eval(c)?;
    if !(gc > 0.0) {
        return Err(domain("G must be positive at the truncation level"));
    }
    let p = g.p();
    let scale = c.powf(p) / gc;
    let cols = monte_carlo_columns(spec, n_mc, seed, |r| {
        let gr = if r == 0.0 { 0.0 } else { g.eval(r)? };
        let hit = if r >= c { 1.0 } else { 0.0 };
        Ok(vec![hit * r.powf(p), hit * gr * scale, gr * scale])
    })?;
    Ok(TruncationCheck {
        lhs: cols[0].0,
        mid: cols[1].0,
        rhs: cols[2].0,
        lhs_se: cols[0].1,
        mid_se: cols[1].1,
        rhs_se: cols[2].1,
    })
}
