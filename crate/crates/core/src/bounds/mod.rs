//! Closed-form constants and upper bounds for the smoothed empirical rate.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{gamma_fn, gamma_ratio, Real};

fn dim<T: Real>(d: usize) -> Result<T> {
    if d == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    Ok(T::lit(d as f64))
}

/// `C_{p,d} = 2^{3/2} (Γ((p+d)/2)/Γ(d/2))^{1/p}`.
pub fn c_pd<T: Real>(p: T, d: usize) -> Result<T> {
    if !(p >= T::one()) {
        return Err(domain("c_pd needs p >= 1"));
    }
    let d: T = dim(d)?;
    let half = T::lit(0.5);
    let ratio = gamma_ratio((p + d) * half, d * half)?;
    Ok(T::lit(2.0).powf(T::lit(1.5)) * ratio.powf(p.recip()))
}

/// `M_p^p(N_1) = 2^{p/2} Γ((p+d)/2)/Γ(d/2)`, the p-th absolute moment of a standard normal in R^d.
pub fn gaussian_moment<T: Real>(p: T, d: usize) -> Result<T> {
    if !(p >= T::zero()) {
        return Err(domain("gaussian_moment needs p >= 0"));
    }
    let d: T = dim(d)?;
    let half = T::lit(0.5);
    Ok(T::lit(2.0).powf(p * half) * gamma_ratio((p + d) * half, d * half)?)
}

fn check_carlson<T: Real>(alpha: T, beta: T, d: T) -> Result<()> {
    if !(beta > T::one()) {
        return Err(domain("Carlson inequality needs beta > 1"));
    }
    if !(alpha > d * (beta - T::one())) {
        return Err(domain(format!(
            "Carlson inequality needs alpha > d(beta - 1) (alpha = {alpha}, beta = {beta})"
        )));
    }
    Ok(())
}

/// `I_{α,β,d} = Γ(d/α) Γ(1/(β−1) − d/α) / Γ(1/(β−1))`.
pub fn i_abd<T: Real>(alpha: T, beta: T, d: usize) -> Result<T> {
    let d: T = dim(d)?;
    check_carlson(alpha, beta, d)?;
    let a = d / alpha;
    let b = (beta - T::one()).recip();
    Ok(gamma_fn(a)? * gamma_ratio(b - a, b)?)
}

/// Exponents `((α − d(β−1))/(αβ), d(β−1)/(αβ))` of `∫g^β` and `∫|x|^α g^β` in the Carlson inequality.
pub fn carlson_exponents<T: Real>(alpha: T, beta: T, d: usize) -> Result<(T, T)> {
    let d: T = dim(d)?;
    check_carlson(alpha, beta, d)?;
    let k = d * (beta - T::one());
    Ok(((alpha - k) / (alpha * beta), k / (alpha * beta)))
}

/// The Carlson-type constant `C_{α,β,d}`.
pub fn carlson_constant<T: Real>(alpha: T, beta: T, d: usize) -> Result<T> {
    let (e1, _) = carlson_exponents(alpha, beta, d)?;
    let i = i_abd(alpha, beta, d)?;
    let df: T = dim(d)?;
    let k = df * (beta - T::one());
    let two = T::lit(2.0);
    let sphere = two * T::PI().powf(df / two) / gamma_fn(df / two)?;
    Ok((alpha / k).powf(beta.recip())
        * (k / (alpha - k)).powf(e1)
        * (sphere * i / alpha).powf((beta - T::one()) / beta))
}

/// `F(t) = t^{−d(β−1)/β} (∫g^β + t^α ∫|x|^α g^β)^{1/β}`.
pub fn carlson_f<T: Real>(
    t: T,
    alpha: T,
    beta: T,
    d: usize,
    int_g_beta: T,
    int_x_alpha_g_beta: T,
) -> Result<T> {
    let df: T = dim(d)?;
    Ok(t.powf(-df * (beta - T::one()) / beta)
        * (int_g_beta + t.powf(alpha) * int_x_alpha_g_beta).powf(beta.recip()))
}

/// Minimizer `t* = (d(β−1)∫g^β / ((α − d(β−1))∫|x|^α g^β))^{1/α}` of [`carlson_f`].
pub fn carlson_t_star<T: Real>(
    alpha: T,
    beta: T,
    d: usize,
    int_g_beta: T,
    int_x_alpha_g_beta: T,
) -> Result<T> {
    let df: T = dim(d)?;
    check_carlson(alpha, beta, df)?;
    let k = df * (beta - T::one());
    Ok((k * int_g_beta / ((alpha - k) * int_x_alpha_g_beta)).powf(alpha.recip()))
}

/// `C_β = 2√(⌊β/2⌋ + 1)`.
pub fn mz_constant<T: Real>(beta: T) -> Result<T> {
    if !(beta >= T::one()) {
        return Err(domain("mz_constant needs beta >= 1"));
    }
    let two = T::lit(2.0);
    Ok(two * ((beta / two).floor() + T::one()).sqrt())
}

/// `min((β−1)/β, 1/2)`.
pub fn mz_rate_exponent<T: Real>(beta: T) -> Result<T> {
    if !(beta >= T::one()) {
        return Err(domain("mz_rate_exponent needs beta >= 1"));
    }
    Ok(((beta - T::one()) / beta).min(T::lit(0.5)))
}

/// Which proof's constant to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateVariant {
    /// Carlson-type inequality with the Marcinkiewicz–Zygmund bound.
    Carlson,
    /// Dyadic partition of R^d with the Marcinkiewicz–Zygmund bound.
    Dyadic,
}

/// Parameters defining the smoothed-rate constant `C_{β,σ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothRateConstantSpec<T> {
    pub p: T,
    pub q: T,
    pub d: usize,
    pub sigma: T,
    pub beta: T,
    /// `M_q(μ)`.
    pub m_q: T,
    pub variant: RateVariant,
}

impl<T: Real> SmoothRateConstantSpec<T> {
    pub fn new(
        p: T,
        q: T,
        d: usize,
        sigma: T,
        beta: T,
        m_q: T,
        variant: RateVariant,
    ) -> Result<Self> {
        let s = Self {
            p,
            q,
            d,
            sigma,
            beta,
            m_q,
            variant,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_variant(self, variant: RateVariant) -> Self {
        Self { variant, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let d: T = dim(self.d)?;
        if !(self.p >= T::one()) || !(self.q > self.p) {
            return Err(domain("rate constant needs 1 <= p < q"));
        }
        if !(self.sigma > T::zero()) || !(self.m_q >= T::zero()) {
            return Err(domain("rate constant needs sigma > 0 and M_q >= 0"));
        }
        let upper = (self.q + d) / (self.p + d);
        if !(self.beta > T::one() && self.beta < upper) {
            return Err(domain(format!(
                "beta = {} must lie in (1, {upper})",
                self.beta
            )));
        }
        Ok(())
    }

    /// `α = q − pβ`.
    pub fn alpha(&self) -> T {
        self.q - self.p * self.beta
    }
}

/// `C_{β,σ}` for the chosen variant.
pub fn rate_smooth_constant<T: Real>(spec: &SmoothRateConstantSpec<T>) -> Result<T> {
    spec.validate()?;
    match spec.variant {
        RateVariant::Carlson => carlson_rate_constant(spec),
        RateVariant::Dyadic => dyadic_rate_constant(spec),
    }
}

fn carlson_rate_constant<T: Real>(s: &SmoothRateConstantSpec<T>) -> Result<T> {
    let d: T = dim(s.d)?;
    let (two, one) = (T::lit(2.0), T::one());
    let alpha = s.alpha();
    let c_abd = carlson_constant(alpha, s.beta, s.d)?;
    let c_beta = mz_constant(s.beta)?;
    let smoothing = (two * T::PI() * s.sigma * s.sigma).powf(d * (s.beta - one) / (two * s.beta));
    let brace = two.powf(s.q - one) * s.m_q.powf(s.q)
        + two.powf(T::lit(1.5) * s.q - one)
            * s.sigma.powf(s.q)
            * gamma_ratio((s.q + d) / two, d / two)?;
    let exponent = ((s.p + d) * s.beta - d) / (s.q * s.beta);
    finite(
        two.powf(s.p) * c_beta * c_abd / smoothing * brace.powf(exponent),
        "carlson constant",
    )
}

/// `1 + Σ_{n≥1} 2^{pn + dn(1−1/β)} (2d)^{1/β} e^{−2^{2n−5}/(βσ²)}`.
///
/// Terms are formed in log space. Summation stops once terms shrink by more
/// than half per step and twice the latest term is below 1e-16 of the sum.
pub fn dyadic_series<T: Real>(p: T, d: usize, beta: T, sigma: T) -> Result<T> {
    let df: T = dim(d)?;
    let (one, two) = (T::one(), T::lit(2.0));
    let ln2 = T::LN_2();
    let growth = (p + df * (one - beta.recip())) * ln2;
    let lead = (two * df).ln() / beta;
    let scale = (beta * sigma * sigma).recip();
    let mut sum = one;
    let mut prev = T::zero();
    for n in 1..=512 {
        let nf = T::lit(f64::from(n));
        let term = (growth * nf + lead - two.powf(two * nf - T::lit(5.0)) * scale).exp();
        sum = sum + term;
        let shrinking = n > 1 && term <= prev * T::lit(0.5);
        if shrinking && two * term < T::lit(1e-16) * sum {
            return Ok(sum);
        }
        prev = term;
    }
    Err(Error::NonConvergence {
        subdivisions: 512,
        estimate: sum.to_f64_lossy(),
        error: prev.to_f64_lossy(),
    })
}

fn dyadic_rate_constant<T: Real>(s: &SmoothRateConstantSpec<T>) -> Result<T> {
    let d: T = dim(s.d)?;
    let (one, two) = (T::one(), T::lit(2.0));
    let c_beta = mz_constant(s.beta)?;
    let prefactor = two.powf(s.p + d * (one - s.beta.recip())) * d.powf(s.p / two) * c_beta
        / (two * T::PI() * s.sigma * s.sigma).powf(d * (s.beta - one) / (two * s.beta));
    let ratio = two.powf(s.p + d - (s.q + d) / s.beta);
    let moment_part = two.powf(two * s.q / s.beta) / (one - ratio) * s.m_q.powf(s.q / s.beta);
    let series = dyadic_series(s.p, s.d, s.beta, s.sigma)?;
    finite(prefactor * (moment_part + series), "dyadic constant")
}

fn finite<T: Real>(v: T, what: &str) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("{what} is not finite")))
    }
}

/// `C_{β,σ} · N^{−min((β−1)/β, 1/2)}` for the variant in `spec`.
pub fn rate_smooth_bound_variant<T: Real>(spec: &SmoothRateConstantSpec<T>, n: u64) -> Result<T> {
    if n == 0 {
        return Err(domain("N must be at least 1"));
    }
    let c = rate_smooth_constant(spec)?;
    Ok(c * T::lit(n as f64).powf(-mz_rate_exponent(spec.beta)?))
}

/// The smaller of the two variant bounds at sample size `n`.
pub fn rate_smooth_bound<T: Real>(spec: &SmoothRateConstantSpec<T>, n: u64) -> Result<T> {
    let a = rate_smooth_bound_variant(&spec.with_variant(RateVariant::Carlson), n)?;
    let b = rate_smooth_bound_variant(&spec.with_variant(RateVariant::Dyadic), n)?;
    Ok(a.min(b))
}

/// Relative back-off from the open upper end of the β interval.
pub const BETA_BACKOFF: f64 = 1e-3;

/// Choice of β maximizing the rate exponent, and that exponent.
pub fn best_beta<T: Real>(p: T, q: T, d: usize) -> Result<(T, T)> {
    let df: T = dim(d)?;
    if !(q > p) || !(p >= T::one()) {
        return Err(domain("best_beta needs 1 <= p < q"));
    }
    let two = T::lit(2.0);
    let ratio = (q + df) / (p + df);
    if ratio > two {
        return Ok((two, T::lit(0.5)));
    }
    let keep = T::one() - T::lit(BETA_BACKOFF);
    let mut beta = keep * ratio;
    if !(beta > T::one()) {
        beta = T::one() + keep * (ratio - T::one());
    }
    Ok((beta, (beta - T::one()) / beta))
}

fn near<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-12) * a.abs().max(b.abs()).max(T::one())
}

/// N-dependent factor of the classical empirical rate used as a comparator:
/// `N^{−1/2} + N^{−(q−p)/q}` (p > d/2), `N^{−1/2} log(1+N) + N^{−(q−p)/q}` (p = d/2),
/// `N^{−p/d} + N^{−(q−p)/q}` (p < d/2).
pub fn fg15_rate_shape<T: Real>(p: T, q: T, d: usize, n: T) -> Result<T> {
    let df: T = dim(d)?;
    if !(q > p) || !(p >= T::one()) || !(n >= T::one()) {
        return Err(domain("fg15_rate_shape needs 1 <= p < q and N >= 1"));
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let moment_term = n.powf(-(q - p) / q);
    let half_d = df * half;
    if near(p, half_d) {
        if near(q, two * p) {
            return Err(Error::UnhandledBoundary(format!(
                "q = 2p = {q} with p = d/2"
            )));
        }
        return Ok(n.powf(-half) * n.ln_1p() + moment_term);
    }
    if p > half_d {
        if near(q, two * p) {
            return Err(Error::UnhandledBoundary(format!("q = 2p = {q}")));
        }
        return Ok(n.powf(-half) + moment_term);
    }
    if near(q, df * p / (df - p)) {
        return Err(Error::UnhandledBoundary(format!("q = dp/(d-p) = {q}")));
    }
    Ok(n.powf(-p / df) + moment_term)
}

/// `C_FG · M_q^p · fg15_rate_shape`; `C_FG` has no known value, so it is an input.
pub fn fg15_bound<T: Real>(p: T, q: T, d: usize, n: T, c_fg: T, m_q: T) -> Result<T> {
    Ok(c_fg * m_q.powf(p) * fg15_rate_shape(p, q, d, n)?)
}
