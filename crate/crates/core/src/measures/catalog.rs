use std::f64::consts::{E, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};

use super::{stream_rng, DiscreteMeasure, Rng, SampleCloud};
use crate::error::{domain, Error, Result};
use crate::numerics::{gamma_fn, gamma_ratio, QuadratureSpec, Survival};

/// Draws one point into the provided slice.
pub type Sampler = Arc<dyn Fn(&mut Rng, &mut [f64]) + Send + Sync>;
type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `q ↦ M_q^q` where known in closed form (`+∞` for divergent orders).
type MomentFn = Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>;

/// A sampleable distribution with whatever analytic information is known.
#[derive(Clone)]
pub struct MeasureSpec {
    name: String,
    dim: usize,
    sampler: Option<Sampler>,
    tail: Option<Survival<f64>>,
    density: Option<DensityFn>,
    moments: Option<MomentFn>,
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("tail", &self.tail.is_some())
            .field("density", &self.density.is_some())
            .finish()
    }
}

impl MeasureSpec {
    /// A spec with only a name, a dimension and a sampler; attach the rest with the `with_*` methods.
    pub fn custom(name: impl Into<String>, dim: usize, sampler: Sampler) -> Self {
        Self {
            name: name.into(),
            dim,
            sampler: Some(sampler),
            tail: None,
            density: None,
            moments: None,
        }
    }

    pub fn with_tail(mut self, tail: Survival<f64>) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn with_density(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(f));
        self
    }

    pub fn with_moments(mut self, f: impl Fn(f64) -> Option<f64> + Send + Sync + 'static) -> Self {
        self.moments = Some(Arc::new(f));
        self
    }

    pub fn point_mass(dim: usize) -> Self {
        Self::custom("point_mass", dim, Arc::new(|_, out| out.fill(0.0)))
            .with_tail(Survival::new(|_t: f64| 0.0))
            .with_moments(|_| Some(0.0))
    }

    /// Standard normal in R^d. The tail of |X| is closed-form for d ≤ 2.
    pub fn gaussian(dim: usize) -> Self {
        let d = dim as f64;
        let mut spec = Self::custom(
            "gaussian",
            dim,
            Arc::new(|rng, out| {
                for x in out.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
            }),
        )
        .with_density(move |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (-0.5 * r2).exp() / (2.0 * std::f64::consts::PI).powf(0.5 * d)
        })
        .with_moments(move |q| {
            gamma_ratio(0.5 * (q + d), 0.5 * d)
                .ok()
                .map(|g| 2f64.powf(0.5 * q) * g)
        });
        match dim {
            1 => {
                spec.tail = Some(Survival::new(|t: f64| libm::erfc(t / SQRT_2)));
            }
            2 => {
                spec.tail = Some(
                    Survival::new(|t: f64| (-0.5 * t * t).exp())
                        .with_log_form(|v: f64| -0.5 * (2.0 * v).exp()),
                );
            }
            _ => {}
        }
        spec
    }

    /// Exponential(1) on the half line.
    pub fn exponential() -> Self {
        Self::custom(
            "exponential",
            1,
            Arc::new(|rng, out| out[0] = rng.sample(Exp1)),
        )
        .with_tail(Survival::new(|t: f64| (-t).exp()).with_log_form(|v: f64| -v.exp()))
        .with_density(|x| if x[0] >= 0.0 { (-x[0]).exp() } else { 0.0 })
        .with_moments(|q| gamma_fn(q + 1.0).ok())
    }

    /// Laplace law with density e^{−|x|/b}/(2b).
    pub fn laplace(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(domain("laplace scale must be positive"));
        }
        let b = scale;
        Ok(Self::custom(
            format!("laplace(scale={b})"),
            1,
            Arc::new(move |rng, out| {
                let e: f64 = rng.sample(Exp1);
                out[0] = if rng.random::<bool>() { b * e } else { -b * e };
            }),
        )
        .with_tail(
            Survival::new(move |t: f64| (-t / b).exp()).with_log_form(move |v: f64| -v.exp() / b),
        )
        .with_density(move |x| (-x[0].abs() / b).exp() / (2.0 * b))
        .with_moments(move |q| gamma_fn(q + 1.0).ok().map(|g| b.powf(q) * g)))
    }

    /// Uniform law on [−h, h].
    pub fn uniform(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(domain("uniform half-width must be positive"));
        }
        let h = half_width;
        Ok(Self::custom(
            format!("uniform(half_width={h})"),
            1,
            Arc::new(move |rng, out| out[0] = h * (2.0 * rng.random::<f64>() - 1.0)),
        )
        .with_tail(Survival::new(move |t: f64| (1.0 - t / h).clamp(0.0, 1.0)))
        .with_density(move |x| if x[0].abs() <= h { 0.5 / h } else { 0.0 })
        .with_moments(move |q| Some(h.powf(q) / (q + 1.0))))
    }

    /// The untruncated atomic measure a_0 δ_0 + Σ_k (a_k/2)(δ_{x_k} + δ_{−x_k}),
    /// a_k = 2^{−k²}, x_k = 2^k e_1.
    pub fn sharp_rate(dim: usize) -> Self {
        Self::custom(
            "sharp_rate",
            dim,
            Arc::new(|rng, out| {
                out.fill(0.0);
                out[0] = sharp_rate_inverse_cdf(rng.random::<f64>());
            }),
        )
        .with_tail(Survival::new(sharp_rate_tail))
        .with_moments(|q| Some(sharp_rate_moment_pow(q)))
    }

    /// Builds a catalog entry from `name` or `name:key=value,...`.
    ///
    /// Names: `point_mass`, `gaussian`, `exponential`, `laplace` (`scale`),
    /// `uniform` (`half_width`), `zygmund` (`p`, `alpha`), `sharp_rate`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let (name, args) = match text.split_once(':') {
            Some((n, a)) => (n.trim(), a),
            None => (text.trim(), ""),
        };
        let mut params = std::collections::BTreeMap::new();
        for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::Config(format!("measure parameter '{kv}' is not key=value"))
            })?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("measure parameter '{kv}' is not numeric")))?;
            params.insert(k.trim().to_string(), v);
        }
        let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
        let one_dim = |s: Result<Self>| -> Result<Self> {
            if dim != 1 {
                return Err(Error::Config(format!(
                    "measure '{name}' is one-dimensional"
                )));
            }
            s
        };
        match name {
            "point_mass" | "dirac" => Ok(Self::point_mass(dim)),
            "gaussian" | "normal" => Ok(Self::gaussian(dim)),
            "exponential" => one_dim(Ok(Self::exponential())),
            "laplace" => one_dim(Self::laplace(get("scale", 1.0))),
            "uniform" => one_dim(Self::uniform(get("half_width", 1.0))),
            "zygmund" => one_dim(zygmund_spec(get("p", 1.0), get("alpha", 1.0))),
            "sharp_rate" => Ok(Self::sharp_rate(dim)),
            other => Err(Error::Config(format!("unknown measure '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail(&self) -> Option<&Survival<f64>> {
        self.tail.as_ref()
    }

    pub fn density(&self, x: &[f64]) -> Option<f64> {
        self.density.as_ref().map(|f| f(x))
    }

    pub fn has_sampler(&self) -> bool {
        self.sampler.is_some()
    }

    /// Draws one point into `out` (length `dim`).
    pub fn draw(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        let s = self
            .sampler
            .as_ref()
            .ok_or_else(|| Error::InvalidMeasure(format!("{} has no sampler", self.name)))?;
        s(rng, out);
        Ok(())
    }

    /// Draws `n` points as a flat row-major vector.
    pub fn draw_n(&self, rng: &mut Rng, n: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n * self.dim];
        for row in out.chunks_exact_mut(self.dim) {
            self.draw(rng, row)?;
        }
        Ok(out)
    }

    /// `M_q^q = E|X|^q`, from the closed form if known, else by tail quadrature.
    pub fn moment_pow(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(domain("moment order must be at least 1"));
        }
        if let Some(v) = self.moments.as_ref().and_then(|m| m(q)) {
            if v.is_infinite() {
                return Err(Error::Divergent(format!(
                    "M_{q} of {} is infinite",
                    self.name
                )));
            }
            return Ok(v);
        }
        self.moment_pow_by_quadrature(q, &QuadratureSpec::default())
    }

    /// `M_q = (E|X|^q)^{1/q}`.
    pub fn moment(&self, q: f64) -> Result<f64> {
        Ok(self.moment_pow(q)?.powf(1.0 / q))
    }

    /// `∫_0^∞ q t^{q−1} P(|X| > t) dt`, ignoring any closed form.
    pub fn moment_pow_by_quadrature(&self, q: f64, quad: &QuadratureSpec<f64>) -> Result<f64> {
        let tail = self.tail.as_ref().ok_or_else(|| {
            Error::InvalidMeasure(format!("{} declares no tail function", self.name))
        })?;
        tail.power_tail_integral(q, 0.0, quad)
    }
}

/// N i.i.d. draws from `spec` using stream 0 of `seed`.
pub fn sample(spec: &MeasureSpec, n: usize, seed: u64) -> Result<SampleCloud> {
    if n == 0 {
        return Err(domain("sample size must be positive"));
    }
    let mut rng = stream_rng(seed, 0);
    let pts = spec.draw_n(&mut rng, n)?;
    SampleCloud::from_flat(spec.dim(), pts, seed, spec.name())
}

/// Tail `min(1, t^{−p} (log(e + t))^{−(α+2)})`.
pub fn zygmund_tail(p: f64, alpha: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (t.powf(-p) * (E + t).ln().powf(-(alpha + 2.0))).min(1.0)
}

// ln(e + e^v) without overflow
fn ln_e_plus_exp(v: f64) -> f64 {
    if v > 1.0 {
        v + (1.0 - v).exp().ln_1p()
    } else {
        1.0 + (v - 1.0).exp().ln_1p()
    }
}

fn zygmund_log_tail(p: f64, alpha: f64, v: f64) -> f64 {
    (-p * v - (alpha + 2.0) * ln_e_plus_exp(v).ln()).min(0.0)
}

fn zygmund_quantile(p: f64, alpha: f64, u: f64) -> f64 {
    // smallest t with S(t) <= u, by bisection on v = ln t
    let target = u.ln();
    let mut lo = -40.0f64;
    let mut hi = 1.0f64;
    while zygmund_log_tail(p, alpha, hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if zygmund_log_tail(p, alpha, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}

/// Symmetric law on the line with `P(|X| > t) = min(1, t^{−p}(log(e+t))^{−(α+2)})`.
///
/// M_p is finite and M_q is infinite for every q > p.
pub fn zygmund_spec(p: f64, alpha: f64) -> Result<MeasureSpec> {
    if !(p >= 1.0) || !(alpha > 0.0) {
        return Err(domain("zygmund spec needs p >= 1 and alpha > 0"));
    }
    Ok(MeasureSpec::custom(
        format!("zygmund(p={p},alpha={alpha})"),
        1,
        Arc::new(move |rng, out| {
            let u = 1.0 - rng.random::<f64>();
            let t = zygmund_quantile(p, alpha, u);
            out[0] = if rng.random::<bool>() { t } else { -t };
        }),
    )
    .with_tail(
        Survival::new(move |t: f64| zygmund_tail(p, alpha, t))
            .with_log_form(move |v: f64| zygmund_log_tail(p, alpha, v)),
    )
    .with_moments(move |q| if q > p { Some(f64::INFINITY) } else { None }))
}

const SHARP_K_CAP: i32 = 64;

#[inline]
fn half_atom_weight(k: i32) -> f64 {
    // a_k / 2 = 2^{−k²−1}; zero once it underflows
    2f64.powi(-(k * k) - 1)
}

fn sharp_rate_a0() -> f64 {
    let tail: f64 = (1..=10).map(|k| 2f64.powi(-(k * k))).sum();
    1.0 - tail
}

/// Coordinate along e_1 of the draw with uniform variate `u ∈ [0, 1)`.
///
/// The cumulative order is 0, +x_1, −x_1, +x_2, −x_2, …
pub fn sharp_rate_inverse_cdf(u: f64) -> f64 {
    let mut c = sharp_rate_a0();
    if u < c {
        return 0.0;
    }
    for k in 1..=SHARP_K_CAP {
        let h = half_atom_weight(k);
        let x = 2f64.powi(k);
        if u < c + h {
            return x;
        }
        c += h;
        if u < c + h {
            return -x;
        }
        c += h;
    }
    // unreachable for u < 1: the cumulative sum reaches 1.0 in double precision by k = 8
    2f64.powi(SHARP_K_CAP)
}

fn sharp_rate_tail(t: f64) -> f64 {
    if t < 0.0 {
        return 1.0;
    }
    (1..=SHARP_K_CAP)
        .filter(|&k| 2f64.powi(k) > t)
        .map(|k| 2.0 * half_atom_weight(k))
        .sum()
}

/// `Σ_k 2^{−(k² − qk)}`, summed until terms drop below 1e-18 past the peak.
fn sharp_rate_moment_pow(q: f64) -> f64 {
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = (-(k * k - q * k) * std::f64::consts::LN_2).exp();
        sum += term;
        if term < 1e-18 && k > q {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Truncated sharp-rate measure with atoms 0, ±2^k e_1 for k ≤ k_max.
///
/// The omitted mass Σ_{k>k_max} a_k is added to the atom at 0.
pub fn sharp_rate_measure(dim: usize, k_max: u32) -> Result<DiscreteMeasure> {
    if dim == 0 || k_max == 0 || k_max > 32 {
        return Err(domain(
            "sharp_rate_measure needs d >= 1 and 1 <= k_max <= 32",
        ));
    }
    let mut points = vec![0.0; dim];
    let mut weights = vec![0.0];
    let mut kept = 0.0;
    for k in 1..=k_max as i32 {
        let h = half_atom_weight(k);
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; dim];
            p[0] = sign * 2f64.powi(k);
            points.extend(p);
            weights.push(h);
        }
        kept += 2.0 * h;
    }
    weights[0] = 1.0 - kept;
    DiscreteMeasure::from_flat(dim, points, weights)
}

/// N draws from the untruncated sharp-rate measure in R^d.
pub fn sample_sharp_rate(dim: usize, n: usize, seed: u64) -> Result<SampleCloud> {
    sample(&MeasureSpec::sharp_rate(dim), n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{moment_pow, Atoms};

    #[test]
    fn point_mass_sample() {
        let c = sample(&MeasureSpec::point_mass(3), 5, 11).unwrap();
        assert_eq!(c.len(), 5);
        assert!(c.points_flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = zygmund_spec(1.0, 1.0).unwrap();
        assert_eq!(sample(&s, 100, 3).unwrap(), sample(&s, 100, 3).unwrap());
        assert_ne!(sample(&s, 100, 3).unwrap(), sample(&s, 100, 4).unwrap());
    }

    #[test]
    fn gaussian_mean_within_clt_width() {
        let n = 100_000;
        let c = sample(&MeasureSpec::gaussian(1), n, 1).unwrap();
        let mean: f64 = c.points_flat().iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn sharp_rate_truncations() {
        let m1 = sharp_rate_measure(1, 1).unwrap();
        assert_eq!(m1.weights(), &[0.5, 0.25, 0.25]);
        let m3 = sharp_rate_measure(2, 3).unwrap();
        assert_eq!(m3.weight(0), 0.435546875);
        let m6 = sharp_rate_measure(1, 6).unwrap();
        let idx = (0..m6.len()).find(|&i| m6.point(i)[0] == 16.0).unwrap();
        assert_eq!(m6.weight(idx), 2f64.powi(-17));
        for k in 1..=7 {
            let m = sharp_rate_measure(1, k).unwrap();
            assert_eq!(m.weights().iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn sharp_rate_third_moment_series() {
        // frozen partial sums of Σ 2^{−(k²−3k)}: 4 + 4 + 1 + 1/16 + 2^{-10} + ...
        let mut oracle = 0.0;
        for k in 1..40i32 {
            oracle += 2f64.powi(-(k * k - 3 * k));
        }
        let v = MeasureSpec::sharp_rate(1).moment_pow(3.0).unwrap();
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 9.063_480_380_923_465).abs() < 1e-9);
        // truncation at k_max = 6 changes it by less than 2^{−48}·2^{21}
        let m = sharp_rate_measure(1, 6).unwrap();
        assert!((moment_pow(&m, 3.0) - v).abs() < 2f64.powi(-27));
    }

    #[test]
    fn sharp_rate_inverse_cdf_partition() {
        let a0 = sharp_rate_a0();
        assert_eq!(sharp_rate_inverse_cdf(0.0), 0.0);
        assert_eq!(sharp_rate_inverse_cdf(a0 * 0.999), 0.0);
        assert_eq!(sharp_rate_inverse_cdf(a0 + 0.1), 2.0);
        assert_eq!(sharp_rate_inverse_cdf(a0 + 0.3), -2.0);
        let last = sharp_rate_inverse_cdf(1.0 - f64::EPSILON);
        assert!(last.abs() <= 2f64.powi(8) && last.abs().log2().fract() == 0.0);
    }

    #[test]
    fn sharp_rate_empirical_masses() {
        let n = 1_000_000;
        let c = sample_sharp_rate(2, n, 7).unwrap();
        let count = |x: f64| (0..n).filter(|&i| c.point(i)[0] == x).count() as f64 / n as f64;
        let nf = n as f64;
        assert!((count(2.0) - 0.25).abs() <= 4.0 * (0.25 * nf).sqrt() / nf);
        let w = 2f64.powi(-5);
        assert!((count(4.0) - w).abs() <= 4.0 * (w / nf).sqrt());
        assert!((0..n).all(|i| c.point(i)[1] == 0.0));
    }

    #[test]
    fn zygmund_tail_properties() {
        let (p, a) = (1.0, 1.0);
        assert!(zygmund_tail(p, a, 1.0) < 1.0);
        assert!((zygmund_tail(p, a, 1.0) - (E + 1.0).ln().powf(-3.0)).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..10_000 {
            let t = i as f64 * 0.01;
            let s = zygmund_tail(p, a, t);
            assert!(s <= prev);
            prev = s;
        }
        let spec = zygmund_spec(p, a).unwrap();
        assert!(spec.moment_pow(1.0).unwrap().is_finite());
        assert!(matches!(spec.moment_pow(1.5), Err(Error::Divergent(_))));
        assert!(matches!(
            spec.moment_pow_by_quadrature(1.5, &QuadratureSpec::default()),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn zygmund_quantile_inverts_tail() {
        for &u in &[0.9, 0.5, 0.1, 1e-3, 1e-8, 1e-15] {
            let t = zygmund_quantile(2.0, 0.5, u);
            let s = zygmund_tail(2.0, 0.5, t);
            assert!((s - u).abs() < 1e-9 * u, "u={u} t={t} s={s}");
        }
    }

    #[test]
    fn tail_and_closed_form_moments_agree() {
        let specs = [
            MeasureSpec::exponential(),
            MeasureSpec::gaussian(1),
            MeasureSpec::gaussian(2),
            MeasureSpec::laplace(0.7).unwrap(),
            MeasureSpec::uniform(2.0).unwrap(),
        ];
        for s in &specs {
            for q in [1.0, 2.0, 3.0, 4.5] {
                let closed = s.moment_pow(q).unwrap();
                let quad = s
                    .moment_pow_by_quadrature(q, &QuadratureSpec::default())
                    .unwrap();
                assert!(
                    (closed - quad).abs() <= 1e-6 * closed,
                    "{} q={q}: {closed} vs {quad}",
                    s.name()
                );
            }
        }
    }

    #[test]
    fn empirical_moments_converge() {
        let n = 100_000;
        for s in [MeasureSpec::gaussian(1), MeasureSpec::exponential()] {
            let c = sample(&s, n, 5).unwrap();
            for q in [1.0, 2.0, 3.0] {
                let xs: Vec<f64> = c.points_flat().iter().map(|x| x.abs().powf(q)).collect();
                let mean = xs.iter().sum::<f64>() / n as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let exact = s.moment_pow(q).unwrap();
                assert!((mean - exact).abs() <= 5.0 * se, "{} q={q}", s.name());
            }
        }
    }

    #[test]
    fn parse_catalog_names() {
        assert_eq!(
            MeasureSpec::parse("exponential", 1).unwrap().name(),
            "exponential"
        );
        let z = MeasureSpec::parse("zygmund:p=2,alpha=0.5", 1).unwrap();
        assert_eq!(z.name(), "zygmund(p=2,alpha=0.5)");
        assert!(MeasureSpec::parse("exponential", 2).is_err());
        assert!(MeasureSpec::parse("cauchy", 1).is_err());
        assert!(MeasureSpec::parse("laplace:scale", 1).is_err());
    }
}
