use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use super::config::Suite;
use super::derive_seed;
use crate::bounds::{
    c_pd, carlson_constant, carlson_exponents, carlson_f, carlson_t_star, i_abd, mz_constant,
    mz_rate_exponent,
};
use crate::critical::{
    g_mu_zygmund, geometric_grid, h_mu, rate_g_bound, truncation_bound_check, zygmund_bound,
    CalibrationFunction, TailFunction,
};
use crate::error::Result;
use crate::measures::{
    replicate_stream, stream_rng, zygmund_spec, DiscreteMeasure, MeasureSpec, Rng,
};
use crate::numerics::{gamma_fn, integrate, pairwise_sum, Domain, QuadratureSpec};
use crate::sharprate::{
    binomial_event_prob, c_0, epsilon_vs_rate_audit, lower_bound_experiment, mass_inequality_audit,
    v_0,
};
use crate::smoothing::{estimate_smoothed_between, SmoothingParams};
use crate::transport::{neighborhood_lower_bound, wasserstein_1d_pow, wasserstein_discrete};

/// One inequality `lhs ≤ rhs` (or a flagged check) with its slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub suite: &'static str,
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    /// Reported but excluded from the verdict.
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub ok: bool,
    pub cases: Vec<CaseResult>,
}

struct Cases {
    suite: &'static str,
    list: Vec<CaseResult>,
}

impl Cases {
    fn new(suite: Suite) -> Self {
        Self {
            suite: suite.name(),
            list: Vec::new(),
        }
    }

    fn le(&mut self, case: impl Into<String>, lhs: f64, rhs: f64) {
        self.check(case, lhs, rhs, lhs <= rhs);
    }

    fn lt(&mut self, case: impl Into<String>, lhs: f64, rhs: f64) {
        self.check(case, lhs, rhs, lhs < rhs);
    }

    fn check(&mut self, case: impl Into<String>, lhs: f64, rhs: f64, pass: bool) {
        self.list.push(CaseResult {
            suite: self.suite,
            case: case.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            pass,
            informational: false,
        });
    }

    fn flag(&mut self, case: impl Into<String>, ok: bool) {
        let v = if ok { 1.0 } else { 0.0 };
        self.check(case, 1.0, v, ok);
    }

    fn note(&mut self, case: impl Into<String>, lhs: f64, rhs: f64) {
        self.list.push(CaseResult {
            suite: self.suite,
            case: case.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs,
            informational: true,
        });
    }

    fn report(self, seed: u64) -> SuiteReport {
        let failed = self
            .list
            .iter()
            .filter(|c| !c.pass && !c.informational)
            .count();
        let counted = self.list.iter().filter(|c| !c.informational).count();
        SuiteReport {
            suite: self.suite,
            seed,
            passed: counted - failed,
            failed,
            ok: failed == 0,
            cases: self.list,
        }
    }
}

/// Runs one suite; inequality failures become report entries, not errors.
pub fn run_verification_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let mut c = Cases::new(suite);
    match suite {
        Suite::Carlson => carlson(&mut c, seed)?,
        Suite::Mz => mz(&mut c, seed)?,
        Suite::BoundLemma => bound_lemma(&mut c, seed)?,
        Suite::TransportMetric => transport_metric(&mut c, seed)?,
        Suite::Neighborhood => neighborhood(&mut c, seed)?,
        Suite::Truncation => truncation(&mut c, seed)?,
        Suite::GmuProperties => gmu_properties(&mut c)?,
        Suite::SharpChain => sharp_chain(&mut c, seed)?,
    }
    Ok(c.report(seed))
}

fn quad() -> QuadratureSpec<f64> {
    QuadratureSpec::new(1e-14, 1e-10, 1 << 14).expect("valid constants")
}

struct Density {
    name: String,
    f: Box<dyn Fn(f64) -> f64 + Sync>,
    support: Option<f64>,
}

fn carlson_densities() -> Result<Vec<Density>> {
    let mut out: Vec<Density> = [0.5, 1.0, 2.0]
        .into_iter()
        .map(|s: f64| Density {
            name: format!("gaussian(sigma={s})"),
            f: Box::new(move |x: f64| (-(x * x) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())),
            support: None,
        })
        .collect();
    out.push(Density {
        name: "laplace(scale=1)".into(),
        f: Box::new(|x: f64| 0.5 * (-x.abs()).exp()),
        support: None,
    });
    let bump = |x: f64| {
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    };
    let z = 2.0 * integrate(bump, Domain::Finite(0.0, 1.0), &quad())?;
    out.push(Density {
        name: "bump(radius=1)".into(),
        f: Box::new(move |x| bump(x) / z),
        support: Some(1.0),
    });
    Ok(out)
}

/// `∫_R h(x) dx` for even `h`.
fn even_integral(h: impl Fn(f64) -> f64, support: Option<f64>) -> Result<f64> {
    let dom = match support {
        Some(r) => Domain::Finite(0.0, r),
        None => Domain::UpperRay(0.0),
    };
    Ok(2.0 * integrate(h, dom, &quad())?)
}

/// One random `(α, β, d)` with both evaluations of `I_{α,β,d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralCheck {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub closed: f64,
    pub quadrature: f64,
}

impl IntegralCheck {
    pub fn rel_err(&self) -> f64 {
        ((self.closed - self.quadrature) / self.quadrature).abs()
    }
}

/// Closed form of `I_{α,β,d}` against `∫_R e^{v d/α} (1+e^v)^{−1/(β−1)} dv` (s = e^v).
pub fn i_abd_crosscheck(cases: usize, seed: u64) -> Result<Vec<IntegralCheck>> {
    let mut rng = stream_rng(seed, 0);
    (0..cases)
        .map(|_| {
            let d = rng.random_range(1..=3usize);
            let beta = rng.random_range(1.2..3.0);
            let alpha = d as f64 * (beta - 1.0) * rng.random_range(1.5..5.0);
            let a = d as f64 / alpha;
            let b = 1.0 / (beta - 1.0);
            let integrand = |v: f64| {
                let softplus = if v > 0.0 {
                    v + (-v).exp().ln_1p()
                } else {
                    v.exp().ln_1p()
                };
                (a * v - b * softplus).exp()
            };
            Ok(IntegralCheck {
                alpha,
                beta,
                d,
                closed: i_abd(alpha, beta, d)?,
                quadrature: integrate(integrand, Domain::Line, &quad())?,
            })
        })
        .collect()
}

fn carlson(c: &mut Cases, seed: u64) -> Result<()> {
    let pairs = [
        (2.0, 1.5),
        (3.0, 2.0),
        (5.0, 2.0),
        (1.0, 1.5),
        (1.5, 2.0),
        (4.0, 3.0),
    ];
    for g in carlson_densities()? {
        let mass = even_integral(&g.f, g.support)?;
        for &(alpha, beta) in &pairs {
            let a = even_integral(|x: f64| (g.f)(x).powf(beta), g.support)?;
            let b = even_integral(
                |x: f64| x.abs().powf(alpha) * (g.f)(x).powf(beta),
                g.support,
            )?;
            let (e1, e2) = carlson_exponents(alpha, beta, 1)?;
            let rhs = carlson_constant(alpha, beta, 1)? * a.powf(e1) * b.powf(e2);
            c.lt(
                format!(
                    "{} alpha={alpha} beta={beta}: int g <= C (int g^b)^e1 (int |x|^a g^b)^e2",
                    g.name
                ),
                mass,
                rhs,
            );
            let t = carlson_t_star(alpha, beta, 1, a, b)?;
            let f = |s: f64| carlson_f(s, alpha, beta, 1, a, b);
            let at = f(t)?;
            let near = f(0.9 * t)?.min(f(1.1 * t)?);
            c.le(
                format!(
                    "{} alpha={alpha} beta={beta}: F(t*) <= F(t*(1 +- 0.1))",
                    g.name
                ),
                at,
                near,
            );
        }
    }
    for k in i_abd_crosscheck(20, seed)? {
        c.le(
            format!(
                "I(alpha={:.4}, beta={:.4}, d={}) closed form vs quadrature (relative error)",
                k.alpha, k.beta, k.d
            ),
            k.rel_err(),
            1e-6,
        );
    }
    Ok(())
}

/// `‖X − 1‖_β` for X ~ Exponential(1).
fn centered_exp_norm(beta: f64) -> Result<f64> {
    let head = integrate(
        |x: f64| (1.0 - x).powf(beta) * (-x).exp(),
        Domain::Finite(0.0, 1.0),
        &quad(),
    )?;
    Ok((head + (-1.0f64).exp() * gamma_fn(beta + 1.0)?).powf(1.0 / beta))
}

const MZ_REPS: usize = 10_000;

fn mz(c: &mut Cases, seed: u64) -> Result<()> {
    let betas = [1.5, 2.0, 3.0];
    for n in [10usize, 100, 1000] {
        let s = derive_seed(seed, n as u64);
        let means: Vec<f64> = (0..MZ_REPS as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(s, replicate_stream(r, 0));
                let xs: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1) - 1.0).collect();
                pairwise_sum(&xs) / n as f64
            })
            .collect();
        for &beta in &betas {
            let powers: Vec<f64> = means.iter().map(|m| m.abs().powf(beta)).collect();
            let lhs = (pairwise_sum(&powers) / MZ_REPS as f64).powf(1.0 / beta);
            let rhs = mz_constant(beta)?
                * (n as f64).powf(-mz_rate_exponent(beta)?)
                * centered_exp_norm(beta)?;
            c.le(
                format!("N={n} beta={beta}: ||mean||_beta <= C_beta N^-r ||xi||_beta"),
                lhs,
                rhs,
            );
        }
    }
    Ok(())
}

fn random_measure(rng: &mut Rng, d: usize, atoms: usize, spread: f64) -> Result<DiscreteMeasure> {
    let points: Vec<f64> = (0..atoms * d)
        .map(|_| rng.random_range(-spread..spread))
        .collect();
    let weights: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
    DiscreteMeasure::normalized(d, points, weights)
}

fn exact_cost_p(a: &DiscreteMeasure, b: &DiscreteMeasure, p: f64) -> Result<f64> {
    if a.dim() == 1 {
        wasserstein_1d_pow(a, b, p)
    } else {
        Ok(wasserstein_discrete(a, b, p)?.1.cost_p)
    }
}

use crate::measures::Atoms;

fn bound_lemma(c: &mut Cases, seed: u64) -> Result<()> {
    let sigmas = [0.1, 0.5, 1.0];
    for i in 0..50u64 {
        let mut rng = stream_rng(seed, replicate_stream(i, 0));
        let d = rng.random_range(1..=2usize);
        let p = if rng.random::<bool>() { 1.0 } else { 2.0 };
        let a = {
            let k = rng.random_range(2..=6);
            random_measure(&mut rng, d, k, 3.0)?
        };
        let b = {
            let k = rng.random_range(2..=6);
            random_measure(&mut rng, d, k, 3.0)?
        };
        let w = exact_cost_p(&a, &b, p)?.powf(1.0 / p);
        let cpd = c_pd(p, d)?;
        for (k, &sigma) in sigmas.iter().enumerate() {
            let m = if d == 1 { 1024 } else { 128 };
            let params = SmoothingParams::new(sigma, p, m, 12)?;
            let est =
                estimate_smoothed_between(&a, &b, &params, derive_seed(seed, i * 8 + k as u64))?;
            let tag = format!("pair {i} d={d} p={p} sigma={sigma}");
            c.le(
                format!("{tag}: W <= C_pd sigma + W_sigma"),
                w,
                cpd * sigma + est.estimate + 3.0 * est.stderr,
            );
            c.le(
                format!("{tag}: W_sigma <= W"),
                est.estimate,
                w * (1.0 + 1e-12) + 3.0 * est.stderr,
            );
        }
    }
    Ok(())
}

fn transport_metric(c: &mut Cases, seed: u64) -> Result<()> {
    let tol = 1e-9;
    for i in 0..200u64 {
        let mut rng = stream_rng(seed, replicate_stream(i, 0));
        let p = [1.0, 1.5, 2.0, 3.0][rng.random_range(0..4usize)];
        let a = {
            let k = rng.random_range(1..=12);
            random_measure(&mut rng, 1, k, 5.0)?
        };
        let b = {
            let k = rng.random_range(1..=12);
            random_measure(&mut rng, 1, k, 5.0)?
        };
        let q = wasserstein_1d_pow(&a, &b, p)?;
        let f = wasserstein_discrete(&a, &b, p)?.1.cost_p;
        c.le(
            format!("instance {i} p={p}: |quantile - flow|"),
            (q - f).abs(),
            tol * q.max(1.0),
        );
    }
    for i in 0..200u64 {
        let mut rng = stream_rng(seed, replicate_stream(i, 1));
        let d = rng.random_range(1..=3usize);
        let p = [1.0, 2.0, 3.0][rng.random_range(0..3usize)];
        let draw = |rng: &mut Rng| -> Result<DiscreteMeasure> {
            let k = rng.random_range(1..=8);
            random_measure(rng, d, k, 2.0)
        };
        let (a, b, m) = (draw(&mut rng)?, draw(&mut rng)?, draw(&mut rng)?);
        let w =
            |x: &DiscreteMeasure, y: &DiscreteMeasure| wasserstein_discrete(x, y, p).map(|r| r.0);
        let (ab, ba, bm, am, aa) = (w(&a, &b)?, w(&b, &a)?, w(&b, &m)?, w(&a, &m)?, w(&a, &a)?);
        let tag = format!("triple {i} d={d} p={p}");
        c.le(format!("{tag}: W(a,a) = 0"), aa, tol);
        c.le(
            format!("{tag}: |W(a,b) - W(b,a)|"),
            (ab - ba).abs(),
            tol * ab.max(1.0),
        );
        c.le(
            format!("{tag}: W(a,c) <= W(a,b) + W(b,c)"),
            am,
            ab + bm + tol,
        );
        c.check(
            format!("{tag}: W(a,b) > 0 for distinct measures"),
            0.0,
            ab,
            ab > 0.0 || a.approx_eq(&b, 0.0),
        );
    }
    Ok(())
}

fn neighborhood(c: &mut Cases, seed: u64) -> Result<()> {
    for i in 0..100u64 {
        let mut rng = stream_rng(seed, replicate_stream(i, 0));
        let d = rng.random_range(1..=2usize);
        let p = [1.0, 2.0][rng.random_range(0..2usize)];
        let a = {
            let k = rng.random_range(1..=8);
            random_measure(&mut rng, d, k, 3.0)?
        };
        let b = {
            let k = rng.random_range(1..=8);
            random_measure(&mut rng, d, k, 3.0)?
        };
        let center: Vec<f64> = if rng.random::<bool>() {
            a.point(rng.random_range(0..a.len())).to_vec()
        } else {
            (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()
        };
        let radius_b = rng.random_range(0.0..2.0);
        let r = rng.random_range(0.05..2.0);
        let lb = neighborhood_lower_bound(&a, &b, &center, radius_b, r, p)?;
        let exact = exact_cost_p(&a, &b, p)?;
        c.le(
            format!("case {i} d={d} p={p} R={radius_b:.3} r={r:.3}: r^p (a(B) - b(B^r))+ <= W_p^p"),
            lb,
            exact * (1.0 + 1e-12) + 1e-15,
        );
    }
    Ok(())
}

fn truncation(c: &mut Cases, seed: u64) -> Result<()> {
    let specs: Vec<(MeasureSpec, f64)> = vec![
        (MeasureSpec::exponential(), 1.0),
        (MeasureSpec::laplace(1.0)?, 2.0),
        (MeasureSpec::gaussian(1), 1.0),
        (zygmund_spec(1.0, 1.0)?, 1.0),
        (zygmund_spec(2.0, 0.5)?, 2.0),
    ];
    let mut calibrations = Vec::new();
    for (spec, p) in &specs {
        calibrations.push(CalibrationFunction::canonical(&TailFunction::from_spec(
            spec, *p,
        )?)?);
    }
    let mut rng = stream_rng(seed, 0);
    for i in 0..20usize {
        let k = i % specs.len();
        let level = rng.random_range(0.1..4.0);
        let chk = truncation_bound_check(
            &calibrations[k],
            &specs[k].0,
            level,
            100_000,
            derive_seed(seed, i as u64),
        )?;
        let tag = format!(
            "case {i} {} p={} c={level:.3}",
            specs[k].0.name(),
            specs[k].1
        );
        let slack = |x: f64, y: f64| 3.0 * (x * x + y * y).sqrt();
        c.le(
            format!("{tag}: E[|X|^p; |X|>=c] <= c^p/G(c) E[G; |X|>=c]"),
            chk.lhs,
            chk.mid + slack(chk.lhs_se, chk.mid_se),
        );
        c.le(
            format!("{tag}: c^p/G(c) E[G; |X|>=c] <= c^p/G(c) E[G]"),
            chk.mid,
            chk.rhs + slack(chk.mid_se, chk.rhs_se),
        );
    }
    Ok(())
}

fn property_cases(
    c: &mut Cases,
    tag: &str,
    g: &CalibrationFunction,
    grid: &[f64],
    fifth_informational: bool,
) -> Result<()> {
    let r = g.check_properties(grid)?;
    c.flag(format!("{tag}: G > 0 on grid"), r.positive);
    c.flag(format!("{tag}: E[G(|X|)] finite"), r.finite_expectation);
    c.flag(
        format!("{tag}: G(t)/t^p increasing (upper grid)"),
        r.ratio_p_grows,
    );
    c.flag(
        format!("{tag}: G(t)/t^p non-decreasing"),
        r.ratio_p_monotone,
    );
    let name = format!("{tag}: G(t)/t^(p+1) decreasing (upper grid)");
    if fifth_informational {
        c.note(name, 1.0, if r.ratio_q_vanishes { 1.0 } else { 0.0 });
    } else {
        c.flag(name, r.ratio_q_vanishes);
    }
    Ok(())
}

fn gmu_properties(c: &mut Cases) -> Result<()> {
    let wide = geometric_grid(0.1, 1e8, 8);
    let zyg = |p: f64, a: f64| -> Result<TailFunction> {
        TailFunction::from_spec(&zygmund_spec(p, a)?, p)
    };
    for (p, a) in [(1.0, 1.0), (2.0, 0.5)] {
        let tail = zyg(p, a)?;
        let g = CalibrationFunction::canonical(&tail)?;
        property_cases(
            c,
            &format!("canonical G, zygmund tail p={p} alpha={a}"),
            &g,
            &wide,
            false,
        )?;
        let mut prev = f64::INFINITY;
        let mut decreasing = true;
        for t in geometric_grid(0.01, 1e8, 4) {
            let h = h_mu(&tail, t)?;
            decreasing &= h < prev;
            prev = h;
        }
        c.flag(
            format!("H strictly decreasing, zygmund tail p={p} alpha={a}"),
            decreasing,
        );
    }
    let tail = zyg(1.0, 1.0)?;
    let gz = CalibrationFunction::zygmund(1.0, &tail)?;
    property_cases(
        c,
        "G = t log(1+t), zygmund tail p=1 alpha=1",
        &gz,
        &wide,
        false,
    )?;
    let e1 = std::f64::consts::E - 1.0;
    c.le(
        "G = t^p log(1+t)^alpha at t = e - 1",
        (g_mu_zygmund(1.0, 1.0, e1) - e1).abs(),
        1e-15,
    );

    let exp_tail = TailFunction::from_spec(&MeasureSpec::exponential(), 1.0)?;
    let ge = CalibrationFunction::canonical(&exp_tail)?;
    for t in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let exact = 2.0 * (t / 2.0f64).exp_m1();
        c.le(
            format!("exponential: G({t}) vs 2(e^(t/2) - 1), relative error"),
            ((ge.eval(t)? - exact) / exact).abs(),
            1e-6,
        );
    }
    // G grows like e^{t/2}, so the last property cannot hold for this tail
    property_cases(
        c,
        "canonical G, exponential tail",
        &ge,
        &geometric_grid(0.1, 200.0, 8),
        true,
    )?;

    let gc = CalibrationFunction::canonical(&tail)?;
    for (label, g) in [("G = t log(1+t)", &gz), ("canonical G", &gc)] {
        let ratio = |k: i32| -> Result<f64> {
            let b = rate_g_bound(1.0, 1, 1.0, g, 2f64.powi(k))?;
            Ok(b.remainder / b.leading)
        };
        let (r10, r20, r40) = (ratio(10)?, ratio(20)?, ratio(40)?);
        c.lt(
            format!("{label}: remainder/leading at 2^20 < at 2^10"),
            r20,
            r10,
        );
        c.lt(
            format!("{label}: remainder/leading at 2^40 < at 2^20"),
            r40,
            r20,
        );
        let mut prev = f64::INFINITY;
        let mut ok = true;
        for k in 4..=40 {
            let lead = rate_g_bound(1.0, 1, 1.0, g, 2f64.powi(k))?.leading;
            ok &= lead <= prev;
            prev = lead;
        }
        c.flag(
            format!("{label}: leading term non-increasing on N = 2^4..2^40"),
            ok,
        );
    }
    for k in [10, 20, 40] {
        let n = 2f64.powi(k);
        let lead = rate_g_bound(1.0, 1, 1.0, &gz, n)?.leading;
        let z = zygmund_bound(1.0, 1.0, 1, 1.0, gz.expected_g(), n)?;
        c.le(
            format!("N=2^{k}: zygmund bound vs rate bound leading term, relative difference"),
            ((lead - z) / z).abs(),
            1e-10,
        );
    }
    Ok(())
}

/// Sample size, smoothing and replicate count of the audited lower-bound run.
pub const SHARP_CHAIN_N: u64 = 1 << 20;
pub const SHARP_CHAIN_SIGMA: f64 = 0.25;
pub const SHARP_CHAIN_REPS: usize = 10_000;

fn sharp_chain(c: &mut Cases, seed: u64) -> Result<()> {
    let r = lower_bound_experiment(
        SHARP_CHAIN_N,
        SHARP_CHAIN_SIGMA,
        1.0,
        SHARP_CHAIN_REPS,
        seed,
    )?;
    let q = r.quantities;
    c.le(
        "eps_N + delta_N <= (c_1/4) sqrt(w_N/N)",
        r.errors.eps_n + r.errors.delta_n,
        r.errors.allowance,
    );
    c.le(
        "exact eps_N <= Gaussian tail lemma bound",
        r.errors.eps_n,
        r.errors.eps_n_lemma,
    );
    c.le(
        "exact delta_N <= Gaussian tail lemma bound",
        r.errors.delta_n,
        r.errors.delta_n_lemma,
    );
    let p_event = r.binomial_event.value;
    let se = (p_event * (1.0 - p_event) / r.reps as f64).sqrt();
    c.le(
        "|freq(E_N) - binomial_event_prob|",
        (r.freq_en - p_event).abs(),
        3.0 * se,
    );
    if let Some(exact) = r.p_en_exact {
        c.le(
            "|freq(E_N) - exact P(E_N)|",
            (r.freq_en - exact).abs(),
            3.0 * se,
        );
    }
    let var = q.n as f64 * q.w_n * (1.0 - q.w_n);
    if var >= q.v_0 {
        c.le("c_0 <= freq(E_N)", q.c_0, r.freq_en);
    } else {
        c.note(
            "N w_N (1 - w_N) >= v_0 (freq(E_N) >= c_0 required only then)",
            q.v_0,
            var,
        );
    }
    c.le(
        "mu^sigma(B^(r)) <= w_N + delta_N",
        r.reference_mass,
        q.w_n + r.errors.delta_n,
    );
    let audit = mass_inequality_audit(1 << 12, SHARP_CHAIN_SIGMA, 50, derive_seed(seed, 1 << 12))?;
    for (i, a) in audit.iter().enumerate() {
        c.le(
            format!("cloud {i}: (1 - eps_N) W_N <= mu_N^sigma(B_N)"),
            a.emp_lb,
            a.emp_mass,
        );
        c.le(
            format!("cloud {i}: mu^sigma(B^(r)) <= w_N + delta_N"),
            a.true_mass,
            a.true_ub,
        );
    }
    c.lt("0 < certified lower bound", 0.0, r.certified_lb);
    c.le(
        "stated lower bound / 4 <= certified lower bound",
        r.paper_lb / 4.0,
        r.certified_lb,
    );
    let grid: Vec<u32> = (8..=60).collect();
    let eps = epsilon_vs_rate_audit(1.0, 0.5, &grid)?;
    for row in eps.rows.iter().filter(|r| r.log2_n >= 16.0) {
        c.le(
            format!("N=2^{}: N^(-1/2) <= 2^(k p - k^2/2)", row.log2_n),
            row.n_pow_neg_eps,
            row.factor,
        );
    }
    let mut rng = stream_rng(seed, 1);
    let v0 = v_0();
    for i in 0..50 {
        let n: u64 = 10f64.powf(rng.random_range(2.5..6.0)).round() as u64;
        let v = rng.random_range(0.5 * v0..4.0 * v0);
        let prob = (1.0 - (1.0 - 4.0 * v / n as f64).sqrt()) / 2.0;
        let e = binomial_event_prob(n, prob)?;
        let name =
            format!("pair {i}: n={n} prob={prob:.6} n p (1-p)={v:.2}: c_0 <= P(X - np >= sd/2)");
        if v >= v0 {
            c.le(name, c_0(), e.value);
        } else {
            c.note(name, c_0(), e.value);
        }
    }
    Ok(())
}
