//! Audit of the lower-bound construction showing that the smoothed rate
//! cannot beat `N^{−1/2−ε}` for measures with all moments.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::measures::{
    replicate_stream, sharp_rate_measure, stream_rng, Atoms, DiscreteMeasure, MeasureSpec,
};
use crate::numerics::{
    binomial_pmf, gaussian_tail_d, normal_cdf, normal_interval, normal_sf, pairwise_sum,
};

/// Berry–Esseen constant used to instantiate `c_0` and `v_0`.
pub const C_BE: f64 = 0.4748;

/// Largest `n` for which [`binomial_event_prob`] sums the pmf exactly.
pub const EXACT_BINOMIAL_MAX: u64 = 10_000_000;

/// Truncation level of the reference measure used for exact masses.
pub const REFERENCE_K_MAX: u32 = 12;

/// Quantities fixed by the sample size in the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpRateQuantities {
    pub n: u64,
    /// `log_2 N`.
    pub l_n: f64,
    /// `⌊log_2 L_N⌋`.
    pub k_n: u32,
    /// `2^{k_N}`.
    pub x_n: f64,
    /// `2^{k_N−3}`.
    pub r_n: f64,
    /// `2^{−k_N²−1}`, the mass of the atom at `x_N`.
    pub w_n: f64,
    /// `(1 − Φ(1/2))/2`.
    pub c_0: f64,
    /// `√3/4`.
    pub c_1: f64,
    /// `⌈(C_BE/c_0)²⌉`.
    pub v_0: f64,
}

pub fn c_0() -> f64 {
    (1.0 - normal_cdf(0.5)) / 2.0
}

pub fn v_0() -> f64 {
    (C_BE / c_0()).powi(2).ceil()
}

pub fn sharp_quantities(n: u64) -> Result<SharpRateQuantities> {
    if n < 16 {
        return Err(domain("sharp-rate quantities need N >= 16"));
    }
    let l_n = (n as f64).log2();
    let k_n = l_n.log2().floor() as u32;
    let k = k_n as i32;
    Ok(SharpRateQuantities {
        n,
        l_n,
        k_n,
        x_n: 2f64.powi(k),
        r_n: 2f64.powi(k - 3),
        w_n: 2f64.powi(-(k * k) - 1),
        c_0: c_0(),
        c_1: 3f64.sqrt() / 4.0,
        v_0: v_0(),
    })
}

/// `P(X ≥ ⌈np + ½√(np(1−p))⌉)` for `X ~ Bin(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventProb {
    pub value: f64,
    /// Zero on the exact path.
    pub stderr: f64,
    pub exact: bool,
}

fn lemma_threshold(n: u64, prob: f64) -> u64 {
    let nf = n as f64;
    (nf * prob + 0.5 * (nf * prob * (1.0 - prob)).sqrt()).ceil() as u64
}

/// `P(Bin(n, prob) ≥ k)` by summing the pmf over the shorter side.
pub fn binomial_upper_tail(n: u64, prob: f64, k: u64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(domain("binomial probability must lie in (0, 1)"));
    }
    if n > EXACT_BINOMIAL_MAX {
        return Err(Error::Capacity(format!(
            "exact binomial sums need n <= {EXACT_BINOMIAL_MAX}"
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k > n {
        return Ok(0.0);
    }
    let mean = n as f64 * prob;
    let sum_range = |lo: u64, hi: u64, upward: bool| -> f64 {
        // stop once past the mode and terms no longer register
        let mut terms = Vec::new();
        let mut acc = 0.0;
        let mut step = |j: u64| -> bool {
            let t = binomial_pmf(n, j, prob);
            terms.push(t);
            acc += t;
            let past_mode = if upward {
                j as f64 > mean
            } else {
                (j as f64) < mean
            };
            !(past_mode && t < 1e-18 * acc)
        };
        if upward {
            for j in lo..=hi {
                if !step(j) {
                    break;
                }
            }
        } else {
            for j in (lo..=hi).rev() {
                if !step(j) {
                    break;
                }
            }
        }
        pairwise_sum(&terms)
    };
    if k as f64 > mean {
        Ok(sum_range(k, n, true).min(1.0))
    } else {
        Ok((1.0 - sum_range(0, k - 1, false)).max(0.0))
    }
}

/// Exact for `n ≤ 10^7`; beyond that a 10^6-replicate Monte Carlo estimate.
pub fn binomial_event_prob(n: u64, prob: f64) -> Result<EventProb> {
    if n == 0 {
        return Err(domain("binomial_event_prob needs n >= 1"));
    }
    if n <= EXACT_BINOMIAL_MAX {
        let value = binomial_upper_tail(n, prob, lemma_threshold(n, prob))?;
        return Ok(EventProb {
            value,
            stderr: 0.0,
            exact: true,
        });
    }
    binomial_event_prob_mc(n, prob, 1_000_000, 0)
}

/// Monte Carlo estimate of the same event.
pub fn binomial_event_prob_mc(n: u64, prob: f64, reps: usize, seed: u64) -> Result<EventProb> {
    if reps < 2 {
        return Err(domain("Monte Carlo needs at least 2 replicates"));
    }
    let dist = Binomial::new(n, prob).map_err(|e| domain(e.to_string()))?;
    let k = lemma_threshold(n, prob);
    let hits = count_hits(reps, seed, |rng| dist.sample(rng) >= k);
    let value = hits as f64 / reps as f64;
    Ok(EventProb {
        value,
        stderr: (value * (1.0 - value) / reps as f64).sqrt(),
        exact: false,
    })
}

fn count_hits(
    reps: usize,
    seed: u64,
    f: impl Fn(&mut crate::measures::Rng) -> bool + Sync,
) -> usize {
    (0..reps)
        .into_par_iter()
        .filter(|&r| f(&mut stream_rng(seed, replicate_stream(r as u64, 0))))
        .count()
}

/// `Σ_i w_i (Φ((b−x_i)/σ) − Φ((a−x_i)/σ))` for a measure on the line.
pub fn mass_smoothed_interval<A: Atoms + ?Sized>(
    measure: &A,
    sigma: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if measure.dim() != 1 {
        return Err(Error::DimensionMismatch(measure.dim(), 1));
    }
    if !(sigma > 0.0) {
        return Err(domain("sigma must be positive"));
    }
    let terms: Vec<f64> = (0..measure.len())
        .map(|i| {
            let x = measure.point(i)[0];
            measure.weight(i) * normal_interval((a - x) / sigma, (b - x) / sigma)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Omitted mass `Σ_{k > k_max} 2^{−k²}` of the truncated reference measure.
fn omitted_mass(k_max: u32) -> f64 {
    (k_max as i32 + 1..=64).map(|k| 2f64.powi(-(k * k))).sum()
}

/// Exact error terms of the mass comparison and their Gaussian-tail-lemma majorants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorTerms {
    /// `P(σ|Z| > r_N)`.
    pub eps_n: f64,
    /// `P(σ|Z| > 2^{k_N−2})`.
    pub delta_n: f64,
    pub eps_n_lemma: f64,
    pub delta_n_lemma: f64,
    /// `(c_1/4)√(w_N/N)`.
    pub allowance: f64,
    /// `ε_N + δ_N ≤ allowance`.
    pub errors_ok: bool,
}

pub fn error_terms(q: &SharpRateQuantities, sigma: f64) -> ErrorTerms {
    let eps_n = 2.0 * normal_sf(q.r_n / sigma);
    let far = 2f64.powi(q.k_n as i32 - 2);
    let delta_n = 2.0 * normal_sf(far / sigma);
    let allowance = q.c_1 / 4.0 * (q.w_n / q.n as f64).sqrt();
    ErrorTerms {
        eps_n,
        delta_n,
        eps_n_lemma: gaussian_tail_d(q.r_n, sigma, 1),
        delta_n_lemma: gaussian_tail_d(far, sigma, 1),
        allowance,
        errors_ok: eps_n + delta_n <= allowance,
    }
}

/// `μ^σ(B_N^{(r_N)})` for the reference measure, including an upper allowance for truncated atoms.
pub fn reference_mass_upper(q: &SharpRateQuantities, sigma: f64) -> Result<f64> {
    let mu = sharp_rate_measure(1, REFERENCE_K_MAX)?;
    let half = 2.0 * q.r_n;
    Ok(
        mass_smoothed_interval(&mu, sigma, q.x_n - half, q.x_n + half)?
            + omitted_mass(REFERENCE_K_MAX),
    )
}

/// Summary of the replicated lower-bound experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub quantities: SharpRateQuantities,
    pub sigma: f64,
    pub p: f64,
    pub reps: usize,
    pub seed: u64,
    pub c_be: f64,
    /// Smallest count `S_N` for which `E_N` occurs.
    pub e_n_threshold: u64,
    pub freq_en: f64,
    pub freq_en_stderr: f64,
    /// Exact `P(E_N)`.
    pub p_en_exact: Option<f64>,
    /// The binomial-lemma event probability at `(N, w_N)`.
    pub binomial_event: EventProb,
    /// Minimum of `(1−ε_N)W_N − μ^σ(B_N^{(r_N)})` over replicates in `E_N`.
    pub min_mass_gap: Option<f64>,
    /// `r_N^p · min_mass_gap · freq_EN`.
    pub certified_lb: f64,
    /// `C N^{−1/2} 2^{k_N p − k_N²/2}` with `C = (c_1 c_0/2) 2^{−3p−1/2}`.
    pub paper_lb: f64,
    pub reference_mass: f64,
    /// `μ^σ(B_N^{(r_N)}) ≤ w_N + δ_N`.
    pub true_mass_ub_holds: bool,
    pub errors: ErrorTerms,
    pub errors_ok: bool,
}

/// `C N^{−1/2} 2^{k_N p − k_N²/2}`.
pub fn paper_lower_bound(q: &SharpRateQuantities, p: f64) -> f64 {
    let c = q.c_1 * q.c_0 / 2.0 * 2f64.powf(-3.0 * p - 0.5);
    let k = q.k_n as f64;
    c * (q.n as f64).powf(-0.5) * 2f64.powf(k * p - k * k / 2.0)
}

/// Replicates `S_N ~ Bin(N, w_N)` and audits the mass-gap chain for each.
pub fn lower_bound_experiment(
    n: u64,
    sigma: f64,
    p: f64,
    reps: usize,
    seed: u64,
) -> Result<LowerBoundReport> {
    if !(sigma > 0.0) || !(p >= 1.0) || reps == 0 {
        return Err(domain(
            "lower-bound experiment needs sigma > 0, p >= 1, reps >= 1",
        ));
    }
    let q = sharp_quantities(n)?;
    let errors = error_terms(&q, sigma);
    let reference_mass = reference_mass_upper(&q, sigma)?;
    let nf = n as f64;
    let e_n_threshold = (nf * q.w_n + q.c_1 * (nf * q.w_n).sqrt()).ceil() as u64;
    let dist = Binomial::new(n, q.w_n).map_err(|e| domain(e.to_string()))?;
    let counts: Vec<u64> = (0..reps)
        .into_par_iter()
        .map(|r| dist.sample(&mut stream_rng(seed, replicate_stream(r as u64, 0))))
        .collect();
    let mut hits = 0usize;
    let mut min_gap: Option<f64> = None;
    for &s in &counts {
        if s < e_n_threshold {
            continue;
        }
        hits += 1;
        let w_emp = s as f64 / nf;
        let gap = (1.0 - errors.eps_n) * w_emp - reference_mass;
        min_gap = Some(min_gap.map_or(gap, |g: f64| g.min(gap)));
    }
    let freq_en = hits as f64 / reps as f64;
    let certified_lb = match min_gap {
        Some(g) if g > 0.0 => q.r_n.powf(p) * g * freq_en,
        _ => 0.0,
    };
    let p_en_exact = if n <= EXACT_BINOMIAL_MAX {
        Some(binomial_upper_tail(n, q.w_n, e_n_threshold)?)
    } else {
        None
    };
    Ok(LowerBoundReport {
        quantities: q,
        sigma,
        p,
        reps,
        seed,
        c_be: C_BE,
        e_n_threshold,
        freq_en,
        freq_en_stderr: (freq_en * (1.0 - freq_en) / reps as f64).sqrt(),
        p_en_exact,
        binomial_event: binomial_event_prob(n, q.w_n)?,
        min_mass_gap: min_gap,
        certified_lb,
        paper_lb: paper_lower_bound(&q, p),
        reference_mass,
        true_mass_ub_holds: reference_mass <= q.w_n + errors.delta_n,
        errors_ok: errors.errors_ok,
        errors,
    })
}

/// One sampled cloud checked against both mass inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassAudit {
    /// Fraction `W_N` of the cloud at `x_N`.
    pub w_emp: f64,
    /// Exact `μ_N^σ(B_N)`.
    pub emp_mass: f64,
    /// `(1 − ε_N) W_N`.
    pub emp_lb: f64,
    pub emp_ok: bool,
    /// Exact `μ^σ(B_N^{(r_N)})`.
    pub true_mass: f64,
    /// `w_N + δ_N`.
    pub true_ub: f64,
    pub true_ok: bool,
}

/// Samples `clouds` empirical measures of size N from the sharp-rate law and
/// evaluates the two mass inequalities with closed-form Gaussian masses.
pub fn mass_inequality_audit(
    n: u64,
    sigma: f64,
    clouds: usize,
    seed: u64,
) -> Result<Vec<MassAudit>> {
    let q = sharp_quantities(n)?;
    let errors = error_terms(&q, sigma);
    let true_mass = reference_mass_upper(&q, sigma)?;
    let true_ub = q.w_n + errors.delta_n;
    let spec = MeasureSpec::sharp_rate(1);
    (0..clouds)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, replicate_stream(c as u64, 0));
            let points = spec.draw_n(&mut rng, n as usize)?;
            let emp = DiscreteMeasure::empirical(1, &points)?;
            let at_x = (0..emp.len())
                .filter(|&i| emp.point(i)[0] == q.x_n)
                .map(|i| emp.weight(i))
                .sum::<f64>();
            let emp_mass = mass_smoothed_interval(&emp, sigma, q.x_n - q.r_n, q.x_n + q.r_n)?;
            let emp_lb = (1.0 - errors.eps_n) * at_x;
            Ok(MassAudit {
                w_emp: at_x,
                emp_mass,
                emp_lb,
                emp_ok: emp_mass >= emp_lb,
                true_mass,
                true_ub,
                true_ok: true_mass <= true_ub,
            })
        })
        .collect()
}

/// One row of the ε-versus-rate comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonRow {
    pub log2_n: f64,
    pub k_n: u32,
    /// `2^{k_N p − k_N²/2}`.
    pub factor: f64,
    /// `N^{−ε}`.
    pub n_pow_neg_eps: f64,
    pub holds: bool,
    /// `½(log_2 log_2 N)² ≤ ε log_2 N`, the sufficient form.
    pub symbolic_holds: bool,
    /// `paper_lb · N^{1/2+ε}`.
    pub scaled_lb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonAudit {
    pub p: f64,
    pub eps: f64,
    pub rows: Vec<EpsilonRow>,
    /// Smallest grid N from which the inequality holds for every larger grid N.
    pub holds_from: Option<f64>,
    pub symbolic_holds_from: Option<f64>,
}

/// Evaluates `2^{k_N p − k_N²/2} ≥ N^{−ε}` over `log2_grid` (values of `log_2 N`, each ≥ 4).
pub fn epsilon_vs_rate_audit(p: f64, eps: f64, log2_grid: &[u32]) -> Result<EpsilonAudit> {
    if !(eps > 0.0) || !(p >= 1.0) {
        return Err(domain("epsilon audit needs eps > 0 and p >= 1"));
    }
    let mut rows = Vec::with_capacity(log2_grid.len());
    for &e in log2_grid {
        if !(4..=63).contains(&e) {
            return Err(domain("grid exponents must lie in 4..=63"));
        }
        let q = sharp_quantities(1u64 << e)?;
        let lg = e as f64;
        let k = q.k_n as f64;
        let log_factor = k * p - k * k / 2.0;
        rows.push(EpsilonRow {
            log2_n: lg,
            k_n: q.k_n,
            factor: 2f64.powf(log_factor),
            n_pow_neg_eps: 2f64.powf(-eps * lg),
            holds: log_factor >= -eps * lg,
            symbolic_holds: 0.5 * lg.log2().powi(2) <= eps * lg,
            scaled_lb: paper_lower_bound(&q, p) * 2f64.powf((0.5 + eps) * lg),
        });
    }
    let from = |f: fn(&EpsilonRow) -> bool| -> Option<f64> {
        let first_bad_from_end = rows.iter().rposition(|r| !f(r));
        match first_bad_from_end {
            None => rows.first().map(|r| 2f64.powf(r.log2_n)),
            Some(i) => rows.get(i + 1).map(|r| 2f64.powf(r.log2_n)),
        }
    };
    let holds_from = from(|r| r.holds);
    let symbolic_holds_from = from(|r| r.symbolic_holds);
    Ok(EpsilonAudit {
        p,
        eps,
        rows,
        holds_from,
        symbolic_holds_from,
    })
}
