use serde::Serialize;

use super::config::ExperimentConfig;
use super::derive_seed;
use super::fit::{rate_fit, RateFitResult};
use crate::bounds::{
    best_beta, fg15_rate_shape, rate_smooth_bound_variant, RateVariant, SmoothRateConstantSpec,
};
use crate::error::{Error, Result};
use crate::smoothing::{estimate_smoothed_wp_p, SmoothingParams};

/// One row of the rate table; the column order is a stable contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub experiment: &'static str,
    pub measure: String,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub beta: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub reps: usize,
    pub m_plugin: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound_carlson: Option<f64>,
    pub bound_dyadic: Option<f64>,
    pub bound_fg15_shape: Option<f64>,
}

impl RateRow {
    /// The smaller of the two closed-form bounds, when either is available.
    pub fn min_bound(&self) -> Option<f64> {
        match (self.bound_carlson, self.bound_dyadic) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateExperiment {
    pub rows: Vec<RateRow>,
    pub fit: RateFitResult,
}

fn optional(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Divergent(_) | Error::UnhandledBoundary(_) | Error::Overflow(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Estimates `E[(W_p^{(σ)}(μ_N, μ))^p]` on the N grid and fits the log-log slope.
///
/// Grid point `N` uses seed `derive_seed(seed, N)`, so adding or removing
/// grid points leaves the other rows unchanged.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateExperiment> {
    cfg.validate()?;
    let spec = cfg.measure_spec()?;
    let params = SmoothingParams::new(cfg.sigma, cfg.p, cfg.m_plugin, cfg.reps)?;
    let beta = match cfg.beta {
        Some(b) => b,
        None => best_beta(cfg.p, cfg.q, cfg.d)?.0,
    };
    let m_q = optional(spec.moment(cfg.q))?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let est = estimate_smoothed_wp_p(&spec, n as usize, &params, derive_seed(cfg.seed, n))?;
        let bound = |variant| -> Result<Option<f64>> {
            match m_q {
                None => Ok(None),
                Some(m) => {
                    let s = SmoothRateConstantSpec::new(
                        cfg.p, cfg.q, cfg.d, cfg.sigma, beta, m, variant,
                    )?;
                    optional(rate_smooth_bound_variant(&s, n))
                }
            }
        };
        rows.push(RateRow {
            experiment: "rate",
            measure: spec.name().to_string(),
            d: cfg.d,
            p: cfg.p,
            q: cfg.q,
            sigma: cfg.sigma,
            beta,
            n,
            reps: cfg.reps,
            m_plugin: cfg.m_plugin,
            seed: cfg.seed,
            estimate: est.estimate,
            stderr: est.stderr,
            bound_carlson: bound(RateVariant::Carlson)?,
            bound_dyadic: bound(RateVariant::Dyadic)?,
            bound_fg15_shape: optional(
                fg15_rate_shape(cfg.p, cfg.q, cfg.d, n as f64).map(|s| cfg.c_fg * s),
            )?,
        });
    }
    let ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    let est: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
    let fit = rate_fit(&ns, &est, &se, cfg.weighted_fit)?;
    Ok(RateExperiment { rows, fit })
}
