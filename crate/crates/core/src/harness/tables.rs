use serde::Serialize;

use super::config::ExperimentConfig;
use crate::bounds::{
    best_beta, c_pd, carlson_constant, gaussian_moment, i_abd, mz_constant, mz_rate_exponent,
    rate_smooth_constant, RateVariant, SmoothRateConstantSpec,
};
use crate::critical::{geometric_grid, h_mu, CalibrationFunction, TailFunction};
use crate::error::{Error, Result};
use crate::sharprate::{
    epsilon_vs_rate_audit, lower_bound_experiment, EpsilonAudit, LowerBoundReport,
};

/// Every closed-form constant for one parameter set; `M_q` comes from the configured measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsRow {
    pub p: f64,
    pub q: f64,
    pub d: usize,
    pub sigma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub measure: String,
    pub m_q: Option<f64>,
    pub c_pd: f64,
    pub gaussian_moment_p: f64,
    pub i_abd: f64,
    pub carlson_constant: f64,
    pub mz_constant: f64,
    pub rate_exponent: f64,
    pub c_beta_sigma_carlson: Option<f64>,
    pub c_beta_sigma_dyadic: Option<f64>,
}

pub fn constants_report(cfg: &ExperimentConfig) -> Result<ConstantsRow> {
    let beta = match cfg.beta {
        Some(b) => b,
        None => best_beta(cfg.p, cfg.q, cfg.d)?.0,
    };
    let alpha = cfg.q - cfg.p * beta;
    let spec = cfg.measure_spec()?;
    let m_q = match spec.moment(cfg.q) {
        Ok(m) => Some(m),
        Err(Error::Divergent(_)) => None,
        Err(e) => return Err(e),
    };
    let c = |variant| -> Result<Option<f64>> {
        match m_q {
            None => Ok(None),
            Some(m) => {
                let s =
                    SmoothRateConstantSpec::new(cfg.p, cfg.q, cfg.d, cfg.sigma, beta, m, variant)?;
                Ok(Some(rate_smooth_constant(&s)?))
            }
        }
    };
    Ok(ConstantsRow {
        p: cfg.p,
        q: cfg.q,
        d: cfg.d,
        sigma: cfg.sigma,
        beta,
        alpha,
        measure: spec.name().to_string(),
        m_q,
        c_pd: c_pd(cfg.p, cfg.d)?,
        gaussian_moment_p: gaussian_moment(cfg.p, cfg.d)?,
        i_abd: i_abd(alpha, beta, cfg.d)?,
        carlson_constant: carlson_constant(alpha, beta, cfg.d)?,
        mz_constant: mz_constant(beta)?,
        rate_exponent: mz_rate_exponent(beta)?,
        c_beta_sigma_carlson: c(RateVariant::Carlson)?,
        c_beta_sigma_dyadic: c(RateVariant::Dyadic)?,
    })
}

/// `(t, H_μ(t), G_μ(t), G_μ(t)/t^p)` for the canonical calibration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmuRow {
    pub measure: String,
    pub p: f64,
    pub t: f64,
    pub h: f64,
    pub g: f64,
    pub g_over_tp: f64,
}

/// Tabulates the canonical calibration on a geometric grid from 1e-2 to `t_max`
/// (4 points per decade), stopping where the tail integral vanishes.
pub fn gmu_table(cfg: &ExperimentConfig) -> Result<Vec<GmuRow>> {
    let spec = cfg.measure_spec()?;
    let tail = TailFunction::from_spec(&spec, cfg.p)?;
    let g = CalibrationFunction::canonical(&tail)?;
    let mut rows = Vec::new();
    for t in geometric_grid(1e-2, cfg.t_max.max(0.02), 4) {
        let gt = match g.eval(t) {
            Ok(v) => v,
            Err(Error::VanishingTail(_)) => break,
            Err(e) => return Err(e),
        };
        rows.push(GmuRow {
            measure: spec.name().to_string(),
            p: cfg.p,
            t,
            h: h_mu(&tail, t)?,
            g: gt,
            g_over_tp: gt / t.powf(cfg.p),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundOutput {
    pub reports: Vec<LowerBoundReport>,
    pub epsilon_audit: EpsilonAudit,
}

/// One lower-bound experiment per grid N plus the ε audit on `2^8..2^60`.
pub fn lowerbound_runs(cfg: &ExperimentConfig) -> Result<LowerBoundOutput> {
    let reports = cfg
        .n_grid
        .iter()
        .map(|&n| {
            lower_bound_experiment(
                n,
                cfg.sigma,
                cfg.p,
                cfg.reps,
                super::derive_seed(cfg.seed, n),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<u32> = (8..=60).collect();
    Ok(LowerBoundOutput {
        reports,
        epsilon_audit: epsilon_vs_rate_audit(cfg.p, cfg.eps, &grid)?,
    })
}

/// Flat view of a lower-bound report for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub sigma: f64,
    pub p: f64,
    pub reps: usize,
    pub seed: u64,
    pub k_n: u32,
    pub x_n: f64,
    pub r_n: f64,
    pub w_n: f64,
    pub c_0: f64,
    pub c_1: f64,
    pub v_0: f64,
    pub c_be: f64,
    pub e_n_threshold: u64,
    pub freq_en: f64,
    pub freq_en_stderr: f64,
    pub p_en_exact: Option<f64>,
    pub binomial_event_prob: f64,
    pub min_mass_gap: Option<f64>,
    pub certified_lb: f64,
    pub paper_lb: f64,
    pub eps_n: f64,
    pub delta_n: f64,
    pub allowance: f64,
    pub true_mass_ub_holds: bool,
    pub errors_ok: bool,
}

impl From<&LowerBoundReport> for LowerBoundRow {
    fn from(r: &LowerBoundReport) -> Self {
        let q = &r.quantities;
        Self {
            n: q.n,
            sigma: r.sigma,
            p: r.p,
            reps: r.reps,
            seed: r.seed,
            k_n: q.k_n,
            x_n: q.x_n,
            r_n: q.r_n,
            w_n: q.w_n,
            c_0: q.c_0,
            c_1: q.c_1,
            v_0: q.v_0,
            c_be: r.c_be,
            e_n_threshold: r.e_n_threshold,
            freq_en: r.freq_en,
            freq_en_stderr: r.freq_en_stderr,
            p_en_exact: r.p_en_exact,
            binomial_event_prob: r.binomial_event.value,
            min_mass_gap: r.min_mass_gap,
            certified_lb: r.certified_lb,
            paper_lb: r.paper_lb,
            eps_n: r.errors.eps_n,
            delta_n: r.errors.delta_n,
            allowance: r.errors.allowance,
            true_mass_ub_holds: r.true_mass_ub_holds,
            errors_ok: r.errors_ok,
        }
    }
}
