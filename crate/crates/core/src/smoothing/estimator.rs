use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::measures::{replicate_stream, stream_rng, Atoms, MeasureSpec, Rng, SampleCloud};
use crate::numerics::pairwise_sum;
use crate::transport::{wasserstein_1d_pow, wasserstein_discrete};

/// Largest plug-in cloud handled on the line (sorting path).
pub const MAX_PLUGIN_1D: usize = 4096;
/// Largest plug-in cloud handled in dimension ≥ 2 (flow path).
pub const MAX_PLUGIN_MULTI: usize = 512;

/// Parameters of a plug-in estimate of a smoothed distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub sigma: f64,
    pub p: f64,
    pub m_plugin: usize,
    pub reps: usize,
}

impl SmoothingParams {
    pub fn new(sigma: f64, p: f64, m_plugin: usize, reps: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(domain("sigma must be positive"));
        }
        if !(p >= 1.0) {
            return Err(domain("p must be at least 1"));
        }
        if m_plugin < 2 || reps == 0 {
            return Err(domain("m_plugin must be >= 2 and reps >= 1"));
        }
        Ok(Self {
            sigma,
            p,
            m_plugin,
            reps,
        })
    }

    fn check_capacity(&self, dim: usize) -> Result<()> {
        let cap = if dim == 1 {
            MAX_PLUGIN_1D
        } else {
            MAX_PLUGIN_MULTI
        };
        if self.m_plugin > cap {
            return Err(Error::Capacity(format!(
                "m_plugin = {} exceeds {cap} in dimension {dim}",
                self.m_plugin
            )));
        }
        Ok(())
    }
}

/// Mean and standard error over replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: usize,
}

impl SmoothedEstimate {
    fn from_values(v: &[f64]) -> Self {
        let n = v.len();
        let mean = pairwise_sum(v) / n as f64;
        let stderr = if n > 1 {
            let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            estimate: mean,
            stderr,
            reps: n,
        }
    }
}

fn add_noise(rng: &mut Rng, sigma: f64, pts: &mut [f64]) {
    for x in pts.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *x += sigma * z;
    }
}

fn cloud_cost(dim: usize, a: Vec<f64>, b: Vec<f64>, p: f64) -> Result<f64> {
    let a = SampleCloud::from_flat(dim, a, 0, "plug-in")?;
    let b = SampleCloud::from_flat(dim, b, 0, "plug-in")?;
    if dim == 1 {
        wasserstein_1d_pow(&a, &b, p)
    } else {
        Ok(wasserstein_discrete(&a, &b, p)?.1.cost_p)
    }
}

/// Plug-in estimate of `E[(W_p^{(σ)}(μ_N, μ))^p]`.
///
/// Replicate `r` draws μ_N from stream `(seed, r, 0)`, resamples `m_plugin`
/// atoms of μ_N with Gaussian noise from stream `(seed, r, 1)`, draws
/// `m_plugin` fresh smoothed points of μ from stream `(seed, r, 2)`, and
/// records the exact `W_p^p` between the two clouds.
pub fn estimate_smoothed_wp_p(
    spec: &MeasureSpec,
    n: usize,
    params: &SmoothingParams,
    seed: u64,
) -> Result<SmoothedEstimate> {
    if n == 0 {
        return Err(domain("N must be positive"));
    }
    let dim = spec.dim();
    params.check_capacity(dim)?;
    let m = params.m_plugin;
    let values: Vec<f64> = (0..params.reps as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng0 = stream_rng(seed, replicate_stream(r, 0));
            let empirical = spec.draw_n(&mut rng0, n)?;
            let mut rng1 = stream_rng(seed, replicate_stream(r, 1));
            let mut a = Vec::with_capacity(m * dim);
            for _ in 0..m {
                let k = rng1.random_range(0..n);
                a.extend_from_slice(&empirical[k * dim..(k + 1) * dim]);
            }
            add_noise(&mut rng1, params.sigma, &mut a);
            let mut rng2 = stream_rng(seed, replicate_stream(r, 2));
            let mut b = spec.draw_n(&mut rng2, m)?;
            add_noise(&mut rng2, params.sigma, &mut b);
            cloud_cost(dim, a, b, params.p)
        })
        .collect::<Result<_>>()?;
    Ok(SmoothedEstimate::from_values(&values))
}

/// Plug-in estimate of `W_p^{(σ)}(a, b)` between two finitely supported measures.
///
/// Each replicate draws `m_plugin` pairs `(X, Y)` from an optimal coupling of
/// `a` and `b` together with shared noise `σZ`, so the clouds `{X + σZ}` and
/// `{Y + σZ}` are i.i.d. samples of `a * N_σ` and `b * N_σ`. The recorded
/// value is the exact `W_p` between the two clouds; the shared noise keeps the
/// estimate from exceeding `W_p(a, b)` in expectation.
pub fn estimate_smoothed_between<A: Atoms + ?Sized + Sync, B: Atoms + ?Sized + Sync>(
    a: &A,
    b: &B,
    params: &SmoothingParams,
    seed: u64,
) -> Result<SmoothedEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let dim = a.dim();
    params.check_capacity(dim)?;
    let (_, plan) = wasserstein_discrete(a, b, params.p)?;
    let mut cdf = Vec::with_capacity(plan.pairs.len());
    let mut acc = 0.0;
    for &(_, _, w) in &plan.pairs {
        acc += w;
        cdf.push(acc);
    }
    let m = params.m_plugin;
    let values: Vec<f64> = (0..params.reps as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = stream_rng(seed, replicate_stream(r, 0));
            let mut xa = Vec::with_capacity(m * dim);
            let mut xb = Vec::with_capacity(m * dim);
            for _ in 0..m {
                let u = rng.random::<f64>() * acc;
                let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                let (i, j, _) = plan.pairs[k];
                for t in 0..dim {
                    let z: f64 = rng.sample(StandardNormal);
                    xa.push(a.point(i)[t] + params.sigma * z);
                    xb.push(b.point(j)[t] + params.sigma * z);
                }
            }
            Ok(cloud_cost(dim, xa, xb, params.p)?.powf(1.0 / params.p))
        })
        .collect::<Result<_>>()?;
    Ok(SmoothedEstimate::from_values(&values))
}
