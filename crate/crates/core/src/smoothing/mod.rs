//! Gaussian smoothing: kernel densities, smoothed sampling, the density-difference
//! bound and plug-in estimators of the smoothed distance.

mod estimator;

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::measures::{sq_dist, stream_rng, Atoms, SampleCloud};
use crate::numerics::{integrate, normal_interval, Domain, QuadratureSpec, Real};
use crate::transport::BallMass;

pub use estimator::{
    estimate_smoothed_between, estimate_smoothed_wp_p, SmoothedEstimate, SmoothingParams,
    MAX_PLUGIN_1D, MAX_PLUGIN_MULTI,
};

/// Isotropic Gaussian density `(2π)^{−d/2} σ^{−d} e^{−|x|²/(2σ²)}`.
pub fn phi_sigma<T: Real>(x: &[T], sigma: T) -> T {
    let d = T::lit(x.len() as f64);
    let r2 = x.iter().fold(T::zero(), |s, &v| s + v * v);
    let two = T::lit(2.0);
    (-r2 / (two * sigma * sigma)).exp() / ((two * T::PI()).sqrt() * sigma).powf(d)
}

/// Density of `μ * N_σ` at `x` for a finitely supported μ.
pub fn density_g_sigma<A: Atoms + ?Sized>(x: &[f64], mu: &A, sigma: f64) -> f64 {
    let d = mu.dim() as f64;
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.5 * d);
    let inv = -0.5 / (sigma * sigma);
    let s: f64 = (0..mu.len())
        .map(|i| mu.weight(i) * (inv * sq_dist(x, mu.point(i))).exp())
        .sum();
    norm * s
}

/// `{X_k + σ Z_k}` with Z_k i.i.d. standard normal from stream 0 of `seed`.
pub fn smooth_cloud(cloud: &SampleCloud, sigma: f64, seed: u64) -> Result<SampleCloud> {
    if !(sigma >= 0.0) {
        return Err(domain("sigma must be nonnegative"));
    }
    let mut rng = stream_rng(seed, 0);
    let pts = cloud
        .points_flat()
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            x + sigma * z
        })
        .collect();
    SampleCloud::from_flat(
        cloud.dim(),
        pts,
        seed,
        format!("{} * N({sigma})", cloud.source),
    )
}

/// A density on the line with an optional tail majorant.
///
/// The majorant maps `(R, p)` to an upper bound on `∫_{|x|>R} |x|^p f(x) dx`.
#[derive(Clone)]
pub struct Density1d {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    tail: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
    radius_hint: f64,
}

impl Density1d {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            tail: None,
            radius_hint: 0.0,
        }
    }

    pub fn with_tail_majorant(
        mut self,
        t: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.tail = Some(Arc::new(t));
        self
    }

    /// Density of `μ * N_σ` for a measure on the line, with the exact
    /// per-atom Gaussian tail moments as majorant.
    pub fn smoothed<A: Atoms + ?Sized>(mu: &A, sigma: f64) -> Result<Self> {
        if mu.dim() != 1 {
            return Err(Error::DimensionMismatch(1, mu.dim()));
        }
        if !(sigma > 0.0) {
            return Err(domain("sigma must be positive"));
        }
        let atoms: Vec<(f64, f64)> = (0..mu.len())
            .map(|i| (mu.point(i)[0], mu.weight(i)))
            .collect();
        let radius_hint = atoms.iter().fold(0.0f64, |m, a| m.max(a.0.abs()));
        let dens_atoms = atoms.clone();
        let f = move |x: f64| {
            dens_atoms
                .iter()
                .map(|&(y, w)| w * phi_sigma(&[x - y], sigma))
                .sum()
        };
        let tail = move |r: f64, p: f64| {
            let spec = QuadratureSpec::default().with_tolerances(1e-14, 1e-8);
            atoms
                .iter()
                .map(|&(y, w)| {
                    let g = |x: f64| x.abs().powf(p) * phi_sigma(&[x - y], sigma);
                    let up = integrate(g, Domain::UpperRay(r), &spec).unwrap_or(f64::INFINITY);
                    let down = integrate(g, Domain::LowerRay(-r), &spec).unwrap_or(f64::INFINITY);
                    w * (up + down)
                })
                .sum()
        };
        Ok(Self {
            f: Arc::new(f),
            tail: Some(Arc::new(tail)),
            radius_hint,
        })
    }

    /// N(mean, σ²).
    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self> {
        let m = crate::measures::DiscreteMeasure::dirac(&[mean])?;
        Self::smoothed(&m, sigma)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// Largest atom norm, when the density came from a smoothed measure.
    pub fn radius_hint(&self) -> f64 {
        self.radius_hint
    }
}

/// Outcome of [`density_diff_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiffBound {
    /// `2^{p−1} ∫_{|x|≤R} |x|^p |f − g| dx`.
    pub inner: f64,
    /// `2^{p−1}` times the sum of the declared tail majorants at R.
    pub remainder: f64,
}

impl DensityDiffBound {
    pub fn total(&self) -> f64 {
        self.inner + self.remainder
    }
}

/// Default truncation radius: largest atom norm plus 12σ.
pub fn default_radius(max_atom_norm: f64, sigma: f64) -> f64 {
    max_atom_norm + 12.0 * sigma
}

/// Upper bound `2^{p−1} ∫ |x|^p |f − g| dx` on `W_p^p` between two densities on the line.
///
/// Both densities must declare a tail majorant so the part beyond R is bounded.
pub fn density_diff_bound(
    f: &Density1d,
    g: &Density1d,
    p: f64,
    radius: f64,
    quad: &QuadratureSpec<f64>,
) -> Result<DensityDiffBound> {
    if !(p >= 1.0) || !(radius > 0.0) {
        return Err(domain("density_diff_bound needs p >= 1 and R > 0"));
    }
    let (Some(tf), Some(tg)) = (&f.tail, &g.tail) else {
        return Err(Error::TailUnbounded(
            "density_diff_bound needs a tail majorant for both densities".into(),
        ));
    };
    let h = |x: f64| x.abs().powf(p) * (f.eval(x) - g.eval(x)).abs();
    let inner = integrate(h, Domain::Finite(-radius, 0.0), quad)?
        + integrate(h, Domain::Finite(0.0, radius), quad)?;
    let scale = 2f64.powf(p - 1.0);
    Ok(DensityDiffBound {
        inner: scale * inner,
        remainder: scale * (tf(radius, p) + tg(radius, p)),
    })
}

/// `μ * N_σ` for a measure on the line, with exact interval masses.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSmoothed<'a, A: ?Sized> {
    base: &'a A,
    sigma: f64,
}

impl<'a, A: Atoms + ?Sized> GaussianSmoothed<'a, A> {
    pub fn new(base: &'a A, sigma: f64) -> Result<Self> {
        if base.dim() != 1 {
            return Err(Error::DimensionMismatch(1, base.dim()));
        }
        if !(sigma > 0.0) {
            return Err(domain("sigma must be positive"));
        }
        Ok(Self { base, sigma })
    }

    /// Mass of `[lo, hi]`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        (0..self.base.len())
            .map(|i| {
                let x = self.base.point(i)[0];
                self.base.weight(i) * normal_interval((lo - x) / self.sigma, (hi - x) / self.sigma)
            })
            .sum()
    }
}

impl<A: Atoms + ?Sized> BallMass for GaussianSmoothed<'_, A> {
    fn ball_dim(&self) -> usize {
        1
    }
    fn mass_of_ball(&self, center: &[f64], radius: f64) -> f64 {
        self.interval_mass(center[0] - radius, center[0] + radius)
    }
}
