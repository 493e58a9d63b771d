//! Special functions, quadrature and survival-function integrals.

mod quadrature;
mod real;
mod special;
mod survival;

pub use quadrature::{integrate, Domain, QuadratureSpec};
pub use real::Real;
pub use special::{
    binomial_pmf, gamma_fn, gamma_ratio, gaussian_abs_tail, gaussian_tail_1d, gaussian_tail_d,
    ln_gamma, normal_cdf, normal_interval, normal_sf,
};
pub use survival::{ScalarFn, Survival};

/// Recursive pairwise sum; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
