//! Exact p-Wasserstein distances between finitely supported measures.

mod simplex;

use crate::error::{domain, Error, Result};
use crate::measures::{sq_dist, Atoms};

use simplex::{real_tree_flows, Network};

/// Largest support-size product accepted by [`wasserstein_discrete`].
pub const MAX_FLOW_ARCS: usize = 10_000_000;
/// Integer scale used for marginals in the flow solver.
pub const MASS_SCALE: f64 = 1e9;

/// A coupling given by its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `(source index, target index, mass)`, sorted by indices.
    pub pairs: Vec<(usize, usize, f64)>,
    /// `Σ mass · |x_i − y_j|^p`.
    pub cost_p: f64,
}

impl TransportPlan {
    /// Largest deviation of the plan's marginals from the given weights.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut ra = vec![0.0; a.len()];
        let mut rb = vec![0.0; b.len()];
        for &(i, j, m) in &self.pairs {
            ra[i] += m;
            rb[j] += m;
        }
        ra.iter()
            .zip(a)
            .chain(rb.iter().zip(b))
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(domain("transport order p must be finite and at least 1"));
    }
    Ok(())
}

#[inline]
fn cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    let d2 = sq_dist(x, y);
    if p == 2.0 {
        d2
    } else if p == 1.0 {
        d2.sqrt()
    } else {
        d2.sqrt().powf(p)
    }
}

/// `W_p^p` on the line by the monotone (quantile) coupling.
pub fn wasserstein_1d_pow<A: Atoms + ?Sized, B: Atoms + ?Sized>(
    a: &A,
    b: &B,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    if a.dim() != 1 {
        return Err(Error::DimensionMismatch(1, a.dim()));
    }
    if b.dim() != 1 {
        return Err(Error::DimensionMismatch(1, b.dim()));
    }
    let sorted = |m: &dyn Fn(usize) -> (f64, f64), len: usize| {
        let mut v: Vec<(f64, f64)> = (0..len).map(m).filter(|&(_, w)| w > 0.0).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let xa = sorted(&|i| (a.point(i)[0], a.weight(i)), a.len());
    let xb = sorted(&|j| (b.point(j)[0], b.weight(j)), b.len());
    let equal_weights = |v: &[(f64, f64)]| v.iter().all(|&(_, w)| w == v[0].1);
    if xa.len() == xb.len() && equal_weights(&xa) && equal_weights(&xb) && xa[0].1 == xb[0].1 {
        let n = xa.len() as f64;
        let s: f64 = xa
            .iter()
            .zip(&xb)
            .map(|(x, y)| (x.0 - y.0).abs().powf(p))
            .sum();
        return Ok(s / n);
    }
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ra, mut rb) = (xa[0].1, xb[0].1);
    let mut total = 0.0;
    loop {
        let m = ra.min(rb);
        total += m * (xa[i].0 - xb[j].0).abs().powf(p);
        ra -= m;
        rb -= m;
        // advance whichever side is exhausted; ties advance both
        let adv_a = ra <= rb;
        let adv_b = rb <= ra;
        if adv_a {
            i += 1;
            if i == xa.len() {
                break;
            }
            ra = xa[i].1;
        }
        if adv_b {
            j += 1;
            if j == xb.len() {
                break;
            }
            rb = xb[j].1;
        }
    }
    Ok(total)
}

/// `W_p` on the line by the monotone (quantile) coupling.
pub fn wasserstein_1d<A: Atoms + ?Sized, B: Atoms + ?Sized>(a: &A, b: &B, p: f64) -> Result<f64> {
    Ok(wasserstein_1d_pow(a, b, p)?.powf(1.0 / p))
}

/// Integer masses summing exactly to `MASS_SCALE`, by largest remainder.
fn integerize(w: &[f64]) -> Vec<i64> {
    let target = MASS_SCALE as i64;
    let scaled: Vec<f64> = w.iter().map(|x| x * MASS_SCALE).collect();
    let mut out: Vec<i64> = scaled.iter().map(|x| x.floor() as i64).collect();
    let mut rest = target - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = scaled[i] - scaled[i].floor();
        let fj = scaled[j] - scaled[j].floor();
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    let mut k = 0;
    while rest > 0 {
        out[order[k % order.len()]] += 1;
        rest -= 1;
        k += 1;
    }
    while rest < 0 {
        let i = order[order.len() - 1 - (k % order.len())];
        if out[i] > 0 {
            out[i] -= 1;
            rest += 1;
        }
        k += 1;
    }
    out
}

/// Exact `W_p` and an optimal plan between two finitely supported measures.
///
/// Solves the transportation linear program by network simplex on marginals
/// scaled to integers (see [`MASS_SCALE`]). Flows on the optimal basis are
/// then recomputed from the unscaled weights, so the plan matches the input
/// marginals to rounding error whenever that basis stays feasible.
pub fn wasserstein_discrete<A: Atoms + ?Sized, B: Atoms + ?Sized>(
    a: &A,
    b: &B,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    check_p(p)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let ia: Vec<usize> = (0..a.len()).filter(|&i| a.weight(i) > 0.0).collect();
    let ib: Vec<usize> = (0..b.len()).filter(|&j| b.weight(j) > 0.0).collect();
    let (m, n) = (ia.len(), ib.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidMeasure(
            "measure without positive mass".into(),
        ));
    }
    if m.saturating_mul(n) > MAX_FLOW_ARCS {
        return Err(Error::Capacity(format!(
            "support sizes {m} x {n} exceed {MAX_FLOW_ARCS} arcs"
        )));
    }
    let wa: Vec<f64> = ia.iter().map(|&i| a.weight(i)).collect();
    let wb: Vec<f64> = ib.iter().map(|&j| b.weight(j)).collect();
    let mut costs = Vec::with_capacity(m * n);
    for &i in &ia {
        for &j in &ib {
            costs.push(cost(a.point(i), b.point(j), p));
        }
    }
    let sa = integerize(&wa);
    let sb = integerize(&wb);
    let net = Network::new(&costs, &sa, &sb);
    let sol = net.solve()?;
    let flows = real_tree_flows(&net, &sol.basis, &wa, &wb).unwrap_or_else(|| {
        sol.basis
            .iter()
            .filter(|&&e| !net.is_artificial(e))
            .map(|&e| (e, sol.int_flow[e] as f64 / MASS_SCALE))
            .collect()
    });
    let mut pairs: Vec<(usize, usize, f64)> = flows
        .into_iter()
        .filter(|&(_, f)| f > 0.0)
        .map(|(e, f)| (ia[e / n], ib[e % n], f))
        .collect();
    pairs.sort_by_key(|x| (x.0, x.1));
    let cost_p: f64 = pairs
        .iter()
        .map(|&(i, j, f)| f * cost(a.point(i), b.point(j), p))
        .sum();
    let cost_p = cost_p.max(0.0);
    Ok((cost_p.powf(1.0 / p), TransportPlan { pairs, cost_p }))
}

/// Mass assigned to closed Euclidean balls.
pub trait BallMass {
    fn ball_dim(&self) -> usize;
    fn mass_of_ball(&self, center: &[f64], radius: f64) -> f64;
}

impl<T: Atoms + ?Sized> BallMass for T {
    fn ball_dim(&self) -> usize {
        self.dim()
    }
    fn mass_of_ball(&self, center: &[f64], radius: f64) -> f64 {
        self.ball_mass(center, radius)
    }
}

/// `r^p · (a(B) − b(B^{(r)}))^+` for the closed ball B of radius `radius_b`
/// at `center`; B^{(r)} is the concentric ball of radius `radius_b + r`.
pub fn neighborhood_lower_bound<A: BallMass + ?Sized, B: BallMass + ?Sized>(
    a: &A,
    b: &B,
    center: &[f64],
    radius_b: f64,
    r: f64,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    if !(r > 0.0) || !(radius_b >= 0.0) {
        return Err(domain(
            "neighborhood radii must satisfy r > 0, radius_B >= 0",
        ));
    }
    if a.ball_dim() != center.len() || b.ball_dim() != center.len() {
        return Err(Error::DimensionMismatch(a.ball_dim(), center.len()));
    }
    let gap = a.mass_of_ball(center, radius_b) - b.mass_of_ball(center, radius_b + r);
    Ok(r.powf(p) * gap.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{DiscreteMeasure, SampleCloud};

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_flat(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        let a = SampleCloud::from_flat(1, vec![0.0, 2.0], 0, "t").unwrap();
        let b = SampleCloud::from_flat(1, vec![3.0, 1.0], 0, "t").unwrap();
        assert_eq!(wasserstein_1d(&a, &b, 2.0).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&a, &a, 3.0).unwrap(), 0.0);
        let d0 = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let d1 = DiscreteMeasure::dirac(&[1.0]).unwrap();
        for p in [1.0, 2.0, 3.7] {
            assert!((wasserstein_1d(&d0, &d1, p).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn one_dimensional_weighted_merge() {
        // 0.5 δ0 + 0.5 δ1 against δ_{0.5}: W_1 = 0.5
        let a = line(&[0.0, 1.0], &[0.5, 0.5]);
        let b = line(&[0.5], &[1.0]);
        assert!((wasserstein_1d(&a, &b, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let c = DiscreteMeasure::from_flat(2, vec![0.0, 0.0], vec![1.0]).unwrap();
        assert!(matches!(
            wasserstein_1d(&a, &c, 1.0),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn forced_split_plan() {
        let a = DiscreteMeasure::new(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        let b = DiscreteMeasure::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
        let (w, plan) = wasserstein_discrete(&a, &b, 1.0).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        assert_eq!(plan.pairs, vec![(0, 0, 0.5), (0, 1, 0.5)]);
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let a = DiscreteMeasure::new(
            vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.3, 0.3]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let (w, plan) = wasserstein_discrete(&a, &a, 2.0).unwrap();
        assert_eq!(w, 0.0);
        assert!(plan.pairs.iter().all(|&(i, j, _)| i == j));
        assert!(plan.marginal_error(a.weights(), a.weights()) < 1e-15);
    }

    #[test]
    fn integerize_is_exact() {
        let w = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let s = integerize(&w);
        assert_eq!(s.iter().sum::<i64>(), 1_000_000_000);
        assert!(s.iter().all(|&x| (333_333_333..=333_333_334).contains(&x)));
    }

    #[test]
    fn neighborhood_examples() {
        let a = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let b = DiscreteMeasure::dirac(&[2.0]).unwrap();
        for p in [1.0, 2.0] {
            let lb = neighborhood_lower_bound(&a, &b, &[0.0], 0.5, 1.0, p).unwrap();
            assert_eq!(lb, 1.0);
            assert!(lb <= wasserstein_discrete(&a, &b, p).unwrap().1.cost_p);
        }
        assert_eq!(
            neighborhood_lower_bound(&a, &a, &[0.0], 0.5, 1.0, 1.0).unwrap(),
            0.0
        );
    }
}
