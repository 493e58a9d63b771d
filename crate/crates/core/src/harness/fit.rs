use serde::Serialize;

use crate::error::{domain, Result};

/// Least-squares fit of `log estimate = intercept + slope · log N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFitResult {
    pub n: Vec<u64>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub weighted: bool,
}

/// Ordinary least squares on `(ln N, ln estimate)`; with `weighted`, each
/// point gets weight `(estimate/stderr)²`, the inverse delta-method variance
/// of the log estimate.
pub fn rate_fit(
    ns: &[u64],
    estimates: &[f64],
    stderrs: &[f64],
    weighted: bool,
) -> Result<RateFitResult> {
    let k = ns.len();
    if k < 2 || estimates.len() != k || stderrs.len() != k {
        return Err(domain(
            "rate_fit needs at least two points and matching lengths",
        ));
    }
    if let Some(e) = estimates.iter().find(|&&e| !(e > 0.0)) {
        return Err(domain(format!(
            "rate_fit needs positive estimates (got {e})"
        )));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = estimates.iter().map(|e| e.ln()).collect();
    let w: Vec<f64> = if weighted {
        if stderrs.iter().any(|&s| !(s > 0.0)) {
            return Err(domain("weighted fit needs positive standard errors"));
        }
        estimates
            .iter()
            .zip(stderrs)
            .map(|(e, s)| (e / s).powi(2))
            .collect()
    } else {
        vec![1.0; k]
    };
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = (0..k).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    if !(sxx > 0.0) {
        return Err(domain("rate_fit needs at least two distinct N"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..k)
        .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let syy: f64 = w.iter().zip(&y).map(|(w, y)| w * (y - my).powi(2)).sum();
    let slope_stderr = if k > 2 {
        (sse / (k - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateFitResult {
        n: ns.to_vec(),
        estimates: estimates.to_vec(),
        stderrs: stderrs.to_vec(),
        slope,
        intercept,
        slope_stderr,
        r_squared,
        weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::stream_rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_power_law() {
        let ns: Vec<u64> = (4..12).map(|k| 1 << k).collect();
        let est: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-0.5)).collect();
        let f = rate_fit(&ns, &est, &vec![0.1; ns.len()], false).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let flat = rate_fit(&ns, &vec![2.0; ns.len()], &vec![0.1; ns.len()], true).unwrap();
        assert!(flat.slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let ns: Vec<u64> = (3..15).map(|k| 1 << k).collect();
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rng = stream_rng(11, 0);
        let est: Vec<f64> = ns
            .iter()
            .map(|&n| (n as f64).powf(-0.5) * (1.0 + noise.sample(&mut rng)))
            .collect();
        let se: Vec<f64> = est.iter().map(|e| 0.1 * e).collect();
        for weighted in [false, true] {
            let f = rate_fit(&ns, &est, &se, weighted).unwrap();
            assert!((f.slope + 0.5).abs() < 3.0 * f.slope_stderr, "{f:?}");
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(rate_fit(&[1, 2], &[1.0, 0.0], &[0.1, 0.1], false).is_err());
        assert!(rate_fit(&[1, 2], &[1.0], &[0.1], false).is_err());
    }
}
