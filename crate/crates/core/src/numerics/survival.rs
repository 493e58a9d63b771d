//! Survival functions t ↦ P(|X| > t) and their power-weighted tail integrals.

use std::fmt;
use std::sync::Arc;

use super::quadrature::{integrate, Domain, QuadratureSpec};
use super::Real;
use crate::error::{domain, Error, Result};

/// Shared scalar map.
pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A survival function with an optional logarithmic form.
///
/// The logarithmic form `ln S(e^v)` lets heavy tails be integrated in
/// logarithmic coordinates without forming `0 · ∞` products far out.
#[derive(Clone)]
pub struct Survival<T> {
    sf: ScalarFn<T>,
    log_sf_exp: Option<ScalarFn<T>>,
}

impl<T> fmt::Debug for Survival<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Survival")
            .field("log_form", &self.log_sf_exp.is_some())
            .finish()
    }
}

impl<T: Real> Survival<T> {
    pub fn new(sf: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            sf: Arc::new(sf),
            log_sf_exp: None,
        }
    }

    /// Attaches `v ↦ ln S(e^v)`.
    pub fn with_log_form(mut self, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.log_sf_exp = Some(Arc::new(f));
        self
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        if t < T::zero() {
            return T::one();
        }
        (self.sf)(t)
    }

    /// `ln S(e^v)`.
    #[inline]
    pub fn ln_at_exp(&self, v: T) -> T {
        match &self.log_sf_exp {
            Some(f) => f(v),
            None => (self.sf)(v.exp()).ln(),
        }
    }

    /// `∫_from^∞ q s^{q−1} S(s) ds`, i.e. `E[|X|^q ; |X| > from]`-style tail mass.
    ///
    /// The range below 1 is integrated directly; beyond 1 the substitution
    /// `s = e^v` is applied before the ray map. Before integrating, the
    /// log-space integrand is probed far out; growth or non-finite values
    /// are reported as divergence.
    pub fn power_tail_integral(&self, q: T, from: T, spec: &QuadratureSpec<T>) -> Result<T> {
        if !(q > T::zero()) {
            return Err(domain("tail integral order must be positive"));
        }
        if from < T::zero() || !from.is_finite() {
            return Err(domain(
                "tail integral needs a finite nonnegative lower limit",
            ));
        }
        let log_integrand = |v: T| -> T {
            let l = self.ln_at_exp(v);
            if l == T::neg_infinity() {
                return T::zero();
            }
            q * (q * v + l).exp()
        };
        let v0 = if from > T::one() {
            from.ln()
        } else {
            T::zero()
        };
        self.check_decay(&log_integrand, v0)?;
        let near = if from < T::one() {
            integrate(
                |s: T| {
                    if s <= T::zero() {
                        if q < T::one() {
                            return T::zero();
                        }
                        return if q == T::one() {
                            self.eval(T::zero())
                        } else {
                            T::zero()
                        };
                    }
                    q * s.powf(q - T::one()) * self.eval(s)
                },
                Domain::Finite(from, T::one()),
                spec,
            )?
        } else {
            T::zero()
        };
        let far = integrate(log_integrand, Domain::UpperRay(v0), spec).map_err(|e| match e {
            Error::NonConvergence { estimate, .. } => Error::Divergent(format!(
                "tail integral of order {q} did not settle (last estimate {estimate:e})"
            )),
            other => other,
        })?;
        Ok(near + far)
    }

    fn check_decay(&self, g: &impl Fn(T) -> T, v0: T) -> Result<()> {
        let probes: Vec<T> = (3..=8)
            .map(|j| g(v0 + T::lit(f64::from(1u32 << j))))
            .collect();
        if probes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergent(
                "tail integrand is not finite far out".into(),
            ));
        }
        let n = probes.len();
        let (a, b, c) = (probes[n - 3], probes[n - 2], probes[n - 1]);
        if c > T::zero() && b >= a && c >= b {
            return Err(Error::Divergent(
                "tail integrand does not decay in logarithmic coordinates".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_tail_moments() {
        let s = Survival::new(|t: f64| (-t).exp()).with_log_form(|v: f64| -v.exp());
        let spec = QuadratureSpec::default();
        // E X^q = Γ(q+1)
        for (q, m) in [(1.0, 1.0), (2.0, 2.0), (3.0, 6.0)] {
            let v = s.power_tail_integral(q, 0.0, &spec).unwrap();
            assert!((v - m).abs() < 1e-8 * m, "q={q} v={v}");
        }
        let h = s.power_tail_integral(1.0, 2.5, &spec).unwrap();
        assert!((h - (-2.5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn pareto_tail_diverges_above_index() {
        // S(t) = min(1, t^{-2})
        let s = Survival::new(|t: f64| if t <= 1.0 { 1.0 } else { t.powi(-2) })
            .with_log_form(|v: f64| if v <= 0.0 { 0.0 } else { -2.0 * v });
        let spec = QuadratureSpec::default();
        let v = s.power_tail_integral(1.5, 0.0, &spec).unwrap();
        // 1 + ∫_1^∞ 1.5 s^{-1.5} ds = 1 + 3
        assert!((v - 4.0).abs() < 1e-8, "{v}");
        assert!(matches!(
            s.power_tail_integral(2.5, 0.0, &spec),
            Err(Error::Divergent(_))
        ));
    }
}
