//! Productivity and leisure-value laws.

use rand::Rng;
use rand_distr::{Distribution as _, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, integrate_tail, QuadConfig};
use crate::error::{Error, Result};
use crate::scalar::{normal_cdf, normal_pdf, normal_quantile, normal_sf, Scalar};

/// What a distribution is used for. Productivity draws must have a finite
/// mean; leisure values only need a proper cdf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Productivity,
    Leisure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec<T> {
    Exponential { rate: T },
    Uniform { lower: T, upper: T },
    Lognormal { log_mean: T, log_sd: T },
    /// Normal(mean, sd) conditioned on being nonnegative.
    TruncatedNormal { mean: T, sd: T },
}

impl<T: Scalar> DistributionSpec<T> {
    pub fn validate(&self, role: Role) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidDistribution(format!("{self:?}: {msg}")));
        match *self {
            DistributionSpec::Exponential { rate } => {
                if !(rate.is_finite() && rate > T::zero()) {
                    return bad("rate must be positive and finite");
                }
            }
            DistributionSpec::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return bad("need finite lower < upper");
                }
            }
            DistributionSpec::Lognormal { log_mean, log_sd } => {
                if !(log_mean.is_finite() && log_sd.is_finite() && log_sd > T::zero()) {
                    return bad("need finite log_mean and positive log_sd");
                }
            }
            DistributionSpec::TruncatedNormal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && sd > T::zero()) {
                    return bad("need finite mean and positive sd");
                }
                if normal_cdf(mean / sd) <= T::zero() {
                    return bad("no probability mass above zero");
                }
            }
        }
        if role == Role::Productivity && !self.mean().is_finite() {
            return bad("productivity law needs a finite mean");
        }
        Ok(())
    }

    pub fn support_min(&self) -> T {
        match *self {
            DistributionSpec::Uniform { lower, .. } => lower,
            _ => T::zero(),
        }
    }

    /// Upper end of the support, `None` when unbounded.
    pub fn support_max(&self) -> Option<T> {
        match *self {
            DistributionSpec::Uniform { upper, .. } => Some(upper),
            _ => None,
        }
    }

    pub fn mean(&self) -> T {
        let two = T::lit(2.0);
        match *self {
            DistributionSpec::Exponential { rate } => T::one() / rate,
            DistributionSpec::Uniform { lower, upper } => (lower + upper) / two,
            DistributionSpec::Lognormal { log_mean, log_sd } => {
                (log_mean + log_sd * log_sd / two).exp()
            }
            DistributionSpec::TruncatedNormal { mean, sd } => {
                let a = mean / sd;
                mean + sd * normal_pdf(a) / normal_cdf(a)
            }
        }
    }

    pub fn cdf(&self, x: T) -> T {
        T::one() - self.survival(x)
    }

    /// `1 - cdf(x)`, computed directly so upper-tail values keep precision.
    pub fn survival(&self, x: T) -> T {
        if x.is_nan() {
            return T::nan();
        }
        match *self {
            DistributionSpec::Exponential { rate } => {
                if x <= T::zero() {
                    T::one()
                } else {
                    (-rate * x).exp()
                }
            }
            DistributionSpec::Uniform { lower, upper } => {
                if x <= lower {
                    T::one()
                } else if x >= upper {
                    T::zero()
                } else {
                    (upper - x) / (upper - lower)
                }
            }
            DistributionSpec::Lognormal { log_mean, log_sd } => {
                if x <= T::zero() {
                    T::one()
                } else {
                    normal_sf((x.ln() - log_mean) / log_sd)
                }
            }
            DistributionSpec::TruncatedNormal { mean, sd } => {
                if x <= T::zero() {
                    T::one()
                } else {
                    normal_sf((x - mean) / sd) / normal_cdf(mean / sd)
                }
            }
        }
    }

    pub fn density(&self, x: T) -> T {
        match *self {
            DistributionSpec::Exponential { rate } => {
                if x < T::zero() {
                    T::zero()
                } else {
                    rate * (-rate * x).exp()
                }
            }
            DistributionSpec::Uniform { lower, upper } => {
                if x < lower || x > upper {
                    T::zero()
                } else {
                    T::one() / (upper - lower)
                }
            }
            DistributionSpec::Lognormal { log_mean, log_sd } => {
                if x <= T::zero() {
                    T::zero()
                } else {
                    normal_pdf((x.ln() - log_mean) / log_sd) / (log_sd * x)
                }
            }
            DistributionSpec::TruncatedNormal { mean, sd } => {
                if x < T::zero() {
                    T::zero()
                } else {
                    normal_pdf((x - mean) / sd) / (sd * normal_cdf(mean / sd))
                }
            }
        }
    }

    /// True when [`partial_expectation`](Self::partial_expectation) uses a
    /// closed form rather than quadrature.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, DistributionSpec::TruncatedNormal { .. })
    }

    /// `PE(c) = ∫_c^∞ (x - c) dG(x)`.
    pub fn partial_expectation(&self, c: T, quad: &QuadConfig<T>) -> Result<T> {
        if !c.is_finite() {
            return Err(Error::NonFinite("partial expectation threshold"));
        }
        let lo = self.support_min();
        if c <= lo {
            return Ok(self.mean() - c);
        }
        let two = T::lit(2.0);
        let value = match *self {
            DistributionSpec::Exponential { rate } => (-rate * c).exp() / rate,
            DistributionSpec::Uniform { lower, upper } => {
                if c >= upper {
                    T::zero()
                } else {
                    (upper - c) * (upper - c) / (two * (upper - lower))
                }
            }
            DistributionSpec::Lognormal { log_mean, log_sd } => {
                let lc = c.ln();
                let mean = (log_mean + log_sd * log_sd / two).exp();
                let upper = mean * normal_sf((lc - log_mean - log_sd * log_sd) / log_sd);
                let lower = c * normal_sf((lc - log_mean) / log_sd);
                upper - lower
            }
            DistributionSpec::TruncatedNormal { .. } => {
                return self.partial_expectation_quadrature(c, quad);
            }
        };
        Ok(value.max(T::zero()))
    }

    /// Partial expectation by adaptive quadrature, available for every kind.
    pub fn partial_expectation_quadrature(&self, c: T, quad: &QuadConfig<T>) -> Result<T> {
        if !c.is_finite() {
            return Err(Error::NonFinite("partial expectation threshold"));
        }
        let lo = c.max(self.support_min());
        let integrand = |x: T| (x - c) * self.density(x);
        let r = match self.support_max() {
            Some(hi) if lo >= hi => return Ok(T::zero()),
            Some(hi) => integrate(integrand, lo, hi, quad)?,
            None => integrate_tail(integrand, lo, quad)?,
        };
        Ok(r.value.max(T::zero()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let x = match *self {
            DistributionSpec::Exponential { rate } => Exp::new(rate.as_f64())
                .expect("validated rate")
                .sample(rng),
            DistributionSpec::Uniform { lower, upper } => {
                rng.gen_range(lower.as_f64()..upper.as_f64())
            }
            DistributionSpec::Lognormal { log_mean, log_sd } => {
                LogNormal::new(log_mean.as_f64(), log_sd.as_f64())
                    .expect("validated log_sd")
                    .sample(rng)
            }
            DistributionSpec::TruncatedNormal { mean, sd } => {
                let (m, s) = (mean.as_f64(), sd.as_f64());
                let mass = normal_cdf(m / s);
                if mass > 0.25 {
                    let n = Normal::new(m, s).expect("validated sd");
                    loop {
                        let x = n.sample(rng);
                        if x >= 0.0 {
                            break x;
                        }
                    }
                } else {
                    let below = normal_cdf(-m / s);
                    let u: f64 = rng.gen();
                    (m + s * normal_quantile(below + u * (1.0 - below))).max(0.0)
                }
            }
        };
        T::lit(x)
    }

    /// The same law with every monetary value multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        match *self {
            DistributionSpec::Exponential { rate } => {
                DistributionSpec::Exponential { rate: rate / factor }
            }
            DistributionSpec::Uniform { lower, upper } => DistributionSpec::Uniform {
                lower: lower * factor,
                upper: upper * factor,
            },
            DistributionSpec::Lognormal { log_mean, log_sd } => DistributionSpec::Lognormal {
                log_mean: log_mean + factor.ln(),
                log_sd,
            },
            DistributionSpec::TruncatedNormal { mean, sd } => DistributionSpec::TruncatedNormal {
                mean: mean * factor,
                sd: sd * factor,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad() -> QuadConfig<f64> {
        QuadConfig::default()
    }

    fn all_kinds() -> Vec<DistributionSpec<f64>> {
        vec![
            DistributionSpec::Exponential { rate: 1.3 },
            DistributionSpec::Uniform { lower: 0.5, upper: 2.0 },
            DistributionSpec::Lognormal { log_mean: 0.0, log_sd: 0.5 },
            DistributionSpec::TruncatedNormal { mean: 1.0, sd: 0.7 },
        ]
    }

    #[test]
    fn partial_expectation_trivial_values() {
        let exp = DistributionSpec::Exponential { rate: 1.0 };
        assert_eq!(exp.partial_expectation(0.0, &quad()).unwrap(), 1.0);
        let uni = DistributionSpec::Uniform { lower: 0.0, upper: 1.0 };
        assert!((uni.partial_expectation(0.5, &quad()).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(uni.partial_expectation(1.5, &quad()).unwrap(), 0.0);
    }

    #[test]
    fn below_support_is_mean_minus_threshold() {
        for dist in all_kinds() {
            let c = dist.support_min() - 0.75;
            let pe = dist.partial_expectation(c, &quad()).unwrap();
            assert!((pe - (dist.mean() - c)).abs() < 1e-12, "{dist:?}");
        }
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        for dist in all_kinds() {
            for &c in &[0.1, 0.6, 1.0, 1.7, 3.0] {
                let closed = dist.partial_expectation(c, &quad()).unwrap();
                let numeric = dist.partial_expectation_quadrature(c, &quad()).unwrap();
                assert!((closed - numeric).abs() < 1e-9, "{dist:?} c={c}: {closed} {numeric}");
            }
        }
    }

    #[test]
    fn truncated_normal_matches_its_closed_form() {
        // E[(X - c)+] for the truncated normal, written out by hand.
        let (m, s) = (1.0_f64, 0.7_f64);
        let dist = DistributionSpec::TruncatedNormal { mean: m, sd: s };
        for &c in &[0.2, 1.0, 2.5] {
            let z = (c - m) / s;
            let want = (s * normal_pdf(z) + (m - c) * normal_sf(z)) / normal_cdf(m / s);
            let got = dist.partial_expectation(c, &quad()).unwrap();
            assert!((got - want).abs() < 1e-10, "c={c}: {got} vs {want}");
        }
    }

    #[test]
    fn slope_is_minus_survival() {
        let h = 1e-5;
        for dist in all_kinds() {
            for &c in &[0.3, 0.9, 1.4] {
                let up = dist.partial_expectation(c + h, &quad()).unwrap();
                let down = dist.partial_expectation(c - h, &quad()).unwrap();
                let slope = (up - down) / (2.0 * h);
                assert!((slope + dist.survival(c)).abs() < 1e-6, "{dist:?} c={c}");
            }
        }
    }

    #[test]
    fn non_finite_threshold_rejected() {
        let dist = DistributionSpec::Exponential { rate: 1.0 };
        assert!(matches!(
            dist.partial_expectation(f64::NAN, &quad()),
            Err(Error::NonFinite(_))
        ));
        assert!(dist.partial_expectation(f64::INFINITY, &quad()).is_err());
    }

    #[test]
    fn sample_means_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dist in all_kinds() {
            let n = 200_000;
            let mean: f64 = (0..n).map(|_| dist.sample(&mut rng)).sum::<f64>() / n as f64;
            assert!((mean - dist.mean()).abs() < 0.01, "{dist:?}: {mean}");
        }
        let far = DistributionSpec::TruncatedNormal { mean: -1.5, sd: 1.0 };
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| far.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - far.mean()).abs() < 0.01);
    }

    #[test]
    fn validation() {
        assert!(DistributionSpec::Exponential { rate: 0.0 }.validate(Role::Productivity).is_err());
        assert!(DistributionSpec::Uniform { lower: 1.0, upper: 1.0 }.validate(Role::Leisure).is_err());
        assert!(DistributionSpec::Lognormal { log_mean: 0.0, log_sd: -1.0 }
            .validate(Role::Productivity)
            .is_err());
        for dist in all_kinds() {
            dist.validate(Role::Productivity).unwrap();
        }
    }

    #[test]
    fn serde_tagged_form() {
        let dist: DistributionSpec<f64> =
            serde_json::from_str(r#"{"kind":"lognormal","log_mean":0.0,"log_sd":0.5}"#).unwrap();
        assert_eq!(dist, DistributionSpec::Lognormal { log_mean: 0.0, log_sd: 0.5 });
        let bad = serde_json::from_str::<DistributionSpec<f64>>(
            r#"{"kind":"exponential","rate":1.0,"shape":2.0}"#,
        );
        assert!(bad.is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cdf_monotone_and_pe_convex(c in -1.0f64..4.0, h in 0.01f64..0.5) {
                for dist in all_kinds() {
                    prop_assert!(dist.cdf(c) <= dist.cdf(c + h) + 1e-15);
                    let q = quad();
                    let a = dist.partial_expectation(c, &q).unwrap();
                    let b = dist.partial_expectation(c + h, &q).unwrap();
                    let e = dist.partial_expectation(c + 2.0 * h, &q).unwrap();
                    prop_assert!(b <= a + 1e-12);
                    prop_assert!(a + e - 2.0 * b >= -1e-9);
                }
            }
        }
    }
}
