//! Marginal outcome laws indexed by the instrument, written through their normal scores
//! so that a Gaussian copula couples the two sectors.

use serde::{Deserialize, Deserializer, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal cdf.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile; ±∞ at the endpoints.
#[inline]
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Affine function of the instrument, `intercept + slope * z`.
///
/// Deserializes from a bare number (constant), a `[intercept, slope]` pair or an object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Affine {
    pub intercept: f64,
    pub slope: f64,
}

impl Affine {
    pub const fn constant(value: f64) -> Self {
        Self {
            intercept: value,
            slope: 0.0,
        }
    }

    pub const fn new(intercept: f64, slope: f64) -> Self {
        Self { intercept, slope }
    }

    #[inline]
    pub fn at(&self, z: f64) -> f64 {
        self.intercept + self.slope * z
    }
}

impl<'de> Deserialize<'de> for Affine {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Constant(f64),
            Pair([f64; 2]),
            Object {
                intercept: f64,
                #[serde(default)]
                slope: f64,
            },
        }
        Ok(match Repr::deserialize(deserializer)? {
            Repr::Constant(v) => Affine::constant(v),
            Repr::Pair([a, b]) => Affine::new(a, b),
            Repr::Object { intercept, slope } => Affine::new(intercept, slope),
        })
    }
}

/// Parametric family of one sector's potential outcome given `Z = z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MarginalLaw {
    /// `exp(N(location(z), scale(z)^2))`
    Lognormal { location: Affine, scale: Affine },
    /// `Uniform[low(z), high(z)]`
    Uniform { low: Affine, high: Affine },
}

/// A sector's outcome law with optional truncation from above (conditioning on `Y <= cap`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorLaw {
    #[serde(flatten)]
    pub law: MarginalLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_truncation: Option<f64>,
}

impl From<MarginalLaw> for SectorLaw {
    fn from(law: MarginalLaw) -> Self {
        Self {
            law,
            upper_truncation: None,
        }
    }
}

impl MarginalLaw {
    pub fn lognormal(location: Affine, scale: Affine) -> Self {
        Self::Lognormal { location, scale }
    }

    pub fn uniform(low: Affine, high: Affine) -> Self {
        Self::Uniform { low, high }
    }

    pub fn validate_at(&self, z: f64) -> Result<()> {
        match self {
            Self::Lognormal { scale, .. } if !(scale.at(z) > 0.0) => {
                Err(Error::InvalidDgp(format!(
                    "lognormal scale must be positive, got {} at z={z}",
                    scale.at(z)
                )))
            }
            Self::Uniform { low, high } if !(high.at(z) > low.at(z)) => Err(Error::InvalidDgp(
                format!("uniform law needs high > low at z={z}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, t: f64, z: f64) -> f64 {
        match self {
            Self::Lognormal { location, scale } => {
                if t <= 0.0 {
                    0.0
                } else {
                    norm_cdf((t.ln() - location.at(z)) / scale.at(z))
                }
            }
            Self::Uniform { low, high } => {
                let (lo, hi) = (low.at(z), high.at(z));
                ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
            }
        }
    }

    pub fn quantile(&self, u: f64, z: f64) -> f64 {
        match self {
            Self::Lognormal { location, scale } => {
                (location.at(z) + scale.at(z) * norm_quantile(u)).exp()
            }
            Self::Uniform { low, high } => {
                let (lo, hi) = (low.at(z), high.at(z));
                lo + (hi - lo) * u.clamp(0.0, 1.0)
            }
        }
    }

    /// Normal score `Φ⁻¹(F(t|z))`.
    pub fn score(&self, t: f64, z: f64) -> f64 {
        match self {
            Self::Lognormal { location, scale } => {
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (t.ln() - location.at(z)) / scale.at(z)
                }
            }
            Self::Uniform { .. } => norm_quantile(self.cdf(t, z)),
        }
    }

    /// Outcome attached to normal score `x`, i.e. `F⁻¹(Φ(x)|z)`.
    pub fn at_score(&self, x: f64, z: f64) -> f64 {
        match self {
            Self::Lognormal { location, scale } => (location.at(z) + scale.at(z) * x).exp(),
            Self::Uniform { .. } => self.quantile(norm_cdf(x), z),
        }
    }

    /// Smallest value of the support at `z`.
    pub fn support_min(&self, z: f64) -> f64 {
        match self {
            Self::Lognormal { .. } => 0.0,
            Self::Uniform { low, .. } => low.at(z),
        }
    }
}

impl SectorLaw {
    fn mass_below_cap(&self, z: f64) -> f64 {
        self.upper_truncation
            .map_or(1.0, |cap| self.law.cdf(cap, z))
    }

    pub fn validate_at(&self, z: f64) -> Result<()> {
        self.law.validate_at(z)?;
        if let Some(cap) = self.upper_truncation {
            if !(self.law.cdf(cap, z) > 0.0) {
                return Err(Error::InvalidDgp(format!(
                    "truncation point {cap} leaves no mass at z={z}"
                )));
            }
        }
        Ok(())
    }

    pub fn cdf(&self, t: f64, z: f64) -> f64 {
        match self.upper_truncation {
            None => self.law.cdf(t, z),
            Some(cap) => {
                if t >= cap {
                    1.0
                } else {
                    self.law.cdf(t, z) / self.mass_below_cap(z)
                }
            }
        }
    }

    pub fn quantile(&self, u: f64, z: f64) -> f64 {
        match self.upper_truncation {
            None => self.law.quantile(u, z),
            Some(cap) => self.law.quantile(u * self.mass_below_cap(z), z).min(cap),
        }
    }

    pub fn score(&self, t: f64, z: f64) -> f64 {
        match self.upper_truncation {
            None => self.law.score(t, z),
            Some(_) => norm_quantile(self.cdf(t, z)),
        }
    }

    pub fn at_score(&self, x: f64, z: f64) -> f64 {
        match self.upper_truncation {
            None => self.law.at_score(x, z),
            Some(_) => self.quantile(norm_cdf(x), z),
        }
    }

    pub fn support_min(&self, z: f64) -> f64 {
        self.law.support_min(z)
    }

    /// Upper end of the support, `+∞` for unbounded laws.
    pub fn support_max(&self, z: f64) -> f64 {
        let natural = match &self.law {
            MarginalLaw::Lognormal { .. } => f64::INFINITY,
            MarginalLaw::Uniform { high, .. } => high.at(z),
        };
        self.upper_truncation
            .map_or(natural, |cap| cap.min(natural))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &x in &[-6.0, -2.5, -0.3, 0.0, 0.7, 3.1, 5.5] {
            assert!((norm_quantile(norm_cdf(x)) - x).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn affine_accepts_three_json_shapes() {
        let a: Affine = serde_json::from_str("2.5").unwrap();
        assert_eq!(a, Affine::constant(2.5));
        let b: Affine = serde_json::from_str("[1.0, -0.5]").unwrap();
        assert_eq!(b, Affine::new(1.0, -0.5));
        let c: Affine = serde_json::from_str(r#"{"intercept": 3}"#).unwrap();
        assert_eq!(c, Affine::constant(3.0));
    }

    #[test]
    fn truncated_law_is_a_conditional_law() {
        let law = SectorLaw {
            law: MarginalLaw::lognormal(Affine::constant(0.0), Affine::constant(1.0)),
            upper_truncation: Some(2.0),
        };
        assert_eq!(law.cdf(2.0, 0.0), 1.0);
        let expected = norm_cdf(1.0f64.ln()) / norm_cdf(2.0f64.ln());
        assert!((law.cdf(1.0, 0.0) - expected).abs() < 1e-14);
        let u = 0.37;
        assert!((law.cdf(law.quantile(u, 0.0), 0.0) - u).abs() < 1e-12);
        assert!(law.at_score(5.0, 0.0) <= 2.0);
    }

    #[test]
    fn far_truncation_keeps_the_top_quantile_finite() {
        let law = SectorLaw {
            law: MarginalLaw::lognormal(Affine::constant(0.0), Affine::constant(0.5)),
            upper_truncation: Some(1e3),
        };
        assert_eq!(law.quantile(1.0, 0.0), 1e3);
        assert_eq!(law.at_score(8.5, 0.0), 1e3);
    }

    #[test]
    fn uniform_scores_round_trip() {
        let law = MarginalLaw::uniform(Affine::constant(0.0), Affine::new(0.8, 0.2));
        let z = 0.5;
        for &t in &[0.05, 0.3, 0.85] {
            let x = law.score(t, z);
            assert!((law.at_score(x, z) - t).abs() < 1e-10);
        }
    }
}
