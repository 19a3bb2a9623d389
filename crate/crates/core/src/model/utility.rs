use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type UtilityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Sector utilities `u_d(y, z)`, each increasing in income `y`.
#[derive(Clone)]
pub struct SectorUtilityPair {
    u0: UtilityFn,
    u1: UtilityFn,
}

impl fmt::Debug for SectorUtilityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SectorUtilityPair { .. }")
    }
}

impl SectorUtilityPair {
    pub fn new(
        u0: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        u1: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            u0: Arc::new(u0),
            u1: Arc::new(u1),
        }
    }

    pub fn u0(&self, y: f64, z: f64) -> f64 {
        (self.u0)(y, z)
    }

    pub fn u1(&self, y: f64, z: f64) -> f64 {
        (self.u1)(y, z)
    }

    /// Compose both utilities with the same increasing map; the induced cost is unchanged.
    pub fn compose(&self, outer: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let outer = Arc::new(outer);
        let (u0, u1) = (self.u0.clone(), self.u1.clone());
        let o0 = outer.clone();
        Self::new(move |y, z| o0(u0(y, z)), move |y, z| outer(u1(y, z)))
    }

    /// Checks `y ↦ u_d(y, z)` is strictly increasing on a set of sample points.
    pub fn check_monotone(&self, ys: &[f64], z: f64) -> Result<()> {
        for w in ys.windows(2) {
            if !(self.u0(w[1], z) > self.u0(w[0], z)) || !(self.u1(w[1], z) > self.u1(w[0], z)) {
                return Err(Error::InvalidUtility {
                    z,
                    lo: w[0],
                    hi: w[1],
                });
            }
        }
        Ok(())
    }
}

const ROOT_TOL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 200;

/// Income in sector 0 that yields the same utility: `u0⁻¹(target, z)`, by bracketed bisection.
pub fn invert_u0(pair: &SectorUtilityPair, target: f64, guess: f64, z: f64) -> Result<f64> {
    let f = |x: f64| pair.u0(x, z) - target;
    let mut width = guess.abs().max(1.0);
    let (mut lo, mut hi) = (guess - width, guess + width);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    let mut expansions = 0;
    while !(flo <= 0.0 && fhi >= 0.0) {
        if flo > fhi {
            return Err(Error::InvalidUtility { z, lo, hi });
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS || !width.is_finite() {
            return Err(Error::Domain(format!(
                "cannot bracket u0(., {z}) = {target} starting from {guess}"
            )));
        }
        width *= 2.0;
        if flo > 0.0 {
            lo = guess - width;
            flo = f(lo);
        }
        if fhi < 0.0 {
            hi = guess + width;
            fhi = f(hi);
        }
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm < flo || fm > fhi {
            return Err(Error::InvalidUtility { z, lo, hi });
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Compensating income differential `C(y, z) = y − u0⁻¹(u1(y, z), z)`.
pub fn cost_from_utilities(pair: &SectorUtilityPair, y: f64, z: f64) -> Result<f64> {
    let target = pair.u1(y, z);
    Ok(y - invert_u0(pair, target, y, z)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quasi_linear_cost_is_utility_gap() {
        let pair = SectorUtilityPair::new(|y, _| y + 2.0, |y, _| y + 1.0);
        for &(y, z) in &[(0.5, 0.1), (10.0, 0.9), (123.0, -3.0)] {
            let c = cost_from_utilities(&pair, y, z).unwrap();
            assert!((c - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_utilities_give_zero() {
        let pair = SectorUtilityPair::new(|y, z| y * y * y + z, |y, z| y * y * y + z);
        assert!(cost_from_utilities(&pair, 4.0, 0.3).unwrap().abs() < 1e-9);
    }

    #[test]
    fn multiplicative_cost() {
        let pair = SectorUtilityPair::new(|y, _| 2.0 * y, |y, _| y);
        let c = cost_from_utilities(&pair, 10.0, 0.0).unwrap();
        assert!((c - 5.0).abs() < 1e-9);
    }

    #[test]
    fn decreasing_u0_is_rejected() {
        let pair = SectorUtilityPair::new(|y, _| -y, |y, _| y);
        assert!(matches!(
            cost_from_utilities(&pair, 1.0, 0.0),
            Err(Error::InvalidUtility { .. })
        ));
    }

    #[test]
    fn bounded_u0_cannot_be_bracketed() {
        let pair = SectorUtilityPair::new(|y: f64, _| y.tanh(), |_, _| 5.0);
        assert!(matches!(
            cost_from_utilities(&pair, 1.0, 0.0),
            Err(Error::Domain(_))
        ));
    }
}
