use gauss_quad::GaussHermite;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::laws::{Affine, SectorLaw};
use super::utility::SectorUtilityPair;
use super::ObservationSample;
use crate::error::{Error, Result};
use crate::grid::linspace;
use crate::rng::{stream_rng, streams};

/// Structural family of the sector-1 cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFamily {
    PureRoy,
    QuasiLinear,
    Multiplicative,
    Quadratic,
    Isoelastic,
    /// Tabulated cost surface, bilinear between nodes.
    Custom,
}

/// Cost surface on a rectangular `(y, z)` lattice, `values[iz][iy]`; clamped outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = axis.partition_point(|v| *v <= x);
    let lo = hi - 1;
    (lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo]))
}

impl CostTable {
    pub fn validate(&self) -> Result<()> {
        let sorted = |a: &[f64]| !a.is_empty() && a.windows(2).all(|w| w[1] > w[0]);
        if !sorted(&self.y) || !sorted(&self.z) {
            return Err(Error::InvalidDgp(
                "cost table axes must be non-empty and strictly increasing".into(),
            ));
        }
        if self.values.len() != self.z.len() || self.values.iter().any(|c| c.len() != self.y.len())
        {
            return Err(Error::InvalidDgp(
                "cost table values do not match its axes".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, y: f64, z: f64) -> f64 {
        let (y0, y1, ty) = bracket(&self.y, y);
        let (z0, z1, tz) = bracket(&self.z, z);
        let col = |iz: usize| {
            let c = &self.values[iz];
            c[y0] + (c[y1] - c[y0]) * ty
        };
        let (a, b) = (col(z0), col(z1));
        a + (b - a) * tz
    }
}

/// Cost parameters; which ones are required depends on the family.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta1: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0_sq: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1_sq: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<CostTable>,
}

/// How the two potential outcomes are coupled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Gaussian copula on the normal scores with correlation `correlation`.
    #[default]
    Gaussian,
    /// `Y0 = Y1` drawn from the sector-1 law.
    Identical,
}

/// Joint law of `(Y0, Y1)` given `Z = z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub sector0: SectorLaw,
    pub sector1: SectorLaw,
    #[serde(default)]
    pub correlation: f64,
    #[serde(default)]
    pub coupling: Coupling,
}

impl OutcomeModel {
    pub fn independent(sector0: impl Into<SectorLaw>, sector1: impl Into<SectorLaw>) -> Self {
        Self {
            sector0: sector0.into(),
            sector1: sector1.into(),
            correlation: 0.0,
            coupling: Coupling::Gaussian,
        }
    }

    pub fn identical(law: impl Into<SectorLaw>) -> Self {
        let law = law.into();
        Self {
            sector0: law.clone(),
            sector1: law,
            correlation: 1.0,
            coupling: Coupling::Identical,
        }
    }

    pub fn with_correlation(mut self, correlation: f64) -> Self {
        self.correlation = correlation;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpParams {
    pub outcomes: OutcomeModel,
    #[serde(flatten)]
    pub cost: CostParams,
}

/// Timing of the sector choice relative to the outcome draw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Foresight {
    #[default]
    Perfect,
    /// Choice on conditional expectations given a signal carrying `signal_share` of the
    /// latent score variance.
    Imperfect { signal_share: f64 },
}

/// Marginal law of the instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZLaw {
    Uniform { low: f64, high: f64 },
    Discrete { values: Vec<f64> },
}

impl ZLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Uniform { low, high } if !(high > low) => Err(Error::InvalidDgp(
                "uniform instrument law needs high > low".into(),
            )),
            Self::Discrete { values } if values.is_empty() => Err(Error::InvalidDgp(
                "discrete instrument law has no support points".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Self::Discrete { values } => values[rng.random_range(0..values.len())],
        }
    }

    /// Points used to check model assumptions over the instrument support.
    pub fn check_points(&self) -> Vec<f64> {
        match self {
            Self::Uniform { low, high } => linspace(*low, *high, 11),
            Self::Discrete { values } => values.clone(),
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            Self::Uniform { low, high } => (*low, *high),
            Self::Discrete { values } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(*v), b.max(*v))
                }),
        }
    }
}

/// Synthetic data-generating process with an analytically known cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub family: CostFamily,
    pub params: DgpParams,
    #[serde(default)]
    pub foresight: Foresight,
    pub z_law: ZLaw,
    #[serde(default)]
    pub lower_support_bound: f64,
}

/// Cost function with its parameters unpacked.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    Zero,
    QuasiLinear {
        g0: Affine,
        g1: Affine,
    },
    Multiplicative {
        g0: Affine,
        g1: Affine,
    },
    Quadratic {
        eta0: Affine,
        eta1: Affine,
        f: Affine,
    },
    Isoelastic {
        rho: f64,
        sigma0_sq: Affine,
        sigma1_sq: Affine,
    },
    Table(CostTable),
}

impl CostModel {
    #[inline]
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::QuasiLinear { g0, g1 } => g0.at(z) - g1.at(z),
            Self::Multiplicative { g0, g1 } => y * (1.0 - g1.at(z) / g0.at(z)),
            Self::Quadratic { eta0, eta1, f } => (eta1.at(z) - eta0.at(z) * f.at(z)) * y * y,
            Self::Isoelastic {
                rho,
                sigma0_sq,
                sigma1_sq,
            } => (1.0 - ((sigma0_sq.at(z) - sigma1_sq.at(z)) * rho / 2.0).exp()) * y,
            Self::Table(t) => t.eval(y, z),
        }
    }

    /// `g(y) = y − C(y, z)`.
    #[inline]
    pub fn net(&self, y: f64, z: f64) -> f64 {
        y - self.eval(y, z)
    }
}

fn required<T: Clone>(value: &Option<T>, name: &str, family: CostFamily) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidDgp(format!("family {family:?} requires parameter `{name}`")))
}

impl DgpSpec {
    pub fn new(family: CostFamily, outcomes: OutcomeModel, cost: CostParams, z_law: ZLaw) -> Self {
        Self {
            family,
            params: DgpParams { outcomes, cost },
            foresight: Foresight::Perfect,
            z_law,
            lower_support_bound: 0.0,
        }
    }

    pub fn pure_roy(outcomes: OutcomeModel, z_law: ZLaw) -> Self {
        Self::new(CostFamily::PureRoy, outcomes, CostParams::default(), z_law)
    }

    pub fn quasi_linear(g0: Affine, g1: Affine, outcomes: OutcomeModel, z_law: ZLaw) -> Self {
        let cost = CostParams {
            g0: Some(g0),
            g1: Some(g1),
            ..CostParams::default()
        };
        Self::new(CostFamily::QuasiLinear, outcomes, cost, z_law)
    }

    pub fn multiplicative(g0: Affine, g1: Affine, outcomes: OutcomeModel, z_law: ZLaw) -> Self {
        let cost = CostParams {
            g0: Some(g0),
            g1: Some(g1),
            ..CostParams::default()
        };
        Self::new(CostFamily::Multiplicative, outcomes, cost, z_law)
    }

    pub fn quadratic(
        eta0: Affine,
        eta1: Affine,
        f: Affine,
        outcomes: OutcomeModel,
        z_law: ZLaw,
    ) -> Self {
        let cost = CostParams {
            eta0: Some(eta0),
            eta1: Some(eta1),
            f: Some(f),
            ..CostParams::default()
        };
        Self::new(CostFamily::Quadratic, outcomes, cost, z_law)
    }

    pub fn isoelastic(
        rho: f64,
        sigma0_sq: Affine,
        sigma1_sq: Affine,
        outcomes: OutcomeModel,
        z_law: ZLaw,
    ) -> Self {
        let cost = CostParams {
            rho: Some(rho),
            sigma0_sq: Some(sigma0_sq),
            sigma1_sq: Some(sigma1_sq),
            ..CostParams::default()
        };
        Self::new(CostFamily::Isoelastic, outcomes, cost, z_law)
    }

    pub fn custom(table: CostTable, outcomes: OutcomeModel, z_law: ZLaw) -> Self {
        let cost = CostParams {
            table: Some(table),
            ..CostParams::default()
        };
        Self::new(CostFamily::Custom, outcomes, cost, z_law)
    }

    pub fn with_foresight(mut self, foresight: Foresight) -> Self {
        self.foresight = foresight;
        self
    }

    pub fn with_lower_support_bound(mut self, bound: f64) -> Self {
        self.lower_support_bound = bound;
        self
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        let p = &self.params.cost;
        let fam = self.family;
        Ok(match fam {
            CostFamily::PureRoy => CostModel::Zero,
            CostFamily::QuasiLinear => CostModel::QuasiLinear {
                g0: required(&p.g0, "g0", fam)?,
                g1: required(&p.g1, "g1", fam)?,
            },
            CostFamily::Multiplicative => CostModel::Multiplicative {
                g0: required(&p.g0, "g0", fam)?,
                g1: required(&p.g1, "g1", fam)?,
            },
            CostFamily::Quadratic => CostModel::Quadratic {
                eta0: required(&p.eta0, "eta0", fam)?,
                eta1: required(&p.eta1, "eta1", fam)?,
                f: required(&p.f, "f", fam)?,
            },
            CostFamily::Isoelastic => CostModel::Isoelastic {
                rho: required(&p.rho, "rho", fam)?,
                sigma0_sq: required(&p.sigma0_sq, "sigma0_sq", fam)?,
                sigma1_sq: required(&p.sigma1_sq, "sigma1_sq", fam)?,
            },
            CostFamily::Custom => {
                let table = required(&p.table, "table", fam)?;
                table.validate()?;
                CostModel::Table(table)
            }
        })
    }

    /// Utility pair inducing this family's cost through `y − u0⁻¹(u1(y, z), z)`.
    ///
    /// Quasi-linear and multiplicative families use their own utilities; the others use the
    /// income-equivalent pair `u0 = y`, `u1 = y − C(y, z)`.
    pub fn utility_pair(&self) -> Result<SectorUtilityPair> {
        Ok(match self.cost_model()? {
            CostModel::Zero => SectorUtilityPair::new(|y, _| y, |y, _| y),
            CostModel::QuasiLinear { g0, g1 } => {
                SectorUtilityPair::new(move |y, z| y + g0.at(z), move |y, z| y + g1.at(z))
            }
            CostModel::Multiplicative { g0, g1 } => {
                SectorUtilityPair::new(move |y, z| g0.at(z) * y, move |y, z| g1.at(z) * y)
            }
            other => SectorUtilityPair::new(|y, _| y, move |y, z| other.net(y, z)),
        })
    }

    pub fn resolve(&self) -> Result<ResolvedDgp> {
        ResolvedDgp::new(self)
    }
}

/// Analytic cost of a built-in family at `(y, z)`.
pub fn true_cost(dgp: &DgpSpec, y: f64, z: f64) -> Result<f64> {
    let c = dgp.cost_model()?.eval(y, z);
    if c < -1e-12 {
        return Err(Error::InvalidDgp(format!(
            "cost {c} at (y={y}, z={z}) is negative"
        )));
    }
    Ok(c)
}

/// Validated DGP with the cost unpacked and support guards applied.
#[derive(Debug, Clone)]
pub struct ResolvedDgp {
    pub spec: DgpSpec,
    pub sector0: SectorLaw,
    pub sector1: SectorLaw,
    pub cost: CostModel,
}

const CHECK_LEVELS: usize = 41;

impl ResolvedDgp {
    fn new(spec: &DgpSpec) -> Result<Self> {
        spec.z_law.validate()?;
        let cost = spec.cost_model()?;
        let outcomes = &spec.params.outcomes;
        if !(-1.0..=1.0).contains(&outcomes.correlation) {
            return Err(Error::InvalidDgp("correlation must lie in [-1, 1]".into()));
        }
        if outcomes.coupling == Coupling::Gaussian && outcomes.correlation.abs() >= 1.0 {
            return Err(Error::InvalidDgp(
                "use the identical coupling for perfectly correlated outcomes".into(),
            ));
        }
        if let Foresight::Imperfect { signal_share } = spec.foresight {
            if !(0.0..=1.0).contains(&signal_share) {
                return Err(Error::InvalidDgp("signal_share must lie in [0, 1]".into()));
            }
        }
        let mut sector0 = outcomes.sector0.clone();
        let mut sector1 = outcomes.sector1.clone();
        if let CostModel::Quadratic { eta0, eta1, .. } = &cost {
            // Quadratic utility is increasing only below 1/(2η); truncate both laws there.
            let (lo, hi) = spec.z_law.range();
            let cap = [lo, hi]
                .iter()
                .flat_map(|&z| [eta0.at(z), eta1.at(z)])
                .filter(|eta| *eta > 0.0)
                .map(|eta| 1.0 / (2.0 * eta))
                .fold(f64::INFINITY, f64::min);
            if cap.is_finite() {
                for law in [&mut sector0, &mut sector1] {
                    let current = law.upper_truncation.unwrap_or(f64::INFINITY);
                    law.upper_truncation = Some(current.min(cap));
                }
            }
        }
        let resolved = Self {
            spec: spec.clone(),
            sector0,
            sector1,
            cost,
        };
        resolved.check_assumptions()?;
        Ok(resolved)
    }

    fn check_assumptions(&self) -> Result<()> {
        let b = self.spec.lower_support_bound;
        for z in self.spec.z_law.check_points() {
            for law in [&self.sector0, &self.sector1] {
                law.validate_at(z)?;
                if law.support_min(z) < b {
                    return Err(Error::InvalidDgp(format!(
                        "outcome support starts at {} below the bound {b} at z={z}",
                        law.support_min(z)
                    )));
                }
            }
            let ys: Vec<f64> = (0..CHECK_LEVELS)
                .map(|k| 0.001 + 0.998 * k as f64 / (CHECK_LEVELS - 1) as f64)
                .flat_map(|u| [self.sector0.quantile(u, z), self.sector1.quantile(u, z)])
                .collect();
            let mut ys = ys;
            ys.sort_by(|a, b| a.total_cmp(b));
            ys.dedup();
            let mut prev: Option<(f64, f64)> = None;
            for &y in &ys {
                let c = self.cost.eval(y, z);
                if c < -1e-12 {
                    return Err(Error::InvalidDgp(format!(
                        "cost {c} at (y={y}, z={z}) is negative"
                    )));
                }
                let net = y - c;
                if let Some((py, pnet)) = prev {
                    if !(net > pnet) {
                        return Err(Error::InvalidDgp(format!(
                            "y - C(y, z) is not increasing between y={py} and y={y} at z={z}"
                        )));
                    }
                }
                prev = Some((y, net));
            }
        }
        Ok(())
    }

    pub fn coupling(&self) -> Coupling {
        self.spec.params.outcomes.coupling
    }

    pub fn correlation(&self) -> f64 {
        self.spec.params.outcomes.correlation
    }

    pub fn true_cost(&self, y: f64, z: f64) -> f64 {
        self.cost.eval(y, z)
    }

    /// Inverse of `y ↦ y − C(y, z)` on `[lo, hi]` by bisection; clamps outside the range.
    pub fn net_inverse(&self, target: f64, z: f64, lo: f64, hi: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        if self.cost.net(a, z) >= target {
            return a;
        }
        if self.cost.net(b, z) <= target {
            return b;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.cost.net(m, z) < target {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Draws `(Y0, Y1)` given `z` together with the latent scores.
    fn draw_latent<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let x1: f64 = rng.sample(StandardNormal);
        match self.coupling() {
            Coupling::Identical => (x1, x1),
            Coupling::Gaussian => {
                let rho = self.correlation();
                let e: f64 = rng.sample(StandardNormal);
                (rho * x1 + (1.0 - rho * rho).sqrt() * e, x1)
            }
        }
    }

    pub fn sample_with(&self, n: usize, seed: u64, z_law: &ZLaw) -> Result<ObservationSample<f64>> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        z_law.validate()?;
        let mut rng = stream_rng(seed, streams::SAMPLE);
        let mut ys = Vec::with_capacity(n);
        let mut ds = Vec::with_capacity(n);
        let mut zs = Vec::with_capacity(n);
        let hermite = match self.spec.foresight {
            Foresight::Imperfect { signal_share } if signal_share < 1.0 => {
                Some(GaussHermite::new(40).expect("degree >= 2"))
            }
            _ => None,
        };
        for _ in 0..n {
            let z = z_law.draw(&mut rng);
            let (x0, x1) = self.draw_latent(&mut rng);
            let (d, y) = match (self.spec.foresight, &hermite) {
                (Foresight::Imperfect { signal_share }, Some(gh)) => {
                    self.choose_imperfect(&mut rng, z, (x0, x1), signal_share, gh)
                }
                _ => self.choose_perfect(z, x0, x1),
            };
            ys.push(y);
            ds.push(d);
            zs.push(z);
        }
        ObservationSample::new(ys, ds, zs, self.spec.lower_support_bound)
    }

    fn choose_perfect(&self, z: f64, x0: f64, x1: f64) -> (bool, f64) {
        let y1 = self.sector1.at_score(x1, z);
        let y0 = match self.coupling() {
            Coupling::Identical => y1,
            Coupling::Gaussian => self.sector0.at_score(x0, z),
        };
        // ties go to sector 1
        let d = y1 - self.cost.eval(y1, z) >= y0;
        (d, if d { y1 } else { y0 })
    }

    /// Scores are `√λ·s + √(1−λ)·e`; `(x0, x1)` drawn above are used as the signals `s`.
    fn choose_imperfect<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        z: f64,
        signal: (f64, f64),
        share: f64,
        gh: &GaussHermite,
    ) -> (bool, f64) {
        let (a, b) = (share.sqrt(), (1.0 - share).sqrt());
        let (noise0, noise1) = self.draw_latent(rng);
        let identical = self.coupling() == Coupling::Identical;
        let x1 = a * signal.1 + b * noise1;
        let x0 = if identical {
            x1
        } else {
            a * signal.0 + b * noise0
        };
        let y1 = self.sector1.at_score(x1, z);
        let y0 = if identical {
            y1
        } else {
            self.sector0.at_score(x0, z)
        };
        let expect = |f: &dyn Fn(f64) -> f64| {
            gh.integrate(|t| f(std::f64::consts::SQRT_2 * t)) / std::f64::consts::PI.sqrt()
        };
        let s0 = if identical { signal.1 } else { signal.0 };
        let e1 = expect(&|e| {
            let v = self.sector1.at_score(a * signal.1 + b * e, z);
            v - self.cost.eval(v, z)
        });
        let e0 = expect(&|e| {
            if identical {
                self.sector1.at_score(a * s0 + b * e, z)
            } else {
                self.sector0.at_score(a * s0 + b * e, z)
            }
        });
        let d = e1 >= e0;
        (d, if d { y1 } else { y0 })
    }
}

/// Sample `n` records from the DGP with its own instrument law.
pub fn generate_sample(dgp: &DgpSpec, n: usize, seed: u64) -> Result<ObservationSample<f64>> {
    dgp.resolve()?.sample_with(n, seed, &dgp.z_law)
}

/// Sample `n` records drawing the instrument from `z_law` instead of the DGP's own law.
pub fn generate_sample_with(
    dgp: &DgpSpec,
    n: usize,
    seed: u64,
    z_law: &ZLaw,
) -> Result<ObservationSample<f64>> {
    dgp.resolve()?.sample_with(n, seed, z_law)
}

#[cfg(test)]
mod tests {
    use super::super::laws::MarginalLaw;
    use super::*;

    fn lognormal_outcomes() -> OutcomeModel {
        OutcomeModel::independent(
            MarginalLaw::lognormal(Affine::new(1.0, 0.5), Affine::constant(0.5)),
            MarginalLaw::lognormal(Affine::new(1.2, 0.8), Affine::constant(0.6)),
        )
    }

    fn unit_z() -> ZLaw {
        ZLaw::Uniform {
            low: 0.0,
            high: 1.0,
        }
    }

    #[test]
    fn isoelastic_cost_value() {
        let dgp = DgpSpec::isoelastic(
            2.0,
            Affine::constant(0.1),
            Affine::constant(0.3),
            lognormal_outcomes(),
            unit_z(),
        );
        let c = true_cost(&dgp, 10.0, 0.5).unwrap();
        assert!((c - 10.0 * (1.0 - (-0.2f64).exp())).abs() < 1e-12);
        assert!((c - 1.8127).abs() < 1e-4);
    }

    #[test]
    fn quadratic_cost_value() {
        let dgp = DgpSpec::quadratic(
            Affine::constant(0.01),
            Affine::constant(0.02),
            Affine::constant(1.0),
            lognormal_outcomes(),
            unit_z(),
        );
        assert!((true_cost(&dgp, 5.0, 0.0).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn pure_roy_costs_nothing() {
        let dgp = DgpSpec::pure_roy(lognormal_outcomes(), unit_z());
        assert_eq!(true_cost(&dgp, 3.0, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn negative_cost_is_invalid() {
        let dgp = DgpSpec::quasi_linear(
            Affine::constant(1.0),
            Affine::constant(2.0),
            lognormal_outcomes(),
            unit_z(),
        );
        assert!(matches!(
            true_cost(&dgp, 1.0, 0.0),
            Err(Error::InvalidDgp(_))
        ));
        assert!(dgp.resolve().is_err());
    }

    #[test]
    fn missing_parameter_is_reported() {
        let mut dgp = DgpSpec::quasi_linear(
            Affine::constant(2.0),
            Affine::constant(1.0),
            lognormal_outcomes(),
            unit_z(),
        );
        dgp.params.cost.g1 = None;
        let err = dgp.cost_model().unwrap_err().to_string();
        assert!(err.contains("g1"), "{err}");
    }

    #[test]
    fn quadratic_laws_are_truncated_below_the_guard() {
        let dgp = DgpSpec::quadratic(
            Affine::constant(0.01),
            Affine::constant(0.02),
            Affine::constant(1.0),
            lognormal_outcomes(),
            unit_z(),
        );
        let resolved = dgp.resolve().unwrap();
        assert_eq!(resolved.sector1.upper_truncation, Some(25.0));
        let s = resolved.sample_with(2000, 4, &dgp.z_law).unwrap();
        assert!(s.y().iter().all(|y| *y <= 25.0));
    }

    #[test]
    fn identical_pure_roy_always_picks_sector_one() {
        let dgp = DgpSpec::pure_roy(
            OutcomeModel::identical(MarginalLaw::uniform(
                Affine::constant(0.0),
                Affine::new(0.8, 0.2),
            )),
            unit_z(),
        );
        let s = generate_sample(&dgp, 500, 1).unwrap();
        assert!(s.d().iter().all(|d| *d));
    }

    #[test]
    fn json_round_trip() {
        let dgp = DgpSpec::quasi_linear(
            Affine::constant(3.0),
            Affine::new(0.0, 1.0),
            lognormal_outcomes().with_correlation(0.3),
            unit_z(),
        )
        .with_foresight(Foresight::Imperfect { signal_share: 0.6 });
        let text = serde_json::to_string(&dgp).unwrap();
        for key in [
            "family",
            "params",
            "foresight",
            "z_law",
            "lower_support_bound",
        ] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
        let back: DgpSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, dgp);
    }

    #[test]
    fn imperfect_foresight_with_full_signal_matches_perfect() {
        let base = DgpSpec::quasi_linear(
            Affine::constant(2.0),
            Affine::constant(1.0),
            lognormal_outcomes(),
            unit_z(),
        );
        let perfect = generate_sample(&base, 300, 9).unwrap();
        let full = generate_sample(
            &base
                .clone()
                .with_foresight(Foresight::Imperfect { signal_share: 1.0 }),
            300,
            9,
        )
        .unwrap();
        assert_eq!(perfect, full);
    }
}
