//! Ready-made DGPs for demonstrations, validation runs and tests.

use rand::Rng;

use crate::error::Result;
use crate::grid::{linspace, EvaluationGrid};
use crate::model::{Affine, CostFamily, DgpSpec, MarginalLaw, OutcomeModel, ResolvedDgp, ZLaw};

fn unit_z() -> ZLaw {
    ZLaw::Uniform {
        low: 0.0,
        high: 1.0,
    }
}

/// `Y0 = Y1 ~ Uniform[0, 0.8 + 0.2 z]`, zero cost, `Z ~ Uniform[0, 1]`.
pub fn pure_roy_uniform() -> DgpSpec {
    let law = MarginalLaw::uniform(Affine::constant(0.0), Affine::new(0.8, 0.2));
    DgpSpec::pure_roy(OutcomeModel::identical(law), unit_z())
}

/// Lognormal incomes with locations increasing in `z` and a constant cost `c`.
pub fn quasi_linear_lognormal(c: f64) -> DgpSpec {
    let outcomes = OutcomeModel::independent(
        MarginalLaw::lognormal(Affine::new(1.0, 0.3), Affine::constant(0.4)),
        MarginalLaw::lognormal(Affine::new(1.3, 0.4), Affine::constant(0.5)),
    )
    .with_correlation(0.3);
    DgpSpec::quasi_linear(
        Affine::constant(c + 1.0),
        Affine::constant(1.0),
        outcomes,
        unit_z(),
    )
}

/// Isoelastic utilities whose cost `(1 − e^{−0.3(1 − z)})·y` falls in `z`, with the net value of
/// sector 1 and the sector-0 income invariant in `z`; the lower bound is positive on most of the
/// grid.
pub fn isoelastic_declining_cost() -> DgpSpec {
    let outcomes = OutcomeModel::independent(
        MarginalLaw::lognormal(Affine::constant(1.0), Affine::constant(0.4)),
        MarginalLaw::lognormal(Affine::new(1.5, -0.3), Affine::constant(0.5)),
    )
    .with_correlation(0.2);
    DgpSpec::isoelastic(
        2.0,
        Affine::constant(0.1),
        Affine::new(0.4, -0.3),
        outcomes,
        unit_z(),
    )
}

/// Random DGP of a built-in family satisfying the stochastic-monotonicity assumption.
///
/// The laws of `Y0` and of the net value `Y1 − C(Y1, z)` are non-decreasing in `z`, while the
/// cost falls in `z` and the sector-1 income itself may drift downwards, so that the observed
/// income need not be monotone and the lower bound is informative.
pub fn random_family_dgp<R: Rng + ?Sized>(family: CostFamily, rng: &mut R) -> DgpSpec {
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let sector0 = MarginalLaw::lognormal(
        Affine::new(u(0.5, 1.5), u(0.0, 0.4)),
        Affine::constant(u(0.3, 0.6)),
    );
    let rho = u(-0.6, 0.6);
    let net_location = Affine::new(u(0.5, 1.5), u(0.0, 0.1));
    let scale1 = Affine::constant(u(0.3, 0.6));
    let lognormal_pair = |location1: Affine| {
        OutcomeModel::independent(sector0.clone(), MarginalLaw::lognormal(location1, scale1))
            .with_correlation(rho)
    };
    match family {
        CostFamily::PureRoy => DgpSpec::pure_roy(lognormal_pair(net_location), unit_z()),
        CostFamily::QuasiLinear => {
            // uniform laws so the additive cost shift can be offset exactly
            let c1 = u(0.0, 1.5);
            let c0 = c1 + u(0.2, 1.5);
            let drift = u(-c1, 0.3);
            let low1 = c1 + u(0.0, 2.0);
            let y0 = MarginalLaw::uniform(
                Affine::new(u(0.0, 1.0), u(0.0, 0.5)),
                Affine::new(u(3.0, 5.0), u(0.0, 0.5)),
            );
            let y1 = MarginalLaw::uniform(
                Affine::new(low1, drift),
                Affine::new(low1 + u(2.0, 4.0), drift),
            );
            let g1 = Affine::new(u(-1.0, 1.0), u(-0.5, 0.5));
            let g0 = Affine::new(g1.intercept + c0, g1.slope - c1);
            let outcomes = OutcomeModel::independent(y0, y1).with_correlation(rho);
            DgpSpec::quasi_linear(g0, g1, outcomes, unit_z())
        }
        CostFamily::Multiplicative => {
            // C = y (1 − r(z)), r = g1/g0 increasing; ln r rises by at most s/(a + s) per unit z
            let g0 = Affine::constant(u(1.0, 3.0));
            let a = u(0.4, 0.9);
            let s = u(0.0, 1.0 - a);
            let g1 = Affine::new(a * g0.intercept, s * g0.intercept);
            let location1 = Affine::new(
                net_location.intercept - a.ln(),
                net_location.slope - s / (a + s),
            );
            DgpSpec::multiplicative(g0, g1, lognormal_pair(location1), unit_z())
        }
        CostFamily::Quadratic => {
            let eta0 = Affine::constant(u(0.002, 0.01));
            let f = Affine::constant(u(0.0, 1.0));
            let k = u(0.002, 0.015);
            let eta1 = Affine::new(eta0.intercept * f.intercept + k, -u(0.0, 0.5) * k);
            let mut dgp = DgpSpec::quadratic(eta0, eta1, f, lognormal_pair(net_location), unit_z());
            // keep the induced net income increasing below the truncation point
            dgp.params.outcomes.sector0.upper_truncation = Some(30.0);
            dgp.params.outcomes.sector1.upper_truncation = Some(30.0);
            dgp
        }
        CostFamily::Isoelastic => {
            // ln(1 − C/y) = −ρ (σ1² − σ0²) / 2 is affine in z
            let rho_u = u(0.5, 3.0);
            let gap0 = u(0.05, 0.4);
            let gap1 = u(0.0, gap0);
            let s0 = Affine::constant(u(0.05, 0.3));
            let s1 = Affine::new(s0.intercept + gap0, -gap1);
            let location1 = Affine::new(
                net_location.intercept + rho_u * gap0 / 2.0,
                net_location.slope - rho_u * gap1 / 2.0,
            );
            DgpSpec::isoelastic(rho_u, s0, s1, lognormal_pair(location1), unit_z())
        }
        CostFamily::Custom => {
            // C = level (1 − 0.2 z) y tabulated on a coarse lattice
            let level = u(0.1, 0.4);
            let y = linspace(0.0, 200.0, 5);
            let z = vec![0.0, 1.0];
            let values = vec![
                y.iter().map(|v| level * v).collect(),
                y.iter().map(|v| 0.8 * level * v).collect(),
            ];
            let location1 = Affine::new(
                net_location.intercept - (1.0 - level).ln(),
                net_location.slope - 0.2 * level / (1.0 - level),
            );
            let table = crate::model::CostTable { y, z, values };
            DgpSpec::custom(table, lognormal_pair(location1), unit_z())
        }
    }
}

/// Income grid spanning the central `[lo, hi]` quantile range of both sectors over the instrument
/// support, `ny` points, and `nz` evenly spaced instrument points.
pub fn population_grid(
    dgp: &DgpSpec,
    ny: usize,
    nz: usize,
    lo: f64,
    hi: f64,
) -> Result<EvaluationGrid<f64>> {
    let resolved: ResolvedDgp = dgp.resolve()?;
    let (zl, zh) = dgp.z_law.range();
    let zs = linspace(zl, zh, nz);
    let mut a = f64::INFINITY;
    let mut b = f64::NEG_INFINITY;
    for &z in &zs {
        for law in [&resolved.sector0, &resolved.sector1] {
            a = a.min(law.quantile(lo, z));
            b = b.max(law.quantile(hi, z));
        }
    }
    EvaluationGrid::new(linspace(a, b, ny), zs)
}
