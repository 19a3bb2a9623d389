//! Population-limit conditional distribution tables of synthetic DGPs, by quadrature over the
//! normal score of the sector-1 outcome.

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{Coupling, DgpSpec, Foresight, ResolvedDgp};
use super::laws::{norm_cdf, norm_pdf};
use super::ObservationSample;
use crate::error::{Error, Result};
use crate::grid::{EvaluationGrid, GridMatrix};
use crate::kernel::{local_linear_weights, ConditionalCdfTable};

/// Latent scores beyond this are treated as ±∞.
const SCORE_LIMIT: f64 = 8.5;
const PANEL_WIDTH: f64 = 0.25;
const PANEL_DEGREE: usize = 12;
/// Geometrically shrinking panels on each side of a kink.
const GRADED_PANELS: usize = 24;

struct Quadrature {
    rule: GaussLegendre,
}

impl Quadrature {
    fn new() -> Self {
        Self {
            rule: GaussLegendre::new(PANEL_DEGREE).expect("degree >= 2"),
        }
    }

    /// Composite rule on `[a, b]` with panels no wider than `PANEL_WIDTH`.
    fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let panels = ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
        let step = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + step * k as f64;
                let hi = if k + 1 == panels { b } else { lo + step };
                self.rule.integrate(lo, hi, &f)
            })
            .sum()
    }

    /// As `integrate`, splitting additionally at the sorted `breaks` inside `(a, b)`.
    fn integrate_split(&self, a: f64, b: f64, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        let mut total = 0.0;
        let mut lo = a;
        for &x in breaks.iter().filter(|x| **x > a && **x < b) {
            total += self.integrate(lo, x, &f);
            lo = x;
        }
        total + self.integrate(lo, b, &f)
    }

    /// `∫_{-limit}^{xᵢ} f` for ascending `xs`, accumulated segment by segment so the result is
    /// non-decreasing whenever `f ≥ 0`.
    fn cumulative(&self, xs: &[f64], breaks: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        let mut last = -SCORE_LIMIT;
        for &x in xs {
            let x = x.clamp(-SCORE_LIMIT, SCORE_LIMIT);
            if x > last {
                acc += self.integrate_split(last, x, breaks, &f);
                last = x;
            }
            out.push(acc);
        }
        out
    }
}

fn clamp_score(x: f64) -> f64 {
    if x.is_nan() {
        -SCORE_LIMIT
    } else {
        x.clamp(-SCORE_LIMIT, SCORE_LIMIT)
    }
}

/// Per-column helper holding the pieces of the selection integrals at one `z`.
struct Column<'a> {
    dgp: &'a ResolvedDgp,
    z: f64,
    rho: f64,
    s: f64,
    y1_lo: f64,
    y1_hi: f64,
    /// Sector-1 scores where the net value crosses the ends of the sector-0 support.
    kinks: Vec<f64>,
}

impl<'a> Column<'a> {
    fn new(dgp: &'a ResolvedDgp, z: f64) -> Self {
        let rho = dgp.correlation();
        let mut col = Self {
            dgp,
            z,
            rho,
            s: (1.0 - rho * rho).sqrt(),
            y1_lo: dgp.sector1.at_score(-SCORE_LIMIT, z),
            y1_hi: dgp.sector1.at_score(SCORE_LIMIT, z),
            kinks: Vec::new(),
        };
        let kinks: Vec<f64> = [dgp.sector0.support_min(z), dgp.sector0.support_max(z)]
            .into_iter()
            .filter(|v| v.is_finite())
            .map(|v| col.net_inverse_score(v))
            .filter(|x| x.abs() < SCORE_LIMIT)
            .collect();
        // the integrands flatten out non-analytically at a kink, so panels shrink geometrically
        // towards it
        let mut refined = Vec::with_capacity(kinks.len() * (2 * GRADED_PANELS + 1));
        for &k in &kinks {
            refined.push(k);
            let mut d = PANEL_WIDTH;
            for _ in 0..GRADED_PANELS {
                d *= 0.5;
                refined.extend([k - d, k + d]);
            }
        }
        refined.retain(|x| x.abs() < SCORE_LIMIT);
        refined.sort_by(f64::total_cmp);
        col.kinks = refined;
        col
    }

    /// Sector-0 score threshold below which an agent with sector-1 score `x1` picks sector 1.
    fn a0(&self, x1: f64) -> f64 {
        let y1 = self.dgp.sector1.at_score(x1, self.z);
        self.dgp
            .sector0
            .score(self.dgp.cost.net(y1, self.z), self.z)
    }

    fn conditional_below(&self, a: f64, x1: f64) -> f64 {
        if a == f64::NEG_INFINITY {
            0.0
        } else if a == f64::INFINITY {
            1.0
        } else {
            norm_cdf((a - self.rho * x1) / self.s)
        }
    }

    /// Sector-1 score of `g⁻¹(v)`, the income whose net value is `v`.
    fn net_inverse_score(&self, v: f64) -> f64 {
        let y1 = self.dgp.net_inverse(v, self.z, self.y1_lo, self.y1_hi);
        clamp_score(self.dgp.sector1.score(y1, self.z))
    }
}

fn gaussian_column(q: &Quadrature, col: &Column<'_>, y_grid: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let z = col.z;
    let selected = |x1: f64| norm_pdf(x1) * col.conditional_below(col.a0(x1), x1);
    let xs: Vec<f64> = y_grid
        .iter()
        .map(|&y| clamp_score(col.dgp.sector1.score(y, z)))
        .collect();
    let f1 = q.cumulative(&xs, &col.kinks, selected);
    // continue the same partition to the top so that F1 never exceeds p
    let top = xs.iter().copied().fold(-SCORE_LIMIT, f64::max);
    let p = f1.last().copied().unwrap_or(0.0)
        + q.integrate_split(top, SCORE_LIMIT, &col.kinks, selected);
    let f0: Vec<f64> = y_grid
        .iter()
        .map(|&y| {
            let ay = col.dgp.sector0.score(y, z);
            if ay == f64::NEG_INFINITY {
                return 0.0;
            }
            // Y0 ≤ y and D = 0 needs a0(X1) < X0 ≤ ay, hence X1 < κ with a0(κ) = ay.
            let kappa = col.net_inverse_score(y);
            q.integrate_split(-SCORE_LIMIT, kappa, &col.kinks, |x1| {
                let gap = col.conditional_below(ay, x1) - col.conditional_below(col.a0(x1), x1);
                norm_pdf(x1) * gap.max(0.0)
            })
        })
        .collect();
    (f0, f1, p)
}

fn identical_column(q: &Quadrature, col: &Column<'_>, y_grid: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let z = col.z;
    let xs: Vec<f64> = y_grid
        .iter()
        .map(|&y| clamp_score(col.dgp.sector1.score(y, z)))
        .collect();
    if matches!(col.dgp.cost, super::dgp::CostModel::Zero) {
        let f1: Vec<f64> = y_grid.iter().map(|&y| col.dgp.sector1.cdf(y, z)).collect();
        return (vec![0.0; y_grid.len()], f1, 1.0);
    }
    let chooses = |x1: f64| {
        let y1 = col.dgp.sector1.at_score(x1, z);
        col.dgp.cost.eval(y1, z) <= 0.0
    };
    let f1 = q.cumulative(&xs, &[], |x| if chooses(x) { norm_pdf(x) } else { 0.0 });
    let f0 = q.cumulative(&xs, &[], |x| if chooses(x) { 0.0 } else { norm_pdf(x) });
    let p = q.integrate(-SCORE_LIMIT, SCORE_LIMIT, |x| {
        if chooses(x) {
            norm_pdf(x)
        } else {
            0.0
        }
    });
    (f0, f1, p)
}

fn running_max(values: &mut [f64]) {
    let mut m = f64::NEG_INFINITY;
    for v in values {
        m = m.max(*v);
        *v = m;
    }
}

/// Exact conditional distribution tables of a perfect-foresight DGP on `grid`.
pub fn population_tables(
    dgp: &DgpSpec,
    grid: &EvaluationGrid<f64>,
) -> Result<ConditionalCdfTable<f64>> {
    if !matches!(dgp.foresight, Foresight::Perfect) {
        return Err(Error::Config(
            "population tables are available for perfect-foresight DGPs only".into(),
        ));
    }
    let resolved = dgp.resolve()?;
    population_tables_resolved(&resolved, grid)
}

pub(crate) fn population_tables_resolved(
    dgp: &ResolvedDgp,
    grid: &EvaluationGrid<f64>,
) -> Result<ConditionalCdfTable<f64>> {
    let columns: Vec<(Vec<f64>, Vec<f64>, f64)> = grid
        .z()
        .par_iter()
        .map(|&z| {
            let q = Quadrature::new();
            let col = Column::new(dgp, z);
            let (mut f0, mut f1, p) = match dgp.coupling() {
                Coupling::Gaussian => gaussian_column(&q, &col, grid.y()),
                Coupling::Identical => identical_column(&q, &col, grid.y()),
            };
            for v in f0.iter_mut().chain(f1.iter_mut()) {
                *v = v.clamp(0.0, 1.0);
            }
            if !p.is_finite() || f0.iter().chain(&f1).any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "selection integrals are not finite at z={z}"
                )));
            }
            running_max(&mut f0);
            running_max(&mut f1);
            Ok((f0, f1, p.clamp(0.0, 1.0)))
        })
        .collect::<Result<_>>()?;
    let p = columns.iter().map(|c| c.2).collect();
    let (f0, f1): (Vec<_>, Vec<_>) = columns.into_iter().map(|c| (c.0, c.1)).unzip();
    ConditionalCdfTable::from_parts(
        grid.clone(),
        GridMatrix::from_columns(f0),
        GridMatrix::from_columns(f1),
        p,
        None,
    )
}

/// `P(Y0 ≤ a, Y1 − C(Y1, z) ≤ b | Z = z)`.
pub fn lower_orthant_probability(dgp: &ResolvedDgp, a: f64, b: f64, z: f64) -> f64 {
    let col = Column::new(dgp, z);
    match dgp.coupling() {
        Coupling::Identical => {
            let xb = col.net_inverse_score(b);
            let xa = clamp_score(dgp.sector1.score(a, z));
            norm_cdf(xa.min(xb))
        }
        Coupling::Gaussian => {
            let sa = dgp.sector0.score(a, z);
            if sa == f64::NEG_INFINITY {
                return 0.0;
            }
            let xb = col.net_inverse_score(b);
            Quadrature::new().integrate(-SCORE_LIMIT, xb, |x1| {
                norm_pdf(x1) * col.conditional_below(sa, x1)
            })
        }
    }
}

/// Outcome of a stochastic-monotonicity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmivReport {
    pub holds: bool,
    /// Largest increase of a lower-orthant probability along the instrument grid (0 if none).
    pub worst_violation: f64,
    /// `(a, b, z)` of the worst violation; `a` is unused (`NaN`) in data mode.
    pub location: Option<(f64, f64, f64)>,
}

/// Checks that each row of `values` (indexed by the increasing `z`) is non-increasing.
///
/// Returns the worst violation `max_k (P_k − min_{j<k} P_j)` and its `(row, column)`.
pub fn check_z_monotone(values: &GridMatrix<f64>) -> (f64, Option<(usize, usize)>) {
    let mut worst = 0.0;
    let mut at = None;
    for iy in 0..values.ny() {
        let mut min_so_far = f64::INFINITY;
        for iz in 0..values.nz() {
            let v = values.get(iy, iz);
            let gap = v - min_so_far;
            if gap > worst {
                worst = gap;
                at = Some((iy, iz));
            }
            min_so_far = min_so_far.min(v);
        }
    }
    (worst, at)
}

/// DGP-mode check: lower-orthant probabilities of `(Y0, Y1 − C)` non-increasing in `z` over all
/// pairs `(a, b)` from `y_grid`.
pub fn check_smiv_dgp(
    dgp: &DgpSpec,
    y_grid: &[f64],
    z_grid: &[f64],
    tol: f64,
) -> Result<SmivReport> {
    if y_grid.is_empty() || z_grid.is_empty() {
        return Err(Error::Domain(
            "empty grid in stochastic-monotonicity check".into(),
        ));
    }
    let resolved = dgp.resolve()?;
    let pairs: Vec<(f64, f64)> = y_grid
        .iter()
        .flat_map(|&a| y_grid.iter().map(move |&b| (a, b)))
        .collect();
    let rows: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            z_grid
                .iter()
                .map(|&z| lower_orthant_probability(&resolved, a, b, z))
                .collect()
        })
        .collect();
    let table = GridMatrix::from_fn(pairs.len(), z_grid.len(), |i, iz| rows[i][iz]);
    let (worst, at) = check_z_monotone(&table);
    Ok(SmivReport {
        holds: worst <= tol,
        worst_violation: worst,
        location: at.map(|(i, iz)| (pairs[i].0, pairs[i].1, z_grid[iz])),
    })
}

/// Data-mode check: local linear estimates of `P(Y − D·C(Y, Z) ≤ y | z)` non-increasing in `z`
/// for a candidate cost `C`.
pub fn check_smiv_data(
    sample: &ObservationSample<f64>,
    grid: &EvaluationGrid<f64>,
    h: f64,
    cost: impl Fn(f64, f64) -> f64 + Sync,
    tol: f64,
) -> Result<SmivReport> {
    let net: Vec<f64> = sample
        .records()
        .map(|r| if r.d { r.y - cost(r.y, r.z) } else { r.y })
        .collect();
    let mut order: Vec<usize> = (0..net.len()).collect();
    order.sort_by(|&a, &b| net[a].total_cmp(&net[b]));
    let columns: Vec<Vec<f64>> = grid
        .z()
        .par_iter()
        .map(|&z0| {
            let weights = local_linear_weights(sample.z(), z0, h)?;
            let mut dense = vec![0.0; net.len()];
            for (i, w) in weights {
                dense[i] = w;
            }
            let mut acc = 0.0;
            let mut k = 0;
            let mut col = Vec::with_capacity(grid.ny());
            for &y in grid.y() {
                while k < order.len() && net[order[k]] <= y {
                    acc += dense[order[k]];
                    k += 1;
                }
                col.push(acc.clamp(0.0, 1.0));
            }
            running_max(&mut col);
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let table = GridMatrix::from_columns(columns);
    let (worst, at) = check_z_monotone(&table);
    Ok(SmivReport {
        holds: worst <= tol,
        worst_violation: worst,
        location: at.map(|(iy, iz)| (f64::NAN, grid.y()[iy], grid.z()[iz])),
    })
}

#[cfg(test)]
mod tests {
    use super::super::dgp::{OutcomeModel, ZLaw};
    use super::super::laws::{Affine, MarginalLaw};
    use super::*;
    use crate::grid::linspace;

    fn unit_z() -> ZLaw {
        ZLaw::Uniform {
            low: 0.0,
            high: 1.0,
        }
    }

    fn bivariate(loc0: Affine, loc1: Affine, rho: f64) -> OutcomeModel {
        OutcomeModel::independent(
            MarginalLaw::lognormal(loc0, Affine::constant(0.4)),
            MarginalLaw::lognormal(loc1, Affine::constant(0.5)),
        )
        .with_correlation(rho)
    }

    #[test]
    fn tables_match_monte_carlo() {
        let dgp = DgpSpec::quasi_linear(
            Affine::constant(1.0),
            Affine::constant(0.3),
            bivariate(Affine::new(1.0, 0.3), Affine::new(1.1, 0.5), 0.4),
            ZLaw::Discrete { values: vec![0.5] },
        );
        let grid = EvaluationGrid::new(vec![1.5, 2.5, 3.5, 5.0], vec![0.5]).unwrap();
        let tables = population_tables(&dgp, &grid).unwrap();
        let s = super::super::generate_sample(&dgp, 400_000, 11).unwrap();
        let n = s.len() as f64;
        for (iy, &y) in grid.y().iter().enumerate() {
            let mc0 = s.records().filter(|r| !r.d && r.y <= y).count() as f64 / n;
            let mc1 = s.records().filter(|r| r.d && r.y <= y).count() as f64 / n;
            assert!((tables.f0.get(iy, 0) - mc0).abs() < 4e-3, "F0 at {y}");
            assert!((tables.f1.get(iy, 0) - mc1).abs() < 4e-3, "F1 at {y}");
        }
        assert!((tables.p[0] - s.share_treated()).abs() < 4e-3);
    }

    #[test]
    fn sub_distributions_sum_to_marginal_mixture() {
        let dgp = DgpSpec::pure_roy(
            bivariate(Affine::new(1.0, 0.2), Affine::new(1.0, 0.4), -0.3),
            unit_z(),
        );
        let grid = EvaluationGrid::new(linspace(0.5, 200.0, 40), vec![0.2, 0.8]).unwrap();
        let t = population_tables(&dgp, &grid).unwrap();
        let iy = grid.ny() - 1;
        for iz in 0..2 {
            assert!((t.f.get(iy, iz) - 1.0).abs() < 1e-6);
            assert!((t.f1.get(iy, iz) - t.p[iz]).abs() < 1e-6);
        }
        assert!(t.validate(1e-12).is_ok());
    }

    #[test]
    fn identical_pure_roy_is_closed_form() {
        let law = MarginalLaw::uniform(Affine::constant(0.0), Affine::new(0.8, 0.2));
        let dgp = DgpSpec::pure_roy(OutcomeModel::identical(law.clone()), unit_z());
        let grid = EvaluationGrid::new(linspace(0.05, 0.95, 10), vec![0.0, 1.0]).unwrap();
        let t = population_tables(&dgp, &grid).unwrap();
        for iz in 0..2 {
            assert_eq!(t.p[iz], 1.0);
            for (iy, &y) in grid.y().iter().enumerate() {
                assert_eq!(t.f0.get(iy, iz), 0.0);
                assert_eq!(t.f1.get(iy, iz), law.cdf(y, grid.z()[iz]));
            }
        }
    }

    #[test]
    fn smiv_invariant_law_holds() {
        let dgp = DgpSpec::pure_roy(
            bivariate(Affine::constant(1.0), Affine::constant(1.2), 0.2),
            unit_z(),
        );
        let r = check_smiv_dgp(&dgp, &linspace(0.5, 8.0, 8), &[0.0, 0.5, 1.0], 1e-12).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_violation, 0.0);
    }

    #[test]
    fn smiv_increasing_locations_hold() {
        let dgp = DgpSpec::quasi_linear(
            Affine::new(1.0, -0.2),
            Affine::constant(0.3),
            bivariate(Affine::new(1.0, 0.4), Affine::new(1.2, 0.6), 0.3),
            unit_z(),
        );
        let r =
            check_smiv_dgp(&dgp, &linspace(0.5, 8.0, 8), &linspace(0.0, 1.0, 5), 1e-10).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn smiv_decreasing_location_fails() {
        let dgp = DgpSpec::pure_roy(
            bivariate(Affine::new(1.0, -0.5), Affine::new(1.2, 0.2), 0.0),
            unit_z(),
        );
        let r =
            check_smiv_dgp(&dgp, &linspace(0.5, 8.0, 8), &linspace(0.0, 1.0, 5), 1e-10).unwrap();
        assert!(!r.holds);
        assert!(r.worst_violation > 0.0);
        assert!(r.location.is_some());
    }

    #[test]
    fn smiv_rejects_empty_grids() {
        let dgp = DgpSpec::pure_roy(
            bivariate(Affine::constant(1.0), Affine::constant(1.0), 0.0),
            unit_z(),
        );
        assert!(matches!(
            check_smiv_dgp(&dgp, &[], &[0.5], 0.0),
            Err(Error::Domain(_))
        ));
    }
}
