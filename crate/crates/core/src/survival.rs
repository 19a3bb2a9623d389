//! Share of individuals whose band value exceeds a cost level, absolutely or relative to income,
//! per instrument bin and pooled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{empirical_quantile_sorted, GridMatrix};
use crate::inference::ConfidenceBand;
use crate::model::ObservationSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZBin {
    pub lo: f64,
    pub hi: f64,
    /// Individuals with a band value.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSummary {
    /// Absolute cost levels `c₀`, ascending.
    pub thresholds: Vec<f64>,
    /// Cost-to-income ratios `r`, ascending.
    pub ratio_thresholds: Vec<f64>,
    pub bins: Vec<ZBin>,
    /// `P̂(Cₙ ≥ c₀)`, indexed `[bin][threshold]`; `None` for empty bins.
    pub absolute: Vec<Vec<Option<f64>>>,
    /// `P̂(Cₙ/Y ≥ r)` among individuals with positive income.
    pub ratio: Vec<Vec<Option<f64>>>,
    pub pooled_absolute: Vec<Option<f64>>,
    pub pooled_ratio: Vec<Option<f64>>,
    /// Record indices whose `(y, z)` lay outside the band grid and were clamped to it.
    pub clamped: Vec<usize>,
    /// Record indices without a band value at their position.
    pub unevaluated: Vec<usize>,
}

/// Bin edges at the terciles of the observed instrument.
pub fn tercile_edges(z: &[f64]) -> Vec<f64> {
    let mut s = z.to_vec();
    s.sort_by(f64::total_cmp);
    [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]
        .iter()
        .map(|&q| empirical_quantile_sorted(&s, q))
        .collect()
}

fn bracket(grid: &[f64], x: f64) -> (usize, usize, f64) {
    let n = grid.len();
    if n == 1 || x <= grid[0] {
        return (0, 0, 0.0);
    }
    if x >= grid[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let k = grid.partition_point(|v| *v <= x);
    let (a, b) = (grid[k - 1], grid[k]);
    (k - 1, k, (x - a) / (b - a))
}

/// Bilinear interpolation of a grid matrix at `(y, z)`, clamped to the grid hull.
///
/// Returns the value and whether clamping occurred; `None` if a bracketing cell is missing.
pub fn bilinear(
    y_grid: &[f64],
    z_grid: &[f64],
    values: &GridMatrix<Option<f64>>,
    y: f64,
    z: f64,
) -> (Option<f64>, bool) {
    let clamped = y < y_grid[0]
        || y > y_grid[y_grid.len() - 1]
        || z < z_grid[0]
        || z > z_grid[z_grid.len() - 1];
    let (y0, y1, ty) = bracket(y_grid, y);
    let (z0, z1, tz) = bracket(z_grid, z);
    let corners = [
        (y0, z0, (1.0 - ty) * (1.0 - tz)),
        (y1, z0, ty * (1.0 - tz)),
        (y0, z1, (1.0 - ty) * tz),
        (y1, z1, ty * tz),
    ];
    let mut acc = 0.0;
    for (iy, iz, w) in corners {
        if w == 0.0 {
            continue;
        }
        match values.get(iy, iz) {
            Some(v) => acc += w * v,
            None => return (None, clamped),
        }
    }
    (Some(acc), clamped)
}

fn sorted_unique(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("survival thresholds must be finite".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn proportions(values: &[f64], thresholds: &[f64]) -> Vec<Option<f64>> {
    thresholds
        .iter()
        .map(|&t| {
            if values.is_empty() {
                None
            } else {
                Some(values.iter().filter(|v| **v >= t).count() as f64 / values.len() as f64)
            }
        })
        .collect()
}

/// Survival proportions of the band evaluated at every individual.
///
/// `z_bins` holds bin edges `e₀ < e₁ < … < e_k`; bin `j` is `[e_j, e_{j+1})`, the last one closed.
/// Individuals outside every bin count only in the pooled proportions.
pub fn cost_survival(
    band: &ConfidenceBand<f64>,
    sample: &ObservationSample<f64>,
    thresholds: &[f64],
    ratio_thresholds: &[f64],
    z_bins: &[f64],
) -> Result<SurvivalSummary> {
    if z_bins.len() < 2 || z_bins.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(
            "z-bin edges must be at least two increasing values".into(),
        ));
    }
    let thresholds = sorted_unique(thresholds)?;
    let ratio_thresholds = sorted_unique(ratio_thresholds)?;
    let nb = z_bins.len() - 1;
    let mut abs_vals: Vec<Vec<f64>> = vec![Vec::new(); nb];
    let mut ratio_vals: Vec<Vec<f64>> = vec![Vec::new(); nb];
    let mut pooled_abs = Vec::new();
    let mut pooled_ratio = Vec::new();
    let mut clamped = Vec::new();
    let mut unevaluated = Vec::new();
    for (i, r) in sample.records().enumerate() {
        let (v, was_clamped) = bilinear(band.grid.y(), band.grid.z(), &band.cn, r.y, r.z);
        if was_clamped {
            clamped.push(i);
        }
        let Some(c) = v else {
            unevaluated.push(i);
            continue;
        };
        let bin = (0..nb).find(|&j| {
            r.z >= z_bins[j] && (r.z < z_bins[j + 1] || (j == nb - 1 && r.z <= z_bins[nb]))
        });
        pooled_abs.push(c);
        if let Some(j) = bin {
            abs_vals[j].push(c);
        }
        if r.y > 0.0 {
            pooled_ratio.push(c / r.y);
            if let Some(j) = bin {
                ratio_vals[j].push(c / r.y);
            }
        }
    }
    Ok(SurvivalSummary {
        bins: (0..nb)
            .map(|j| ZBin {
                lo: z_bins[j],
                hi: z_bins[j + 1],
                count: abs_vals[j].len(),
            })
            .collect(),
        absolute: abs_vals
            .iter()
            .map(|v| proportions(v, &thresholds))
            .collect(),
        ratio: ratio_vals
            .iter()
            .map(|v| proportions(v, &ratio_thresholds))
            .collect(),
        pooled_absolute: proportions(&pooled_abs, &thresholds),
        pooled_ratio: proportions(&pooled_ratio, &ratio_thresholds),
        thresholds,
        ratio_thresholds,
        clamped,
        unevaluated,
    })
}

/// Long-format survival row: `bin` is the bin index or `pooled`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub kind: String,
    pub bin: String,
    pub z_lo: Option<f64>,
    pub z_hi: Option<f64>,
    pub threshold: f64,
    pub proportion: Option<f64>,
}

pub fn survival_rows(s: &SurvivalSummary) -> Vec<SurvivalRow> {
    let mut rows = Vec::new();
    for (kind, thresholds, per_bin, pooled) in [
        ("absolute", &s.thresholds, &s.absolute, &s.pooled_absolute),
        ("ratio", &s.ratio_thresholds, &s.ratio, &s.pooled_ratio),
    ] {
        for (j, props) in per_bin.iter().enumerate() {
            for (t, p) in thresholds.iter().zip(props) {
                rows.push(SurvivalRow {
                    kind: kind.into(),
                    bin: j.to_string(),
                    z_lo: Some(s.bins[j].lo),
                    z_hi: Some(s.bins[j].hi),
                    threshold: *t,
                    proportion: *p,
                });
            }
        }
        for (t, p) in thresholds.iter().zip(pooled) {
            rows.push(SurvivalRow {
                kind: kind.into(),
                bin: "pooled".into(),
                z_lo: None,
                z_hi: None,
                threshold: *t,
                proportion: *p,
            });
        }
    }
    rows
}
