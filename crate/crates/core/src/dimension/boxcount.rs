//! Box counting on grids adapted to each metric, with automated fit-window
//! selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::HeisPoint;
use crate::hyperbolic::{gromov_dist_total, GromovMetricTag};
use crate::schottky::PointCloud;

/// Metric under which a dimension is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricTag {
    /// Gauge metric on Heisenberg chart coordinates.
    Heisenberg,
    /// Euclidean metric on Heisenberg chart coordinates.
    Euclidean,
    /// Chordal metric on the sphere.
    Spherical,
    /// Gromov visual metric from the ball centre (counted in the chart with
    /// the gauge metric, or pairwise by [`gromov_net_count`]).
    Gromov,
}

impl MetricTag {
    pub fn name(self) -> &'static str {
        match self {
            Self::Heisenberg => "heisenberg",
            Self::Euclidean => "euclidean",
            Self::Spherical => "spherical",
            Self::Gromov => "gromov",
        }
    }
}

impl std::fmt::Display for MetricTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetricTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg" => Ok(Self::Heisenberg),
            "euclidean" => Ok(Self::Euclidean),
            "spherical" => Ok(Self::Spherical),
            "gromov" => Ok(Self::Gromov),
            _ => Err(Error::Input(format!("unknown metric {s:?}"))),
        }
    }
}

/// Least-squares fit over a contiguous index range of scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowFit {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub slope: f64,
    pub stderr: f64,
    /// Root mean square residual of `log N`.
    pub residual: f64,
}

/// Rules for choosing the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitPolicy {
    pub min_scales: usize,
    pub min_decades: f64,
    /// Minimal span as a fraction of the usable scale range, in decades.
    pub min_fraction: f64,
    /// Counts below this are outside the usable range.
    pub min_count: u64,
    /// Counts above this fraction of the point count are saturated.
    pub saturation: f64,
    /// Number of shifted grids per scale; the count is the smallest.
    pub grid_shifts: usize,
}

impl Default for FitPolicy {
    fn default() -> Self {
        Self { min_scales: 6, min_decades: 1.0, min_fraction: 0.5, min_count: 8, saturation: 0.25, grid_shifts: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimEstimate {
    pub slope: f64,
    pub stderr: f64,
    /// `(epsilon, N(epsilon))`, epsilon decreasing.
    pub scales: Vec<(f64, u64)>,
    /// Index range `[start, end)` of the chosen fit.
    pub window: (usize, usize),
    pub metric: MetricTag,
    /// Every admissible window, for reporting.
    pub windows: Vec<WindowFit>,
}

/// `count` scales from `hi` down to `lo`, evenly spaced in log.
pub fn geometric_scales(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![hi];
    }
    let r = (lo / hi).ln() / (count - 1) as f64;
    (0..count).map(|i| hi * (r * i as f64).exp()).collect()
}

/// Slope, standard error and RMS residual of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let stderr = if x.len() > 2 && sxx > 0.0 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, stderr, (ssr / n).sqrt())
}

fn check_scales(scales: &[f64]) -> Result<Vec<f64>> {
    if scales.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Input("scales must be positive and finite".into()));
    }
    let mut s = scales.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s.dedup();
    if s.len() < 2 || (s[0] / s[s.len() - 1]).log10() < 1.5 {
        return Err(Error::Input("scales must span at least 1.5 decades".into()));
    }
    Ok(s)
}

#[derive(Clone, Copy)]
enum Grid {
    Axis,
    /// Heisenberg cells: horizontal side `eps`, sheared vertical side `eps^2`.
    Sheared,
}

fn distinct_rows(keys: &[i64], dim: usize) -> u64 {
    let rows = keys.len() / dim;
    let mut idx: Vec<u32> = (0..rows as u32).collect();
    let row = |i: u32| &keys[i as usize * dim..(i as usize + 1) * dim];
    idx.sort_unstable_by(|&a, &b| row(a).cmp(row(b)));
    let mut count = 0u64;
    for (j, &i) in idx.iter().enumerate() {
        if j == 0 || row(i) != row(idx[j - 1]) {
            count += 1;
        }
    }
    count
}

/// Offset of shifted grid `j` along coordinate `i`, in cell units.
fn grid_offset(j: usize, i: usize) -> f64 {
    if j == 0 {
        return 0.0;
    }
    // Kronecker sequence with irrational steps per coordinate.
    let alpha = [0.618_033_988_749_895, 0.414_213_562_373_095, 0.732_050_807_568_877, 0.236_067_977_499_79];
    (j as f64 * alpha[i % alpha.len()] + 0.1 * (i / alpha.len()) as f64).fract()
}

fn cell_count(data: &[f64], dim: usize, grid: Grid, eps: f64, shift: usize) -> u64 {
    let mut keys = vec![0i64; data.len()];
    let off: Vec<f64> = (0..dim).map(|i| grid_offset(shift, i)).collect();
    match grid {
        Grid::Axis => {
            for (kr, xr) in keys.chunks_mut(dim).zip(data.chunks(dim)) {
                for j in 0..dim {
                    kr[j] = (xr[j] / eps + off[j]).floor() as i64;
                }
            }
        }
        Grid::Sheared => {
            let e2 = eps * eps;
            let h = dim - 1;
            for (kr, xr) in keys.chunks_mut(dim).zip(data.chunks(dim)) {
                let mut shear = 0.0;
                for j in (0..h).step_by(2) {
                    let (a, b) = ((xr[j] / eps + off[j]).floor(), (xr[j + 1] / eps + off[j + 1]).floor());
                    kr[j] = a as i64;
                    kr[j + 1] = b as i64;
                    // omega(v, c) with c the lower corner of the horizontal cell.
                    let (ca, cb) = ((a - off[j]) * eps, (b - off[j + 1]) * eps);
                    shear += xr[j] * cb - xr[j + 1] * ca;
                }
                kr[h] = ((xr[h] - shear) / e2 + off[h]).floor() as i64;
            }
        }
    }
    distinct_rows(&keys, dim)
}

fn flatten(rows: &[Vec<f64>]) -> Result<(Vec<f64>, usize)> {
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Input("points must share a positive dimension".into()));
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite coordinates".into()));
    }
    Ok((data, dim))
}

fn extent(data: &[f64], dim: usize) -> f64 {
    (0..dim)
        .map(|j| {
            let col = data.iter().skip(j).step_by(dim);
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Box counting of points in `R^d` (axis grid) or Heisenberg coordinates
/// `(Re v, Im v, ..., t)` (sheared grid).
pub fn box_count_real(rows: &[Vec<f64>], metric: MetricTag, scales: &[f64], policy: &FitPolicy) -> Result<DimEstimate> {
    let (data, dim) = flatten(rows)?;
    let grid = match metric {
        MetricTag::Heisenberg | MetricTag::Gromov => {
            if dim % 2 == 0 {
                return Err(Error::Input("Heisenberg coordinates have odd dimension".into()));
            }
            Grid::Sheared
        }
        MetricTag::Euclidean | MetricTag::Spherical => Grid::Axis,
    };
    let scales = check_scales(scales)?;
    let npts = rows.len();
    if npts < 1000 {
        return Err(Error::Input(format!("box counting needs at least 1000 points, got {npts}")));
    }
    let smallest = scales[scales.len() - 1];
    if extent(&data, dim) <= smallest {
        return Err(Error::Estimation("degenerate cloud: all points within the smallest scale".into()));
    }
    let shifts = policy.grid_shifts.max(1);
    let jobs: Vec<(usize, usize)> = (0..scales.len()).flat_map(|i| (0..shifts).map(move |j| (i, j))).collect();
    let flat: Vec<u64> = jobs.par_iter().map(|&(i, j)| cell_count(&data, dim, grid, scales[i], j)).collect();
    let per_shift: Vec<Vec<u64>> = flat.chunks(shifts).map(|c| c.to_vec()).collect();
    fit_shifted(&scales, &per_shift, npts, metric, policy)
}

/// Picks the fit window and builds the estimate from one count per scale.
pub fn fit_counts(
    scales: &[f64],
    raw: &[u64],
    npts: usize,
    metric: MetricTag,
    policy: &FitPolicy,
) -> Result<DimEstimate> {
    let per: Vec<Vec<u64>> = raw.iter().map(|&c| vec![c]).collect();
    fit_shifted(scales, &per, npts, metric, policy)
}

/// Monotone envelope: grids at unrelated scales are not nested.
fn envelope(raw: impl Iterator<Item = u64>) -> Vec<u64> {
    let mut counts: Vec<u64> = raw.collect();
    for i in 1..counts.len() {
        counts[i] = counts[i].max(counts[i - 1]);
    }
    counts
}

/// As [`fit_counts`] with several grid shifts per scale. The smallest count
/// is fitted; the spread of per-shift slopes over the chosen window is
/// added to the standard error.
fn fit_shifted(
    scales: &[f64],
    per_shift: &[Vec<u64>],
    npts: usize,
    metric: MetricTag,
    policy: &FitPolicy,
) -> Result<DimEstimate> {
    let counts = envelope(per_shift.iter().map(|c| c.iter().copied().min().unwrap_or(0)));
    let table: Vec<(f64, u64)> = scales.iter().copied().zip(counts.iter().copied()).collect();
    let cap = (policy.saturation * npts as f64).max(policy.min_count as f64);
    let usable: Vec<usize> =
        (0..counts.len()).filter(|&i| counts[i] >= policy.min_count.max(2) && (counts[i] as f64) <= cap).collect();
    let fail = |why: &str| Error::Estimation(format!("{metric} box count: {why}"));
    let (Some(&lo), Some(&hi)) = (usable.first(), usable.last()) else {
        return Err(fail("no usable scales between the count floor and saturation"));
    };
    let x: Vec<f64> = scales.iter().map(|e| -e.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let range_decades = (scales[lo] / scales[hi]).log10();
    let need = policy.min_decades.max(policy.min_fraction * range_decades);
    let mut windows = Vec::new();
    for a in lo..=hi {
        for b in a + policy.min_scales..=hi + 1 {
            if (scales[a] / scales[b - 1]).log10() + 1e-9 < need {
                continue;
            }
            let (slope, stderr, residual) = linear_fit(&x[a..b], &y[a..b]);
            windows.push(WindowFit { start: a, end: b, slope, stderr, residual });
        }
    }
    // Longest window among those fitting within twice the smallest residual;
    // the bare minimum jumps between neighbouring windows.
    let least = windows.iter().map(|w| w.residual).fold(f64::INFINITY, f64::min);
    let best = windows
        .iter()
        .filter(|w| w.residual <= 2.0 * least)
        .max_by(|p, q| (p.end - p.start).cmp(&(q.end - q.start)).then(q.residual.total_cmp(&p.residual)))
        .copied()
        .ok_or_else(|| fail(&format!("usable range of {range_decades:.2} decades admits no window")))?;
    let (a, b) = (best.start, best.end);
    let shifts = per_shift.first().map(|c| c.len()).unwrap_or(1);
    let slopes: Vec<f64> = (0..shifts)
        .map(|j| {
            let ys: Vec<f64> = envelope(per_shift.iter().map(|c| c[j])).iter().map(|&c| (c as f64).ln()).collect();
            linear_fit(&x[a..b], &ys[a..b]).0
        })
        .collect();
    let mean = slopes.iter().sum::<f64>() / shifts as f64;
    let spread = if shifts > 1 {
        (slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (shifts - 1) as f64).sqrt()
    } else {
        0.0
    };
    // Sensitivity to the window choice among near-optimal windows.
    let near: Vec<f64> = windows.iter().filter(|w| w.residual <= 2.0 * least).map(|w| w.slope).collect();
    let near_mean = near.iter().sum::<f64>() / near.len() as f64;
    let window_spread = (near.iter().map(|s| (s - near_mean).powi(2)).sum::<f64>() / near.len() as f64).sqrt();
    Ok(DimEstimate {
        slope: best.slope,
        stderr: best.stderr.hypot(spread).hypot(window_spread),
        scales: table,
        window: (best.start, best.end),
        metric,
        windows,
    })
}

/// Box counting on a point cloud: spherical on sphere coordinates,
/// Heisenberg, Gromov (chart mode) and Euclidean on chart coordinates.
pub fn box_count(cloud: &PointCloud, metric: MetricTag, scales: &[f64], policy: &FitPolicy) -> Result<DimEstimate> {
    match metric {
        MetricTag::Spherical => box_count_real(&cloud.sphere, metric, scales, policy),
        _ => {
            if cloud.heis.is_empty() {
                return Err(Error::Input(format!("{metric} box counting needs chart coordinates")));
            }
            box_count_real(&cloud.heis_real(), metric, scales, policy)
        }
    }
}

/// Pairwise Gromov-metric count: the size of a greedy `eps`-separated net
/// (points visited in order). Oracle for the chart mode on small clouds.
pub fn gromov_net_count(
    cloud: &PointCloud,
    tag: &GromovMetricTag,
    scales: &[f64],
    policy: &FitPolicy,
) -> Result<DimEstimate> {
    let npts = cloud.points.len();
    if npts > 20_000 {
        return Err(Error::Input(format!("pairwise Gromov mode is limited to 20000 points, got {npts}")));
    }
    if npts < 1000 {
        return Err(Error::Input(format!("box counting needs at least 1000 points, got {npts}")));
    }
    let scales = check_scales(scales)?;
    let counts: Vec<u64> = scales
        .par_iter()
        .map(|&eps| {
            let mut centers: Vec<usize> = Vec::new();
            for (i, p) in cloud.points.iter().enumerate() {
                if centers.iter().all(|&c| gromov_dist_total(tag, &cloud.points[c], p) > eps) {
                    centers.push(i);
                }
            }
            centers.len() as u64
        })
        .collect();
    if counts.iter().all(|&c| c <= 1) {
        return Err(Error::Estimation("degenerate cloud: all points within the smallest scale".into()));
    }
    fit_counts(&scales, &counts, npts, MetricTag::Gromov, policy)
}

/// Real coordinates of Heisenberg points.
pub fn heis_rows(h: &[HeisPoint]) -> Vec<Vec<f64>> {
    h.iter().map(|p| p.to_real()).collect()
}
