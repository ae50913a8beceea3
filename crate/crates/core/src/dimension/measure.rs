//! Weighted clouds: Patterson-Sullivan truncations, local dimensions, and
//! the fiber/transverse surrogates along the centre of the Heisenberg chart.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boxcount::{geometric_scales, linear_fit, MetricTag};
use crate::error::{Error, Result};
use crate::hermitian::HPoint;
use crate::hyperbolic::{gromov_dist_total, GromovMetricTag};
use crate::schottky::{word_attractors_with_distances, PointCloud, SchottkyDescriptor};

/// Atoms with normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCloud {
    pub cloud: PointCloud,
    pub weights: Vec<f64>,
    /// Exponent of the weights, `NaN` for clouds not built from a series.
    pub exponent: f64,
}

impl WeightedCloud {
    pub fn uniform(cloud: PointCloud) -> Result<Self> {
        let n = cloud.len();
        if n == 0 {
            return Err(Error::Input("empty cloud".into()));
        }
        Ok(Self { cloud, weights: vec![1.0 / n as f64; n], exponent: f64::NAN })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Mass carried by the atoms, 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Finite Patterson-Sullivan measure: atoms at the attracting fixed points of
/// all words of length `1..=len`, weighted by `exp(-s d(o, gamma o))`.
pub fn ps_sample(s: &SchottkyDescriptor, len: usize, exponent: f64) -> Result<WeightedCloud> {
    if len == 0 {
        return Err(Error::Input("Patterson-Sullivan sample needs positive word length".into()));
    }
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(Error::Input(format!("exponent {exponent} must be finite and nonnegative")));
    }
    let o = HPoint::origin(s.n);
    let (points, dists) = word_attractors_with_distances(s, len, &o)?;
    let dmin = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = dists.iter().map(|d| (-exponent * (d - dmin)).exp()).collect();
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Estimation("all Patterson-Sullivan weights underflow".into()));
    }
    let weights = raw.iter().map(|w| w / total).collect();
    Ok(WeightedCloud { cloud: PointCloud::new(points, None), weights, exponent })
}

/// Empirical distribution of local-dimension estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDims {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub estimates: Vec<f64>,
    /// Centres dropped for lack of mass at small radii.
    pub skipped: usize,
}

impl LocalDims {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    fn from_estimates(mut estimates: Vec<f64>, skipped: usize, what: &str) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::Estimation(format!("{what}: every centre was skipped")));
        }
        let sorted = {
            let mut s = estimates.clone();
            s.sort_by(f64::total_cmp);
            s
        };
        let q = |p: f64| {
            let x = p * (sorted.len() - 1) as f64;
            let (i, f) = (x.floor() as usize, x.fract());
            if i + 1 < sorted.len() {
                sorted[i] * (1.0 - f) + sorted[i + 1] * f
            } else {
                sorted[i]
            }
        };
        let (q1, median, q3) = (q(0.25), q(0.5), q(0.75));
        estimates.shrink_to_fit();
        Ok(Self { median, q1, q3, estimates, skipped })
    }
}

/// Parameters of the local fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalFit {
    /// Radii whose ball holds fewer atoms are left out of a centre's fit.
    pub min_atoms: usize,
    /// Centres with fewer usable radii are skipped.
    pub min_radii: usize,
}

impl Default for LocalFit {
    fn default() -> Self {
        Self { min_atoms: 10, min_radii: 4 }
    }
}

fn sample_centers(weights: &[f64], count: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::Input(format!("weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

/// Slope of `log mass(r)` against `log r` over radii whose ball holds at
/// least `fit.min_atoms` atoms; `None` with too few such radii.
fn local_slope(dist_weight: &mut [(f64, f64)], radii: &[f64], fit: &LocalFit) -> Option<f64> {
    dist_weight.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = Vec::with_capacity(dist_weight.len());
    let mut acc = 0.0;
    for &(_, w) in dist_weight.iter() {
        acc += w;
        cum.push(acc);
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &r in radii {
        let k = dist_weight.partition_point(|p| p.0 <= r);
        if k >= fit.min_atoms && k > 0 && cum[k - 1] > 0.0 {
            xs.push(r.ln());
            ys.push(cum[k - 1].ln());
        }
    }
    (xs.len() >= fit.min_radii).then(|| linear_fit(&xs, &ys).0)
}

fn heis_gauge(a: &[f64], b: &[f64]) -> f64 {
    // |a b^-1| with a b^-1 = (va - vb, ta - tb - omega(va, vb)).
    let h = a.len() - 1;
    let (mut r2, mut om) = (0.0, 0.0);
    for j in (0..h).step_by(2) {
        r2 += (a[j] - b[j]).powi(2) + (a[j + 1] - b[j + 1]).powi(2);
        om += a[j] * b[j + 1] - a[j + 1] * b[j];
    }
    let t = a[h] - b[h] - om;
    (r2 * r2 + t * t).sqrt().sqrt()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Lower local dimension estimates `log mu(B(xi, r)) / log r` at `centers`
/// atoms drawn by weight.
pub fn pointwise_dim(
    wc: &WeightedCloud,
    metric: MetricTag,
    centers: usize,
    radii: &[f64],
    seed: u64,
    fit: &LocalFit,
) -> Result<LocalDims> {
    if radii.len() < fit.min_radii || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Input("radii must be positive, finite and numerous enough".into()));
    }
    let cloud = &wc.cloud;
    let heis = if matches!(metric, MetricTag::Heisenberg | MetricTag::Euclidean) {
        if cloud.heis.is_empty() {
            return Err(Error::Input(format!("{metric} local dimension needs chart coordinates")));
        }
        cloud.heis_real()
    } else {
        Vec::new()
    };
    let gromov = GromovMetricTag { base: HPoint::origin(cloud.points.first().map(|p| p.n()).unwrap_or(2)) };
    let idx = sample_centers(&wc.weights, centers, seed)?;
    let slopes: Vec<Option<f64>> = idx
        .par_iter()
        .map(|&c| {
            let mut dw: Vec<(f64, f64)> = (0..wc.len())
                .map(|i| {
                    let d = match metric {
                        MetricTag::Heisenberg => heis_gauge(&heis[i], &heis[c]),
                        MetricTag::Euclidean => euclid(&heis[i], &heis[c]),
                        MetricTag::Spherical => euclid(&cloud.sphere[i], &cloud.sphere[c]),
                        MetricTag::Gromov => gromov_dist_total(&gromov, &cloud.points[i], &cloud.points[c]),
                    };
                    (d, wc.weights[i])
                })
                .collect();
            local_slope(&mut dw, radii, fit)
        })
        .collect();
    let skipped = slopes.iter().filter(|s| s.is_none()).count();
    LocalDims::from_estimates(slopes.into_iter().flatten().collect(), skipped, "pointwise dimension")
}

/// Parameters of the fiber/transverse estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberParams {
    pub centers: usize,
    /// Initial slab width as a fraction of the cloud diameter.
    pub initial_width: f64,
    pub slab_min_atoms: usize,
    pub min_slabs: usize,
    pub radii: usize,
    pub seed: u64,
    pub fit: LocalFit,
}

impl Default for FiberParams {
    fn default() -> Self {
        Self {
            centers: 64,
            initial_width: 2f64.powi(-7),
            slab_min_atoms: 200,
            min_slabs: 30,
            radii: 12,
            seed: 0xf1be,
            fit: LocalFit::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberTransverse {
    pub fiber: LocalDims,
    pub transverse: LocalDims,
    pub slab_width: f64,
    pub populated_slabs: usize,
    /// Gauge-scale diameter `max(horizontal extent, sqrt(vertical extent))`.
    pub diameter: f64,
    /// `|dim - fiber - transverse|` when a full dimension was supplied.
    pub ly_gap: Option<f64>,
}

fn extents(rows: &[Vec<f64>]) -> (f64, f64) {
    let h = rows[0].len() - 1;
    let span = |j: usize| {
        let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), r| (l.min(r[j]), u.max(r[j])));
        hi - lo
    };
    let horiz = (0..h).map(span).fold(0.0, f64::max);
    (horiz, span(h))
}

/// Transverse dimension (local dimension of the projection to the
/// horizontal factor) and fiber dimension (vertical mass profile of the
/// measure restricted to thin horizontal slabs, in gauge units).
pub fn fiber_transverse_dims(
    wc: &WeightedCloud,
    params: &FiberParams,
    full_dim: Option<f64>,
) -> Result<FiberTransverse> {
    let cloud = &wc.cloud;
    if cloud.heis.is_empty() {
        return Err(Error::Input("fiber estimates need chart coordinates".into()));
    }
    let rows = cloud.heis_real();
    let h = rows[0].len() - 1;
    if h == 0 {
        return Err(Error::Input("fiber estimates need n >= 2".into()));
    }
    let (horiz, vert) = extents(&rows);
    let diameter = horiz.max(vert.sqrt());
    if !(diameter > 0.0) {
        return Err(Error::Estimation("degenerate cloud: a single point".into()));
    }
    let idx = sample_centers(&wc.weights, params.centers, params.seed)?;

    let trad = geometric_scales(diameter / 4.0, diameter * 1e-2, params.radii);
    let tslopes: Vec<Option<f64>> = idx
        .par_iter()
        .map(|&c| {
            let mut dw: Vec<(f64, f64)> =
                (0..rows.len()).map(|i| (euclid(&rows[i][..h], &rows[c][..h]), wc.weights[i])).collect();
            local_slope(&mut dw, &trad, &params.fit)
        })
        .collect();
    let tskip = tslopes.iter().filter(|s| s.is_none()).count();
    let transverse = LocalDims::from_estimates(tslopes.into_iter().flatten().collect(), tskip, "transverse dimension")?;

    let mut width = diameter * params.initial_width;
    let slab_of = |c: usize, w: f64| -> Vec<usize> {
        (0..rows.len()).filter(|&i| euclid(&rows[i][..h], &rows[c][..h]) <= w).collect()
    };
    let slabs = loop {
        let slabs: Vec<(usize, Vec<usize>)> = idx.par_iter().map(|&c| (c, slab_of(c, width))).collect();
        let populated: Vec<(usize, Vec<usize>)> =
            slabs.into_iter().filter(|(_, s)| s.len() >= params.slab_min_atoms).collect();
        if populated.len() >= params.min_slabs {
            break populated;
        }
        width *= 2.0;
        if width > diameter {
            return Err(Error::Estimation(format!(
                "fewer than {} slabs hold {} atoms at any width",
                params.min_slabs, params.slab_min_atoms
            )));
        }
    };
    let fradii = geometric_scales(0.5 * diameter, width, params.radii);
    let fslopes: Vec<Option<f64>> = slabs
        .par_iter()
        .map(|(c, members)| {
            let x0 = &rows[*c];
            let mut dw: Vec<(f64, f64)> = members
                .iter()
                .map(|&i| {
                    let x = &rows[i];
                    let mut om = 0.0;
                    for j in (0..h).step_by(2) {
                        om += x[j] * x0[j + 1] - x[j + 1] * x0[j];
                    }
                    ((x[h] - x0[h] - om).abs().sqrt(), wc.weights[i])
                })
                .collect();
            local_slope(&mut dw, &fradii, &params.fit)
        })
        .collect();
    let fskip = fslopes.iter().filter(|s| s.is_none()).count();
    let populated_slabs = slabs.len();
    let fiber = LocalDims::from_estimates(fslopes.into_iter().flatten().collect(), fskip, "fiber dimension")?;
    let ly_gap = full_dim.map(|d| (d - fiber.median - transverse.median).abs());
    Ok(FiberTransverse { fiber, transverse, slab_width: width, populated_slabs, diameter, ly_gap })
}
