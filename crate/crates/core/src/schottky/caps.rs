//! Chordal caps on the unit sphere of the ball model and deterministic
//! sample sequences on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{BoundaryPoint, C64};

/// Closed chordal cap `{x : |x - center| <= radius}` on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    pub center: BoundaryPoint,
    pub radius: f64,
}

/// Angle subtended by a chord of length `c` on the unit sphere.
#[inline]
pub fn chord_to_angle(c: f64) -> f64 {
    2.0 * (0.5 * c).clamp(0.0, 1.0).asin()
}

#[inline]
pub fn angle_to_chord(a: f64) -> f64 {
    2.0 * (0.5 * a.clamp(0.0, std::f64::consts::PI)).sin()
}

#[inline]
pub fn chordal(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn to_real(w: &[C64]) -> Vec<f64> {
    w.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn from_real(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub fn point_from_real(x: &[f64]) -> BoundaryPoint {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w: Vec<C64> = x.chunks(2).map(|p| C64::new(p[0] / nrm, p[1] / nrm)).collect();
    BoundaryPoint::from_sphere(&w).expect("normalized sphere point")
}

impl Cap {
    pub fn new(center: BoundaryPoint, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn center_real(&self) -> Vec<f64> {
        self.center.sphere_real()
    }

    pub fn angle(&self) -> f64 {
        chord_to_angle(self.radius)
    }

    /// `radius - |x - center|`; positive strictly inside.
    pub fn depth_real(&self, c: &[f64], x: &[f64]) -> f64 {
        self.radius - chordal(c, x)
    }

    pub fn dilated(&self, factor: f64) -> Cap {
        let a = (self.angle() * factor).min(std::f64::consts::PI);
        Cap { center: self.center.clone(), radius: angle_to_chord(a) }
    }

    /// Chordal gap between closest points of two caps; negative when they overlap.
    pub fn gap(&self, other: &Cap) -> f64 {
        let between = chord_to_angle(chordal(&self.center_real(), &other.center_real()));
        let free = between - self.angle() - other.angle();
        if free >= 0.0 {
            angle_to_chord(free)
        } else {
            -angle_to_chord(-free)
        }
    }

    /// Whether `self` lies inside `other`.
    pub fn inside(&self, other: &Cap) -> bool {
        let between = chord_to_angle(chordal(&self.center_real(), &other.center_real()));
        between + self.angle() <= other.angle() + 1e-15
    }
}

/// Unit vector of `R^m` from a Gaussian draw.
pub fn gaussian_unit<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Point at angle `a` from `c` in the direction of the unit vector `dir`
/// projected to the tangent space at `c`.
pub fn offset_point(c: &[f64], dir: &[f64], a: f64) -> Vec<f64> {
    let dot: f64 = c.iter().zip(dir).map(|(x, y)| x * y).sum();
    let mut t: Vec<f64> = dir.iter().zip(c).map(|(d, x)| d - dot * x).collect();
    let tn = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if tn < 1e-12 {
        // Direction parallel to c; any orthogonal vector will do.
        t = vec![0.0; c.len()];
        let j = if c[0].abs() < 0.9 { 0 } else { 1 };
        t[j] = 1.0;
        let dot = c[j];
        for (ti, ci) in t.iter_mut().zip(c) {
            *ti -= dot * ci;
        }
        let tn = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        t.iter_mut().for_each(|x| *x /= tn);
    } else {
        t.iter_mut().for_each(|x| *x /= tn);
    }
    let (s, co) = a.sin_cos();
    c.iter().zip(&t).map(|(x, y)| co * x + s * y).collect()
}

fn stream(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000_0000_0000 ^ tag)
}

/// First `count` points of a fixed sequence on the boundary circle of `cap`.
/// Larger counts extend smaller ones.
pub fn ring_samples(cap: &Cap, count: usize, tag: u64) -> Vec<Vec<f64>> {
    let c = cap.center_real();
    let a = cap.angle();
    let mut rng = stream(tag);
    (0..count).map(|_| offset_point(&c, &gaussian_unit(c.len(), &mut rng), a)).collect()
}

/// Centre, then alternating boundary-ring and interior points of `cap`.
pub fn cap_samples(cap: &Cap, count: usize, tag: u64) -> Vec<Vec<f64>> {
    let c = cap.center_real();
    let a = cap.angle();
    let mut rng = stream(tag);
    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(c.clone());
    }
    for j in 1..count {
        let dir = gaussian_unit(c.len(), &mut rng);
        let u: f64 = rng.random();
        let ang = if j % 2 == 1 { a } else { a * u.sqrt() };
        out.push(offset_point(&c, &dir, ang));
    }
    out
}

/// First `count` points of a fixed quasi-uniform sequence on the sphere `S^{m-1}`.
pub fn sphere_samples(m: usize, count: usize, tag: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(tag);
    (0..count).map(|_| gaussian_unit(m, &mut rng)).collect()
}

/// Small cap containing all points: approximate minimum enclosing ball
/// (Badoiu-Clarkson), centre projected to the sphere, radius to the farthest point.
pub fn enclosing_cap(points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let mut m = points[0].clone();
    for i in 1..=200 {
        let far = points.iter().max_by(|a, b| chordal(a, &m).total_cmp(&chordal(b, &m))).unwrap();
        let step = 1.0 / (i as f64 + 1.0);
        for (mi, fi) in m.iter_mut().zip(far) {
            *mi += (fi - *mi) * step;
        }
    }
    let nrm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c: Vec<f64> = if nrm > 1e-12 { m.iter().map(|x| x / nrm).collect() } else { points[0].clone() };
    let r = points.iter().map(|p| chordal(p, &c)).fold(0.0, f64::max);
    (c, r)
}
