//! The Heisenberg group `C^{n-1} x R`, its gauge and Euclidean metrics, and chains.

use crate::config::TOL;
use crate::error::{Error, Result};
use crate::hermitian::{ball_form, euclid_norm, BoundaryPoint, CMat, C64};

/// Finite point `(v, t)` of the Heisenberg group. The point at infinity is
/// represented by `None` wherever a chart can produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisPoint {
    v: Vec<C64>,
    t: f64,
}

impl HeisPoint {
    pub fn new(v: Vec<C64>, t: f64) -> Self {
        Self { v, t }
    }

    pub fn identity(n: usize) -> Self {
        Self { v: vec![C64::new(0.0, 0.0); n.saturating_sub(1)], t: 0.0 }
    }

    pub fn v(&self) -> &[C64] {
        &self.v
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `(-v, -t)`; inverse because `omega(v, -v) = 0`.
    pub fn inverse(&self) -> Self {
        Self { v: self.v.iter().map(|c| -c).collect(), t: -self.t }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Real coordinates `(Re v1, Im v1, ..., t)` in `R^{2n-1}`.
    pub fn to_real(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.v.iter().flat_map(|c| [c.re, c.im]).collect();
        out.push(self.t);
        out
    }
}

/// Standard symplectic form `sum x_{2i-1} y_{2i} - x_{2i} y_{2i-1}` with
/// interleaved real coordinates, i.e. `Im <v, w>`.
#[inline]
pub fn omega(v: &[C64], w: &[C64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a.re * b.im - a.im * b.re).sum()
}

fn same_dim(a: &HeisPoint, b: &HeisPoint) -> Result<()> {
    if a.v.len() != b.v.len() {
        return Err(Error::Input(format!("Heisenberg points of dimensions {} and {}", a.v.len(), b.v.len())));
    }
    Ok(())
}

/// `(v, s)(w, t) = (v + w, s + t + omega(v, w))`.
pub fn heis_mul(a: &HeisPoint, b: &HeisPoint) -> HeisPoint {
    let v = a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect();
    HeisPoint { v, t: a.t + b.t + omega(&a.v, &b.v) }
}

/// Gauge `(|v|^4 + t^2)^(1/4)`.
pub fn heis_norm(a: &HeisPoint) -> f64 {
    let r2: f64 = a.v.iter().map(|c| c.norm_sqr()).sum();
    (r2 * r2 + a.t * a.t).sqrt().sqrt()
}

/// Right-invariant gauge distance `|a b^-1|`.
pub fn heis_dist(a: &HeisPoint, b: &HeisPoint) -> Result<f64> {
    same_dim(a, b)?;
    Ok(heis_norm(&heis_mul(a, &b.inverse())))
}

pub fn euclid_dist(a: &HeisPoint, b: &HeisPoint) -> Result<f64> {
    same_dim(a, b)?;
    let mut s = (a.t - b.t).powi(2);
    for (x, y) in a.v.iter().zip(&b.v) {
        s += (x - y).norm_sqr();
    }
    Ok(s.sqrt())
}

/// Similitude `h_lambda(v, t) = (lambda v, |lambda|^2 t)`.
pub fn dilate(lambda: C64, a: &HeisPoint) -> Result<HeisPoint> {
    if lambda.norm() == 0.0 {
        return Err(Error::Domain("dilation by zero".into()));
    }
    Ok(HeisPoint { v: a.v.iter().map(|c| lambda * c).collect(), t: lambda.norm_sqr() * a.t })
}

/// Projection to `N/Z`.
pub fn project_vertical(a: &HeisPoint) -> Vec<C64> {
    a.v.clone()
}

/// Boundary circle of a complex geodesic, given by two of its points.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    p: BoundaryPoint,
    q: BoundaryPoint,
}

impl Chain {
    pub fn p(&self) -> &BoundaryPoint {
        &self.p
    }

    pub fn q(&self) -> &BoundaryPoint {
        &self.q
    }
}

fn lex_less(a: &BoundaryPoint, b: &BoundaryPoint) -> bool {
    for (x, y) in a.vector().iter().zip(b.vector().iter()) {
        for (u, w) in [(x.re, y.re), (x.im, y.im)] {
            if u != w {
                return u < w;
            }
        }
    }
    false
}

pub fn chain_through(p: &BoundaryPoint, q: &BoundaryPoint) -> Result<Chain> {
    if p.n() != q.n() {
        return Err(Error::Input("boundary points of different dimensions".into()));
    }
    if p.approx_eq(q, TOL.projective_eq) {
        return Err(Error::Domain("chain through a single point".into()));
    }
    let (p, q) = if lex_less(q, p) { (q.clone(), p.clone()) } else { (p.clone(), q.clone()) };
    Ok(Chain { p, q })
}

/// Smallest singular value of the matrix with unit rows `P, Q, X`; zero
/// exactly when `X` lies in the complex line spanned by `P` and `Q`.
pub fn chain_residual(c: &Chain, x: &BoundaryPoint) -> f64 {
    let d = x.n() + 1;
    if d < 3 {
        return 0.0;
    }
    let rows = [c.p.vector(), c.q.vector(), x.vector()];
    let m = CMat::from_fn(3, d, |i, j| rows[i][j] / euclid_norm(rows[i].as_slice()));
    let sv = m.singular_values();
    sv.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn point_on_chain(c: &Chain, x: &BoundaryPoint, tol: f64) -> bool {
    chain_residual(c, x) <= tol
}

/// Scale-free distance of `x` from the chain: `|X_perp|_J^2 |<P,Q>| / (|<X,P>| |<X,Q>|)`,
/// where `X_perp` is the component of `X` orthogonal to the span of `P, Q`.
/// It is invariant under isometries and vanishes exactly on the chain.
pub fn chain_cross_residual(c: &Chain, x: &BoundaryPoint) -> f64 {
    let (p, q, z) = (c.p.vector().as_slice(), c.q.vector().as_slice(), x.vector().as_slice());
    let pq = ball_form(p, q);
    let xp = ball_form(p, z);
    let xq = ball_form(q, z);
    // Orthogonal projection onto span(P, Q) for the (1,1) form with P, Q null.
    let perp: Vec<C64> = (0..z.len()).map(|i| z[i] - p[i] * (xq / pq.conj()) - q[i] * (xp / pq)).collect();
    let nperp = -ball_form(&perp, &perp).re;
    nperp.max(0.0) * pq.norm() / (xp.norm() * xq.norm())
}

/// The chain through `(0, s0)` and `(1, 0)` for `n = 2`, parametrized as the
/// circle `v = v0 + r0 e^{i theta}` lifted by `s = s0 - Im(conj(v0) v)`,
/// with `v0 = 1/2 + i y`, `y = -s0`, `r0 = |v0|`.
///
/// The vertical scale matches the group law with `omega = Im <v, w>`; with
/// `omega` doubled the same curve reads `y = -s0/2`, `s = s0 - 2 Im(conj(v0) v)`.
pub fn chain_param_n2(n: usize, s0: f64, theta: f64) -> Result<HeisPoint> {
    if n != 2 {
        return Err(Error::Domain(format!("chain parametrization is only defined for n = 2, got {n}")));
    }
    let v0 = chain_center_n2(s0);
    let r0 = v0.norm();
    let v = v0 + C64::from_polar(r0, theta);
    let s = s0 - (v0.conj() * v).im;
    Ok(HeisPoint::new(vec![v], s))
}

/// Centre `v0` of the projected circle of [`chain_param_n2`].
pub fn chain_center_n2(s0: f64) -> C64 {
    C64::new(0.5, -s0)
}
