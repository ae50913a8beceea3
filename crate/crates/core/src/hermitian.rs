//! Linear algebra over the Hermitian form of signature (1,n).
//!
//! The working form is the ball-model form `J = diag(1, -1, ..., -1)`:
//! `<x, y> = conj(x0) y0 - sum conj(xi) yi`. Interior points of complex
//! hyperbolic space are the vectors with `<z, z> > 0`, boundary points are
//! the nonzero null vectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Ball-model form evaluated on raw coordinate slices.
#[inline]
pub fn ball_form(x: &[C64], y: &[C64]) -> C64 {
    let mut acc = x[0].conj() * y[0];
    for i in 1..x.len() {
        acc -= x[i].conj() * y[i];
    }
    acc
}

#[inline]
pub(crate) fn euclid_norm(x: &[C64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `C^{n+1}` equipped with a Hermitian form of signature (1,n).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpace {
    n: usize,
    j: CMat,
}

impl HermitianSpace {
    /// The ball-model form `diag(1, -1, ..., -1)` on `C^{n+1}`.
    pub fn ball(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("complex dimension must be positive".into()));
        }
        let mut j = CMat::zeros(n + 1, n + 1);
        j[(0, 0)] = ONE;
        for i in 1..=n {
            j[(i, i)] = -ONE;
        }
        Ok(Self { n, j })
    }

    /// An arbitrary form matrix, checked for self-adjointness and signature (1,n).
    pub fn with_form(j: CMat) -> Result<Self> {
        if !j.is_square() || j.nrows() < 2 {
            return Err(Error::Input("form matrix must be square of size >= 2".into()));
        }
        let n = j.nrows() - 1;
        let asym = (&j - j.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if asym > TOL.form_symmetry {
            return Err(Error::Input(format!("form is not self-adjoint (residual {asym:e})")));
        }
        let eig = nalgebra::SymmetricEigen::new(j.clone());
        let pos = eig.eigenvalues.iter().filter(|&&e| e > 0.0).count();
        let neg = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
        if pos != 1 || neg != n {
            return Err(Error::Input(format!("form has signature ({pos},{neg}), expected (1,{n})")));
        }
        Ok(Self { n, j })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn form(&self) -> &CMat {
        &self.j
    }

    /// `x* J y`.
    pub fn form_eval(&self, x: &CVec, y: &CVec) -> Result<C64> {
        let d = self.n + 1;
        if x.len() != d || y.len() != d {
            return Err(Error::Input(format!("vectors of length {} and {} in a form of size {d}", x.len(), y.len())));
        }
        Ok((x.adjoint() * &self.j * y)[(0, 0)])
    }
}

/// Isometry type of an element of PU(1,n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
    Unknown,
}

/// A matrix preserving the ball-model form, i.e. a representative in U(1,n)
/// of an element of PU(1,n).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    m: CMat,
    kind: IsometryKind,
}

/// `max |(m* J m - J)_ij| / max(1, max |m_ij|^2)`.
///
/// The scale factor makes the residual meaningful for long words, whose
/// entries grow exponentially with word length.
pub fn form_residual(m: &CMat) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let mut acc = m[(0, a)].conj() * m[(0, b)];
            for i in 1..d {
                acc -= m[(i, a)].conj() * m[(i, b)];
            }
            let target = if a != b {
                0.0
            } else if a == 0 {
                1.0
            } else {
                -1.0
            };
            worst = worst.max((acc - target).norm());
        }
    }
    let scale = m.iter().map(|c| c.norm_sqr()).fold(1.0, f64::max);
    worst / scale
}

impl GroupElement {
    /// Validates the form-preservation invariant.
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() || m.nrows() < 2 {
            return Err(Error::Input("group element must be a square matrix of size >= 2".into()));
        }
        let r = form_residual(&m);
        if !(r <= TOL.isometry) {
            return Err(Error::Input(format!("matrix does not preserve the form (residual {r:e})")));
        }
        Ok(Self { m, kind: IsometryKind::Unknown })
    }

    pub(crate) fn from_matrix_unchecked(m: CMat) -> Self {
        Self { m, kind: IsometryKind::Unknown }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: CMat::identity(n + 1, n + 1), kind: IsometryKind::Elliptic }
    }

    /// Complex dimension `n` of the space the element acts on.
    pub fn n(&self) -> usize {
        self.m.nrows() - 1
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn kind(&self) -> IsometryKind {
        self.kind
    }

    /// Copy carrying its classification.
    pub fn classified(&self) -> Result<Self> {
        let kind = classify(self)?;
        Ok(Self { m: self.m.clone(), kind })
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement::from_matrix_unchecked(&self.m * &other.m)
    }

    /// Inverse via `J m* J`, exact for isometries.
    pub fn inverse(&self) -> GroupElement {
        let d = self.m.nrows();
        let mut inv = self.m.adjoint();
        for i in 0..d {
            for j in 0..d {
                if (i == 0) != (j == 0) {
                    inv[(i, j)] = -inv[(i, j)];
                }
            }
        }
        let kind = self.kind;
        GroupElement { m: inv, kind }
    }

    pub fn pow(&self, k: u32) -> GroupElement {
        let mut out = GroupElement::identity(self.n());
        for _ in 0..k {
            out = out.mul(self);
        }
        out.kind = if k == 0 { IsometryKind::Elliptic } else { self.kind };
        out
    }

    pub fn conjugate_by(&self, h: &GroupElement) -> GroupElement {
        let mut out = h.mul(self).mul(&h.inverse());
        out.kind = self.kind;
        out
    }

    pub fn apply(&self, z: &CVec) -> CVec {
        &self.m * z
    }

    /// Image of an interior point; the representative keeps unit norm.
    pub fn act_point(&self, x: &HPoint) -> HPoint {
        HPoint { z: &self.m * &x.z }
    }

    /// Projective distance `1 - |<a,b>_F| / (|a|_F |b|_F)` between two matrices.
    pub fn projective_distance(&self, other: &GroupElement) -> f64 {
        let ip: C64 = self.m.iter().zip(other.m.iter()).map(|(a, b)| a.conj() * b).sum();
        let na = self.m.norm();
        let nb = other.m.norm();
        (1.0 - ip.norm() / (na * nb)).max(0.0)
    }

    /// Haar-random element of the compact subgroup `U(n)` fixing the origin.
    pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupElement {
        let u = random_unitary(n, rng);
        let mut m = CMat::identity(n + 1, n + 1);
        m.view_mut((1, 1), (n, n)).copy_from(&u);
        GroupElement { m, kind: IsometryKind::Elliptic }
    }

    /// Random isometry `k1 a_t k2` with `|t| <= max_t`.
    pub fn random<R: Rng + ?Sized>(n: usize, max_t: f64, rng: &mut R) -> GroupElement {
        let k1 = Self::random_rotation(n, rng);
        let k2 = Self::random_rotation(n, rng);
        let t = rng.random_range(-max_t..=max_t);
        k1.mul(&boost(n, t)).mul(&k2)
    }
}

/// Boost along the last coordinate axis: the one-parameter group whose
/// attracting fixed point (for `t > 0`) is `(1, 0, ..., 0, -1)`.
pub fn boost(n: usize, t: f64) -> GroupElement {
    let mut m = CMat::identity(n + 1, n + 1);
    let (c, s) = (t.cosh(), t.sinh());
    m[(0, 0)] = C64::new(c, 0.0);
    m[(n, n)] = C64::new(c, 0.0);
    m[(0, n)] = C64::new(-s, 0.0);
    m[(n, 0)] = C64::new(-s, 0.0);
    GroupElement { m, kind: if t == 0.0 { IsometryKind::Elliptic } else { IsometryKind::Hyperbolic } }
}

pub(crate) fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Interior point; the representative satisfies `<z, z> = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    z: CVec,
}

impl HPoint {
    pub fn new(z: CVec) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::Input("point needs at least two coordinates".into()));
        }
        let q = ball_form(z.as_slice(), z.as_slice()).re;
        if !(q > 0.0) {
            return Err(Error::Domain(format!("vector with <z,z> = {q:e} is not an interior point")));
        }
        Ok(Self { z: z / C64::new(q.sqrt(), 0.0) })
    }

    /// Centre of the ball model.
    pub fn origin(n: usize) -> Self {
        let mut z = CVec::zeros(n + 1);
        z[0] = ONE;
        Self { z }
    }

    /// Point with ball coordinates `w`, `|w| < 1`.
    pub fn from_ball(w: &[C64]) -> Result<Self> {
        let mut z = CVec::zeros(w.len() + 1);
        z[0] = ONE;
        for (i, c) in w.iter().enumerate() {
            z[i + 1] = *c;
        }
        Self::new(z)
    }

    pub(crate) fn from_unit_unchecked(z: CVec) -> Self {
        Self { z }
    }

    pub fn vector(&self) -> &CVec {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    pub fn ball_coords(&self) -> Vec<C64> {
        let z0 = self.z[0];
        self.z.iter().skip(1).map(|c| c / z0).collect()
    }
}

/// Boundary point: canonical representative of a null line, with unit
/// Euclidean norm and real positive first coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    z: CVec,
}

impl BoundaryPoint {
    pub fn new(z: CVec) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::Input("point needs at least two coordinates".into()));
        }
        let nrm = euclid_norm(z.as_slice());
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Domain("zero or non-finite vector".into()));
        }
        let q = ball_form(z.as_slice(), z.as_slice()).re;
        if q.abs() > TOL.null_vector * nrm * nrm {
            return Err(Error::Domain(format!("vector is not null (relative residual {:e})", q.abs() / (nrm * nrm))));
        }
        Ok(Self::canonicalize(z))
    }

    /// Canonical scaling without the null check; used on images of boundary
    /// points under isometries.
    pub(crate) fn canonicalize(z: CVec) -> Self {
        let nrm = euclid_norm(z.as_slice());
        let lead = z.iter().find(|c| c.norm() > 1e-300 * nrm.max(1e-300)).copied().unwrap_or(ONE);
        let phase = lead.conj() / lead.norm();
        let s = phase / nrm;
        Self { z: z.map(|c| c * s) }
    }

    /// Stores an already canonical representative bit for bit.
    pub(crate) fn from_canonical_unchecked(z: CVec) -> Self {
        Self { z }
    }

    /// Boundary point with unit-sphere coordinates `w`.
    pub fn from_sphere(w: &[C64]) -> Result<Self> {
        let r = euclid_norm(w);
        if (r - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("sphere coordinates have norm {r}")));
        }
        let mut z = CVec::zeros(w.len() + 1);
        z[0] = ONE;
        for (i, c) in w.iter().enumerate() {
            z[i + 1] = *c / r;
        }
        Ok(Self::canonicalize(z))
    }

    pub fn vector(&self) -> &CVec {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    /// Coordinates `w` on the unit sphere `S^{2n-1} ⊂ C^n`.
    pub fn sphere_coords(&self) -> Vec<C64> {
        let z0 = self.z[0];
        self.z.iter().skip(1).map(|c| c / z0).collect()
    }

    /// Sphere coordinates as a real vector of length `2n` (interleaved re/im).
    pub fn sphere_real(&self) -> Vec<f64> {
        self.sphere_coords().iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        self.z.iter().zip(other.z.iter()).all(|(a, b)| (a - b).norm() <= tol)
    }

    pub fn projective_gap(&self, other: &BoundaryPoint) -> f64 {
        self.z.iter().zip(other.z.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

pub fn form_eval(x: &CVec, y: &CVec, space: &HermitianSpace) -> Result<C64> {
    space.form_eval(x, y)
}

/// Projects an approximate isometry back onto U(1,n).
///
/// Newton iteration for the generalized polar decomposition,
/// `X <- (X + J X^{-*} J) / 2`, which converges quadratically from any
/// matrix with small form residual and moves it by O(residual).
pub fn normalize_isometry(g: &GroupElement) -> Result<GroupElement> {
    let start = form_residual(&g.m);
    if !(start <= TOL.normalize_max_residual) {
        return Err(Error::Conditioning(format!(
            "form residual {start:e} exceeds {:e}; word too long or matrix degenerate",
            TOL.normalize_max_residual
        )));
    }
    let d = g.m.nrows();
    let mut x = g.m.clone();
    let mut res = start;
    for _ in 0..30 {
        if res <= 1e-15 {
            break;
        }
        let inv_adj = x
            .adjoint()
            .try_inverse()
            .ok_or_else(|| Error::Conditioning("singular matrix during renormalization".into()))?;
        let mut reflected = inv_adj;
        for i in 0..d {
            for j in 0..d {
                if (i == 0) != (j == 0) {
                    reflected[(i, j)] = -reflected[(i, j)];
                }
            }
        }
        let next = (&x + &reflected) * C64::new(0.5, 0.0);
        let next_res = form_residual(&next);
        if !(next_res <= res) && res <= TOL.normalize_target {
            break;
        }
        x = next;
        res = next_res;
    }
    if !(res <= TOL.normalize_target) {
        return Err(Error::Conditioning(format!("renormalization stalled at residual {res:e}")));
    }
    Ok(GroupElement { m: x, kind: g.kind })
}

fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Right singular vectors of `a` whose singular value is below `thresh`,
/// returned as columns, plus the smallest singular vector in any case.
fn null_space(a: &CMat, thresh: f64) -> (Vec<CVec>, CVec, f64) {
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let row = |i: usize| -> CVec { vt.row(i).adjoint().into_owned() };
    let smallest = row(order[0]);
    let smin = svd.singular_values[order[0]];
    let basis = order.iter().filter(|&&i| svd.singular_values[i] <= thresh).map(|&i| row(i)).collect();
    (basis, smallest, smin)
}

/// Classifies an isometry by its eigenstructure.
///
/// Hyperbolic: an eigenvalue `λ` with `|λ| > 1 + tol` whose partner
/// `1/conj(λ)` is also an eigenvalue. Elliptic: every eigenvalue on the unit
/// circle and the matrix diagonalizable, detected by a positive vector in the
/// eigenspace of some eigenvalue. Parabolic otherwise.
pub fn classify(g: &GroupElement) -> Result<IsometryKind> {
    let m = &g.m;
    let d = m.nrows();
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let ev = eigenvalues(m)?;
    if ev.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    // Jordan blocks of a unipotent part have size at most 3, so a defective
    // cluster is perturbed by up to ~eps^(1/3) * |m|.
    let floor = 10.0 * f64::EPSILON.cbrt() * scale.max(1.0);
    let tol = TOL.classify.max(floor);
    let (imax, lmax) =
        ev.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|(i, e)| (i, *e)).unwrap();
    let r = lmax.norm();
    if r > 1.0 + tol {
        let partner = ONE / lmax.conj();
        let spread = (lmax - partner).norm();
        let paired = ev.iter().enumerate().any(|(i, e)| i != imax && (e - partner).norm() <= 0.25 * spread);
        if paired {
            return Ok(IsometryKind::Hyperbolic);
        }
    }
    // Unit-circle spectrum: elliptic iff some eigenspace contains an interior vector.
    for &lam in &ev {
        let shifted = m - CMat::identity(d, d) * lam;
        let (basis, _, _) = null_space(&shifted, 1e-7 * scale.max(1.0));
        if basis.is_empty() {
            continue;
        }
        // Restricted form on the eigenspace; a positive eigenvalue means an
        // interior fixed point.
        let k = basis.len();
        let gram = CMat::from_fn(k, k, |a, b| ball_form(basis[a].as_slice(), basis[b].as_slice()));
        let herm = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        if eig.eigenvalues.iter().any(|&e| e > 1e-6) {
            return Ok(IsometryKind::Elliptic);
        }
    }
    Ok(IsometryKind::Parabolic)
}

/// Attracting and repelling fixed points of a hyperbolic isometry.
pub fn fixed_boundary_points(g: &GroupElement) -> Result<(BoundaryPoint, BoundaryPoint)> {
    let kind = if g.kind == IsometryKind::Unknown { classify(g)? } else { g.kind };
    if kind != IsometryKind::Hyperbolic {
        return Err(Error::Domain(format!("fixed points requested for a {kind:?} element")));
    }
    let m = &g.m;
    let d = m.nrows();
    let ev = eigenvalues(m)?;
    let lmax = *ev.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    let lmin = *ev.iter().min_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    let vec_for = |lam: C64| -> CVec {
        let (_, v, _) = null_space(&(m - CMat::identity(d, d) * lam), 0.0);
        v
    };
    let mut att = vec_for(lmax);
    let mut rep = vec_for(lmin);
    // A few power steps polish the eigenvectors when the spectral gap is large.
    let inv = g.inverse();
    for _ in 0..4 {
        let a2 = m * &att;
        att = &a2 / C64::new(euclid_norm(a2.as_slice()), 0.0);
        let r2 = inv.matrix() * &rep;
        rep = &r2 / C64::new(euclid_norm(r2.as_slice()), 0.0);
    }
    let att = BoundaryPoint::new(att).map_err(|e| Error::Numeric(format!("attracting point: {e}")))?;
    let rep = BoundaryPoint::new(rep).map_err(|e| Error::Numeric(format!("repelling point: {e}")))?;
    Ok((att, rep))
}

/// Growth rate `d(o, g^k o) / k` with the values at every power of two up to `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationLength {
    pub value: f64,
    pub history: Vec<(u32, f64)>,
}

pub fn translation_length(g: &GroupElement, o: &HPoint, k: u32) -> Result<TranslationLength> {
    if k < 8 {
        return Err(Error::Input("translation length needs k >= 8".into()));
    }
    let kind = if g.kind == IsometryKind::Unknown { classify(g)? } else { g.kind };
    if kind != IsometryKind::Hyperbolic {
        return Err(Error::Domain(format!("translation length requested for a {kind:?} element")));
    }
    let mut x = o.clone();
    let mut history = Vec::new();
    let mut next_report = 1u32;
    for j in 1..=k {
        x = g.act_point(&x);
        if j == next_report || j == k {
            let d = crate::hyperbolic::dist(o, &x);
            if !d.is_finite() {
                return Err(Error::Conditioning(format!("distance overflow at power {j}")));
            }
            history.push((j, d / j as f64));
            if j == next_report {
                next_report = next_report.saturating_mul(2);
            }
        }
    }
    let value = history.last().map(|h| h.1).unwrap_or(0.0);
    Ok(TranslationLength { value, history })
}
