//! Complex hyperbolic space and its boundary.
//!
//! Distances use the normalization `cosh d(x, y) = |<X,Y>| / sqrt(<X,X><Y,Y>)`,
//! for which sectional curvature lies in `[-4, -1]` and the one-parameter
//! group `a_t` translates its axis by `|t|`.

use crate::error::{Error, Result};
use crate::heisenberg::HeisPoint;
use crate::hermitian::{ball_form, euclid_norm, BoundaryPoint, CMat, CVec, GroupElement, HPoint, C64, ONE};

/// Cayley matrix taking Siegel-adapted coordinates (form `antidiag(1, -I, 1)`)
/// to ball coordinates. It is an involution.
pub fn cayley(n: usize) -> CMat {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut c = CMat::identity(n + 1, n + 1);
    c[(0, 0)] = h;
    c[(0, n)] = h;
    c[(n, 0)] = h;
    c[(n, n)] = -h;
    c
}

/// Siegel-adapted form: `<x, y> = conj(x0) yn + conj(xn) y0 - sum_mid conj(xi) yi`.
pub fn siegel_form(n: usize) -> CMat {
    let mut j = CMat::zeros(n + 1, n + 1);
    j[(0, n)] = ONE;
    j[(n, 0)] = ONE;
    for i in 1..n {
        j[(i, i)] = -ONE;
    }
    j
}

/// Iwasawa data: the fixed points of `AN` and `A`, a base point on their
/// geodesic, and the change of basis from Siegel-adapted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaFrame {
    pub xi_plus: BoundaryPoint,
    pub xi_minus: BoundaryPoint,
    pub o: HPoint,
    basis: CMat,
    basis_inv: CMat,
}

impl IwasawaFrame {
    /// Frame with `o` the ball centre, `xi_plus = e_n`, `xi_minus = -e_n` in
    /// sphere coordinates.
    pub fn standard(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Input("complex dimension must be positive".into()));
        }
        let c = cayley(n);
        Self::from_basis(c.clone(), c)
    }

    /// The standard frame moved by an isometry `g`.
    pub fn transformed(&self, g: &GroupElement) -> Result<Self> {
        let basis = g.matrix() * &self.basis;
        let basis_inv = &self.basis_inv * g.inverse().matrix();
        Self::from_basis(basis, basis_inv)
    }

    fn from_basis(basis: CMat, basis_inv: CMat) -> Result<Self> {
        let n = basis.nrows() - 1;
        let xi_plus = BoundaryPoint::new(basis.column(0).into_owned())?;
        let xi_minus = BoundaryPoint::new(basis.column(n).into_owned())?;
        let mut o_siegel = CVec::zeros(n + 1);
        o_siegel[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        o_siegel[n] = o_siegel[0];
        let o = HPoint::new(&basis * o_siegel)?;
        Ok(Self { xi_plus, xi_minus, o, basis, basis_inv })
    }

    pub fn n(&self) -> usize {
        self.basis.nrows() - 1
    }

    /// Ball-model matrix of a Siegel-coordinate matrix.
    pub fn from_siegel(&self, m: &CMat) -> CMat {
        &self.basis * m * &self.basis_inv
    }

    /// Siegel-coordinate matrix of a ball-model matrix.
    pub fn to_siegel(&self, m: &CMat) -> CMat {
        &self.basis_inv * m * &self.basis
    }

    pub fn siegel_to_ball(&self, z: &CVec) -> CVec {
        &self.basis * z
    }

    pub fn ball_to_siegel(&self, z: &CVec) -> CVec {
        &self.basis_inv * z
    }
}

/// Base point of a Gromov metric.
#[derive(Debug, Clone, PartialEq)]
pub struct GromovMetricTag {
    pub base: HPoint,
}

/// Chordal metric on the unit sphere of the ball model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SphericalMetricTag;

/// Hyperbolic distance between interior points.
pub fn dist(x: &HPoint, y: &HPoint) -> f64 {
    let (xs, ys) = (x.vector().as_slice(), y.vector().as_slice());
    let k = ball_form(xs, ys);
    let c = k.norm();
    if c < 2.0 {
        // sinh d = |Y - <X,Y> X|_J, free of the cancellation in acosh near 1.
        let perp: Vec<C64> = xs.iter().zip(ys).map(|(a, b)| b - k * a).collect();
        let s2 = -ball_form(&perp, &perp).re;
        s2.max(0.0).sqrt().asinh()
    } else {
        c.acosh()
    }
}

/// Busemann cocycle `b_xi(x, y) = lim d(x, xi_t) - d(y, xi_t)`.
pub fn busemann(xi: &BoundaryPoint, x: &HPoint, y: &HPoint) -> f64 {
    let z = xi.vector().as_slice();
    let ax = ball_form(z, x.vector().as_slice()).norm();
    let ay = ball_form(z, y.vector().as_slice()).norm();
    (ax / ay).ln()
}

/// Gromov visual distance seen from `tag.base`:
/// `d_x(xi, eta) = exp(-(b_xi(x, p) + b_eta(x, p)) / 2)` for `p` on the geodesic.
pub fn gromov_dist(tag: &GromovMetricTag, xi: &BoundaryPoint, eta: &BoundaryPoint) -> Result<f64> {
    if xi.approx_eq(eta, crate::config::TOL.projective_eq) {
        return Err(Error::Domain("Gromov distance between equal points".into()));
    }
    Ok(gromov_dist_total(tag, xi, eta))
}

/// As [`gromov_dist`] but returning 0 for equal points.
pub fn gromov_dist_total(tag: &GromovMetricTag, xi: &BoundaryPoint, eta: &BoundaryPoint) -> f64 {
    let x = tag.base.vector().as_slice();
    let (a, b) = (xi.vector().as_slice(), eta.vector().as_slice());
    let ab = ball_form(a, b).norm();
    let ax = ball_form(a, x).norm();
    let bx = ball_form(b, x).norm();
    (ab / (2.0 * ax * bx)).sqrt()
}

/// Unit-speed geodesic from `xi` (s -> -inf) to `eta` (s -> +inf).
pub fn geodesic_point(xi: &BoundaryPoint, eta: &BoundaryPoint, s: f64) -> Result<HPoint> {
    let (a, b) = (xi.vector(), eta.vector());
    let kappa = ball_form(a.as_slice(), b.as_slice());
    let k = kappa.norm();
    if k <= 1e-14 {
        return Err(Error::Domain("geodesic between equal boundary points".into()));
    }
    // Rescale so that <xi', eta'> = 1/2; then <p, p> = 1 exactly.
    let sc = 1.0 / (2.0 * k).sqrt();
    let phase = kappa.conj() / k;
    let ca = C64::new((-s).exp() * sc, 0.0);
    let cb = phase * (s.exp() * sc);
    let z = a * ca + b * cb;
    Ok(HPoint::from_unit_unchecked(z))
}

/// Chordal distance between sphere coordinates.
pub fn spherical_dist(xi: &BoundaryPoint, eta: &BoundaryPoint) -> f64 {
    let (a, b) = (xi.vector(), eta.vector());
    let (a0, b0) = (a[0], b[0]);
    let mut s = 0.0;
    for i in 1..a.len() {
        s += (a[i] / a0 - b[i] / b0).norm_sqr();
    }
    s.sqrt()
}

pub fn boundary_act(g: &GroupElement, xi: &BoundaryPoint) -> BoundaryPoint {
    BoundaryPoint::canonicalize(g.apply(xi.vector()))
}

fn check_v(v: &[C64], f: &IwasawaFrame) -> Result<()> {
    if v.len() + 1 != f.n() {
        return Err(Error::Input(format!("horizontal vector of length {} for n = {}", v.len(), f.n())));
    }
    Ok(())
}

/// Siegel-coordinate matrix of the Heisenberg translation `(v, t)`.
pub fn n_matrix_siegel(v: &[C64], t: f64) -> CMat {
    let n = v.len() + 1;
    let mut m = CMat::identity(n + 1, n + 1);
    let mut sq = 0.0;
    for (i, c) in v.iter().enumerate() {
        m[(0, i + 1)] = c.conj();
        m[(i + 1, n)] = *c;
        sq += c.norm_sqr();
    }
    m[(0, n)] = C64::new(0.5 * sq, t);
    m
}

/// Heisenberg translation as an isometry; a homomorphism for the group law
/// `(v, s)(w, t) = (v + w, s + t + Im <v, w>)`.
pub fn n_matrix(v: &[C64], t: f64, f: &IwasawaFrame) -> Result<GroupElement> {
    check_v(v, f)?;
    Ok(GroupElement::from_matrix_unchecked(f.from_siegel(&n_matrix_siegel(v, t))))
}

pub fn a_matrix_siegel(n: usize, t: f64) -> CMat {
    let mut m = CMat::identity(n + 1, n + 1);
    m[(0, 0)] = C64::new((-t).exp(), 0.0);
    m[(n, n)] = C64::new(t.exp(), 0.0);
    m
}

/// `a_t = diag(e^-t, I, e^t)` in Siegel coordinates; attracts towards
/// `xi_minus` for `t > 0` and satisfies `a_-t n(v,s) a_t = n(e^t v, e^2t s)`.
pub fn a_matrix(t: f64, f: &IwasawaFrame) -> GroupElement {
    GroupElement::from_matrix_unchecked(f.from_siegel(&a_matrix_siegel(f.n(), t)))
}

/// Chart `h -> g n(h)^-1 xi_minus` onto the boundary minus `g xi_plus`.
///
/// Using the inverse translation makes the chart intertwine left translation
/// on the boundary with right translation on the group, so the right-invariant
/// gauge metric is comparable to visual metrics.
pub fn phi_chart(g: &GroupElement, f: &IwasawaFrame, h: &HeisPoint) -> Result<BoundaryPoint> {
    check_v(h.v(), f)?;
    let z = f.siegel_to_ball(&heis_to_siegel(h));
    Ok(BoundaryPoint::canonicalize(g.apply(&z)))
}

pub(crate) fn heis_to_siegel(h: &HeisPoint) -> CVec {
    let n = h.v().len() + 1;
    let mut z = CVec::zeros(n + 1);
    let sq: f64 = h.v().iter().map(|c| c.norm_sqr()).sum();
    z[0] = C64::new(0.5 * sq, -h.t());
    for (i, c) in h.v().iter().enumerate() {
        z[i + 1] = -c;
    }
    z[n] = ONE;
    z
}

/// Heisenberg coordinates of a Siegel-coordinate null vector; `None` at `xi_plus`.
pub(crate) fn siegel_to_heis(y: &CVec) -> Option<HeisPoint> {
    let n = y.len() - 1;
    let last = y[n];
    if last.norm() <= 1e-13 * euclid_norm(y.as_slice()) {
        return None;
    }
    let v: Vec<C64> = (1..n).map(|i| -(y[i] / last)).collect();
    let t = -(y[0] / last).im;
    Some(HeisPoint::new(v, t))
}

/// Inverse of [`phi_chart`]; domain error at the excluded point `g xi_plus`.
pub fn phi_chart_inv(g: &GroupElement, f: &IwasawaFrame, xi: &BoundaryPoint) -> Result<HeisPoint> {
    let y = f.ball_to_siegel(&g.inverse().apply(xi.vector()));
    siegel_to_heis(&y).ok_or_else(|| Error::Domain("point is the excluded point of the chart".into()))
}

/// Heisenberg coordinates of a Siegel-frame null vector for the identity
/// chart, treating `xi_plus` as infinity.
pub fn boundary_to_heis(f: &IwasawaFrame, xi: &BoundaryPoint) -> Option<HeisPoint> {
    siegel_to_heis(&f.ball_to_siegel(xi.vector()))
}

pub fn heis_to_boundary(f: &IwasawaFrame, h: Option<&HeisPoint>) -> BoundaryPoint {
    match h {
        Some(h) => BoundaryPoint::canonicalize(f.siegel_to_ball(&heis_to_siegel(h))),
        None => f.xi_plus.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{boost, classify, fixed_boundary_points, form_residual, IsometryKind, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_point<R: Rng>(n: usize, rng: &mut R) -> HPoint {
        let w: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6))).collect();
        let r = euclid_norm(&w);
        let w: Vec<C64> = if r >= 0.95 { w.iter().map(|c| c * (0.9 / r)).collect() } else { w };
        HPoint::from_ball(&w).unwrap()
    }

    fn rand_boundary<R: Rng>(n: usize, rng: &mut R) -> BoundaryPoint {
        let w: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let r = euclid_norm(&w);
        BoundaryPoint::from_sphere(&w.iter().map(|c| c / r).collect::<Vec<_>>()).unwrap()
    }

    fn rand_v<R: Rng>(n: usize, rng: &mut R) -> Vec<C64> {
        (0..n - 1).map(|_| C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect()
    }

    fn max_abs(m: &CMat) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn cayley_is_involution_and_intertwines_forms() {
        for n in 1..5 {
            let c = cayley(n);
            assert!(max_abs(&(&c * &c - CMat::identity(n + 1, n + 1))) < 1e-15);
            let jb = crate::hermitian::HermitianSpace::ball(n).unwrap().form().clone();
            assert!(max_abs(&(c.adjoint() * jb * &c - siegel_form(n))) < 1e-15);
        }
    }

    #[test]
    fn frame_fixed_points() {
        let f = IwasawaFrame::standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = a_matrix(rng.random_range(-2.0..2.0), &f);
            assert!(boundary_act(&a, &f.xi_plus).approx_eq(&f.xi_plus, 1e-10));
            assert!(boundary_act(&a, &f.xi_minus).approx_eq(&f.xi_minus, 1e-10));
            let nm = n_matrix(&rand_v(2, &mut rng), rng.random_range(-2.0..2.0), &f).unwrap();
            assert!(boundary_act(&nm, &f.xi_plus).approx_eq(&f.xi_plus, 1e-10));
        }
        assert!(dist(&f.o, &HPoint::origin(2)) < 1e-15);
    }

    #[test]
    fn a_matrix_is_ball_boost() {
        let f = IwasawaFrame::standard(3).unwrap();
        let a = a_matrix(0.9, &f);
        assert!(max_abs(&(a.matrix() - boost(3, 0.9).matrix())) < 1e-14);
    }

    #[test]
    fn classify_siegel_diagonal_and_translation() {
        let f = IwasawaFrame::standard(2).unwrap();
        let a = GroupElement::new(f.from_siegel(&a_matrix_siegel(2, 1.0))).unwrap();
        assert_eq!(classify(&a).unwrap(), IsometryKind::Hyperbolic);
        // Fixed points are the isotropic coordinate axes of the Siegel frame.
        let (att, rep) = fixed_boundary_points(&a).unwrap();
        assert!(att.approx_eq(&f.xi_minus, 1e-10));
        assert!(rep.approx_eq(&f.xi_plus, 1e-10));
        let nm = n_matrix(&[C64::new(0.7, -0.2)], 0.4, &f).unwrap();
        assert_eq!(classify(&nm).unwrap(), IsometryKind::Parabolic);
        let vert = n_matrix(&[ZERO], 1.5, &f).unwrap();
        assert_eq!(classify(&vert).unwrap(), IsometryKind::Parabolic);
    }

    #[test]
    fn dist_basic_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = IwasawaFrame::standard(2).unwrap();
        let ao = a_matrix(0.7, &f).act_point(&f.o);
        assert!((dist(&f.o, &ao) - 0.7).abs() < 1e-9);
        let ao = a_matrix(-0.7, &f).act_point(&f.o);
        assert!((dist(&f.o, &ao) - 0.7).abs() < 1e-9);
        for _ in 0..100 {
            let (x, y, z) = (rand_point(2, &mut rng), rand_point(2, &mut rng), rand_point(2, &mut rng));
            assert!(dist(&x, &x) < 1e-7);
            assert!((dist(&x, &y) - dist(&y, &x)).abs() < 1e-12);
            assert!(dist(&x, &z) <= dist(&x, &y) + dist(&y, &z) + 1e-9);
            let g = GroupElement::random(2, 2.0, &mut rng);
            let d = dist(&g.act_point(&x), &g.act_point(&y));
            assert!((d - dist(&x, &y)).abs() < 1e-10);
        }
    }

    #[test]
    fn dist_matches_cosh_formula() {
        // Independent oracle: acosh of the normalized form value.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (x, y) = (rand_point(3, &mut rng), rand_point(3, &mut rng));
            let (xs, ys) = (x.vector().as_slice(), y.vector().as_slice());
            let c = ball_form(xs, ys).norm() / (ball_form(xs, xs).re * ball_form(ys, ys).re).sqrt();
            let oracle = c.max(1.0).acosh();
            assert!((dist(&x, &y) - oracle).abs() < 1e-7);
        }
    }

    #[test]
    fn busemann_cocycle_and_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let xi = rand_boundary(2, &mut rng);
            let (x, y, z) = (rand_point(2, &mut rng), rand_point(2, &mut rng), rand_point(2, &mut rng));
            assert_eq!(busemann(&xi, &x, &x), 0.0);
            let r = busemann(&xi, &x, &z) - busemann(&xi, &x, &y) - busemann(&xi, &y, &z);
            assert!(r.abs() <= 1e-12);
            // Limit oracle: march along the geodesic from an arbitrary other point towards xi.
            let eta = rand_boundary(2, &mut rng);
            let p = geodesic_point(&eta, &xi, 20.0).unwrap();
            let lim = dist(&x, &p) - dist(&y, &p);
            assert!((busemann(&xi, &x, &y) - lim).abs() <= 1e-6);
        }
    }

    #[test]
    fn geodesic_unit_speed_and_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (xi, eta) = (rand_boundary(2, &mut rng), rand_boundary(2, &mut rng));
            let s1 = rng.random_range(-2.5..2.5);
            let s2 = rng.random_range(-2.5..2.5);
            let (p1, p2) = (geodesic_point(&xi, &eta, s1).unwrap(), geodesic_point(&xi, &eta, s2).unwrap());
            assert!((dist(&p1, &p2) - (s1 - s2).abs()).abs() <= 1e-9);
            let q = geodesic_point(&eta, &xi, -s1).unwrap();
            assert!(dist(&p1, &q) < 1e-7);
            let far = BoundaryPoint::canonicalize(geodesic_point(&xi, &eta, 15.0).unwrap().vector().clone());
            assert!(far.projective_gap(&eta) < 1e-6);
        }
        let xi = rand_boundary(2, &mut rng);
        assert!(geodesic_point(&xi, &xi, 0.0).is_err());
    }

    #[test]
    fn gromov_definition_conformality_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let (xi, eta) = (rand_boundary(2, &mut rng), rand_boundary(2, &mut rng));
            let (x, y) = (rand_point(2, &mut rng), rand_point(2, &mut rng));
            let tx = GromovMetricTag { base: x.clone() };
            let ty = GromovMetricTag { base: y.clone() };
            let dx = gromov_dist(&tx, &xi, &eta).unwrap();
            // Busemann definition at several points of the geodesic.
            for s in [-1.0, 0.0, 0.8] {
                let p = geodesic_point(&xi, &eta, s).unwrap();
                let def = (-0.5 * (busemann(&xi, &x, &p) + busemann(&eta, &x, &p))).exp();
                assert!((def - dx).abs() <= 1e-10);
            }
            assert!((dx - gromov_dist(&tx, &eta, &xi).unwrap()).abs() <= 1e-12);
            let dy = gromov_dist(&ty, &xi, &eta).unwrap();
            let conf = (0.5 * (busemann(&xi, &x, &y) + busemann(&eta, &x, &y))).exp() * dx;
            assert!((dy - conf).abs() <= 1e-9);
            let g = GroupElement::random(2, 2.0, &mut rng);
            let tg = GromovMetricTag { base: g.act_point(&x) };
            let dg = gromov_dist(&tg, &boundary_act(&g, &xi), &boundary_act(&g, &eta)).unwrap();
            assert!((dg - dx).abs() <= 1e-9);
        }
        let xi = rand_boundary(2, &mut rng);
        assert!(gromov_dist(&GromovMetricTag { base: HPoint::origin(2) }, &xi, &xi).is_err());
    }

    #[test]
    fn spherical_vs_gromov_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tag = GromovMetricTag { base: HPoint::origin(2) };
        let mut c: f64 = 1.0;
        for _ in 0..10_000 {
            let (xi, eta) = (rand_boundary(2, &mut rng), rand_boundary(2, &mut rng));
            let de = spherical_dist(&xi, &eta);
            let dg = gromov_dist(&tag, &xi, &eta).unwrap();
            c = c.max(dg * dg / de).max(de / dg);
        }
        assert!(c <= 2.0 + 1e-9, "empirical constant {c}");
        let w = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let p = BoundaryPoint::from_sphere(&w).unwrap();
        let q = BoundaryPoint::from_sphere(&[-w[0], -w[1]]).unwrap();
        assert!((spherical_dist(&p, &q) - 2.0).abs() < 1e-14);
        assert_eq!(spherical_dist(&p, &p), 0.0);
    }

    #[test]
    fn boundary_action_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let xi = rand_boundary(2, &mut rng);
            let (g, h) = (GroupElement::random(2, 1.5, &mut rng), GroupElement::random(2, 1.5, &mut rng));
            let lhs = boundary_act(&g.mul(&h), &xi);
            let rhs = boundary_act(&g, &boundary_act(&h, &xi));
            assert!(lhs.approx_eq(&rhs, 1e-11));
            assert!(boundary_act(&g.inverse(), &boundary_act(&g, &xi)).approx_eq(&xi, 1e-10));
            assert!(boundary_act(&GroupElement::identity(2), &xi).approx_eq(&xi, 1e-15));
        }
        let g = boost(2, 1.0).conjugate_by(&GroupElement::random(2, 1.0, &mut rng));
        let (att, _) = fixed_boundary_points(&g).unwrap();
        let mut xi = rand_boundary(2, &mut rng);
        for _ in 0..60 {
            xi = boundary_act(&g, &xi);
        }
        assert!(xi.approx_eq(&att, 1e-9));
    }

    #[test]
    fn n_homomorphism_and_conjugation() {
        let f = IwasawaFrame::standard(3).unwrap();
        assert!(max_abs(&(n_matrix(&[ZERO, ZERO], 0.0, &f).unwrap().matrix() - CMat::identity(4, 4))) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let (v, w) = (rand_v(3, &mut rng), rand_v(3, &mut rng));
            let (s, t) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let a = HeisPoint::new(v.clone(), s);
            let b = HeisPoint::new(w.clone(), t);
            let ab = crate::heisenberg::heis_mul(&a, &b);
            let lhs = n_matrix(&v, s, &f).unwrap().mul(&n_matrix(&w, t, &f).unwrap());
            let rhs = n_matrix(ab.v(), ab.t(), &f).unwrap();
            assert!(max_abs(&(lhs.matrix() - rhs.matrix())) <= 1e-11);
            assert!(form_residual(rhs.matrix()) <= 1e-12);
        }
        let lam = 2f64.ln();
        for _ in 0..100 {
            let v = rand_v(3, &mut rng);
            let s = rng.random_range(-2.0..2.0);
            let lhs = a_matrix(-lam, &f).mul(&n_matrix(&v, s, &f).unwrap()).mul(&a_matrix(lam, &f));
            let v2: Vec<C64> = v.iter().map(|c| c * 2.0).collect();
            let rhs = n_matrix(&v2, 4.0 * s, &f).unwrap();
            assert!(max_abs(&(lhs.matrix() - rhs.matrix())) <= 1e-10);
        }
        let prod = a_matrix(0.3, &f).mul(&a_matrix(0.5, &f));
        assert!(max_abs(&(prod.matrix() - a_matrix(0.8, &f).matrix())) < 1e-14);
    }

    #[test]
    fn chart_round_trip_and_vertical_chain() {
        let f = IwasawaFrame::standard(2).unwrap();
        let id = GroupElement::identity(2);
        let origin = HeisPoint::new(vec![ZERO], 0.0);
        assert!(phi_chart(&id, &f, &origin).unwrap().approx_eq(&f.xi_minus, 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = GroupElement::random(2, 1.0, &mut rng);
        for _ in 0..10_000 {
            let h = HeisPoint::new(rand_v(2, &mut rng), rng.random_range(-3.0..3.0));
            let back = phi_chart_inv(&g, &f, &phi_chart(&g, &f, &h).unwrap()).unwrap();
            assert!((back.v()[0] - h.v()[0]).norm() <= 1e-10 && (back.t() - h.t()).abs() <= 1e-10);
        }
        let excluded = boundary_act(&g, &f.xi_plus);
        assert!(matches!(phi_chart_inv(&g, &f, &excluded), Err(Error::Domain(_))));
        let chain = crate::heisenberg::chain_through(&f.xi_minus, &f.xi_plus).unwrap();
        for k in 0..50 {
            let h = HeisPoint::new(vec![ZERO], -5.0 + 0.2 * k as f64);
            let p = phi_chart(&id, &f, &h).unwrap();
            assert!(crate::heisenberg::chain_residual(&chain, &p) <= 1e-9);
        }
    }

    #[test]
    fn left_translation_is_right_multiplication_in_chart() {
        let f = IwasawaFrame::standard(2).unwrap();
        let id = GroupElement::identity(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let h = HeisPoint::new(rand_v(2, &mut rng), rng.random_range(-1.0..1.0));
            let m = HeisPoint::new(rand_v(2, &mut rng), rng.random_range(-1.0..1.0));
            let moved = boundary_act(&n_matrix(m.v(), m.t(), &f).unwrap(), &phi_chart(&id, &f, &h).unwrap());
            let expect = crate::heisenberg::heis_mul(&h, &m.inverse());
            let got = phi_chart_inv(&id, &f, &moved).unwrap();
            assert!((got.v()[0] - expect.v()[0]).norm() < 1e-10 && (got.t() - expect.t()).abs() < 1e-10);
        }
    }
}
