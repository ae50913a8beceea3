//! Fixed-seed invariant battery over the hermitian, hyperbolic and
//! heisenberg modules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::heisenberg::{
    chain_param_n2, chain_residual, chain_through, dilate, euclid_dist, heis_dist, heis_mul, omega, HeisPoint,
};
use crate::hermitian::{
    ball_form, boost, classify, euclid_norm, fixed_boundary_points, form_residual, normalize_isometry, BoundaryPoint,
    CMat, CVec, GroupElement, HPoint, HermitianSpace, IsometryKind, C64,
};
use crate::hyperbolic::{
    a_matrix, boundary_act, busemann, dist, geodesic_point, gromov_dist, heis_to_boundary, n_matrix, phi_chart,
    GromovMetricTag, IwasawaFrame,
};

/// Outcome of one invariant: the worst residual over all instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub id: &'static str,
    pub group: &'static str,
    pub instances: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

type CheckFn = fn(&mut ChaCha8Rng, usize) -> (usize, f64);

struct Entry {
    id: &'static str,
    group: &'static str,
    tolerance: f64,
    run: CheckFn,
}

fn worst(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

fn rand_h(rng: &mut ChaCha8Rng, n: usize, r: f64) -> HeisPoint {
    let v = (0..n - 1).map(|_| C64::new(rng.random_range(-r..r), rng.random_range(-r..r))).collect();
    HeisPoint::new(v, rng.random_range(-r..r))
}

fn heis_gap(a: &HeisPoint, b: &HeisPoint) -> f64 {
    let dv = a.v().iter().zip(b.v()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    dv.max((a.t() - b.t()).abs())
}

fn rand_point(rng: &mut ChaCha8Rng, n: usize) -> HPoint {
    let w: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6))).collect();
    let r = euclid_norm(&w);
    let w: Vec<C64> = if r >= 0.95 { w.iter().map(|c| c * (0.9 / r)).collect() } else { w };
    HPoint::from_ball(&w).expect("inside the ball")
}

fn rand_boundary(rng: &mut ChaCha8Rng, n: usize) -> BoundaryPoint {
    let w: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let r = euclid_norm(&w);
    BoundaryPoint::from_sphere(&w.iter().map(|c| c / r).collect::<Vec<_>>()).expect("unit vector")
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn frame(n: usize) -> IwasawaFrame {
    IwasawaFrame::standard(n).expect("standard frame")
}

fn heis_associativity(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (a, b, c) = (rand_h(rng, 3, 2.0), rand_h(rng, 3, 2.0), rand_h(rng, 3, 2.0));
        heis_gap(&heis_mul(&heis_mul(&a, &b), &c), &heis_mul(&a, &heis_mul(&b, &c)))
    }));
    (count, r)
}

fn heis_inverse_identity(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let id = HeisPoint::identity(3);
    let r = worst((0..count).map(|_| {
        let a = rand_h(rng, 3, 2.0);
        heis_gap(&heis_mul(&a, &a.inverse()), &id)
            .max(heis_gap(&heis_mul(&a.inverse(), &a), &id))
            .max(heis_gap(&heis_mul(&a, &id), &a))
            .max(heis_gap(&heis_mul(&id, &a), &a))
    }));
    (count, r)
}

fn heis_right_invariance(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (a, b, c) = (rand_h(rng, 2, 1.0), rand_h(rng, 2, 1.0), rand_h(rng, 2, 1.0));
        let d = heis_dist(&a, &b).unwrap_or(f64::NAN);
        (d - heis_dist(&heis_mul(&a, &c), &heis_mul(&b, &c)).unwrap_or(f64::NAN)).abs()
    }));
    (count, r)
}

fn heis_dilation_ratio(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let lam = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (a, b) = (rand_h(rng, 2, 1.0), rand_h(rng, 2, 1.0));
        let d = heis_dist(&a, &b).unwrap_or(f64::NAN);
        match (dilate(lam, &a), dilate(lam, &b)) {
            (Ok(x), Ok(y)) => (heis_dist(&x, &y).unwrap_or(f64::NAN) - lam.norm() * d).abs(),
            _ => f64::NAN,
        }
    }));
    (count, r)
}

fn heis_dilation_homomorphism(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let lam = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (a, b) = (rand_h(rng, 3, 1.0), rand_h(rng, 3, 1.0));
        match (dilate(lam, &heis_mul(&a, &b)), dilate(lam, &a), dilate(lam, &b)) {
            (Ok(ab), Ok(x), Ok(y)) => heis_gap(&ab, &heis_mul(&x, &y)),
            _ => f64::NAN,
        }
    }));
    (count, r)
}

fn omega_antisymmetry(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (a, b) = (rand_h(rng, 3, 2.0), rand_h(rng, 3, 2.0));
        (omega(a.v(), b.v()) + omega(b.v(), a.v())).abs() + omega(a.v(), a.v()).abs()
    }));
    (count, r)
}

fn fiber_identity(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let a = rand_h(rng, 2, 1.0);
        let b = HeisPoint::new(a.v().to_vec(), rng.random_range(-1.0..1.0));
        let dh = heis_dist(&a, &b).unwrap_or(f64::NAN);
        (euclid_dist(&a, &b).unwrap_or(f64::NAN) - dh * dh).abs()
    }));
    (count, r)
}

/// Largest of `d_E / d_H` and `d_H^2 / d_E` over pairs in the unit box.
fn band_constant(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let pairs = 10 * count;
    let r = worst((0..pairs).map(|_| {
        let (a, b) = (rand_h(rng, 2, 1.0), rand_h(rng, 2, 1.0));
        let dh = heis_dist(&a, &b).unwrap_or(f64::NAN);
        let de = euclid_dist(&a, &b).unwrap_or(f64::NAN);
        if dh == 0.0 && de == 0.0 {
            1.0
        } else {
            (de / dh).max(dh * dh / de)
        }
    }));
    (pairs, r)
}

/// Infimum over the fibre of `b`, found by a grid search plus the exact
/// minimizer, against the horizontal distance.
fn quotient_metric(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let runs = (count / 100).max(3);
    let r = worst((0..runs).map(|_| {
        let (a, b) = (rand_h(rng, 2, 1.0), rand_h(rng, 2, 1.0));
        let target = (a.v()[0] - b.v()[0]).norm();
        let om = omega(a.v(), b.v());
        let mut best_h = heis_dist(&a, &HeisPoint::new(b.v().to_vec(), a.t() - om)).unwrap_or(f64::NAN);
        let mut best_e = euclid_dist(&a, &HeisPoint::new(b.v().to_vec(), a.t())).unwrap_or(f64::NAN);
        for k in 0..=1000 {
            let bb = HeisPoint::new(b.v().to_vec(), -3.0 + 6.0 * k as f64 / 1000.0);
            best_h = best_h.min(heis_dist(&a, &bb).unwrap_or(f64::NAN));
            best_e = best_e.min(euclid_dist(&a, &bb).unwrap_or(f64::NAN));
        }
        (best_h - target).abs().max((best_e - target).abs())
    }));
    (runs, r)
}

fn busemann_limit(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (xi, eta) = (rand_boundary(rng, 2), rand_boundary(rng, 2));
        let (x, y) = (rand_point(rng, 2), rand_point(rng, 2));
        match geodesic_point(&eta, &xi, 20.0) {
            Ok(p) => (busemann(&xi, &x, &y) - (dist(&x, &p) - dist(&y, &p))).abs(),
            Err(_) => f64::NAN,
        }
    }));
    (count, r)
}

fn busemann_cocycle(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let xi = rand_boundary(rng, 2);
        let (x, y, z) = (rand_point(rng, 2), rand_point(rng, 2), rand_point(rng, 2));
        (busemann(&xi, &x, &z) - busemann(&xi, &x, &y) - busemann(&xi, &y, &z)).abs()
    }));
    (count, r)
}

fn gromov_conformality(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (xi, eta) = (rand_boundary(rng, 2), rand_boundary(rng, 2));
        let (x, y) = (rand_point(rng, 2), rand_point(rng, 2));
        let dx = gromov_dist(&GromovMetricTag { base: x.clone() }, &xi, &eta);
        let dy = gromov_dist(&GromovMetricTag { base: y.clone() }, &xi, &eta);
        match (dx, dy) {
            (Ok(dx), Ok(dy)) => (dy - (0.5 * (busemann(&xi, &x, &y) + busemann(&eta, &x, &y))).exp() * dx).abs(),
            _ => f64::NAN,
        }
    }));
    (count, r)
}

fn gromov_equivariance(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (xi, eta) = (rand_boundary(rng, 2), rand_boundary(rng, 2));
        let x = rand_point(rng, 2);
        let g = GroupElement::random(2, 2.0, rng);
        let d = gromov_dist(&GromovMetricTag { base: x.clone() }, &xi, &eta);
        let dg =
            gromov_dist(&GromovMetricTag { base: g.act_point(&x) }, &boundary_act(&g, &xi), &boundary_act(&g, &eta));
        match (d, dg) {
            (Ok(d), Ok(dg)) => (d - dg).abs(),
            _ => f64::NAN,
        }
    }));
    (count, r)
}

fn geodesic_unit_speed(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (xi, eta) = (rand_boundary(rng, 2), rand_boundary(rng, 2));
        let (s1, s2) = (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
        match (geodesic_point(&xi, &eta, s1), geodesic_point(&xi, &eta, s2)) {
            (Ok(p), Ok(q)) => (dist(&p, &q) - (s1 - s2).abs()).abs(),
            _ => f64::NAN,
        }
    }));
    (count, r)
}

/// `a_{-t} n(v, s) a_t = n(e^t v, e^{2t} s)`, relative to the largest entry.
fn iwasawa_conjugation(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let runs = (count / 10).max(10);
    let f = frame(3);
    let r = worst((0..runs).map(|_| {
        let v: Vec<C64> = (0..2).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let (s, t): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.5..1.5));
        let scaled: Vec<C64> = v.iter().map(|c| c * t.exp()).collect();
        match (n_matrix(&v, s, &f), n_matrix(&scaled, (2.0 * t).exp() * s, &f)) {
            (Ok(nm), Ok(rhs)) => {
                let lhs = a_matrix(-t, &f).mul(&nm).mul(&a_matrix(t, &f));
                max_abs(&(lhs.matrix() - rhs.matrix())) / max_abs(rhs.matrix()).max(1.0)
            }
            _ => f64::NAN,
        }
    }));
    (runs, r)
}

/// The explicit circle through `(0, s0)` and `(1, 0)`, 64 samples per circle.
fn chain_parametrization(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let circles = (count / 64).max(4);
    let f = frame(2);
    let b = heis_to_boundary(&f, Some(&HeisPoint::new(vec![C64::new(1.0, 0.0)], 0.0)));
    let r = worst((0..circles).map(|_| {
        let s0 = rng.random_range(-3.0..3.0);
        let a = heis_to_boundary(&f, Some(&HeisPoint::new(vec![C64::new(0.0, 0.0)], s0)));
        let Ok(c) = chain_through(&a, &b) else { return f64::NAN };
        worst((0..64).map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / 64.0;
            match chain_param_n2(2, s0, theta) {
                Ok(h) => {
                    // Control: a horizontal nudge must leave the chain.
                    let off = HeisPoint::new(vec![h.v()[0] + C64::new(0.0, 0.05)], h.t());
                    if chain_residual(&c, &heis_to_boundary(&f, Some(&off))) <= 1e-6 {
                        return f64::NAN;
                    }
                    chain_residual(&c, &heis_to_boundary(&f, Some(&h)))
                }
                Err(_) => f64::NAN,
            }
        }))
    }));
    (64 * circles, r)
}

/// The chart image of the vertical line `{0} x R` lies on the chain through
/// `g xi_-` and `g xi_+`.
fn vertical_chain(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let f = frame(2);
    let charts: Vec<GroupElement> =
        std::iter::once(GroupElement::identity(2)).chain((0..3).map(|_| GroupElement::random(2, 1.0, rng))).collect();
    let per = (count / charts.len()).max(16);
    let mut out = 0.0f64;
    for g in &charts {
        let Ok(c) = chain_through(&boundary_act(g, &f.xi_minus), &boundary_act(g, &f.xi_plus)) else {
            return (0, f64::INFINITY);
        };
        out = out.max(worst((0..per).map(|_| {
            let h = HeisPoint::new(vec![C64::new(0.0, 0.0)], rng.random_range(-50.0..50.0));
            phi_chart(g, &f, &h).map_or(f64::NAN, |p| chain_residual(&c, &p))
        })));
    }
    (per * charts.len(), out)
}

fn form_symmetry(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let s = HermitianSpace::ball(3).expect("ball form");
    let r = worst((0..count).map(|_| {
        let x = CVec::from_fn(4, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let y = CVec::from_fn(4, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        match (s.form_eval(&x, &y), s.form_eval(&y, &x)) {
            (Ok(a), Ok(b)) => (a - b.conj()).norm().max((a - ball_form(x.as_slice(), y.as_slice())).norm()),
            _ => f64::NAN,
        }
    }));
    (count, r)
}

fn normalized_products(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let runs = (count / 10).max(10);
    let r = worst((0..runs).map(|_| {
        let (g, h) = (GroupElement::random(2, 1.0, rng), GroupElement::random(2, 1.0, rng));
        normalize_isometry(&g.mul(&h)).map_or(f64::NAN, |p| form_residual(p.matrix()))
    }));
    (runs, r)
}

/// Number of conjugates whose type differs from the original's.
fn classify_conjugation(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let runs = (count / 10).max(10);
    let hyp = boost(2, 0.8);
    let rot = GroupElement::random_rotation(2, rng);
    let mut bad = 0usize;
    for _ in 0..runs {
        let h = GroupElement::random(2, 1.0, rng);
        bad += usize::from(classify(&hyp.conjugate_by(&h)).ok() != Some(IsometryKind::Hyperbolic));
        bad += usize::from(classify(&rot.conjugate_by(&h)).ok() != Some(IsometryKind::Elliptic));
    }
    (2 * runs, bad as f64)
}

fn fixed_point_equivariance(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let runs = (count / 10).max(10);
    let g = boost(2, 1.3);
    let Ok((att, rep)) = fixed_boundary_points(&g) else { return (0, f64::INFINITY) };
    let r = worst((0..runs).map(|_| {
        let h = GroupElement::random(2, 1.5, rng);
        match fixed_boundary_points(&g.conjugate_by(&h)) {
            Ok((ca, cr)) => ca.projective_gap(&boundary_act(&h, &att)).max(cr.projective_gap(&boundary_act(&h, &rep))),
            Err(_) => f64::NAN,
        }
    }));
    (runs, r)
}

fn dist_invariance(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let (x, y) = (rand_point(rng, 2), rand_point(rng, 2));
        let g = GroupElement::random(2, 2.0, rng);
        (dist(&g.act_point(&x), &g.act_point(&y)) - dist(&x, &y)).abs()
    }));
    (count, r)
}

fn action_composition(rng: &mut ChaCha8Rng, count: usize) -> (usize, f64) {
    let r = worst((0..count).map(|_| {
        let xi = rand_boundary(rng, 2);
        let (g, h) = (GroupElement::random(2, 1.5, rng), GroupElement::random(2, 1.5, rng));
        let lhs = boundary_act(&g.mul(&h), &xi);
        let rhs = boundary_act(&g, &boundary_act(&h, &xi));
        lhs.projective_gap(&rhs).max(boundary_act(&g.inverse(), &boundary_act(&g, &xi)).projective_gap(&xi))
    }));
    (count, r)
}

const BATTERY: &[Entry] = &[
    Entry { id: "heisenberg.associativity", group: "algebraic", tolerance: 1e-13, run: heis_associativity },
    Entry { id: "heisenberg.inverse-identity", group: "algebraic", tolerance: 1e-13, run: heis_inverse_identity },
    Entry { id: "heisenberg.right-invariance", group: "algebraic", tolerance: 1e-13, run: heis_right_invariance },
    Entry { id: "heisenberg.dilation-ratio", group: "algebraic", tolerance: 1e-13, run: heis_dilation_ratio },
    Entry {
        id: "heisenberg.dilation-homomorphism",
        group: "algebraic",
        tolerance: 1e-13,
        run: heis_dilation_homomorphism,
    },
    Entry { id: "heisenberg.omega-antisymmetry", group: "algebraic", tolerance: 1e-13, run: omega_antisymmetry },
    Entry { id: "heisenberg.fiber-identity", group: "euclidean-comparison", tolerance: 1e-12, run: fiber_identity },
    Entry { id: "heisenberg.band-constant", group: "euclidean-comparison", tolerance: 10.0, run: band_constant },
    Entry { id: "heisenberg.quotient-metric", group: "euclidean-comparison", tolerance: 1e-6, run: quotient_metric },
    Entry { id: "hyperbolic.busemann-limit", group: "busemann-gromov", tolerance: 1e-6, run: busemann_limit },
    Entry { id: "hyperbolic.busemann-cocycle", group: "busemann-gromov", tolerance: 1e-9, run: busemann_cocycle },
    Entry { id: "hyperbolic.gromov-conformality", group: "busemann-gromov", tolerance: 1e-9, run: gromov_conformality },
    Entry { id: "hyperbolic.gromov-equivariance", group: "busemann-gromov", tolerance: 1e-9, run: gromov_equivariance },
    Entry { id: "hyperbolic.geodesic-unit-speed", group: "busemann-gromov", tolerance: 1e-9, run: geodesic_unit_speed },
    Entry { id: "hyperbolic.iwasawa-conjugation", group: "iwasawa", tolerance: 1e-10, run: iwasawa_conjugation },
    Entry { id: "heisenberg.chain-parametrization", group: "chains", tolerance: 1e-8, run: chain_parametrization },
    Entry { id: "hyperbolic.vertical-chain", group: "chains", tolerance: 1e-8, run: vertical_chain },
    Entry { id: "hermitian.form-symmetry", group: "hermitian", tolerance: 1e-13, run: form_symmetry },
    Entry { id: "hermitian.normalized-products", group: "hermitian", tolerance: 1e-12, run: normalized_products },
    Entry { id: "hermitian.classify-conjugation", group: "hermitian", tolerance: 0.0, run: classify_conjugation },
    Entry {
        id: "hermitian.fixed-point-equivariance",
        group: "hermitian",
        tolerance: 1e-9,
        run: fixed_point_equivariance,
    },
    Entry { id: "hyperbolic.dist-invariance", group: "hermitian", tolerance: 1e-9, run: dist_invariance },
    Entry { id: "hyperbolic.action-composition", group: "hermitian", tolerance: 1e-10, run: action_composition },
];

/// Runs every invariant with its own stream derived from `seed`; `instances`
/// sets the sample size (some checks scale it up or down).
pub fn run_battery(seed: u64, instances: usize) -> Vec<InvariantCheck> {
    BATTERY
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (count, worst) = (entry.run)(&mut rng, instances);
            InvariantCheck {
                id: entry.id,
                group: entry.group,
                instances: count,
                worst,
                tolerance: entry.tolerance,
                pass: count > 0 && worst <= entry.tolerance,
            }
        })
        .collect()
}
