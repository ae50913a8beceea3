use chdim::cli::ExperimentConfig;
use chdim::dimension::{balogh_check, box_count, geometric_scales, FitPolicy, MetricTag};
use chdim::heisenberg::*;
use chdim::hermitian::*;
use chdim::hyperbolic::*;
use chdim::schottky::PointCloud;
use chdim::schottky::{reduced_word_count, reduced_words, LimitMode};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn heis(n: usize, span: f64) -> impl Strategy<Value = HeisPoint> {
    (prop::collection::vec((-span..span, -span..span), n - 1), -span..span)
        .prop_map(|(v, t)| HeisPoint::new(v.into_iter().map(|(a, b)| C64::new(a, b)).collect(), t))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn element(n: usize, seed: u64) -> GroupElement {
    GroupElement::random(n, 2.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn interior(n: usize) -> impl Strategy<Value = HPoint> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("inside the ball", |w| {
        let w: Vec<C64> = w.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let r: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        (r < 0.95).then(|| HPoint::from_ball(&w).ok()).flatten()
    })
}

fn boundary(n: usize) -> impl Strategy<Value = BoundaryPoint> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("nonzero", |w| {
        let w: Vec<C64> = w.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let r = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (r > 1e-3).then(|| BoundaryPoint::from_sphere(&w.iter().map(|z| z / r).collect::<Vec<_>>()).ok()).flatten()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn heisenberg_group_laws((a, b, c) in (2usize..5).prop_flat_map(|n| (heis(n, 5.0), heis(n, 5.0), heis(n, 5.0)))) {
        let l = heis_mul(&heis_mul(&a, &b), &c).to_real();
        let r = heis_mul(&a, &heis_mul(&b, &c)).to_real();
        prop_assert!(l.iter().zip(&r).all(|(x, y)| close(*x, *y, 1e-13)));
        prop_assert!(heis_mul(&a, &a.inverse()).to_real().iter().all(|x| x.abs() <= 1e-13));
        prop_assert_eq!(omega(a.v(), b.v()), -omega(b.v(), a.v()));
    }

    #[test]
    fn right_invariance_and_dilation(a in heis(3, 4.0), b in heis(3, 4.0), c in heis(3, 4.0),
                                     re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let d = heis_dist(&a, &b).unwrap();
        prop_assert!(close(heis_dist(&heis_mul(&a, &c), &heis_mul(&b, &c)).unwrap(), d, 1e-9));
        let lambda = C64::new(re, im);
        prop_assume!(lambda.norm() > 1e-3);
        let dd = heis_dist(&dilate(lambda, &a).unwrap(), &dilate(lambda, &b).unwrap()).unwrap();
        prop_assert!(close(dd, lambda.norm() * d, 1e-9));
    }

    #[test]
    fn fiber_identity(a in heis(3, 4.0), t in -4.0f64..4.0) {
        let b = HeisPoint::new(a.v().to_vec(), t);
        let dh = heis_dist(&a, &b).unwrap();
        prop_assert!(close(euclid_dist(&a, &b).unwrap(), dh * dh, 1e-12));
    }

    #[test]
    fn random_isometries_preserve_the_form(n in 2usize..5, s1 in any::<u64>(), s2 in any::<u64>()) {
        let (g, h) = (element(n, s1), element(n, s2));
        prop_assert!(form_residual(g.matrix()) <= 1e-10);
        prop_assert!(form_residual(g.mul(&h).matrix()) <= 1e-10);
        prop_assert!(g.mul(&g.inverse()).projective_distance(&GroupElement::identity(n)) <= 1e-9);
    }

    #[test]
    fn classify_is_conjugation_invariant(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (g, h) = (element(2, s1), element(2, s2));
        let (k, kc) = (classify(&g), classify(&g.conjugate_by(&h)));
        prop_assert_eq!(k.ok(), kc.ok());
    }

    #[test]
    fn distance_is_an_invariant_metric(x in interior(2), y in interior(2), z in interior(2), seed in any::<u64>()) {
        let g = element(2, seed);
        let d = dist(&x, &y);
        prop_assert!(d >= 0.0 && close(d, dist(&y, &x), 1e-12));
        prop_assert!(dist(&x, &z) <= d + dist(&y, &z) + 1e-9);
        prop_assert!(close(dist(&g.act_point(&x), &g.act_point(&y)), d, 1e-8));
    }

    #[test]
    fn busemann_cocycle(xi in boundary(2), x in interior(2), y in interior(2), z in interior(2)) {
        let lhs = busemann(&xi, &x, &z);
        let rhs = busemann(&xi, &x, &y) + busemann(&xi, &y, &z);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        prop_assert!(busemann(&xi, &x, &y).abs() <= dist(&x, &y) + 1e-9);
    }

    #[test]
    fn boundary_action_composes(xi in boundary(3), s1 in any::<u64>(), s2 in any::<u64>()) {
        let (g, h) = (element(3, s1), element(3, s2));
        let a = boundary_act(&g.mul(&h), &xi);
        let b = boundary_act(&g, &boundary_act(&h, &xi));
        prop_assert!(a.projective_gap(&b) <= 1e-8);
        let v = a.vector();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn reduced_words_are_reduced_and_counted(k in 1usize..4, len in 0usize..5) {
        let words: Vec<_> = reduced_words(k, len).collect();
        prop_assert_eq!(words.len() as u64, reduced_word_count(k, len));
        for w in &words {
            prop_assert!(w.is_reduced());
            prop_assert_eq!(&w.inverse().inverse(), w);
        }
    }

    #[test]
    fn diagonal_is_inside_the_balogh_band(a in 0.0f64..3.0, n in 2usize..5) {
        prop_assert!(balogh_check(a, a, n, 0.0).pass);
        prop_assert!(!balogh_check(a, 2.0 * a + 1.5, n, 0.1).pass);
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), len in 3usize..=16, lo in 1e-8f64..1e-3, count in 6usize..100,
                          orbit in any::<bool>()) {
        let c = ExperimentConfig {
            seed,
            word_length: len,
            limit_mode: if orbit { LimitMode::OrbitOfPoint } else { LimitMode::WordFixedPoints },
            scales: chdim::cli::config::ScaleRange { hi: 1.0, lo, count },
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn box_counts_are_monotone(pts in prop::collection::vec(heis(2, 1.0), 200..600)) {
        let cloud = PointCloud::from_heisenberg(pts, &GroupElement::identity(2)).unwrap();
        let scales = geometric_scales(1.0, 1e-4, 24);
        for m in [MetricTag::Heisenberg, MetricTag::Euclidean, MetricTag::Spherical] {
            if let Ok(e) = box_count(&cloud, m, &scales, &FitPolicy::default()) {
                prop_assert!(e.scales.windows(2).all(|p| p[0].1 <= p[1].1));
                prop_assert!(e.stderr >= 0.0);
            }
        }
    }
}
