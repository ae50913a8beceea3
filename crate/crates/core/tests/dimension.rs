use chdim::dimension::*;
use chdim::heisenberg::{dilate, heis_mul, HeisPoint};
use chdim::hermitian::{GroupElement, C64};
use chdim::schottky::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chart_cloud(h: Vec<HeisPoint>) -> PointCloud {
    PointCloud::from_heisenberg(h, &GroupElement::identity(2)).unwrap()
}

fn square(count: usize, seed: u64) -> Vec<HeisPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| HeisPoint::new(vec![C64::new(rng.random(), rng.random())], 0.0)).collect()
}

fn vertical(count: usize, seed: u64) -> Vec<HeisPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| HeisPoint::new(vec![C64::new(0.0, 0.0)], rng.random())).collect()
}

/// `count` random points of the middle-thirds Cantor set (40 ternary digits).
fn cantor(count: usize, seed: u64) -> Vec<HeisPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (mut x, mut scale) = (0.0, 1.0);
            for _ in 0..40 {
                scale /= 3.0;
                if rng.random::<bool>() {
                    x += 2.0 * scale;
                }
            }
            HeisPoint::new(vec![C64::new(x, 0.0)], 0.0)
        })
        .collect()
}

fn check(name: &str, got: f64, want: f64, tol: f64) {
    println!("{name}: {got:.4} (want {want} ± {tol})");
    assert!((got - want).abs() <= tol, "{name}: {got} vs {want} ± {tol}");
}

#[test]
fn unit_square_box_count() {
    let c = chart_cloud(square(100_000, 1));
    let e = box_count(&c, MetricTag::Euclidean, &geometric_scales(1.0, 1e-5, 40), &FitPolicy::default()).unwrap();
    check("square euclidean", e.slope, 2.0, 0.1);
    assert!(e.scales.windows(2).all(|p| p[0].1 <= p[1].1));
    assert!(e.stderr >= 0.0);
}

#[test]
fn vertical_segment_doubles_under_gauge() {
    let c = chart_cloud(vertical(100_000, 2));
    let s = geometric_scales(1.0, 1e-5, 40);
    let h = box_count(&c, MetricTag::Heisenberg, &s, &FitPolicy::default()).unwrap();
    let e = box_count(&c, MetricTag::Euclidean, &s, &FitPolicy::default()).unwrap();
    check("segment heisenberg", h.slope, 2.0, 0.2);
    check("segment euclidean", e.slope, 1.0, 0.2);
}

#[test]
fn cantor_set_both_metrics() {
    let c = chart_cloud(cantor(3usize.pow(10), 3));
    let s = geometric_scales(1.0, 1e-5, 40);
    let want = 2f64.ln() / 3f64.ln();
    for m in [MetricTag::Euclidean, MetricTag::Heisenberg] {
        let e = box_count(&c, m, &s, &FitPolicy::default()).unwrap();
        check(&format!("cantor {m}"), e.slope, want, 0.05);
    }
}

fn product(count: usize, seed: u64) -> Vec<HeisPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| HeisPoint::new(vec![C64::new(rng.random(), rng.random())], rng.random())).collect()
}

#[test]
fn pointwise_on_square_and_segment() {
    let sq = WeightedCloud::uniform(chart_cloud(square(100_000, 4))).unwrap();
    let radii = geometric_scales(0.1, 0.005, 12);
    let d = pointwise_dim(&sq, MetricTag::Euclidean, 200, &radii, 1, &LocalFit::default()).unwrap();
    check("square pointwise", d.median, 2.0, 0.15);
    let seg = WeightedCloud::uniform(chart_cloud(vertical(100_000, 5))).unwrap();
    let h = pointwise_dim(&seg, MetricTag::Heisenberg, 200, &geometric_scales(0.3, 0.01, 12), 1, &LocalFit::default())
        .unwrap();
    let e = pointwise_dim(&seg, MetricTag::Euclidean, 200, &geometric_scales(0.1, 1e-4, 12), 1, &LocalFit::default())
        .unwrap();
    check("segment pointwise heisenberg", h.median, 2.0, 0.2);
    check("segment pointwise euclidean", e.median, 1.0, 0.2);
}

#[test]
fn fiber_transverse_synthetic() {
    let p = WeightedCloud::uniform(chart_cloud(product(200_000, 6))).unwrap();
    let ft = fiber_transverse_dims(&p, &FiberParams::default(), None).unwrap();
    check("product transverse", ft.transverse.median, 2.0, 0.25);
    check("product fiber", ft.fiber.median, 2.0, 0.25);
    let v = WeightedCloud::uniform(chart_cloud(vertical(100_000, 7))).unwrap();
    let ft = fiber_transverse_dims(&v, &FiberParams::default(), None).unwrap();
    check("chain transverse", ft.transverse.median, 0.0, 0.25);
    check("chain fiber", ft.fiber.median, 2.0, 0.25);
}

#[test]
fn box_count_isometry_invariance_and_dilation() {
    let s = bundled();
    let cloud = limit_points(&s, 10, LimitMode::WordFixedPoints).unwrap().with_chart(&chart_rotation(&s)).unwrap();
    let scales = geometric_scales(2.0, 1e-5, 40);
    let pol = FitPolicy::default();
    let base = box_count(&cloud, MetricTag::Heisenberg, &scales, &pol).unwrap();
    let g = HeisPoint::new(vec![C64::new(0.37, -1.21)], 0.83);
    let moved: Vec<HeisPoint> = cloud.heis.iter().map(|h| heis_mul(h, &g)).collect();
    let e = box_count_real(&heis_rows(&moved), MetricTag::Heisenberg, &scales, &pol).unwrap();
    println!("translated {} vs {} (stderr {})", e.slope, base.slope, base.stderr);
    assert!((e.slope - base.slope).abs() <= base.stderr.max(e.stderr));
    let lambda = C64::new(0.0, 3.0);
    let dil: Vec<HeisPoint> = cloud.heis.iter().map(|h| dilate(lambda, h).unwrap()).collect();
    let scaled: Vec<f64> = scales.iter().map(|e| e * 3.0).collect();
    let d = box_count_real(&heis_rows(&dil), MetricTag::Heisenberg, &scaled, &pol).unwrap();
    println!("dilated {} vs {}", d.slope, base.slope);
    assert!((d.slope - base.slope).abs() <= base.stderr.max(d.stderr));

    let eb = box_count(&cloud, MetricTag::Euclidean, &scales, &pol).unwrap();
    let (c, sn) = (0.6f64, 0.8f64);
    let rot: Vec<Vec<f64>> = cloud
        .heis_real()
        .iter()
        .map(|x| vec![c * x[0] - sn * x[2] + 0.3, x[1] - 0.7, sn * x[0] + c * x[2] + 0.1])
        .collect();
    let er = box_count_real(&rot, MetricTag::Euclidean, &scales, &pol).unwrap();
    println!("rotated {} vs {} (stderr {})", er.slope, eb.slope, eb.stderr);
    assert!((er.slope - eb.slope).abs() <= eb.stderr.max(er.stderr));
}

#[test]
fn ps_sample_contracts() {
    let s = bundled();
    let one = ps_sample(&s, 1, 0.5).unwrap();
    assert_eq!(one.len(), 4);
    for (p, a) in one.cloud.points.iter().zip(s.letter_attractors()) {
        assert!(p.approx_eq(&a, 1e-9));
    }
    let wc = ps_sample(&s, 6, 0.55).unwrap();
    assert!((wc.total_mass() - 1.0).abs() < 1e-12);
    let words: Vec<Word> = reduced_words(2, 6).skip(1).collect();
    assert_eq!(words.len(), wc.len());
    let index: std::collections::HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    for (i, w) in words.iter().enumerate() {
        let j = index[&w.inverse()];
        assert!((wc.weights[i] - wc.weights[j]).abs() <= 1e-9 * wc.weights[i].max(1e-300) + 1e-15);
    }
}

#[test]
fn schottky_exponents_and_local_dims_agree() {
    let s = bundled();
    let o = chdim::hermitian::HPoint::origin(2);
    let e = critical_exponent(&orbit_distances_by_length(&s, 10, &o).unwrap(), 10).unwrap();
    println!("{e:?}");
    assert!((e.delta_counting - e.delta_series).abs() <= 0.1);
    assert!(e.delta_series > 0.0 && e.delta_series <= 3.0 + 0.3);
    let g = chart_rotation(&s);
    let mut wc = ps_sample(&s, 8, e.delta_series).unwrap();
    wc.cloud = wc.cloud.with_chart(&g).unwrap();
    let ft = fiber_transverse_dims(&wc, &FiberParams::default(), None).unwrap();
    println!("fiber {:?}", ft.fiber.median);
    assert!(ft.fiber.median <= 0.25);
    let cloud = limit_points(&s, 8, LimitMode::WordFixedPoints).unwrap();
    let bc = box_count(&cloud, MetricTag::Spherical, &geometric_scales(2.0, 1e-10, 40), &FitPolicy::default()).unwrap();
    let pd = pointwise_dim(&wc, MetricTag::Spherical, 200, &geometric_scales(0.1, 1e-4, 16), 9, &LocalFit::default())
        .unwrap();
    check("pointwise vs box count", pd.median, bc.slope, 0.15);
}

#[test]
fn gromov_pairwise_matches_chart_mode() {
    let s = bundled();
    let cloud = limit_points(&s, 7, LimitMode::WordFixedPoints).unwrap().with_chart(&chart_rotation(&s)).unwrap();
    let scales = geometric_scales(2.0, 1e-4, 30);
    let tag = chdim::hyperbolic::GromovMetricTag { base: chdim::hermitian::HPoint::origin(2) };
    let pw = gromov_net_count(&cloud, &tag, &scales, &FitPolicy::default()).unwrap();
    let ch = box_count(&cloud, MetricTag::Gromov, &scales, &FitPolicy::default()).unwrap();
    check("gromov pairwise vs chart", pw.slope, ch.slope, 0.15);
}

#[test]
fn estimation_errors() {
    let few = chart_cloud(square(10, 1));
    assert!(box_count(&few, MetricTag::Euclidean, &geometric_scales(1.0, 1e-3, 10), &FitPolicy::default()).is_err());
    let same = chart_cloud(vec![HeisPoint::new(vec![C64::new(0.1, 0.1)], 0.0); 2000]);
    assert!(matches!(
        box_count(&same, MetricTag::Euclidean, &geometric_scales(1.0, 1e-3, 10), &FitPolicy::default()),
        Err(chdim::Error::Estimation(_))
    ));
}
