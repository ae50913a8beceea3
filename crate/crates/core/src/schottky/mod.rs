//! Schottky groups in good position: construction, ping-pong and chain
//! verification, word enumeration, and limit-set sampling.

pub mod caps;
mod serialize;
pub mod words;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::error::{Error, Result};
use crate::heisenberg::HeisPoint;
use crate::hermitian::{
    ball_form, boost, fixed_boundary_points, form_residual, normalize_isometry, BoundaryPoint, CMat, CVec,
    GroupElement, HPoint, IsometryKind, C64,
};
use crate::hyperbolic::{dist, phi_chart, phi_chart_inv, IwasawaFrame};

pub use caps::Cap;
pub use serialize::{format_hex, parse_hex};
pub use words::{reduced_word_count, reduced_words, ReducedWords, Word};

use caps::{cap_samples, chord_to_angle, chordal, enclosing_cap, point_from_real, ring_samples, sphere_samples};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Verified two-generator system in PU(1,2) (seed 0, `t0 = 2.5`, power 1).
pub const BUNDLED_DESCRIPTOR: &str = include_str!("../../data/bundled.toml");

pub fn bundled() -> SchottkyDescriptor {
    SchottkyDescriptor::from_toml(BUNDLED_DESCRIPTOR).expect("bundled descriptor parses")
}

/// Parameters of the good-position construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildParams {
    /// Complex dimension of the hyperbolic space.
    pub n: usize,
    /// Number of generators.
    pub k: usize,
    /// Translation length of the seed hyperbolic element.
    pub t0: f64,
    /// Largest power tried before giving up.
    pub power_cap: u32,
    /// Relative enlargement of the ping-pong radius.
    pub slack: f64,
    /// Sample count per domain for conditions 3 and 4.
    pub resolution: usize,
    /// Required clearance between chains and a third domain.
    pub margin: f64,
    /// Minimal spherical distance from a fixed-point chain to other fixed points.
    pub chain_separation: f64,
    /// Put every fixed point on one chain (negative control).
    pub forced_shared_chain: bool,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            n: 2,
            k: 2,
            t0: 1.0,
            power_cap: 64,
            slack: 0.05,
            resolution: 24,
            margin: 1e-3,
            chain_separation: 0.1,
            forced_shared_chain: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub passed: bool,
    /// Smallest margin observed; negative values locate a violation.
    pub margin: f64,
}

/// Which of the four good-position conditions were checked and how.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationRecord {
    pub resolution: usize,
    pub margin: f64,
    pub conditions: [Option<ConditionResult>; 4],
}

impl VerificationRecord {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.is_some_and(|c| c.passed))
    }
}

/// Generators, their ping-pong caps, and the verification record.
///
/// Letters index `gens` as in [`words`]: letter `2i` is `gens[i]`, letter
/// `2i + 1` its inverse; `domains[l]` is the cap `B(l)` around the attracting
/// fixed point of letter `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchottkyDescriptor {
    pub n: usize,
    pub seed: u64,
    pub params: BuildParams,
    pub power: u32,
    pub gens: Vec<GroupElement>,
    pub domains: Vec<Cap>,
    pub verification: VerificationRecord,
    pub version: String,
}

impl SchottkyDescriptor {
    pub fn k(&self) -> usize {
        self.gens.len()
    }

    pub fn letter_matrix(&self, l: u8) -> CMat {
        let g = &self.gens[(l / 2) as usize];
        if l.is_multiple_of(2) {
            g.matrix().clone()
        } else {
            g.inverse().matrix().clone()
        }
    }

    pub fn letter_matrices(&self) -> Vec<CMat> {
        (0..2 * self.k() as u8).map(|l| self.letter_matrix(l)).collect()
    }

    pub fn word_matrix(&self, w: &Word) -> GroupElement {
        let d = self.n + 1;
        let mut m = CMat::identity(d, d);
        for &l in w.letters() {
            m *= self.letter_matrix(l);
        }
        GroupElement::from_matrix_unchecked(m)
    }

    /// Attracting fixed point of each letter.
    pub fn letter_attractors(&self) -> Vec<BoundaryPoint> {
        self.domains.iter().map(|c| c.center.clone()).collect()
    }

    pub fn with_domains(&self, domains: Vec<Cap>) -> Self {
        let mut s = self.clone();
        s.domains = domains;
        s.verification = VerificationRecord::default();
        s
    }

    pub fn to_toml(&self) -> String {
        serialize::to_toml(self)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        serialize::from_toml(text)
    }
}

/// Chordal radius `r` such that `a_T` maps the complement of the cap of
/// radius `r` around its repelling point onto the cap of radius `r` around
/// its attracting point.
pub fn pingpong_radius(t: f64) -> f64 {
    let (ch, sh) = (t.cosh(), t.sinh());
    let mobius = |z: C64| (z * ch - sh) / (C64::new(ch, 0.0) - z * sh);
    // Largest image distance from the attractor over the closed complement,
    // a harmonic maximum attained on the boundary of {|z| <= 1, Re z <= c}.
    let image_radius = |r: f64| -> f64 {
        let c = 1.0 - 0.5 * r * r;
        let h = (1.0 - c * c).max(0.0).sqrt();
        let phi0 = c.clamp(-1.0, 1.0).acos();
        let m = 2000;
        let mut best = f64::NEG_INFINITY;
        for j in 0..=m {
            let s = j as f64 / m as f64;
            let chord = C64::new(c, h * s);
            let arc = C64::from_polar(1.0, phi0 + (std::f64::consts::PI - phi0) * s);
            best = best.max(mobius(chord).re).max(mobius(arc).re);
        }
        (2.0 + 2.0 * best).max(0.0).sqrt()
    };
    let (mut lo, mut hi) = (1e-12, 2.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if image_radius(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn rotation_matrix(u: &CMat) -> GroupElement {
    let n = u.nrows();
    let mut m = CMat::identity(n + 1, n + 1);
    m.view_mut((1, 1), (n, n)).copy_from(u);
    GroupElement::from_matrix_unchecked(m)
}

/// Descriptor for the given rotations at power `m`, unverified.
pub fn assemble(params: &BuildParams, seed: u64, rotations: &[CMat], power: u32) -> Result<SchottkyDescriptor> {
    let n = params.n;
    let t = params.t0 * power as f64;
    let a = boost(n, t);
    let radius = pingpong_radius(t) * (1.0 + params.slack);
    let mut gens = Vec::new();
    let mut domains = Vec::new();
    for u in rotations {
        let c = rotation_matrix(u);
        let g = normalize_isometry(&a.conjugate_by(&c))?;
        let col: Vec<C64> = (0..n).map(|i| u[(i, n - 1)]).collect();
        let att: Vec<C64> = col.iter().map(|z| -z).collect();
        domains.push(Cap::new(BoundaryPoint::from_sphere(&att)?, radius));
        domains.push(Cap::new(BoundaryPoint::from_sphere(&col)?, radius));
        gens.push(g.classified()?);
    }
    Ok(SchottkyDescriptor {
        n,
        seed,
        params: params.clone(),
        power,
        gens,
        domains,
        verification: VerificationRecord::default(),
        version: LIBRARY_VERSION.to_string(),
    })
}

/// Distance from `q` to the chain through `p` and `-p` (a great circle
/// `e^{i theta} p` of the sphere), `sqrt(2 - 2 |<p, q>|)`.
fn distance_to_axis_chain(p: &[C64], q: &[C64]) -> f64 {
    let ip: C64 = p.iter().zip(q).map(|(a, b)| a.conj() * b).sum();
    (2.0 - 2.0 * ip.norm()).max(0.0).sqrt()
}

fn draw_rotations(params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Vec<CMat>> {
    let n = params.n;
    let col = |u: &CMat| -> Vec<C64> { (0..n).map(|i| u[(i, n - 1)]).collect() };
    if params.forced_shared_chain {
        let u = crate::hermitian::random_unitary(n, rng);
        return Ok((0..params.k)
            .map(|i| {
                let phase = C64::from_polar(1.0, std::f64::consts::PI * i as f64 / params.k as f64);
                &u * phase
            })
            .collect());
    }
    for _ in 0..1000 {
        let rots: Vec<CMat> = (0..params.k).map(|_| crate::hermitian::random_unitary(n, rng)).collect();
        let ok = (0..params.k).all(|i| {
            (0..params.k)
                .all(|j| i == j || distance_to_axis_chain(&col(&rots[i]), &col(&rots[j])) > params.chain_separation)
        });
        if ok {
            return Ok(rots);
        }
    }
    Err(Error::Construction("rejection sampling of fixed-point chains exhausted".into()))
}

/// Builds a Schottky system in good position by raising conjugates of a
/// fixed boost to increasing powers until all four conditions verify.
pub fn build_good_position(params: &BuildParams, seed: u64) -> Result<SchottkyDescriptor> {
    if params.k < 2 || params.n < 2 {
        return Err(Error::Input("construction needs k >= 2 and n >= 2".into()));
    }
    if !(params.t0 > 0.0) || params.power_cap == 0 || params.resolution == 0 {
        return Err(Error::Input("t0, power_cap and resolution must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations = draw_rotations(params, &mut rng)?;
    let mut power = 1u32;
    let mut last = String::new();
    let mut chain_failure = None;
    while power <= params.power_cap {
        let mut s = assemble(params, seed, &rotations, power)?;
        let pp = verify_ping_pong(&s, params.resolution);
        s.verification.resolution = params.resolution;
        s.verification.margin = params.margin;
        s.verification.conditions[0] = Some(pp.cond1);
        s.verification.conditions[1] = Some(pp.cond2);
        s.verification.conditions[2] = Some(pp.cond3);
        if pp.passed() {
            let tc = verify_no_triple_chain(&s, params.resolution, params.margin);
            s.verification.conditions[3] = Some(ConditionResult { passed: tc.passed, margin: tc.clearance });
            if tc.passed {
                return Ok(s);
            }
            last = format!("power {power}: condition 4 failed; {}", tc.describe());
            chain_failure.get_or_insert_with(|| last.clone());
        } else {
            last = format!("power {power}: {}", pp.describe());
        }
        power *= 2;
    }
    let mut msg = format!("power cap {} exhausted; last attempt {last}", params.power_cap);
    if let Some(c) = chain_failure.filter(|c| *c != last) {
        msg.push_str(&format!("; first failure of condition 4 at {c}"));
    }
    Err(Error::Construction(msg))
}

/// Outcome of checking conditions 1-3.
#[derive(Debug, Clone, PartialEq)]
pub struct PingPongReport {
    pub cond1: ConditionResult,
    pub cond2: ConditionResult,
    pub cond3: ConditionResult,
    /// Letter and image point (sphere coordinates) realizing the smallest margin.
    pub witness: Option<(u8, Vec<f64>)>,
}

impl PingPongReport {
    pub fn passed(&self) -> bool {
        self.cond1.passed && self.cond2.passed && self.cond3.passed
    }

    pub fn describe(&self) -> String {
        let mut s = format!(
            "condition 1 {} (margin {:e}); condition 2 {} (gap {:e}); condition 3 {} (margin {:e})",
            pass_word(self.cond1.passed),
            self.cond1.margin,
            pass_word(self.cond2.passed),
            self.cond2.margin,
            pass_word(self.cond3.passed),
            self.cond3.margin
        );
        if let Some((l, x)) = &self.witness {
            s.push_str(&format!("; worst image for letter {} at {:?}", words::signed_label(*l), x));
        }
        s
    }
}

fn pass_word(b: bool) -> &'static str {
    if b {
        "passed"
    } else {
        "FAILED"
    }
}

/// Conditions 1-3: generators not inverse to each other, closed caps
/// pairwise disjoint, and `w(complement of B(w^-1)) inside B(w)` on samples.
pub fn verify_ping_pong(s: &SchottkyDescriptor, resolution: usize) -> PingPongReport {
    let k = s.k();
    let mut c1 = f64::INFINITY;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                c1 = c1.min(s.gens[i].projective_distance(&s.gens[j].inverse()));
                c1 = c1.min(s.gens[i].projective_distance(&s.gens[j]));
            }
        }
    }
    let cond1 = ConditionResult { passed: k < 2 || c1 > 1e-9, margin: if k < 2 { 1.0 } else { c1 } };
    let mut c2 = f64::INFINITY;
    for a in 0..s.domains.len() {
        for b in a + 1..s.domains.len() {
            c2 = c2.min(s.domains[a].gap(&s.domains[b]));
        }
    }
    let cond2 = ConditionResult { passed: c2 > 0.0, margin: c2 };

    let mats = s.letter_matrices();
    let per_letter: Vec<(f64, Vec<f64>)> = (0..mats.len())
        .into_par_iter()
        .map(|l| {
            let inv = l ^ 1;
            let target = &s.domains[l];
            let tc = target.center_real();
            let excl = &s.domains[inv];
            let ec = excl.center_real();
            let mut samples = ring_samples(excl, resolution, 1000 + inv as u64);
            samples.extend(
                sphere_samples(2 * s.n, 4 * resolution, 2000 + l as u64)
                    .into_iter()
                    .filter(|x| chordal(x, &ec) >= excl.radius),
            );
            for (o, other) in s.domains.iter().enumerate() {
                if o != inv {
                    samples.extend(ring_samples(other, resolution / 2 + 1, 3000 + o as u64));
                }
            }
            let mut worst = (f64::INFINITY, Vec::new());
            for x in samples {
                let img = apply_real(&mats[l], &x);
                let depth = target.depth_real(&tc, &img);
                if depth < worst.0 {
                    worst = (depth, img);
                }
            }
            worst
        })
        .collect();
    let (mut c3, mut witness) = (f64::INFINITY, None);
    for (l, (m, x)) in per_letter.into_iter().enumerate() {
        if m < c3 {
            c3 = m;
            witness = Some((l as u8, x));
        }
    }
    PingPongReport { cond1, cond2, cond3: ConditionResult { passed: c3 > 0.0, margin: c3 }, witness }
}

/// Image of a sphere point (real coordinates) under a ball-model matrix.
pub fn apply_real(m: &CMat, x: &[f64]) -> Vec<f64> {
    let d = m.nrows();
    let mut z = CVec::zeros(d);
    z[0] = C64::new(1.0, 0.0);
    for (i, p) in x.chunks(2).enumerate() {
        z[i + 1] = C64::new(p[0], p[1]);
    }
    let y = m * z;
    let y0 = y[0];
    (1..d)
        .flat_map(|i| {
            let c = y[i] / y0;
            [c.re, c.im]
        })
        .collect()
}

/// Witness for a chain meeting a third domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleWitness {
    /// Letters of the two domains containing `p`, `q` and of the third domain.
    pub domains: [u8; 3],
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleChainReport {
    pub passed: bool,
    pub resolution: usize,
    pub margin: f64,
    /// Smallest `chordal distance from chain to centre - radius` over all samples.
    pub clearance: f64,
    pub witness: Option<TripleWitness>,
}

impl TripleChainReport {
    pub fn describe(&self) -> String {
        let mut s = format!(
            "condition 4 {} at resolution {} with margin {:e}: clearance {:e}",
            if self.passed { "verified" } else { "FAILED" },
            self.resolution,
            self.margin,
            self.clearance
        );
        if let Some(w) = &self.witness {
            s.push_str(&format!(
                "; witness chain through p in B({}) and q in B({}) passes within {:e} of B({}); p = {:?}, q = {:?}",
                words::signed_label(w.domains[0]),
                words::signed_label(w.domains[1]),
                w.clearance,
                words::signed_label(w.domains[2]),
                w.p,
                w.q
            ));
        }
        s
    }
}

/// Smallest chordal distance from `target` to the chain through `p` and `q`.
pub fn chain_min_chordal(p: &[f64], q: &[f64], target: &[f64]) -> f64 {
    let lift = |x: &[f64]| -> Vec<C64> {
        let mut z = vec![C64::new(1.0, 0.0)];
        z.extend(x.chunks(2).map(|c| C64::new(c[0], c[1])));
        z
    };
    let (pz, qz) = (lift(p), lift(q));
    let kappa = ball_form(&pz, &qz);
    let phase = C64::new(0.0, 1.0) * kappa.conj() / kappa.norm();
    let qz: Vec<C64> = qz.iter().map(|c| c * phase).collect();
    let at = |theta: f64| -> f64 {
        let (s, c) = (0.5 * theta).sin_cos();
        let x0 = pz[0] * c + qz[0] * s;
        let mut acc = 0.0;
        for i in 1..pz.len() {
            let w = (pz[i] * c + qz[i] * s) / x0;
            acc += (w.re - target[2 * (i - 1)]).powi(2) + (w.im - target[2 * (i - 1) + 1]).powi(2);
        }
        acc.sqrt()
    };
    let m = 128;
    let tau = 2.0 * std::f64::consts::PI;
    let vals: Vec<f64> = (0..m).map(|j| at(tau * j as f64 / m as f64)).collect();
    let mut best = f64::INFINITY;
    for j in 0..m {
        let (prev, next) = (vals[(j + m - 1) % m], vals[(j + 1) % m]);
        if vals[j] <= prev && vals[j] <= next {
            // Golden-section refinement inside the bracketing cells.
            let (mut a, mut b) = (tau * (j as f64 - 1.0) / m as f64, tau * (j as f64 + 1.0) / m as f64);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
            let (mut f1, mut f2) = (at(x1), at(x2));
            for _ in 0..60 {
                if f1 <= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = at(x2);
                }
            }
            best = best.min(f1.min(f2)).min(vals[j]);
        }
    }
    best.min(vals.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Condition 4 on samples: no chain through two domains comes within
/// `margin` of a third. A pass means "verified at this resolution and margin".
pub fn verify_no_triple_chain(s: &SchottkyDescriptor, resolution: usize, margin: f64) -> TripleChainReport {
    let nd = s.domains.len();
    let samples: Vec<Vec<Vec<f64>>> =
        (0..nd).map(|d| cap_samples(&s.domains[d], resolution, 4000 + d as u64)).collect();
    let mut jobs = Vec::new();
    for a in 0..nd {
        for b in a + 1..nd {
            for c in 0..nd {
                if c != a && c != b {
                    jobs.push([a, b, c]);
                }
            }
        }
    }
    let results: Vec<(f64, TripleWitness)> = jobs
        .par_iter()
        .map(|&[a, b, c]| {
            let target = s.domains[c].center_real();
            let mut worst = (f64::INFINITY, 0usize, 0usize);
            for (i, p) in samples[a].iter().enumerate() {
                for (j, q) in samples[b].iter().enumerate() {
                    let cl = chain_min_chordal(p, q, &target) - s.domains[c].radius;
                    if cl < worst.0 {
                        worst = (cl, i, j);
                    }
                }
            }
            let w = TripleWitness {
                domains: [a as u8, b as u8, c as u8],
                p: samples[a][worst.1].clone(),
                q: samples[b][worst.2].clone(),
                clearance: worst.0,
            };
            (worst.0, w)
        })
        .collect();
    let mut clearance = f64::INFINITY;
    let mut witness = None;
    for (cl, w) in results {
        if cl < clearance {
            clearance = cl;
            witness = Some(w);
        }
    }
    let passed = clearance > margin;
    TripleChainReport { passed, resolution, margin, clearance, witness: if passed { None } else { witness } }
}

/// Cap containing `B(f) = f_1 ... f_{p-1} B(f_p)`: the boundary circle of
/// `B(f_p)` pushed through the prefix, enclosed, and dilated by `safety`.
pub fn word_domain(s: &SchottkyDescriptor, f: &Word) -> Result<Cap> {
    word_domain_with(s, f, 1.1, 1024)
}

pub fn word_domain_with(s: &SchottkyDescriptor, f: &Word, safety: f64, samples: usize) -> Result<Cap> {
    let letters = f.letters();
    let Some(&last) = letters.last() else {
        return Err(Error::Input("word domain of the empty word".into()));
    };
    if !f.is_reduced() {
        return Err(Error::Input(format!("word {f} is not reduced")));
    }
    let base = &s.domains[last as usize];
    if letters.len() == 1 {
        return Ok(base.dilated(safety));
    }
    let prefix = s.word_matrix(&Word::new(letters[..letters.len() - 1].to_vec()));
    check_conditioning(prefix.matrix())?;
    let mut pts = ring_samples(base, samples, 5000 + last as u64);
    pts.push(base.center_real());
    let imgs: Vec<Vec<f64>> = pts.iter().map(|x| apply_real(prefix.matrix(), x)).collect();
    let (c, r) = enclosing_cap(&imgs);
    Ok(Cap::new(point_from_real(&c), r).dilated(safety))
}

/// Largest [`word_domain`] radius at each length `1..=max_len`, and the
/// per-letter decay factor fitted to their logarithms.
pub fn domain_contraction(s: &SchottkyDescriptor, max_len: usize) -> Result<(Vec<f64>, f64)> {
    if max_len < 2 {
        return Err(Error::Input("contraction needs word lengths up to at least 2".into()));
    }
    let mut radii = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        let words: Vec<Word> = reduced_words(s.k(), len).filter(|w| w.len() == len).collect();
        let r = words
            .par_iter()
            .map(|w| word_domain(s, w).map(|c| c.radius))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        radii.push(r);
    }
    let xs: Vec<f64> = (1..=max_len).map(|l| l as f64).collect();
    let ys: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let (slope, _, _) = crate::dimension::linear_fit(&xs, &ys);
    Ok((radii, slope.exp()))
}

/// Hausdorff distance between two clouds in sphere coordinates.
pub fn hausdorff_chordal(a: &PointCloud, b: &PointCloud) -> f64 {
    let one_way = |x: &[Vec<f64>], y: &[Vec<f64>]| -> f64 {
        x.par_iter().map(|p| y.iter().map(|q| chordal(p, q)).fold(f64::INFINITY, f64::min)).reduce(|| 0.0, f64::max)
    };
    one_way(&a.sphere, &b.sphere).max(one_way(&b.sphere, &a.sphere))
}

fn check_conditioning(m: &CMat) -> Result<()> {
    let r = form_residual(m);
    if !(r <= TOL.normalize_max_residual) || m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Conditioning(format!("word matrix residual {r:e}")));
    }
    Ok(())
}

/// How limit points are produced from words of a fixed length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitMode {
    WordFixedPoints,
    NestedCenters,
    OrbitOfPoint,
}

impl std::str::FromStr for LimitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-fixed-points" => Ok(Self::WordFixedPoints),
            "nested-centers" => Ok(Self::NestedCenters),
            "orbit-of-point" => Ok(Self::OrbitOfPoint),
            _ => Err(Error::Input(format!("unknown limit mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for LimitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::WordFixedPoints => "word-fixed-points",
            Self::NestedCenters => "nested-centers",
            Self::OrbitOfPoint => "orbit-of-point",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub word_length: usize,
    pub seed: u64,
    pub mode: LimitMode,
}

/// Boundary points with cached sphere coordinates and, when a chart is
/// attached, Heisenberg coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<BoundaryPoint>,
    pub sphere: Vec<Vec<f64>>,
    pub heis: Vec<HeisPoint>,
    pub chart: Option<GroupElement>,
    pub provenance: Option<Provenance>,
    /// Words dropped because of conditioning errors.
    pub skipped: usize,
}

impl PointCloud {
    pub fn new(points: Vec<BoundaryPoint>, provenance: Option<Provenance>) -> Self {
        let sphere = points.iter().map(|p| p.sphere_real()).collect();
        Self { points, sphere, heis: Vec::new(), chart: None, provenance, skipped: 0 }
    }

    /// Cloud given in Heisenberg coordinates of the chart `phi_g`; the
    /// supplied coordinates are kept as they are.
    pub fn from_heisenberg(heis: Vec<HeisPoint>, g: &GroupElement) -> Result<Self> {
        let n = heis.first().map(|h| h.v().len() + 1).unwrap_or(2);
        let f = IwasawaFrame::standard(n)?;
        let points = heis.iter().map(|h| phi_chart(g, &f, h)).collect::<Result<Vec<_>>>()?;
        let mut cloud = Self::new(points, None);
        cloud.heis = heis;
        cloud.chart = Some(g.clone());
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Attaches Heisenberg coordinates for the chart `phi_g`.
    pub fn with_chart(mut self, g: &GroupElement) -> Result<Self> {
        let f = IwasawaFrame::standard(self.points.first().map(|p| p.n()).unwrap_or(2))?;
        self.heis = self.points.iter().map(|p| phi_chart_inv(g, &f, p)).collect::<Result<Vec<_>>>()?;
        self.chart = Some(g.clone());
        Ok(self)
    }

    /// Heisenberg coordinates as real vectors `(Re v, Im v, t)`.
    pub fn heis_real(&self) -> Vec<Vec<f64>> {
        self.heis.iter().map(|h| h.to_real()).collect()
    }
}

/// Rotation `g` fixing the origin whose chart excludes a point far from all
/// domains, so the limit set has bounded Heisenberg coordinates.
pub fn chart_rotation(s: &SchottkyDescriptor) -> GroupElement {
    let n = s.n;
    let centers: Vec<Vec<f64>> = s.domains.iter().map(|c| c.center_real()).collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for x in sphere_samples(2 * n, 4096, 6000) {
        let m = centers
            .iter()
            .zip(&s.domains)
            .map(|(c, d)| chord_to_angle(chordal(c, &x)) - d.angle())
            .fold(f64::INFINITY, f64::min);
        if m > best.0 {
            best = (m, x);
        }
    }
    let p = caps::from_real(&best.1);
    // Unitary whose last column is p, so that g xi_plus = p.
    let pivot = (0..n).max_by(|&a, &b| p[a].norm().total_cmp(&p[b].norm())).unwrap();
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, 0)] = p[i];
    }
    let mut col = 1;
    for i in 0..n {
        if i != pivot {
            m[(i, col)] = C64::new(1.0, 0.0);
            col += 1;
        }
    }
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = CMat::zeros(n, n);
    for j in 0..n {
        let src = if j == n - 1 { 0 } else { j + 1 };
        let ph = if src == 0 { r[(0, 0)] } else { C64::new(1.0, 0.0) };
        u.set_column(j, &(q.column(src) * ph));
    }
    rotation_matrix(&u)
}

/// Visits words with `min_len <= length <= max_len` in lexicographic
/// (prefix-first) order, passing each word's letters and matrix.
fn collect_words<T, F>(s: &SchottkyDescriptor, min_len: usize, max_len: usize, visit: &F) -> (Vec<T>, usize)
where
    T: Send,
    F: Fn(&[u8], &CMat) -> Option<T> + Sync,
{
    let mats = s.letter_matrices();
    let d = s.n + 1;
    let mut out = Vec::new();
    let mut skipped = 0;
    if min_len == 0 {
        if let Some(v) = visit(&[], &CMat::identity(d, d)) {
            out.push(v);
        }
    }
    if max_len == 0 {
        return (out, 0);
    }
    let subtrees: Vec<(Vec<T>, usize)> = (0..mats.len() as u8)
        .into_par_iter()
        .map(|l| {
            let mut acc = Vec::new();
            let mut skip = 0;
            let mut letters = vec![l];
            dfs(&mats, &mut letters, mats[l as usize].clone(), min_len, max_len, visit, &mut acc, &mut skip);
            (acc, skip)
        })
        .collect();
    for (v, sk) in subtrees {
        out.extend(v);
        skipped += sk;
    }
    (out, skipped)
}

#[allow(clippy::too_many_arguments)]
fn dfs<T, F>(
    mats: &[CMat],
    letters: &mut Vec<u8>,
    m: CMat,
    min_len: usize,
    max_len: usize,
    visit: &F,
    out: &mut Vec<T>,
    skipped: &mut usize,
) where
    F: Fn(&[u8], &CMat) -> Option<T>,
{
    let mut m = m;
    if letters.len().is_multiple_of(4) && form_residual(&m) > 1e-12 {
        match normalize_isometry(&GroupElement::from_matrix_unchecked(m.clone())) {
            Ok(g) => m = g.matrix().clone(),
            Err(_) => {
                *skipped += 1;
                return;
            }
        }
    }
    if letters.len() >= min_len {
        match visit(letters, &m) {
            Some(v) => out.push(v),
            None => *skipped += 1,
        }
    }
    if letters.len() == max_len {
        return;
    }
    let last = *letters.last().unwrap();
    for l in 0..mats.len() as u8 {
        if l == words::inverse_letter(last) {
            continue;
        }
        letters.push(l);
        dfs(mats, letters, &m * &mats[l as usize], min_len, max_len, visit, out, skipped);
        letters.pop();
    }
}

fn canonical_from(y: CVec) -> Option<BoundaryPoint> {
    if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return None;
    }
    Some(BoundaryPoint::canonicalize(y))
}

/// Samples of the limit set from every reduced word of length exactly `len`.
pub fn limit_points(s: &SchottkyDescriptor, len: usize, mode: LimitMode) -> Result<PointCloud> {
    if len == 0 {
        return Err(Error::Input("limit points need words of positive length".into()));
    }
    let attractors = s.letter_attractors();
    let xi0 = attractors[0].vector().clone();
    let (points, skipped) = match mode {
        LimitMode::WordFixedPoints => collect_words(s, len, len, &|letters: &[u8], m: &CMat| {
            let x0 = attractors[*letters.last().unwrap() as usize].vector();
            let y = m * x0;
            let y = m * (&y / C64::new(y.norm(), 0.0));
            canonical_from(y)
        }),
        LimitMode::OrbitOfPoint => collect_words(s, len, len, &|letters: &[u8], m: &CMat| {
            // xi0 is fixed by letter 0 and its inverse; applying a trailing run of
            // them would only amplify rounding error at the repelling end.
            let keep = letters.iter().rposition(|&l| l != 0 && l != words::inverse_letter(0)).map_or(0, |i| i + 1);
            if keep == letters.len() {
                canonical_from(m * &xi0)
            } else {
                canonical_from(s.word_matrix(&Word::new(letters[..keep].to_vec())).matrix() * &xi0)
            }
        }),
        LimitMode::NestedCenters => collect_words(s, len, len, &|letters: &[u8], _: &CMat| {
            word_domain_with(s, &Word::new(letters.to_vec()), 1.0, 16).ok().map(|c| c.center)
        }),
    };
    let mut cloud = PointCloud::new(points, Some(Provenance { word_length: len, seed: s.seed, mode }));
    cloud.skipped = skipped;
    Ok(cloud)
}

/// `d(o, gamma o)` for every reduced word of length at most `len`, in word order.
pub fn orbit_distances(s: &SchottkyDescriptor, len: usize, o: &HPoint) -> Result<Vec<f64>> {
    let g0 = o.vector().clone();
    let (d, skipped) = collect_words(s, 0, len, &|_: &[u8], m: &CMat| {
        let v = dist(o, &HPoint::from_unit_unchecked(m * &g0));
        v.is_finite().then_some(v)
    });
    if skipped > 0 {
        return Err(Error::Conditioning(format!("{skipped} words lost to conditioning")));
    }
    Ok(d)
}

/// Distances paired with word lengths, same order as [`orbit_distances`].
pub fn orbit_distances_by_length(s: &SchottkyDescriptor, len: usize, o: &HPoint) -> Result<Vec<(usize, f64)>> {
    let g0 = o.vector().clone();
    let (d, skipped) = collect_words(s, 0, len, &|letters: &[u8], m: &CMat| {
        let v = dist(o, &HPoint::from_unit_unchecked(m * &g0));
        v.is_finite().then_some((letters.len(), v))
    });
    if skipped > 0 {
        return Err(Error::Conditioning(format!("{skipped} words lost to conditioning")));
    }
    Ok(d)
}

/// Attracting fixed points of all words of length `1..=len` with their orbit distances.
pub fn word_attractors_with_distances(
    s: &SchottkyDescriptor,
    len: usize,
    o: &HPoint,
) -> Result<(Vec<BoundaryPoint>, Vec<f64>)> {
    let attractors = s.letter_attractors();
    let g0 = o.vector().clone();
    let (pairs, skipped) = collect_words(s, 1, len, &|letters: &[u8], m: &CMat| {
        let x0 = attractors[*letters.last().unwrap() as usize].vector();
        let y = m * x0;
        let y = m * (&y / C64::new(y.norm(), 0.0));
        let p = canonical_from(y)?;
        let d = dist(o, &HPoint::from_unit_unchecked(m * &g0));
        d.is_finite().then_some((p, d))
    });
    if skipped > 0 {
        return Err(Error::Conditioning(format!("{skipped} words lost to conditioning")));
    }
    Ok(pairs.into_iter().unzip())
}

/// Checks that every generator is hyperbolic with attracting point at its cap centre.
pub fn check_generators(s: &SchottkyDescriptor) -> Result<()> {
    for (i, g) in s.gens.iter().enumerate() {
        let g = if g.kind() == IsometryKind::Unknown { g.classified()? } else { g.clone() };
        let (att, rep) = fixed_boundary_points(&g)?;
        let ca = &s.domains[2 * i].center;
        let cr = &s.domains[2 * i + 1].center;
        if !att.approx_eq(ca, 1e-8) || !rep.approx_eq(cr, 1e-8) {
            return Err(Error::Input(format!("generator {} fixed points do not match its domains", i + 1)));
        }
    }
    Ok(())
}
