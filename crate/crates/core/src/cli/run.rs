//! Subcommand implementations. Each writes its files into the configured
//! output directory and reports failures with the matching exit status.

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::output::{lines, num, write_csv, write_json, write_report, Meta};
use super::sanity::run_battery;
use super::{ExperimentConfig, Failure, EXIT_CONSTRUCTION, EXIT_ESTIMATION, EXIT_VERIFICATION};
use crate::dimension::{
    balogh_check, box_count, critical_exponent, fiber_transverse_dims, geometric_scales, ly_gate, ps_sample,
    theorem_a_gate, theorem_c_gate, BaloghReport, DimEstimate, ExponentEstimate, FiberParams, FiberTransverse,
    FitPolicy, Gate, MetricTag, BALOGH_SLACK,
};
use crate::error::Error;
use crate::hermitian::HPoint;
use crate::schottky::{
    build_good_position, bundled, chart_rotation, limit_points, orbit_distances_by_length, verify_no_triple_chain,
    verify_ping_pong, ConditionResult, PointCloud, SchottkyDescriptor,
};

/// Tolerance of the lower-bound gate.
pub const LOWER_BOUND_TOL: f64 = 0.2;
/// Allowed distance of each dimension estimate from the exponent.
pub const EQUALITY_TOL: f64 = 0.15;
/// Allowed distance between the two exponent estimators.
pub const EXPONENT_TOL: f64 = 0.1;
pub const LY_SOFT: f64 = 0.3;
pub const LY_HARD: f64 = 0.5;

fn meta(config: &ExperimentConfig) -> Meta {
    Meta::new(config.seed, config.hash())
}

/// Reads a descriptor file, or the bundled system for `bundled`.
pub fn load_descriptor(source: &str) -> Result<SchottkyDescriptor, Failure> {
    if source == "bundled" {
        return Ok(bundled());
    }
    let text = std::fs::read_to_string(source).map_err(|e| Failure::usage(format!("{source}: {e}")))?;
    SchottkyDescriptor::from_toml(&text).map_err(|e| Failure::usage(format!("{source}: {e}")))
}

fn descriptor_hash(s: &SchottkyDescriptor) -> String {
    Sha256::digest(s.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn condition_lines(conds: &[Option<ConditionResult>; 4]) -> Vec<String> {
    conds
        .iter()
        .enumerate()
        .map(|(i, c)| match c {
            Some(c) => format!(
                "condition {}: {} (margin {})",
                i + 1,
                if c.passed { "verified" } else { "FAILED" },
                num(c.margin)
            ),
            None => format!("condition {}: not checked", i + 1),
        })
        .collect()
}

pub fn schottky_build(config: &ExperimentConfig) -> Result<(), Failure> {
    let m = meta(config);
    let dir = &config.output_dir;
    let params = config.build_params();
    let mut head = vec![
        format!("n = {}, generators = {}, seed = {}", config.n, config.generators, config.seed),
        format!("t0 = {}, power cap = {}, slack = {}", num(params.t0), params.power_cap, num(params.slack)),
        format!("resolution = {}, margin = {}", params.resolution, num(params.margin)),
    ];
    if params.forced_shared_chain {
        head.push("forced shared chain: on".into());
    }
    match build_good_position(&params, config.seed) {
        Ok(s) => {
            write_report(dir, "descriptor.toml", &m, &s.to_toml())?;
            head.push(format!("power = {}", s.power));
            head.extend(condition_lines(&s.verification.conditions));
            head.push("status: verified".into());
            let body = lines(head);
            write_report(dir, "build-report.txt", &m, &body)?;
            print!("{body}");
            Ok(())
        }
        Err(e) => {
            head.push(format!("status: {e}"));
            write_report(dir, "build-report.txt", &m, &lines(head))?;
            Err(Failure::new(EXIT_CONSTRUCTION, e.to_string()))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct VerifySummary {
    descriptor_hash: String,
    resolution: usize,
    margin: f64,
    conditions: [ConditionResult; 4],
    passed: bool,
    witness: Option<String>,
}

pub fn schottky_verify(config: &ExperimentConfig, source: &str) -> Result<(), Failure> {
    let s = load_descriptor(source)?;
    let m = meta(config);
    let res = config.verification.resolution;
    let margin = config.verification.margin;
    let pp = verify_ping_pong(&s, res);
    let tc = verify_no_triple_chain(&s, res, margin);
    let cond4 = ConditionResult { passed: tc.passed, margin: tc.clearance };
    let conditions = [pp.cond1, pp.cond2, pp.cond3, cond4];
    let passed = pp.passed() && tc.passed;
    let witness = if !pp.passed() {
        Some(pp.describe())
    } else if !tc.passed {
        Some(tc.describe())
    } else {
        None
    };
    let mut body = vec![format!("descriptor seed = {}, power = {}", s.seed, s.power)];
    body.extend(condition_lines(&conditions.map(Some)));
    body.push(pp.describe());
    body.push(tc.describe());
    body.push(format!("status: {}", if passed { "verified" } else { "FAILED" }));
    let body = lines(body);
    write_report(&config.output_dir, "verify-report.txt", &m, &body)?;
    let summary =
        VerifySummary { descriptor_hash: descriptor_hash(&s), resolution: res, margin, conditions, passed, witness };
    write_json(&config.output_dir, "verify.json", &m, &summary)?;
    print!("{body}");
    if passed {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERIFICATION, summary.witness.unwrap_or_default()))
    }
}

fn charted_limit_points(s: &SchottkyDescriptor, config: &ExperimentConfig, len: usize) -> Result<PointCloud, Error> {
    limit_points(s, len, config.limit_mode)?.with_chart(&chart_rotation(s))
}

pub fn limit_sample(config: &ExperimentConfig, source: &str) -> Result<(), Failure> {
    let s = load_descriptor(source)?;
    let cloud = charted_limit_points(&s, config, config.word_length)?;
    let n = s.n;
    let mut header: Vec<String> = vec!["index".into()];
    header.extend((0..2 * n).map(|j| format!("s{j}")));
    for j in 0..n - 1 {
        header.push(format!("v{j}_re"));
        header.push(format!("v{j}_im"));
    }
    header.push("t".into());
    let rows: Vec<Vec<String>> = cloud
        .sphere
        .iter()
        .zip(cloud.heis_real())
        .enumerate()
        .map(|(i, (x, h))| std::iter::once(i.to_string()).chain(x.iter().chain(&h).map(|v| num(*v))).collect())
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let path = write_csv(&config.output_dir, "limit-points.csv", &meta(config), &header, &rows)?;
    println!("{} limit points ({} skipped) -> {}", cloud.len(), cloud.skipped, path.display());
    Ok(())
}

/// `N(R)` on the grid of the counting fit.
fn orbit_count_rows(samples: &[(usize, f64)], e: &ExponentEstimate) -> Vec<Vec<String>> {
    let mut d: Vec<f64> = samples.iter().map(|(_, d)| *d).collect();
    d.sort_by(f64::total_cmp);
    let (lo, hi) = e.r_window;
    (0..64)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / 63.0;
            vec![num(r), d.partition_point(|x| *x <= r).to_string()]
        })
        .collect()
}

fn exponent_stage(s: &SchottkyDescriptor, len: usize) -> Result<(ExponentEstimate, Vec<(usize, f64)>), Error> {
    let samples = orbit_distances_by_length(s, len, &HPoint::origin(s.n))?;
    Ok((critical_exponent(&samples, len)?, samples))
}

pub fn exponent(config: &ExperimentConfig, source: &str) -> Result<(), Failure> {
    let s = load_descriptor(source)?;
    let m = meta(config);
    let (e, samples) = exponent_stage(&s, config.word_length)?;
    write_csv(&config.output_dir, "orbit-counts.csv", &m, &["radius", "count"], &orbit_count_rows(&samples, &e))?;
    write_json(&config.output_dir, "exponent.json", &m, &e)?;
    println!(
        "delta counting {} (stderr {}), series {}",
        num(e.delta_counting),
        num(e.counting_stderr),
        num(e.delta_series)
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricResult {
    pub metric: MetricTag,
    pub estimate: Option<DimEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub word_lengths: [usize; 2],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    /// `max(|alpha - delta|, |beta - delta|)` at each length.
    pub spread: [f64; 2],
    pub narrowing: bool,
    /// Balogh band at the shorter length.
    pub balogh: BaloghReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionSummary {
    pub descriptor_seed: u64,
    pub descriptor_power: u32,
    pub descriptor_hash: String,
    pub n: usize,
    pub word_length: usize,
    pub limit_points: usize,
    pub skipped_words: usize,
    pub exponent: Option<ExponentEstimate>,
    pub box_counts: Vec<MetricResult>,
    /// Spherical box-counting dimension.
    pub alpha: Option<f64>,
    /// Heisenberg (or, without it, Gromov) box-counting dimension.
    pub beta: Option<f64>,
    /// Series estimate of the critical exponent.
    pub delta: Option<f64>,
    pub alpha_minus_delta: Option<f64>,
    pub beta_minus_delta: Option<f64>,
    pub delta_counting_minus_series: Option<f64>,
    pub fiber_transverse: Option<FiberTransverse>,
    pub balogh: Option<BaloghReport>,
    pub gates: Vec<Gate>,
    pub ly_hard_fail: bool,
    pub convergence: Option<Convergence>,
    pub errors: Vec<String>,
}

impl DimensionSummary {
    /// Exit status: estimation errors first, then failed gates.
    pub fn failure(&self) -> Option<Failure> {
        if !self.errors.is_empty() {
            return Some(Failure::new(EXIT_ESTIMATION, self.errors.join("; ")));
        }
        let mut failed: Vec<String> = self.gates.iter().filter(|g| !g.pass).map(|g| g.name.clone()).collect();
        if self.balogh.as_ref().is_some_and(|b| !b.pass) {
            failed.push("balogh-band".into());
        }
        if self.convergence.as_ref().is_some_and(|c| !c.balogh.pass) {
            failed.push("balogh-band (convergence stage)".into());
        }
        if self.ly_hard_fail {
            failed.push("fiber-plus-transverse (hard)".into());
        }
        (!failed.is_empty()).then(|| Failure::new(EXIT_VERIFICATION, format!("gates failed: {}", failed.join(", "))))
    }
}

struct Stage {
    exponent: Option<ExponentEstimate>,
    samples: Vec<(usize, f64)>,
    cloud: Option<PointCloud>,
    box_counts: Vec<MetricResult>,
    errors: Vec<String>,
}

impl Stage {
    fn slope(&self, m: MetricTag) -> Option<f64> {
        self.box_counts.iter().find(|r| r.metric == m).and_then(|r| r.estimate.as_ref()).map(|e| e.slope)
    }

    fn alpha(&self) -> Option<f64> {
        self.slope(MetricTag::Spherical)
    }

    fn beta(&self) -> Option<f64> {
        self.slope(MetricTag::Heisenberg).or_else(|| self.slope(MetricTag::Gromov))
    }

    fn spread(&self) -> Option<f64> {
        let d = self.exponent.as_ref()?.delta_series;
        Some((self.alpha()? - d).abs().max((self.beta()? - d).abs()))
    }
}

fn run_stage(s: &SchottkyDescriptor, config: &ExperimentConfig, len: usize, metrics: &[MetricTag]) -> Stage {
    let mut errors = Vec::new();
    let (exponent, samples) = match exponent_stage(s, len) {
        Ok((e, v)) => (Some(e), v),
        Err(e) => {
            errors.push(format!("exponent at L = {len}: {e}"));
            (None, Vec::new())
        }
    };
    let scales = geometric_scales(config.scales.hi, config.scales.lo, config.scales.count);
    let policy = FitPolicy::default();
    let cloud = match charted_limit_points(s, config, len) {
        Ok(c) => Some(c),
        Err(e) => {
            errors.push(format!("limit points at L = {len}: {e}"));
            None
        }
    };
    let box_counts = match &cloud {
        Some(c) => metrics
            .iter()
            .map(|&metric| match box_count(c, metric, &scales, &policy) {
                Ok(e) => MetricResult { metric, estimate: Some(e), error: None },
                Err(e) => {
                    errors.push(format!("{metric} box count at L = {len}: {e}"));
                    MetricResult { metric, estimate: None, error: Some(e.to_string()) }
                }
            })
            .collect(),
        None => Vec::new(),
    };
    Stage { exponent, samples, cloud, box_counts, errors }
}

/// The headline experiment. Returns the summary even when stages or gates
/// fail; see [`DimensionSummary::failure`].
pub fn dimension_run(config: &ExperimentConfig, source: &str) -> Result<DimensionSummary, Failure> {
    let s = load_descriptor(source)?;
    if !s.verification.all_passed() {
        return Err(Failure::new(EXIT_VERIFICATION, "descriptor does not record four verified conditions"));
    }
    let m = meta(config);
    let dir = &config.output_dir;
    let len = config.word_length;
    let stage = run_stage(&s, config, len, &config.metrics);
    let mut errors = stage.errors.clone();

    if let Some(e) = &stage.exponent {
        write_csv(dir, "orbit-counts.csv", &m, &["radius", "count"], &orbit_count_rows(&stage.samples, e))?;
    }
    for r in &stage.box_counts {
        if let Some(e) = &r.estimate {
            let rows: Vec<Vec<String>> = e
                .scales
                .iter()
                .enumerate()
                .map(|(i, (eps, n))| {
                    vec![num(*eps), n.to_string(), u8::from(i >= e.window.0 && i < e.window.1).to_string()]
                })
                .collect();
            write_csv(dir, &format!("boxcount-{}.csv", r.metric), &m, &["scale", "count", "in_window"], &rows)?;
        }
    }

    let (alpha, beta) = (stage.alpha(), stage.beta());
    let delta = stage.exponent.as_ref().map(|e| e.delta_series);
    let fiber_transverse = match (delta, beta) {
        (Some(d), full) => {
            let params = FiberParams { seed: config.seed, ..FiberParams::default() };
            match ps_sample(&s, len, d).and_then(|mut wc| {
                wc.cloud = wc.cloud.with_chart(&chart_rotation(&s))?;
                fiber_transverse_dims(&wc, &params, full)
            }) {
                Ok(ft) => Some(ft),
                Err(e) => {
                    errors.push(format!("fiber/transverse: {e}"));
                    None
                }
            }
        }
        (None, _) => None,
    };

    let mut gates = Vec::new();
    let balogh = alpha.zip(beta).map(|(a, b)| balogh_check(a, b, s.n, BALOGH_SLACK));
    if let (Some(a), Some(d), Some(ft)) = (alpha, delta, &fiber_transverse) {
        gates.push(theorem_a_gate(a, d, ft.fiber.median, LOWER_BOUND_TOL));
    }
    if let (Some(a), Some(b), Some(e)) = (alpha, beta, &stage.exponent) {
        gates.push(theorem_c_gate(a, b, e.delta_series, e.delta_counting, EQUALITY_TOL, EXPONENT_TOL));
    }
    let mut ly_hard_fail = false;
    if let Some(gap) = fiber_transverse.as_ref().and_then(|ft| ft.ly_gap) {
        let (g, hard) = ly_gate(gap, LY_SOFT, LY_HARD);
        gates.push(g);
        ly_hard_fail = hard;
    }

    let convergence = if len >= 5 {
        let coarse = run_stage(&s, config, len - 2, &[MetricTag::Spherical, MetricTag::Heisenberg]);
        match (coarse.spread(), stage.spread(), coarse.alpha(), coarse.beta(), alpha, beta) {
            (Some(sa), Some(sb), Some(a0), Some(b0), Some(a1), Some(b1)) => Some(Convergence {
                word_lengths: [len - 2, len],
                alpha: [a0, a1],
                beta: [b0, b1],
                spread: [sa, sb],
                narrowing: sb <= sa,
                balogh: balogh_check(a0, b0, s.n, BALOGH_SLACK),
            }),
            _ => None,
        }
    } else {
        None
    };

    let summary = DimensionSummary {
        descriptor_seed: s.seed,
        descriptor_power: s.power,
        descriptor_hash: descriptor_hash(&s),
        n: s.n,
        word_length: len,
        limit_points: stage.cloud.as_ref().map_or(0, |c| c.len()),
        skipped_words: stage.cloud.as_ref().map_or(0, |c| c.skipped),
        alpha_minus_delta: alpha.zip(delta).map(|(a, d)| a - d),
        beta_minus_delta: beta.zip(delta).map(|(b, d)| b - d),
        delta_counting_minus_series: stage.exponent.as_ref().map(|e| e.delta_counting - e.delta_series),
        exponent: stage.exponent,
        box_counts: stage.box_counts,
        alpha,
        beta,
        delta,
        fiber_transverse,
        balogh,
        gates,
        ly_hard_fail,
        convergence,
        errors,
    };
    write_json(dir, "summary.json", &m, &summary)?;
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), num);
    let mut out = vec![
        format!("points {} at L = {len}", summary.limit_points),
        format!("delta {}  alpha {}  beta {}", opt(delta), opt(alpha), opt(beta)),
    ];
    out.extend(
        summary
            .gates
            .iter()
            .map(|g| format!("{}: {} (margin {})", g.name, if g.pass { "pass" } else { "FAIL" }, num(g.margin))),
    );
    if let Some(b) = &summary.balogh {
        out.push(format!("balogh-band: {}", if b.pass { "pass" } else { "FAIL" }));
    }
    print!("{}", lines(out));
    Ok(summary)
}

pub fn sanity(config: &ExperimentConfig) -> Result<(), Failure> {
    let checks = run_battery(config.seed, config.sanity_instances);
    write_json(&config.output_dir, "sanity.json", &meta(config), &checks)?;
    for c in &checks {
        println!(
            "{} {} worst {} tolerance {} ({} instances)",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            num(c.worst),
            num(c.tolerance),
            c.instances
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERIFICATION, format!("invariants failed: {}", failed.join(", "))))
    }
}
