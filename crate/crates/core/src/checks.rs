//! Sampling-based certificates for the growth, convexity and local Lipschitz
//! assumptions on a generator.
//!
//! Every check evaluates an inequality at a finite set of points and reports
//! the worst point found. A PASS is evidence, not a proof.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::ScalarFn;
use crate::generator::{Domain, GeneratorSpec, GrowthEnvelope};
use crate::quadrature;

/// Absolute tolerance on convexity gaps.
pub const TOL_CONVEX: f64 = 1e-9;
/// Relative slack on growth inequalities.
pub const GROWTH_REL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub status: Status,
    /// Signed slack of the worst point; negative means violated.
    pub margin: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub detail: String,
}

impl CheckItem {
    pub fn new(name: &str, status: Status, margin: Option<f64>, witness: Option<Vec<f64>>, detail: impl Into<String>) -> Self {
        CheckItem { name: name.to_string(), status, margin, witness, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn new(name: &str) -> Self {
        CheckReport { name: name.to_string(), items: Vec::new() }
    }

    pub fn with_item(name: &str, item: CheckItem) -> Self {
        CheckReport { name: name.to_string(), items: vec![item] }
    }

    pub fn push(&mut self, item: CheckItem) {
        self.items.push(item);
    }

    /// FAIL if any item failed, PASS if at least one passed, otherwise
    /// SKIPPED (all skipped) or INFO.
    pub fn status(&self) -> Status {
        if self.items.iter().any(|i| i.status == Status::Fail) {
            Status::Fail
        } else if self.items.iter().any(|i| i.status == Status::Pass) {
            Status::Pass
        } else if !self.items.is_empty() && self.items.iter().all(|i| i.status == Status::Skipped) {
            Status::Skipped
        } else {
            Status::Info
        }
    }

    pub fn passed(&self) -> bool {
        self.status() != Status::Fail
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn worst_margin(&self) -> Option<f64> {
        self.items.iter().filter_map(|i| i.margin).reduce(f64::min)
    }
}

/// A point `(t, y, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub y: f64,
    pub z: Vec<f64>,
}

impl SamplePoint {
    fn flat(&self) -> Vec<f64> {
        let mut v = vec![self.t, self.y];
        v.extend_from_slice(&self.z);
        v
    }
}

/// Two points `(y1, z1)`, `(y2, z2)` at a common time.
#[derive(Clone, Debug, PartialEq)]
pub struct PointPair {
    pub t: f64,
    pub y1: f64,
    pub z1: Vec<f64>,
    pub y2: f64,
    pub z2: Vec<f64>,
}

impl PointPair {
    fn flat(&self) -> Vec<f64> {
        let mut v = vec![self.t, self.y1];
        v.extend_from_slice(&self.z1);
        v.push(self.y2);
        v.extend_from_slice(&self.z2);
        v
    }
}

/// Regular lattice with `n` nodes per axis on `t`, `y` and the first `z`
/// component (other components zero). Ranges are closed.
pub fn lattice(t: (f64, f64), y: (f64, f64), z: (f64, f64), n: usize, d: usize) -> Vec<SamplePoint> {
    let node = |r: (f64, f64), i: usize| {
        if n <= 1 {
            r.0
        } else {
            r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut zv = vec![0.0; d.max(1)];
                zv[0] = node(z, k);
                out.push(SamplePoint { t: node(t, i), y: node(y, j), z: zv });
            }
        }
    }
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Running minimum of margins with a lexicographic tie-break on the witness.
#[derive(Clone, Debug)]
struct Worst {
    margin: f64,
    point: Vec<f64>,
}

impl Worst {
    fn better_of(a: Option<Worst>, b: Option<Worst>) -> Option<Worst> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => match a.margin.total_cmp(&b.margin) {
                Ordering::Less => Some(a),
                Ordering::Greater => Some(b),
                Ordering::Equal => {
                    if lex_cmp(&a.point, &b.point) != Ordering::Greater {
                        Some(a)
                    } else {
                        Some(b)
                    }
                }
            },
        }
    }
}

fn bounding_box(samples: &[SamplePoint]) -> (Vec<f64>, Vec<f64>) {
    let dim = samples[0].z.len() + 2;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for s in samples {
        for (k, v) in s.flat().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    (lo, hi)
}

/// `count` points drawn uniformly from the bounding box of `samples`.
pub fn random_points_in_box(samples: &[SamplePoint], count: usize, seed: u64) -> Vec<SamplePoint> {
    if samples.is_empty() || count == 0 {
        return Vec::new();
    }
    let (lo, hi) = bounding_box(samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v: Vec<f64> = lo
                .iter()
                .zip(hi.iter())
                .map(|(a, b)| if a < b { rng.random_range(*a..=*b) } else { *a })
                .collect();
            let z = v.split_off(2);
            SamplePoint { t: v[0], y: v[1], z }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct GrowthCheckOptions {
    pub random_points: usize,
    pub seed: u64,
    pub rel_slack: f64,
}

impl Default for GrowthCheckOptions {
    fn default() -> Self {
        GrowthCheckOptions { random_points: 10_000, seed: 0, rel_slack: GROWTH_REL_SLACK }
    }
}

/// Names of the seven one-sided growth inequalities, in report order.
pub const GROWTH_ITEMS: [&str; 7] = [
    "upper_growth_at_zero",
    "lower_growth_at_zero",
    "log_lower_bound_near_zero",
    "upper_quadratic_growth",
    "upper_linear_quadratic",
    "lower_linear_quadratic",
    "singular_lower_bound",
];

/// Indices of the inequalities that only make sense on the positive half-line.
const POSITIVE_ONLY: [usize; 2] = [2, 6];

/// `(lhs, rhs)` of each inequality `lhs <= rhs` active at the point.
fn growth_sides(
    spec: &GeneratorSpec,
    env: &GrowthEnvelope,
    p: &SamplePoint,
    positive: bool,
) -> Result<[Option<(f64, f64)>; 7]> {
    let (t, y) = (p.t, p.y);
    let zeros = vec![0.0; p.z.len()];
    let g0 = spec.eval(t, y, &zeros)?;
    let gz = spec.eval(t, y, &p.z)?;
    let zn = p.z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u = env.u.eval(t);
    let ly = env.l.eval(y);
    let delta = env.delta.eval(t);
    let gamma = env.gamma.eval(t);
    let f_abs = env.f.eval(y.abs());
    let (c, b) = (env.c, env.b);
    let mut out = [None; 7];
    if y >= c {
        out[0] = Some((g0, u * ly));
        out[3] = Some((gz, u * ly + env.f.eval(y) * zn * zn));
        out[4] = Some((gz, delta + gamma * y.abs() + env.kappa * zn + f_abs * zn * zn));
    }
    if y <= -c {
        out[1] = Some((-u * ly, g0));
        out[5] = Some((-delta - gamma * y.abs() - env.kappa * zn - f_abs * zn * zn, gz));
    }
    if positive && y <= b {
        out[2] = Some((u * y * y.ln(), g0));
        out[6] = Some((-gamma * y.abs() - env.kappa * zn - env.nu / y * zn * zn, gz));
    }
    Ok(out)
}

/// Checks the seven one-sided growth inequalities of `env` against `spec` on
/// the given points plus `opts.random_points` uniform points in their
/// bounding box.
pub fn check_one_sided_growth(
    spec: &GeneratorSpec,
    env: &GrowthEnvelope,
    samples: &[SamplePoint],
    opts: &GrowthCheckOptions,
) -> Result<CheckReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParam("growth check needs at least one sample point".into()));
    }
    env.validate()?;
    for s in samples {
        spec.domain.require(s.y)?;
    }
    let mut points: Vec<SamplePoint> = samples.to_vec();
    for p in random_points_in_box(samples, opts.random_points, opts.seed) {
        if spec.domain.contains(p.y) {
            points.push(p);
        }
    }
    let positive = spec.domain.is_positive_half_line();
    let evaluated: Vec<Result<[Option<(f64, f64)>; 7]>> =
        points.par_iter().map(|p| growth_sides(spec, env, p, positive)).collect();

    let mut worst: [Option<Worst>; 7] = Default::default();
    let mut active = [0usize; 7];
    let mut violations = [0usize; 7];
    for (p, sides) in points.iter().zip(evaluated) {
        let sides = sides?;
        for k in 0..7 {
            if let Some((lhs, rhs)) = sides[k] {
                active[k] += 1;
                let margin = rhs - lhs;
                let slack = opts.rel_slack * lhs.abs().max(rhs.abs());
                if margin < -slack {
                    violations[k] += 1;
                }
                let cand = Some(Worst { margin, point: p.flat() });
                worst[k] = Worst::better_of(worst[k].take(), cand);
            }
        }
    }

    let mut report = CheckReport::new("one_sided_growth");
    for k in 0..7 {
        let name = GROWTH_ITEMS[k];
        if !positive && POSITIVE_ONLY.contains(&k) {
            report.push(CheckItem::new(name, Status::Skipped, None, None, "applies on the positive half-line only"));
            continue;
        }
        match &worst[k] {
            None => report.push(CheckItem::new(name, Status::Pass, None, None, "vacuous: no sample activates the indicator")),
            Some(w) => {
                let status = if violations[k] == 0 { Status::Pass } else { Status::Fail };
                let detail = format!("{} of {} active points violate", violations[k], active[k]);
                let witness = if status == Status::Fail { Some(w.point.clone()) } else { None };
                report.push(CheckItem::new(name, status, Some(w.margin), witness, detail));
            }
        }
    }
    Ok(report)
}

/// Sampler for convexity segments inside a box of `D × R^d`.
#[derive(Clone, Copy, Debug)]
pub struct SegmentSampler {
    pub t: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
    pub d: usize,
}

impl SegmentSampler {
    /// Half of the segments join two uniform points; the other half join a
    /// uniform point `p` to `s p` with `s ∈ [0.2, 5]`, probing radial
    /// directions where homogeneous generators lose convexity first.
    pub fn sample(&self, domain: &Domain, n: usize, seed: u64) -> Vec<PointPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.d.max(1);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let t = rng.random_range(self.t.0..=self.t.1);
            let y1 = rng.random_range(self.y.0..=self.y.1);
            let z1: Vec<f64> = (0..d).map(|_| rng.random_range(self.z.0..=self.z.1)).collect();
            let (y2, z2) = if out.len() % 2 == 0 {
                (rng.random_range(self.y.0..=self.y.1), (0..d).map(|_| rng.random_range(self.z.0..=self.z.1)).collect())
            } else {
                let s = rng.random_range(0.2..=5.0);
                (s * y1, z1.iter().map(|v| s * v).collect::<Vec<f64>>())
            };
            if domain.contains(y1) && domain.contains(y2) {
                out.push(PointPair { t, y1, z1, y2, z2 });
            }
        }
        out
    }
}

/// Checks `g(t, θp + (1-θ)q) <= θ g(t,p) + (1-θ) g(t,q) + TOL_CONVEX` on every
/// segment and every `θ`.
pub fn check_convexity(spec: &GeneratorSpec, segments: &[PointPair], thetas: &[f64]) -> Result<CheckReport> {
    for th in thetas {
        if !(*th > 0.0 && *th < 1.0) {
            return Err(Error::InvalidParam(format!("theta must lie in (0,1), got {th}")));
        }
    }
    let per_segment: Vec<Result<Option<Worst>>> = segments
        .par_iter()
        .map(|s| {
            spec.domain.require(s.y1)?;
            spec.domain.require(s.y2)?;
            let g1 = spec.eval(s.t, s.y1, &s.z1)?;
            let g2 = spec.eval(s.t, s.y2, &s.z2)?;
            let mut worst = None;
            for &th in thetas {
                let ym = th * s.y1 + (1.0 - th) * s.y2;
                let zm: Vec<f64> = s.z1.iter().zip(&s.z2).map(|(a, b)| th * a + (1.0 - th) * b).collect();
                let gm = spec.eval(s.t, ym, &zm)?;
                let gap = gm - th * g1 - (1.0 - th) * g2;
                let mut point = vec![th];
                point.extend(s.flat());
                worst = Worst::better_of(worst, Some(Worst { margin: -gap, point }));
            }
            Ok(worst)
        })
        .collect();
    let mut worst = None;
    let mut violations = 0usize;
    for w in per_segment {
        let w = w?;
        if let Some(w) = &w {
            if w.margin < -TOL_CONVEX {
                violations += 1;
            }
        }
        worst = Worst::better_of(worst, w);
    }
    let item = match worst {
        None => CheckItem::new("convexity", Status::Pass, None, None, "no segments"),
        Some(w) => {
            let status = if w.margin >= -TOL_CONVEX { Status::Pass } else { Status::Fail };
            let witness = if status == Status::Fail { Some(w.point) } else { None };
            CheckItem::new(
                "convexity",
                status,
                Some(w.margin),
                witness,
                format!("{violations} of {} segments violate; witness is [theta, t, y1, z1.., y2, z2..]", segments.len()),
            )
        }
    };
    Ok(CheckReport::with_item("convexity", item))
}

/// Hessian of `(y, z) -> y^{-r} |z|^2` at `y > 0`, ordered `(y, z_1, ..., z_d)`.
pub fn power_quadratic_hessian(r: f64, y: f64, z: &[f64]) -> DMatrix<f64> {
    let d = z.len();
    let zz: f64 = z.iter().map(|v| v * v).sum();
    let mut h = DMatrix::zeros(d + 1, d + 1);
    h[(0, 0)] = r * (r + 1.0) * y.powf(-r - 2.0) * zz;
    for k in 0..d {
        let off = -2.0 * r * y.powf(-r - 1.0) * z[k];
        h[(0, k + 1)] = off;
        h[(k + 1, 0)] = off;
        h[(k + 1, k + 1)] = 2.0 * y.powf(-r);
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianWitness {
    pub y: f64,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    /// `vᵀ H(y, z) v`, recomputed directly from the Hessian entries.
    pub quad_form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerConvexity {
    pub convex: bool,
    pub witness: Option<HessianWitness>,
    /// Smallest normalised `vᵀHv / ‖H‖` seen on the random sample (convex case).
    pub sampled_min: Option<f64>,
}

fn quad_form(h: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * h * v)[(0, 0)]
}

/// Convexity of `y^{-r}|z|^2` on `(0,∞) × R^d`, which holds exactly when
/// `0 <= r <= 1`. In the non-convex case a negative direction of the Hessian
/// at `y = 1, z = e_1` is returned; in the convex case the quadratic form is
/// sampled at random points as a consistency check.
pub fn power_quadratic_convexity(r: f64, d: usize, require_convex: bool, seed: u64) -> Result<PowerConvexity> {
    if d == 0 {
        return Err(Error::InvalidParam("dimension must be at least 1".into()));
    }
    if require_convex && r < 0.0 {
        return Err(Error::InvalidParam(format!("r = {r} < 0 is outside the convex regime")));
    }
    let convex = (0.0..=1.0).contains(&r);
    if !convex {
        let y = 1.0;
        let mut z = vec![0.0; d];
        z[0] = 1.0;
        let h = power_quadratic_hessian(r, y, &z);
        let eig = SymmetricEigen::new(h.clone());
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        let v: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
        let q = quad_form(&h, &v);
        let witness = HessianWitness { y, z, v: v.iter().copied().collect(), quad_form: q };
        return Ok(PowerConvexity { convex, witness: Some(witness), sampled_min: None });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..2000 {
        let y = 10f64.powf(rng.random_range(-2.0..1.0));
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut v = DVector::from_fn(d + 1, |_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n == 0.0 {
            continue;
        }
        v /= n;
        let h = power_quadratic_hessian(r, y, &z);
        let scale = h.norm().max(f64::MIN_POSITIVE);
        min_ratio = min_ratio.min(quad_form(&h, &v) / scale);
    }
    Ok(PowerConvexity { convex, witness: None, sampled_min: Some(min_ratio) })
}

/// `g(t,y1,z1) - θ g(t,y2,z2) - (1-θ) g(t, Δy, Δz)` with the θ-difference
/// point `Δ = (p1 - θ p2) / (1 - θ)`.
pub fn theta_gap(spec: &GeneratorSpec, theta: f64, p1: (f64, &[f64]), p2: (f64, &[f64]), t: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParam(format!("theta must lie in (0,1), got {theta}")));
    }
    let (y1, z1) = p1;
    let (y2, z2) = p2;
    let dy = (y1 - theta * y2) / (1.0 - theta);
    spec.domain.require(dy)?;
    let dz: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| (a - theta * b) / (1.0 - theta)).collect();
    let g1 = spec.eval(t, y1, z1)?;
    let g2 = spec.eval(t, y2, z2)?;
    let gd = spec.eval(t, dy, &dz)?;
    Ok(g1 - theta * g2 - (1.0 - theta) * gd)
}

/// Checks the local Lipschitz bound
/// `|g(y1,z1) - g(y2,z2)| <= ĥ1 |y1-y2| + ĥ2 |z1-z2|` with
/// `ĥ1 = h1(|y1|,|y2|)(r1 + |z1|^{2r} + |z2|^{2r})` and
/// `ĥ2 = h2(|y1|,|y2|)(r2 + |z1| + |z2|)`.
pub fn check_local_lipschitz<H1, H2>(
    spec: &GeneratorSpec,
    h1: H1,
    h2: H2,
    r: f64,
    r1: f64,
    r2: f64,
    pairs: &[PointPair],
) -> Result<CheckReport>
where
    H1: Fn(f64, f64) -> f64 + Sync,
    H2: Fn(f64, f64) -> f64 + Sync,
{
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParam(format!("exponent r must lie in (0,1), got {r}")));
    }
    let per_pair: Vec<Result<Worst>> = pairs
        .par_iter()
        .map(|p| {
            let g1 = spec.eval(p.t, p.y1, &p.z1)?;
            let g2 = spec.eval(p.t, p.y2, &p.z2)?;
            let n1 = p.z1.iter().map(|v| v * v).sum::<f64>().sqrt();
            let n2 = p.z2.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dz = p.z1.iter().zip(&p.z2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let (a1, a2) = (p.y1.abs(), p.y2.abs());
            let hh1 = h1(a1, a2) * (r1 + n1.powf(2.0 * r) + n2.powf(2.0 * r));
            let hh2 = h2(a1, a2) * (r2 + n1 + n2);
            let lhs = (g1 - g2).abs();
            let rhs = hh1 * (p.y1 - p.y2).abs() + hh2 * dz;
            let slack = GROWTH_REL_SLACK * lhs.max(rhs);
            Ok(Worst { margin: rhs - lhs + slack, point: p.flat() })
        })
        .collect();
    let mut worst = None;
    let mut violations = 0usize;
    for w in per_pair {
        let w = w?;
        if w.margin < 0.0 {
            violations += 1;
        }
        worst = Worst::better_of(worst, Some(w));
    }
    let item = match worst {
        None => CheckItem::new("local_lipschitz", Status::Pass, None, None, "no pairs"),
        Some(w) => {
            let status = if violations == 0 { Status::Pass } else { Status::Fail };
            let witness = if status == Status::Fail { Some(w.point) } else { None };
            CheckItem::new(
                "local_lipschitz",
                status,
                Some(w.margin),
                witness,
                format!("{violations} of {} pairs violate", pairs.len()),
            )
        }
    };
    Ok(CheckReport::with_item("local_lipschitz", item))
}

/// Heuristic look at the tails of `1/l`: truncated integrals up to `cutoff`
/// on both sides and the log-log growth exponent of `l` near the cutoff.
/// Always reported as INFO; divergence cannot be decided from samples.
pub fn class_l_heuristic(l: &ScalarFn, cutoff: f64) -> CheckItem {
    let tail = |sign: f64| -> (f64, f64, f64) {
        let inv = |y: f64| 1.0 / l.eval(sign * y);
        let near = quadrature::simpson(inv, 0.0, 1.0, 200);
        // substitute y = e^s on [1, R]
        let far = |s_hi: f64| quadrature::simpson(|s: f64| s.exp() * inv(s.exp()), 0.0, s_hi, 4000);
        let full = near + far(cutoff.ln());
        let partial = near + far((cutoff / 1e3).ln());
        let y1 = cutoff / 10.0;
        let slope = (l.eval(sign * cutoff).ln() - l.eval(sign * y1).ln()) / (cutoff.ln() - y1.ln());
        (full, partial, slope)
    };
    let (rf, rp, rs) = tail(1.0);
    let (lf, lp, ls) = tail(-1.0);
    let positive = (0..=100).all(|i| {
        let y = -cutoff + 2.0 * cutoff * i as f64 / 100.0;
        l.eval(y) > 0.0
    });
    let likely = positive && rs <= 1.0 + 1e-6 && ls <= 1.0 + 1e-6;
    CheckItem::new(
        "class_l_heuristic",
        Status::Info,
        None,
        None,
        format!(
            "right tail: int to R = {rf:.6e} (to R/1e3: {rp:.6e}), growth exponent {rs:.4}; \
             left tail: int to R = {lf:.6e} (to R/1e3: {lp:.6e}), growth exponent {ls:.4}; \
             positive on sample: {positive}; divergence {} (R = {cutoff:e})",
            if likely { "plausible" } else { "doubtful" }
        ),
    )
}
