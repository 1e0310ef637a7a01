//! Backward-Euler regression Monte Carlo for `Y_t = ξ + ∫_t^T g ds - ∫_t^T Z dB`,
//! with an optional lower obstacle handled by discrete Snell projection.

use ndarray::{Array2, Array3, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::StateFn;
use crate::generator::{Domain, GeneratorSpec};
use crate::ode::backward_step;
use crate::rbsde::Obstacle;
use crate::regression::{Projector, RegressionBasis};
use crate::stochastic::{PathBundle, TimeGrid};

/// Largest admissible `|Y|` before a run is declared divergent.
pub const DIVERGENCE_CAP: f64 = 1e10;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalCondition {
    DeterministicConstant { value: f64 },
    FunctionOfBt { function: StateFn },
}

impl TerminalCondition {
    pub fn constant(value: f64) -> Self {
        TerminalCondition::DeterministicConstant { value }
    }

    pub fn of_bt(function: StateFn) -> Self {
        TerminalCondition::FunctionOfBt { function }
    }

    #[inline]
    pub fn eval(&self, b_t: &[f64]) -> f64 {
        match self {
            TerminalCondition::DeterministicConstant { value } => *value,
            TerminalCondition::FunctionOfBt { function } => function.eval(b_t),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            TerminalCondition::DeterministicConstant { value } => Some(*value),
            TerminalCondition::FunctionOfBt { .. } => None,
        }
    }
}

fn default_picard() -> usize {
    3
}

fn default_z_clip() -> Option<f64> {
    Some(50.0)
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Fixed-point sweeps for the implicit `y` dependence after the explicit
    /// step; 0 is the explicit scheme.
    #[serde(default = "default_picard")]
    pub picard_iters: usize,
    /// Componentwise cap on `|Z|`; `None` disables clipping.
    #[serde(default = "default_z_clip")]
    pub z_clip: Option<f64>,
    /// Distance kept from finite domain walls; defaults to `1e-6 (1 + max|ξ|)`.
    #[serde(default)]
    pub domain_floor: Option<f64>,
    #[serde(default)]
    pub basis: RegressionBasis,
    /// Use the backward ODE recursion when ξ is constant and `g` ignores `z`.
    #[serde(default = "default_true")]
    pub deterministic_bypass: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            picard_iters: default_picard(),
            z_clip: default_z_clip(),
            domain_floor: None,
            basis: RegressionBasis::default(),
            deterministic_bypass: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if let Some(c) = self.z_clip {
            if !(c > 0.0) {
                return Err(Error::InvalidParam(format!("z_clip must be positive, got {c}")));
            }
        }
        if let Some(eps) = self.domain_floor {
            if !(eps > 0.0) {
                return Err(Error::InvalidParam(format!("domain_floor must be positive, got {eps}")));
            }
        }
        domain.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub config: SolverConfig,
    pub deterministic: bool,
    pub seed: Option<u64>,
    pub picard_iters: usize,
    pub z_clip_events: usize,
    pub projection_clips: usize,
    /// `Z` clips plus projection clips at each node; zero at `T`.
    pub clips_per_step: Vec<usize>,
    /// Regression degree actually used at each step `0..M`.
    pub degree_used: Vec<usize>,
    /// Monte Carlo standard error per node of the pathwise estimator
    /// `ξ + Σ_{j >= i} (g_j Δt + ΔK_j)`, whose mean targets `E[Y_{t_i}]`.
    pub stderr: Vec<f64>,
    pub domain_floor: f64,
}

/// Discrete `(Y, Z[, K])` on the grid. Deterministic runs store a single
/// column that stands for every path.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionProcess {
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub d: usize,
    /// `(M + 1) × columns`
    pub y: Array2<f64>,
    /// `M × columns × d`
    pub z: Array3<f64>,
    /// Cumulative `K`, `(M + 1) × columns`, with `K_0 = 0`.
    pub k: Option<Array2<f64>>,
    pub meta: SolverMeta,
}

impl SolutionProcess {
    pub fn columns(&self) -> usize {
        self.y.ncols()
    }

    #[inline]
    fn col(&self, p: usize) -> usize {
        if self.y.ncols() == 1 {
            0
        } else {
            p
        }
    }

    #[inline]
    pub fn y_at(&self, i: usize, p: usize) -> f64 {
        self.y[[i, self.col(p)]]
    }

    #[inline]
    pub fn z_at(&self, i: usize, p: usize, k: usize) -> f64 {
        self.z[[i, self.col(p), k]]
    }

    #[inline]
    pub fn k_at(&self, i: usize, p: usize) -> f64 {
        self.k.as_ref().map_or(0.0, |k| k[[i, self.col(p)]])
    }

    /// `ΔK_i = K_{i+1} - K_i` for step `i < M`.
    #[inline]
    pub fn dk_at(&self, i: usize, p: usize) -> f64 {
        self.k_at(i + 1, p) - self.k_at(i, p)
    }

    pub fn y_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.y.row(i)
    }

    pub fn mean_y(&self, i: usize) -> f64 {
        self.y.row(i).mean().unwrap_or(f64::NAN)
    }

    pub fn std_y(&self, i: usize) -> f64 {
        if self.y.ncols() < 2 {
            0.0
        } else {
            self.y.row(i).std(1.0)
        }
    }

    pub fn mean_z(&self, i: usize, k: usize) -> f64 {
        self.z.index_axis(Axis(0), i).column(k).mean().unwrap_or(f64::NAN)
    }

    pub fn mean_k(&self, i: usize) -> f64 {
        self.k.as_ref().map_or(0.0, |k| k.row(i).mean().unwrap_or(f64::NAN))
    }

    pub fn std_k(&self, i: usize) -> f64 {
        match &self.k {
            Some(k) if k.ncols() > 1 => k.row(i).std(1.0),
            _ => 0.0,
        }
    }

    pub fn y0(&self) -> f64 {
        self.mean_y(0)
    }

    pub fn y0_stderr(&self) -> f64 {
        self.meta.stderr[0]
    }

    pub fn stderr(&self, i: usize) -> f64 {
        self.meta.stderr[i]
    }

    pub fn is_deterministic(&self) -> bool {
        self.meta.deterministic
    }

    /// Share of path-steps with `ΔK > 0` at step `i`.
    pub fn active_fraction(&self, i: usize) -> f64 {
        match &self.k {
            None => 0.0,
            Some(k) => {
                let n = k.ncols();
                let active = (0..n).filter(|&p| k[[i + 1, p]] - k[[i, p]] > 0.0).count();
                active as f64 / n as f64
            }
        }
    }

    pub fn same_grid(&self, other: &SolutionProcess) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.n_paths != other.n_paths {
            return Err(Error::GridMismatch(format!("{} paths vs {} paths", self.n_paths, other.n_paths)));
        }
        if self.columns() > 1 && other.columns() > 1 && self.meta.seed != other.meta.seed {
            return Err(Error::GridMismatch("solutions were computed on different path bundles".into()));
        }
        Ok(())
    }
}

#[inline]
fn project_into(domain: &Domain, floor: f64, y: f64) -> (f64, bool) {
    if domain.is_real_line() {
        return (y, false);
    }
    let v = domain.project(y, floor);
    (v, v != y)
}

fn divergence_check(step: usize, time: f64, ys: &[f64]) -> Result<()> {
    if let Some(v) = ys.iter().find(|v| !v.is_finite() || v.abs() > DIVERGENCE_CAP) {
        return Err(Error::Divergence { step, time, reason: format!("|Y| reached {v:e}") });
    }
    Ok(())
}

fn floor_for(cfg: &SolverConfig, terminal_scale: f64) -> f64 {
    cfg.domain_floor.unwrap_or(1e-6 * (1.0 + terminal_scale))
}

/// Solves the BSDE on the given path bundle.
pub fn solve_bsde(
    spec: &GeneratorSpec,
    xi: &TerminalCondition,
    grid: TimeGrid,
    paths: &PathBundle,
    cfg: &SolverConfig,
) -> Result<SolutionProcess> {
    solve_impl(spec, xi, None, grid, paths, cfg)
}

/// Deterministic recursion for constant terminal values and `z`-independent
/// generators, with an optional time-only obstacle. Each step is the
/// backward ODE step shared with [`crate::ode::solve_backward_ode`]; leaving
/// the domain or exceeding the divergence cap is reported as `Divergence`.
pub fn solve_deterministic(
    spec: &GeneratorSpec,
    value: f64,
    obstacle: Option<&Obstacle>,
    grid: TimeGrid,
    d: usize,
    n_paths: usize,
    cfg: &SolverConfig,
) -> Result<SolutionProcess> {
    cfg.validate(&spec.domain)?;
    spec.domain.require(value)?;
    let m = grid.steps;
    let h = grid.dt();
    let zeros = vec![0.0; d.max(1)];
    let rhs = |t: f64, y: f64| spec.eval_raw(t, y, &zeros);
    let mut y = Array2::zeros((m + 1, 1));
    y[[m, 0]] = value;
    let mut k = obstacle.map(|_| Array2::zeros((m + 1, 1)));
    let mut dks = vec![0.0; m];
    if let Some(ob) = obstacle {
        ob.check_terminal(grid.horizon, &zeros, value, 0)?;
    }
    for i in (0..m).rev() {
        let t = grid.node(i);
        let mut v = backward_step(&rhs, grid.node(i + 1), y[[i + 1, 0]], h);
        if !v.is_finite() || v.abs() > DIVERGENCE_CAP {
            return Err(Error::Divergence { step: i, time: t, reason: format!("|Y| reached {v:e}") });
        }
        if !spec.domain.contains(v) {
            return Err(Error::Divergence {
                step: i,
                time: t,
                reason: format!("Y = {v} left the domain {}", spec.domain),
            });
        }
        if let Some(ob) = obstacle {
            let l = ob.eval(t, &zeros);
            if l > v {
                dks[i] = l - v;
                v = l;
            }
        }
        y[[i, 0]] = v;
    }
    if let Some(k) = k.as_mut() {
        for i in 0..m {
            k[[i + 1, 0]] = k[[i, 0]] + dks[i];
        }
    }
    Ok(SolutionProcess {
        grid,
        n_paths,
        d: d.max(1),
        y,
        z: Array3::zeros((m, 1, d.max(1))),
        k,
        meta: SolverMeta {
            config: cfg.clone(),
            deterministic: true,
            seed: None,
            picard_iters: 0,
            z_clip_events: 0,
            projection_clips: 0,
            clips_per_step: vec![0; m + 1],
            degree_used: vec![0; m],
            stderr: vec![0.0; m + 1],
            domain_floor: floor_for(cfg, value.abs()),
        },
    })
}

fn obstacle_is_deterministic(obstacle: Option<&Obstacle>) -> bool {
    obstacle.is_none_or(|o| o.is_time_only())
}

pub(crate) fn solve_impl(
    spec: &GeneratorSpec,
    xi: &TerminalCondition,
    obstacle: Option<&Obstacle>,
    grid: TimeGrid,
    paths: &PathBundle,
    cfg: &SolverConfig,
) -> Result<SolutionProcess> {
    if paths.grid != grid {
        return Err(Error::GridMismatch(format!("path grid {:?} differs from solver grid {grid:?}", paths.grid)));
    }
    cfg.validate(&spec.domain)?;
    if cfg.deterministic_bypass && spec.is_z_independent() && obstacle_is_deterministic(obstacle) {
        if let Some(value) = xi.as_constant() {
            return solve_deterministic(spec, value, obstacle, grid, paths.d, paths.n_paths, cfg);
        }
    }

    let n = paths.n_paths;
    let d = paths.d;
    let m = grid.steps;
    let dt = grid.dt();
    let domain = spec.domain;

    let mut b = paths.terminal();
    let xi_vals: Vec<f64> = b.par_chunks(d).map(|bp| xi.eval(bp)).collect();
    for &v in &xi_vals {
        domain.require(v)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "terminal condition".into() });
        }
    }
    if let Some(ob) = obstacle {
        for (p, bp) in b.chunks(d).enumerate() {
            ob.check_terminal(grid.horizon, bp, xi_vals[p], p)?;
        }
    }
    let scale = xi_vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = floor_for(cfg, scale);

    let mut y = Array2::<f64>::zeros((m + 1, n));
    let mut z = Array3::<f64>::zeros((m, n, d));
    let mut k_inc = obstacle.map(|_| Array2::<f64>::zeros((m, n)));
    // Same node values the checks see, so `Y >= L` holds without rounding slack.
    let l_vals = obstacle.map(|ob| ob.values_on(grid, Some(paths))).transpose()?;
    y.row_mut(m).iter_mut().zip(&xi_vals).for_each(|(a, v)| *a = *v);

    let mut degree_used = vec![0; m];
    let mut stderr = vec![0.0; m + 1];
    let mut pathwise = xi_vals.clone();
    stderr[m] = std_err(&pathwise);
    let mut z_clip_events = 0usize;
    let mut projection_clips = 0usize;
    let mut clips_per_step = vec![0usize; m + 1];

    for i in (0..m).rev() {
        let t = grid.node(i);
        let inc = paths.step(i);
        b.iter_mut().zip(inc).for_each(|(bv, dv)| *bv -= dv);
        let proj = Projector::new(&b, d, cfg.basis, t)?;
        degree_used[i] = proj.degree_used;

        let next: Vec<f64> = y.row(i + 1).to_vec();
        let ey = proj.project(&next);

        // Z_i = E[(Y_{i+1} - E[Y_{i+1} | B_i]) ΔB_i | B_i] / Δt
        let mut zi = vec![0.0; n * d];
        for kk in 0..d {
            let target: Vec<f64> = (0..n).map(|p| (next[p] - ey[p]) * inc[p * d + kk]).collect();
            let fit = proj.project(&target);
            for p in 0..n {
                zi[p * d + kk] = fit[p] / dt;
            }
        }
        if let Some(c) = cfg.z_clip {
            for v in zi.iter_mut() {
                if v.abs() > c {
                    *v = v.clamp(-c, c);
                    z_clip_events += 1;
                    clips_per_step[i] += 1;
                }
            }
        }

        let step: Vec<(f64, f64, bool)> = (0..n)
            .into_par_iter()
            .map(|p| {
                let zp = &zi[p * d..(p + 1) * d];
                let mut yv = project_into(&domain, floor, ey[p]).0;
                let mut raw = yv;
                for _ in 0..=cfg.picard_iters {
                    raw = ey[p] + spec.eval_raw(t, yv, zp) * dt;
                    yv = project_into(&domain, floor, raw).0;
                }
                let (yp, clipped) = project_into(&domain, floor, raw);
                (yp, spec.eval_raw(t, yp, zp), clipped)
            })
            .collect();

        let mut yi: Vec<f64> = step.iter().map(|s| s.0).collect();
        let projected = step.iter().filter(|s| s.2).count();
        projection_clips += projected;
        clips_per_step[i] += projected;
        divergence_check(i, t, &yi)?;
        if let Some(&(_, g, _)) = step.iter().find(|s| !s.1.is_finite()) {
            return Err(Error::Divergence { step: i, time: t, reason: format!("generator value {g}") });
        }

        if let (Some(lv), Some(kinc)) = (l_vals.as_ref(), k_inc.as_mut()) {
            for p in 0..n {
                let l = crate::rbsde::pick(&lv[i], p);
                if l > yi[p] {
                    kinc[[i, p]] = l - yi[p];
                    yi[p] = l;
                }
            }
        }

        for p in 0..n {
            pathwise[p] += step[p].1 * dt + k_inc.as_ref().map_or(0.0, |k| k[[i, p]]);
        }
        stderr[i] = std_err(&pathwise);
        y.row_mut(i).iter_mut().zip(&yi).for_each(|(a, v)| *a = *v);
        for p in 0..n {
            for kk in 0..d {
                z[[i, p, kk]] = zi[p * d + kk];
            }
        }
    }

    let k = k_inc.map(|inc| {
        let mut k = Array2::<f64>::zeros((m + 1, n));
        for i in 0..m {
            for p in 0..n {
                k[[i + 1, p]] = k[[i, p]] + inc[[i, p]];
            }
        }
        k
    });

    Ok(SolutionProcess {
        grid,
        n_paths: n,
        d,
        y,
        z,
        k,
        meta: SolverMeta {
            config: cfg.clone(),
            deterministic: false,
            seed: Some(paths.seed),
            picard_iters: cfg.picard_iters,
            z_clip_events,
            projection_clips,
            clips_per_step,
            degree_used,
            stderr,
            domain_floor: floor,
        },
    })
}

fn std_err(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// `(Y^A - θ Y^B) / (1 - θ)` per path and node, with a domain-membership flag.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaDifference {
    pub values: Array2<f64>,
    pub in_domain: Array2<bool>,
}

pub fn theta_difference_process(a: &SolutionProcess, b: &SolutionProcess, theta: f64, domain: &Domain) -> Result<ThetaDifference> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParam(format!("theta must lie in (0,1), got {theta}")));
    }
    a.same_grid(b)?;
    let cols = a.columns().max(b.columns());
    let rows = a.grid.steps + 1;
    let mut values = Array2::zeros((rows, cols));
    let mut in_domain = Array2::from_elem((rows, cols), false);
    for i in 0..rows {
        for p in 0..cols {
            let v = (a.y_at(i, p) - theta * b.y_at(i, p)) / (1.0 - theta);
            values[[i, p]] = v;
            in_domain[[i, p]] = domain.contains(v);
        }
    }
    Ok(ThetaDifference { values, in_domain })
}

/// `max_i |mean(Y_i) - mean(Y_{i+1}) - mean(g(t_i, Y_i, Z_i)) Δt|`.
pub fn picard_residual(sol: &SolutionProcess, spec: &GeneratorSpec) -> f64 {
    let m = sol.grid.steps;
    let dt = sol.grid.dt();
    let cols = sol.columns();
    let d = sol.d;
    (0..m)
        .map(|i| {
            let t = sol.grid.node(i);
            // collect before summing so the result ignores the thread count
            let gs: Vec<f64> = (0..cols)
                .into_par_iter()
                .map(|p| {
                    let zp: Vec<f64> = (0..d).map(|k| sol.z_at(i, p, k)).collect();
                    spec.eval_raw(t, sol.y_at(i, p), &zp)
                })
                .collect();
            let mean_g = gs.iter().sum::<f64>() / cols as f64;
            (sol.mean_y(i) - sol.mean_y(i + 1) - mean_g * dt).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::GeneratorFamily;
    use crate::ode::solve_backward_ode;

    fn bundle(n: usize, t: f64, m: usize, seed: u64) -> PathBundle {
        PathBundle::generate(seed, n, TimeGrid::new(t, m).unwrap(), 1).unwrap()
    }

    #[test]
    fn affine_decay_positive_domain() {
        let spec = GeneratorSpec::new(
            Domain::PositiveHalfLine,
            GeneratorFamily::AffineQuadratic { a: 0.0, b0: -1.0, gamma_q: 0.0 },
        );
        let p = bundle(10, 0.5, 50, 0);
        let sol = solve_bsde(&spec, &TerminalCondition::constant(1.0), p.grid, &p, &SolverConfig::default()).unwrap();
        assert!(sol.is_deterministic());
        assert!((sol.y0() - 0.5).abs() <= 1e-12);

        let p = bundle(10, 1.2, 120, 0);
        let err = solve_bsde(&spec, &TerminalCondition::constant(1.0), p.grid, &p, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn linear_generator_matches_exponential() {
        let spec = GeneratorSpec::affine(1.0, 0.0);
        let p = bundle(1, 1.0, 1000, 0);
        let sol = solve_bsde(&spec, &TerminalCondition::constant(-0.5), p.grid, &p, &SolverConfig::default()).unwrap();
        assert!((sol.y0() + 0.5 * 1f64.exp()).abs() <= 1e-3);
        let ode = solve_backward_ode(-0.5, |_, y| y, p.grid, &Domain::RealLine, None).unwrap();
        for i in 0..=1000 {
            assert!((sol.y_at(i, 0) - ode.values[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn quadratic_driver_small_run() {
        let spec = GeneratorSpec::pure_quadratic(1.0);
        let xi = TerminalCondition::of_bt(StateFn::Affine { scale: 1.0, shift: 0.0 });
        let p = bundle(20_000, 1.0, 50, 5);
        let sol = solve_bsde(&spec, &xi, p.grid, &p, &SolverConfig::default()).unwrap();
        let se = sol.y0_stderr();
        assert!((sol.y0() - 0.5).abs() <= 3.0 * se, "{} ± {se}", sol.y0());
        assert_eq!(sol.meta.z_clip_events, 0);
        for i in 5..45 {
            assert!((sol.mean_z(i, 0) - 1.0).abs() < 0.05, "Z at {i}: {}", sol.mean_z(i, 0));
        }
        // terminal row carries ξ
        let bt = p.terminal();
        for q in 0..10 {
            assert_eq!(sol.y_at(50, q), bt[q]);
        }
        let res = picard_residual(&sol, &spec);
        assert!(res <= 5.0 * se, "{res} vs {se}");
    }

    #[test]
    fn exponential_transform_oracle() {
        let spec = GeneratorSpec::new(Domain::RealLine, GeneratorFamily::ExpMinusQuadratic);
        let p = bundle(2000, 0.3, 300, 1);
        let sol = solve_bsde(&spec, &TerminalCondition::constant(2f64.ln()), p.grid, &p, &SolverConfig::default()).unwrap();
        let exact = -(1.0 - 0.3f64.exp() / 2.0).ln();
        assert!((sol.y0() - exact).abs() <= 1e-3, "{} vs {exact}", sol.y0());
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let p = bundle(10, 1.0, 10, 0);
        let spec = GeneratorSpec::pure_quadratic(1.0);
        let err = solve_bsde(&spec, &TerminalCondition::constant(0.0), TimeGrid::new(1.0, 20).unwrap(), &p, &SolverConfig::default());
        assert!(matches!(err, Err(Error::GridMismatch(_))));
    }

    #[test]
    fn terminal_outside_domain() {
        let p = bundle(10, 1.0, 10, 0);
        let spec = GeneratorSpec::new(Domain::PositiveHalfLine, GeneratorFamily::PowerQuadratic { coef: 1.0, r: 1.0 });
        let xi = TerminalCondition::of_bt(StateFn::Affine { scale: 1.0, shift: 0.0 });
        assert!(matches!(
            solve_bsde(&spec, &xi, p.grid, &p, &SolverConfig::default()),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn theta_difference_examples() {
        let spec = GeneratorSpec::affine(0.5, 0.0);
        let p = bundle(1, 1.0, 10, 0);
        let a = solve_bsde(&spec, &TerminalCondition::constant(2.0), p.grid, &p, &SolverConfig::default()).unwrap();
        let same = theta_difference_process(&a, &a, 0.7, &Domain::PositiveHalfLine).unwrap();
        for i in 0..=10 {
            assert!((same.values[[i, 0]] - a.y_at(i, 0)).abs() < 1e-12);
        }
        assert!(same.in_domain.iter().all(|&f| f));
        let b = solve_bsde(&spec, &TerminalCondition::constant(1.0), p.grid, &p, &SolverConfig::default()).unwrap();
        for theta in [0.5, 0.9, 0.99] {
            let td = theta_difference_process(&a, &b, theta, &Domain::PositiveHalfLine).unwrap();
            assert!(td.in_domain.iter().all(|&f| f));
        }
    }

    #[test]
    fn corrupted_solution_raises_residual() {
        let spec = GeneratorSpec::affine(1.0, 0.0);
        let p = bundle(1, 1.0, 100, 0);
        let mut sol = solve_bsde(&spec, &TerminalCondition::constant(-0.5), p.grid, &p, &SolverConfig::default()).unwrap();
        // the bypass integrates with RK4, so the Euler residual is O(Δt²)
        assert!(picard_residual(&sol, &spec) <= 1e-4);
        sol.y[[0, 0]] += 1.0;
        assert!(picard_residual(&sol, &spec) >= 0.5);
    }

    #[test]
    fn mirrored_problem_gives_negated_solution() {
        let spec = GeneratorSpec::new(
            Domain::RealLine,
            GeneratorFamily::AffineQuadratic { a: 0.3, b0: 0.1, gamma_q: 0.8 },
        );
        let xi = TerminalCondition::of_bt(StateFn::Sin { scale: 1.0, freq: 1.0, shift: 0.0 });
        let xi_neg = TerminalCondition::of_bt(StateFn::Sin { scale: -1.0, freq: 1.0, shift: 0.0 });
        let p = bundle(5000, 1.0, 20, 2);
        let cfg = SolverConfig::default();
        let a = solve_bsde(&spec, &xi, p.grid, &p, &cfg).unwrap();
        let b = solve_bsde(&spec.mirrored(), &xi_neg, p.grid, &p, &cfg).unwrap();
        for i in 0..=20 {
            for q in (0..5000).step_by(251) {
                assert!((a.y_at(i, q) + b.y_at(i, q)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn positive_domain_respects_floor() {
        let spec = GeneratorSpec::new(
            Domain::PositiveHalfLine,
            GeneratorFamily::AffineQuadratic { a: 0.0, b0: -2.0, gamma_q: 0.0 },
        );
        // z-independent but random terminal: stochastic path with clipping
        let xi = TerminalCondition::of_bt(StateFn::Exp { scale: 0.2, rate: 1.0, shift: 0.0 });
        let p = bundle(2000, 1.0, 20, 3);
        let sol = solve_bsde(&spec, &xi, p.grid, &p, &SolverConfig::default()).unwrap();
        let floor = sol.meta.domain_floor;
        assert!(sol.y.iter().all(|&v| v >= floor));
        assert!(sol.meta.projection_clips > 0);
    }
}
