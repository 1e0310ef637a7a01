//! Reflected BSDEs with a lower obstacle: discrete Snell projection,
//! Skorokhod residuals and the increasing-process comparison.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bsde::{solve_impl, SolutionProcess, SolverConfig, TerminalCondition};
use crate::checks::{CheckItem, CheckReport, Status};
use crate::error::{Error, Result};
use crate::func::{ScalarFn, StateFn};
use crate::generator::GeneratorSpec;
use crate::stochastic::{PathBundle, TimeGrid};

type ObstacleClosure = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleFn {
    /// `L_t = f(t)`
    OfTime { function: ScalarFn },
    /// `L_t = f(B_t)`
    OfBrownian { function: StateFn },
    #[serde(skip)]
    Custom(ObstacleClosure),
}

impl fmt::Debug for ObstacleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObstacleFn::OfTime { function } => write!(f, "OfTime({function:?})"),
            ObstacleFn::OfBrownian { function } => write!(f, "OfBrownian({function:?})"),
            ObstacleFn::Custom(_) => write!(f, "Custom(<closure>)"),
        }
    }
}

/// Lower barrier `L(t, B_t)`. With `exclude_terminal` the barrier binds only
/// on `[0, T)`, so `ξ` may sit below `L_T`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub function: ObstacleFn,
    #[serde(default)]
    pub exclude_terminal: bool,
}

impl Obstacle {
    pub fn constant(value: f64) -> Self {
        Obstacle::of_time(ScalarFn::constant(value))
    }

    pub fn of_time(function: ScalarFn) -> Self {
        Obstacle { function: ObstacleFn::OfTime { function }, exclude_terminal: false }
    }

    pub fn of_brownian(function: StateFn) -> Self {
        Obstacle { function: ObstacleFn::OfBrownian { function }, exclude_terminal: false }
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Obstacle { function: ObstacleFn::Custom(Arc::new(f)), exclude_terminal: false }
    }

    pub fn excluding_terminal(mut self) -> Self {
        self.exclude_terminal = true;
        self
    }

    #[inline]
    pub fn eval(&self, t: f64, b: &[f64]) -> f64 {
        match &self.function {
            ObstacleFn::OfTime { function } => function.eval(t),
            ObstacleFn::OfBrownian { function } => function.eval(b),
            ObstacleFn::Custom(f) => f(t, b),
        }
    }

    pub fn is_time_only(&self) -> bool {
        matches!(self.function, ObstacleFn::OfTime { .. })
    }

    pub fn check_terminal(&self, horizon: f64, b_t: &[f64], xi: f64, path: usize) -> Result<()> {
        if self.exclude_terminal {
            return Ok(());
        }
        let l = self.eval(horizon, b_t);
        if xi < l {
            return Err(Error::ObstacleIncompatible { path, terminal: xi, obstacle: l });
        }
        Ok(())
    }

    /// `L(t_i, B_{t_i})` for every node and path (`(M + 1) × columns`);
    /// time-only obstacles give a single column.
    pub fn values_on(&self, grid: TimeGrid, paths: Option<&PathBundle>) -> Result<Vec<Vec<f64>>> {
        let m = grid.steps;
        if self.is_time_only() {
            return Ok((0..=m).map(|i| vec![self.eval(grid.node(i), &[])]).collect());
        }
        let paths = paths.ok_or_else(|| {
            Error::InvalidParam("a state-dependent obstacle needs the path bundle".into())
        })?;
        if paths.grid != grid {
            return Err(Error::GridMismatch("obstacle paths are on a different grid".into()));
        }
        let (n, d) = (paths.n_paths, paths.d);
        let mut b = vec![0.0; n * d];
        let mut out = Vec::with_capacity(m + 1);
        for i in 0..=m {
            if i > 0 {
                for (acc, inc) in b.iter_mut().zip(paths.step(i - 1)) {
                    *acc += inc;
                }
            }
            let t = grid.node(i);
            out.push((0..n).map(|p| self.eval(t, &b[p * d..(p + 1) * d])).collect());
        }
        Ok(out)
    }
}

#[inline]
pub(crate) fn pick(row: &[f64], p: usize) -> f64 {
    if row.len() == 1 {
        row[0]
    } else {
        row[p]
    }
}

/// Reflected solve: at each backward step the unreflected candidate `Ỹ_i` is
/// computed as in [`crate::bsde::solve_bsde`], then `Y_i = max(Ỹ_i, L_i)` and
/// `ΔK_i = Y_i - Ỹ_i`.
pub fn solve_rbsde(
    spec: &GeneratorSpec,
    xi: &TerminalCondition,
    obstacle: &Obstacle,
    grid: TimeGrid,
    paths: &PathBundle,
    cfg: &SolverConfig,
) -> Result<SolutionProcess> {
    solve_impl(spec, xi, Some(obstacle), grid, paths, cfg)
}

/// `max_p Σ_i (Y_i - L_i) ΔK_i`.
pub fn skorokhod_residual(sol: &SolutionProcess, obstacle: &Obstacle, paths: Option<&PathBundle>) -> Result<f64> {
    if sol.k.is_none() {
        return Err(Error::InvalidParam("skorokhod_residual needs a reflected solution".into()));
    }
    let l = obstacle.values_on(sol.grid, paths)?;
    let cols = sol.columns();
    let mut worst: f64 = 0.0;
    for p in 0..cols {
        let mut acc = 0.0;
        for i in 0..sol.grid.steps {
            acc += (sol.y_at(i, p) - pick(&l[i], p)) * sol.dk_at(i, p);
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

/// Checks that on every grid interval `[r, t)`
/// `Σ 1{Y^B_i >= L^A_i} ΔK^A_i <= Σ 1{Y^B_i >= L^A_i} ΔK^B_i + tol_K`,
/// with both sides averaged over paths and
/// `tol_K = 1e-9 + 3 · stderr` of the path sums on the worst interval.
/// The caller declares that `A` dominates `B`; `Y^A >= Y^B` is spot-checked.
pub fn k_comparison_check(
    sol_a: &SolutionProcess,
    sol_b: &SolutionProcess,
    obstacle_a: &Obstacle,
    paths: Option<&PathBundle>,
) -> Result<CheckReport> {
    sol_a.same_grid(sol_b)?;
    let m = sol_a.grid.steps;
    let cols = sol_a.columns().max(sol_b.columns());
    for i in 0..=m {
        let tol = 1e-9 + 3.0 * (sol_a.stderr(i) + sol_b.stderr(i));
        if sol_a.mean_y(i) < sol_b.mean_y(i) - tol {
            return Err(Error::HypothesisUnmet(format!(
                "Y^A does not dominate Y^B at step {i}: {} < {}",
                sol_a.mean_y(i),
                sol_b.mean_y(i)
            )));
        }
    }
    let l = obstacle_a.values_on(sol_a.grid, paths)?;
    // per path, per step: indicator-weighted K^A - K^B increments
    let x: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..cols)
                .map(|p| {
                    if sol_b.y_at(i, p) >= pick(&l[i], p) {
                        sol_a.dk_at(i, p) - sol_b.dk_at(i, p)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mean: Vec<f64> = x.iter().map(|row| row.iter().sum::<f64>() / cols as f64).collect();
    // maximum-sum interval of the averaged sequence
    let (mut best, mut best_r, mut best_t) = (f64::NEG_INFINITY, 0, 0);
    let (mut run, mut start) = (0.0, 0);
    for (i, v) in mean.iter().enumerate() {
        if run <= 0.0 {
            run = *v;
            start = i;
        } else {
            run += v;
        }
        if run > best {
            best = run;
            best_r = start;
            best_t = i + 1;
        }
    }
    if m == 0 {
        best = 0.0;
    }
    let stderr = if cols > 1 && m > 0 {
        let sums: Vec<f64> = (0..cols).map(|p| (best_r..best_t).map(|i| x[i][p]).sum()).collect();
        let mu = sums.iter().sum::<f64>() / cols as f64;
        let var = sums.iter().map(|s| (s - mu) * (s - mu)).sum::<f64>() / (cols - 1) as f64;
        (var / cols as f64).sqrt()
    } else {
        0.0
    };
    let tol = 1e-9 + 3.0 * stderr;
    let margin = tol - best;
    let status = if margin >= 0.0 { Status::Pass } else { Status::Fail };
    let witness = Some(vec![sol_a.grid.node(best_r), sol_a.grid.node(best_t), best]);
    Ok(CheckReport::with_item(
        "k_comparison",
        CheckItem::new(
            "k_comparison",
            status,
            Some(margin),
            witness,
            format!("worst interval [t_r, t_t) with excess {best:.3e}, tol_K {tol:.3e}; witness is [t_r, t_t, excess]"),
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsde::solve_bsde;
    use crate::generator::{Domain, GeneratorFamily};

    fn det_paths(t: f64, m: usize) -> PathBundle {
        PathBundle::generate(0, 1, TimeGrid::new(t, m).unwrap(), 1).unwrap()
    }

    #[test]
    fn far_obstacle_is_inactive() {
        let spec = GeneratorSpec::affine(1.0, 0.0);
        let p = det_paths(1.0, 100);
        let xi = TerminalCondition::constant(-0.5);
        let cfg = SolverConfig::default();
        let plain = solve_bsde(&spec, &xi, p.grid, &p, &cfg).unwrap();
        let ob = Obstacle::constant(-1e6);
        let refl = solve_rbsde(&spec, &xi, &ob, p.grid, &p, &cfg).unwrap();
        assert_eq!(plain.y, refl.y);
        assert!(refl.k.as_ref().unwrap().iter().all(|&k| k == 0.0));
        assert_eq!(skorokhod_residual(&refl, &ob, None).unwrap(), 0.0);
    }

    #[test]
    fn constant_obstacle_above_zero_terminal() {
        let spec = GeneratorSpec::new(Domain::RealLine, GeneratorFamily::Zero);
        let p = det_paths(1.0, 10);
        let ob = Obstacle::constant(1.0).excluding_terminal();
        let sol = solve_rbsde(&spec, &TerminalCondition::constant(0.0), &ob, p.grid, &p, &SolverConfig::default()).unwrap();
        // dynamic programming oracle: Y_i = max(L_i, Y_{i+1}), Y_M = ξ
        let mut oracle = vec![0.0; 11];
        for i in (0..10).rev() {
            oracle[i] = f64::max(1.0, oracle[i + 1]);
        }
        for i in 0..=10 {
            assert_eq!(sol.y_at(i, 0), oracle[i]);
        }
        for i in 0..9 {
            assert_eq!(sol.dk_at(i, 0), 0.0);
        }
        assert_eq!(sol.dk_at(9, 0), 1.0);
        assert_eq!(sol.k_at(0, 0), 0.0);
        assert!(skorokhod_residual(&sol, &ob, None).unwrap() <= 1e-12);
    }

    #[test]
    fn incompatible_terminal_is_rejected() {
        let spec = GeneratorSpec::new(Domain::RealLine, GeneratorFamily::Zero);
        let p = det_paths(1.0, 10);
        let err = solve_rbsde(&spec, &TerminalCondition::constant(0.0), &Obstacle::constant(1.0), p.grid, &p, &SolverConfig::default());
        assert!(matches!(err, Err(Error::ObstacleIncompatible { .. })));
    }

    #[test]
    fn envelope_driver_stays_on_its_ode_solution() {
        let spec = GeneratorSpec::new(
            Domain::RealLine,
            GeneratorFamily::EnvelopeDriver { u: 1.0, l0: 1.0, l1: 1.0, f: 0.0 },
        );
        let p = det_paths(1.0, 200);
        let sol = solve_rbsde(&spec, &TerminalCondition::constant(2.0), &Obstacle::constant(1.0), p.grid, &p, &SolverConfig::default()).unwrap();
        for i in 0..=200 {
            let t = p.grid.node(i);
            assert!((sol.y_at(i, 0) - (3.0 * (1.0 - t).exp() - 1.0)).abs() <= 1e-4);
        }
        assert!(sol.k_at(200, 0) <= 1e-9);
        assert!(sol.z.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn injected_skorokhod_violation() {
        let spec = GeneratorSpec::new(Domain::RealLine, GeneratorFamily::Zero);
        let p = det_paths(1.0, 4);
        let ob = Obstacle::constant(0.5);
        let mut sol = solve_rbsde(&spec, &TerminalCondition::constant(1.0), &ob, p.grid, &p, &SolverConfig::default()).unwrap();
        // Y ≡ 1, L = 0.5: push ΔK_1 = 1 where Y - L = 0.5
        let k = sol.k.as_mut().unwrap();
        for i in 2..=4 {
            k[[i, 0]] += 1.0;
        }
        assert!((skorokhod_residual(&sol, &ob, None).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k_comparison_examples() {
        let spec = GeneratorSpec::new(Domain::RealLine, GeneratorFamily::Zero);
        let p = det_paths(1.0, 10);
        let cfg = SolverConfig::default();
        let xi = TerminalCondition::constant(0.0);
        let low = Obstacle::constant(0.5).excluding_terminal();
        let high = Obstacle::constant(1.0).excluding_terminal();
        let a = solve_rbsde(&spec, &xi, &high, p.grid, &p, &cfg).unwrap();
        let b = solve_rbsde(&spec, &xi, &low, p.grid, &p, &cfg).unwrap();
        assert!(k_comparison_check(&a, &b, &high, None).unwrap().passed());

        let inactive = solve_rbsde(&spec, &TerminalCondition::constant(5.0), &Obstacle::constant(-10.0), p.grid, &p, &cfg).unwrap();
        let rep = k_comparison_check(&inactive, &b, &Obstacle::constant(-10.0), None).unwrap();
        assert!(rep.passed());

        let mut faulty = inactive.clone();
        let k = faulty.k.as_mut().unwrap();
        for i in 4..=10 {
            k[[i, 0]] += 1.0;
        }
        let rep = k_comparison_check(&faulty, &b, &Obstacle::constant(-10.0), None).unwrap();
        assert_eq!(rep.status(), Status::Fail);
        assert!((rep.items[0].margin.unwrap() + 1.0).abs() < 1e-6);

        assert!(matches!(k_comparison_check(&b, &inactive, &low, None), Err(Error::HypothesisUnmet(_))));
    }
}
