//! Scenario execution: solve, run the requested checks, write artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qbsde_core::checks::{check_convexity, check_one_sided_growth, lattice, GrowthCheckOptions, SegmentSampler};
use qbsde_core::harness::{
    bracketing_check, comparison_suite, integrability_report, theta_domination_suite, uniqueness_probe, MomentRow,
};
use qbsde_core::ode::{envelope_pair, solve_backward_ode, small_time_threshold};
use qbsde_core::rbsde::skorokhod_residual;
use qbsde_core::transforms::{default_alpha, UPhiTransform};
use qbsde_core::bsde::picard_residual;
use qbsde_core::{
    CheckItem, CheckReport, EnvelopeSolution, Error, GeneratorSpec, PathBundle, Scenario, SolutionProcess, Status,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CheckConfig, Expectation, ScenarioConfig};
use crate::error::{CliError, EXIT_ERROR, EXIT_FAIL, EXIT_INVALID, EXIT_PASS};
use crate::output;

pub const REPORT_SCHEMA: &str = "qbsde-report/1";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Omit wall-clock fields so reports depend only on their inputs.
    pub canonical: bool,
    pub seed_override: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Solved {
        y0: f64,
        y0_stderr: f64,
        deterministic: bool,
        n_paths: usize,
        steps: usize,
        z_clip_events: usize,
        projection_clips: usize,
    },
    Divergence {
        step: usize,
        time: f64,
        reason: String,
    },
    Error {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub name: String,
    pub status: Status,
    pub margin: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub seed: u64,
    pub config_hash: String,
    pub config_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub scenario_id: String,
    pub status: String,
    pub exit_code: i32,
    pub outcome: Outcome,
    pub checks: Vec<CheckRow>,
    pub moments: Vec<MomentRow>,
    pub replay: Replay,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl Report {
    pub fn worst_margin(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.status != Status::Info && c.status != Status::Skipped)
            .filter_map(|c| c.margin)
            .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))))
    }

    pub fn y0(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Solved { y0, .. } => Some(y0),
            _ => None,
        }
    }
}

/// `Y_0` estimates written to `y0.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Y0Row {
    pub scenario_id: String,
    pub variant: String,
    pub steps: usize,
    pub y0: f64,
    pub stderr: f64,
}

/// Everything a run produced, before it is written to disk.
pub struct RunArtifacts {
    pub report: Report,
    pub solution: Option<SolutionProcess>,
    pub envelopes: Vec<(String, EnvelopeSolution)>,
    pub y0_rows: Vec<Y0Row>,
    pub effective: ScenarioConfig,
}

fn rows_from(report: &CheckReport) -> Vec<CheckRow> {
    report
        .items
        .iter()
        .map(|it| CheckRow {
            check: report.name.clone(),
            name: it.name.clone(),
            status: it.status,
            margin: it.margin,
            witness: it.witness.clone(),
            detail: it.detail.clone(),
        })
        .collect()
}

fn single(check: &str, item: CheckItem) -> Vec<CheckRow> {
    rows_from(&CheckReport::with_item(check, item))
}

fn pass_fail(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Failed preconditions and divergences inside a check become FAIL rows;
/// anything else aborts the run.
fn soft_fail(check: &str, e: Error) -> Result<Vec<CheckRow>, CliError> {
    match e {
        Error::HypothesisUnmet(_) | Error::Divergence { .. } | Error::NoExistence { .. } => {
            Ok(single(check, CheckItem::new(check, Status::Fail, None, None, e.to_string())))
        }
        other => Err(other.into()),
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    spec: &'a GeneratorSpec,
    scenario: &'a Scenario,
    paths: &'a PathBundle,
    sol: &'a SolutionProcess,
}

fn blowup_rows(
    cfg: &ScenarioConfig,
    spec: &GeneratorSpec,
    d: usize,
    expected: f64,
    tol: f64,
    t_max: f64,
    steps: usize,
) -> Result<Vec<CheckRow>, CliError> {
    let a = cfg.terminal.as_constant().expect("validated");
    let zeros = vec![0.0; d];
    let rhs = |t: f64, y: f64| spec.eval_raw(t, y, &zeros);
    let lam = match small_time_threshold(a, rhs, &spec.domain, t_max, None, steps) {
        Ok(l) => l,
        Err(e) => return soft_fail("blowup_threshold", e),
    };
    let err = (lam - expected).abs();
    Ok(single(
        "blowup_threshold",
        CheckItem::new(
            "blowup_threshold",
            pass_fail(err <= tol),
            Some(tol - err),
            Some(vec![lam, expected]),
            "witness is [estimated threshold, expected]",
        ),
    ))
}

fn run_check(
    ctx: &Ctx<'_>,
    check: &CheckConfig,
    envelopes: &mut Vec<(String, EnvelopeSolution)>,
    moments: &mut Vec<MomentRow>,
    y0_rows: &mut Vec<Y0Row>,
) -> Result<Vec<CheckRow>, CliError> {
    let Ctx { cfg, spec, scenario, paths, sol } = *ctx;
    let grid = paths.grid;
    let id = &cfg.scenario_id;
    match check {
        CheckConfig::OracleY0 { expected, abs_tol, stderr_mult, max_stderr, max_z_clips } => {
            let se = sol.y0_stderr();
            let allowed = abs_tol.max(stderr_mult * se);
            let err = (sol.y0() - expected).abs();
            let mut rows = single(
                "oracle_y0",
                CheckItem::new(
                    "oracle_y0",
                    pass_fail(err <= allowed),
                    Some(allowed - err),
                    Some(vec![sol.y0(), *expected, se]),
                    format!("|Y_0 - expected| = {err:.3e} against {allowed:.3e}; witness is [Y_0, expected, stderr]"),
                ),
            );
            if let Some(cap) = max_stderr {
                rows.extend(single(
                    "oracle_y0",
                    CheckItem::new("stderr_bound", pass_fail(se <= *cap), Some(cap - se), Some(vec![se]), "stderr of Y_0"),
                ));
            }
            if let Some(cap) = max_z_clips {
                let n = sol.meta.z_clip_events;
                rows.extend(single(
                    "oracle_y0",
                    CheckItem::new(
                        "z_clip_events",
                        pass_fail(n <= *cap),
                        Some(*cap as f64 - n as f64),
                        Some(vec![n as f64]),
                        "Z clip events",
                    ),
                ));
            }
            Ok(rows)
        }
        CheckConfig::Bracketing { terminal_bounds } => {
            let (lower, upper) = match envelope_pair(spec, (terminal_bounds[0], terminal_bounds[1]), grid) {
                Ok(pair) => pair,
                Err(e) => return soft_fail("bracketing", e),
            };
            let rep = bracketing_check(sol, &lower, &upper)?;
            envelopes.push(("envelope_lower".into(), lower));
            envelopes.push(("envelope_upper".into(), upper));
            Ok(rows_from(&rep))
        }
        CheckConfig::BlowupThreshold { expected, tol, t_max, steps } => {
            blowup_rows(cfg, spec, paths.d, *expected, *tol, *t_max, *steps)
        }
        CheckConfig::Skorokhod { tol } => {
            let ob = cfg.obstacle.as_ref().expect("validated");
            let l = ob.values_on(grid, Some(paths))?;
            let k = sol.k.as_ref().expect("reflected run");
            let cols = sol.columns();
            let (mut gap, mut gap_at) = (f64::INFINITY, vec![]);
            for (i, row) in l.iter().enumerate() {
                if ob.exclude_terminal && i == grid.steps {
                    continue;
                }
                for p in 0..cols {
                    let lv = if row.len() == 1 { row[0] } else { row[p] };
                    let g = sol.y_at(i, p) - lv;
                    if g < gap {
                        gap = g;
                        gap_at = vec![grid.node(i), p as f64, sol.y_at(i, p), lv];
                    }
                }
            }
            let mut min_dk = f64::INFINITY;
            for p in 0..k.ncols() {
                for i in 0..grid.steps {
                    min_dk = min_dk.min(k[[i + 1, p]] - k[[i, p]]);
                }
            }
            let res = skorokhod_residual(sol, ob, Some(paths))?;
            let mut rep = CheckReport::new("skorokhod");
            rep.push(CheckItem::new("obstacle_respected", pass_fail(gap >= 0.0), Some(gap), Some(gap_at), "min of Y - L; witness is [t, path, Y, L]"));
            rep.push(CheckItem::new("k_nondecreasing", pass_fail(min_dk >= 0.0), Some(min_dk), None, "min increment of K"));
            rep.push(CheckItem::new("skorokhod_residual", pass_fail(res <= *tol), Some(tol - res), Some(vec![res]), "max over paths of |Σ (Y - L) ΔK|"));
            Ok(rows_from(&rep))
        }
        CheckConfig::InactiveObstacle => {
            let k_max = sol.k.as_ref().map_or(0.0, |k| k.iter().fold(0.0f64, |a, v| a.max(*v)));
            if k_max > 0.0 {
                return Ok(single(
                    "inactive_obstacle",
                    CheckItem::new("plain_match", Status::Fail, Some(-k_max), None, "the obstacle binds"),
                ));
            }
            let plain = Scenario { obstacle: None, ..scenario.clone() }.solve(paths, &cfg.solver)?;
            let same = plain.y == sol.y && plain.z == sol.z;
            Ok(single(
                "inactive_obstacle",
                CheckItem::new("plain_match", pass_fail(same), None, None, "reflected and plain solutions compared bit for bit"),
            ))
        }
        CheckConfig::EnvelopeReproduction { tol, k_tol } => {
            let a = cfg.terminal.as_constant().expect("validated");
            let zeros = vec![0.0; paths.d];
            let phi = solve_backward_ode(a, |t, y| spec.eval_raw(t, y, &zeros), grid, &spec.domain, None)?;
            let mut dev = 0.0f64;
            for i in 0..=grid.steps {
                for p in 0..sol.columns() {
                    dev = dev.max((sol.y_at(i, p) - phi.at(i)).abs());
                }
            }
            let kt = (0..sol.columns()).map(|p| sol.k_at(grid.steps, p)).fold(0.0, f64::max);
            let zmax = sol.z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut rep = CheckReport::new("envelope_reproduction");
            rep.push(CheckItem::new("y_matches_envelope", pass_fail(dev <= *tol), Some(tol - dev), Some(vec![dev]), "max |Y - φ|"));
            rep.push(CheckItem::new("k_terminal", pass_fail(kt <= *k_tol), Some(k_tol - kt), Some(vec![kt]), "K_T"));
            rep.push(CheckItem::new("z_zero", pass_fail(zmax <= *k_tol), Some(k_tol - zmax), Some(vec![zmax]), "max |Z|"));
            envelopes.push(("envelope_phi".into(), phi));
            Ok(rows_from(&rep))
        }
        CheckConfig::PicardResidual { tol } => {
            let res = picard_residual(sol, spec);
            Ok(single(
                "picard_residual",
                CheckItem::new("picard_residual", pass_fail(res <= *tol), Some(tol - res), Some(vec![res]), "max step residual of the means"),
            ))
        }
        CheckConfig::UniquenessProbe => {
            if cfg.obstacle.is_some() {
                return Err(CliError::ConfigInvalid {
                    line: 0,
                    column: 0,
                    message: format!("{id}: uniqueness_probe runs without an obstacle"),
                });
            }
            let fine = PathBundle::generate(paths.seed, paths.n_paths, grid.refined(2), paths.d)?;
            match uniqueness_probe(spec, &cfg.terminal, &fine, &cfg.solver) {
                Ok(out) => {
                    for v in &out.variants {
                        y0_rows.push(Y0Row {
                            scenario_id: id.clone(),
                            variant: format!("probe_p{}_deg{}", v.picard_iters, v.degree),
                            steps: v.steps,
                            y0: v.y0,
                            stderr: v.stderr,
                        });
                    }
                    Ok(rows_from(&out.report))
                }
                Err(e) => soft_fail("uniqueness_probe", e),
            }
        }
        CheckConfig::Comparison { relation, other, check_swapped } => {
            let other_cfg = cfg.with_override(other);
            let b = Scenario {
                id: format!("{id}:other"),
                spec: other_cfg.generator_spec()?,
                xi: other_cfg.terminal.clone(),
                obstacle: other_cfg.obstacle.clone(),
            };
            let mut rows = match comparison_suite(scenario, &b, *relation, paths, &cfg.solver) {
                Ok(out) => {
                    y0_rows.push(Y0Row {
                        scenario_id: id.clone(),
                        variant: "comparison_other".into(),
                        steps: grid.steps,
                        y0: out.sol_b.y0(),
                        stderr: out.sol_b.y0_stderr(),
                    });
                    rows_from(&out.report)
                }
                Err(e) => soft_fail("comparison", e)?,
            };
            if *check_swapped {
                let (ok, detail) = match comparison_suite(&b, scenario, *relation, paths, &cfg.solver) {
                    Err(Error::HypothesisUnmet(m)) => (true, format!("hypothesis unmet: {m}")),
                    Err(e) => return Err(e.into()),
                    Ok(out) if !out.report.passed() => (true, "swapped comparison fails".to_string()),
                    Ok(_) => (false, "swapped comparison passes".to_string()),
                };
                rows.extend(single("comparison", CheckItem::new("swapped_rejected", pass_fail(ok), None, None, detail)));
            }
            Ok(rows)
        }
        CheckConfig::ThetaDomination { other_terminal, thetas, expect_violations } => {
            let b = Scenario { xi: other_terminal.clone(), ..scenario.clone() };
            let sol_b = b.solve(paths, &cfg.solver)?;
            let rep = match theta_domination_suite(spec, sol, &sol_b, thetas) {
                Ok(r) => r,
                Err(e) => return soft_fail("theta_domination", e),
            };
            if !*expect_violations {
                return Ok(rows_from(&rep));
            }
            let found = rep.items.iter().filter(|it| it.status == Status::Fail).count();
            let mut rows: Vec<CheckRow> = rows_from(&rep)
                .into_iter()
                .map(|mut r| {
                    r.status = Status::Info;
                    r
                })
                .collect();
            rows.extend(single(
                "theta_domination",
                CheckItem::new(
                    "violations_reported",
                    pass_fail(found > 0),
                    None,
                    Some(vec![found as f64]),
                    "non-convex generator: at least one θ must show gap violations",
                ),
            ));
            Ok(rows)
        }
        CheckConfig::Growth { y_range, z_range, lattice_n, random_points } => {
            let env = spec.envelope.as_ref().expect("validated");
            let samples: Vec<_> = lattice((0.0, grid.horizon), (y_range[0], y_range[1]), (z_range[0], z_range[1]), *lattice_n, paths.d)
                .into_iter()
                .filter(|s| spec.domain.contains(s.y))
                .collect();
            let opts = GrowthCheckOptions { random_points: *random_points, seed: paths.seed, ..Default::default() };
            Ok(rows_from(&check_one_sided_growth(spec, env, &samples, &opts)?))
        }
        CheckConfig::Convexity { y_range, z_range, segments, thetas } => {
            let sampler = SegmentSampler { t: (0.0, grid.horizon), y: (y_range[0], y_range[1]), z: (z_range[0], z_range[1]), d: paths.d };
            let segs = sampler.sample(&spec.domain, *segments, paths.seed);
            Ok(rows_from(&check_convexity(spec, &segs, thetas)?))
        }
        CheckConfig::Integrability { transform, weight, q_list, p } => {
            let domain = transform.domain.build()?;
            let alpha = transform.alpha.unwrap_or_else(|| default_alpha(&domain));
            let tr = match (&transform.closed_form, &transform.phi) {
                (Some(form), _) => UPhiTransform::closed(domain, alpha, *form)?,
                (None, Some(phi)) => UPhiTransform::new(domain, alpha, phi.clone())?,
                (None, None) => unreachable!("validated"),
            };
            let rows = integrability_report(sol, &tr, weight, q_list, *p, paths.seed)?;
            let excluded: usize = rows.iter().map(|r| r.excluded_paths).sum();
            moments.extend(rows);
            Ok(single(
                "integrability",
                CheckItem::new("moments", Status::Info, None, Some(vec![excluded as f64]), "diagnostic only; witness is [excluded path count]"),
            ))
        }
    }
}

fn outcome_of(sol: &SolutionProcess) -> Outcome {
    Outcome::Solved {
        y0: sol.y0(),
        y0_stderr: sol.y0_stderr(),
        deterministic: sol.is_deterministic(),
        n_paths: sol.n_paths,
        steps: sol.grid.steps,
        z_clip_events: sol.meta.z_clip_events,
        projection_clips: sol.meta.projection_clips,
    }
}

fn status_and_exit(outcome: &Outcome, checks: &[CheckRow]) -> (String, i32) {
    if matches!(outcome, Outcome::Error { .. }) {
        return ("ERROR".into(), EXIT_ERROR);
    }
    if checks.iter().any(|c| c.status == Status::Fail) {
        return ("FAIL".into(), EXIT_FAIL);
    }
    if matches!(outcome, Outcome::Divergence { .. }) && !checks.iter().any(|c| c.name == "expected_divergence") {
        return ("DIVERGENCE".into(), EXIT_ERROR);
    }
    ("PASS".into(), EXIT_PASS)
}

/// Runs one validated scenario in the current rayon pool.
pub fn execute(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunArtifacts, CliError> {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed_override {
        cfg.monte_carlo.seed = seed;
    }
    cfg.validate()?;
    let spec = cfg.generator_spec()?;
    let grid = cfg.grid()?;
    let mc = cfg.monte_carlo;
    let paths = PathBundle::generate(mc.seed, mc.n_paths, grid, mc.d)?;
    let scenario = Scenario {
        id: cfg.scenario_id.clone(),
        spec: spec.clone(),
        xi: cfg.terminal.clone(),
        obstacle: cfg.obstacle.clone(),
    };

    let mut checks = Vec::new();
    let mut moments = Vec::new();
    let mut envelopes = Vec::new();
    let mut y0_rows = Vec::new();
    let solved = scenario.solve(&paths, &cfg.solver);
    let (outcome, solution) = match solved {
        Ok(sol) => {
            let outcome = outcome_of(&sol);
            y0_rows.push(Y0Row {
                scenario_id: cfg.scenario_id.clone(),
                variant: "main".into(),
                steps: grid.steps,
                y0: sol.y0(),
                stderr: sol.y0_stderr(),
            });
            if cfg.expect == Expectation::Divergence {
                checks.extend(single(
                    "expectation",
                    CheckItem::new("expected_divergence", Status::Fail, None, None, "the run was expected to diverge but produced a solution"),
                ));
            }
            let ctx = Ctx { cfg: &cfg, spec: &spec, scenario: &scenario, paths: &paths, sol: &sol };
            for check in &cfg.checks {
                checks.extend(run_check(&ctx, check, &mut envelopes, &mut moments, &mut y0_rows)?);
            }
            (outcome, Some(sol))
        }
        Err(Error::Divergence { step, time, reason }) => {
            if cfg.expect == Expectation::Divergence {
                checks.extend(single(
                    "expectation",
                    CheckItem::new("expected_divergence", Status::Pass, None, Some(vec![time]), reason.clone()),
                ));
            }
            // checks that need no solution still run
            for check in &cfg.checks {
                if let CheckConfig::BlowupThreshold { expected, tol, t_max, steps } = check {
                    checks.extend(blowup_rows(&cfg, &spec, mc.d, *expected, *tol, *t_max, *steps)?);
                }
            }
            (Outcome::Divergence { step, time, reason }, None)
        }
        Err(e @ (Error::DomainViolation { .. } | Error::ObstacleIncompatible { .. } | Error::InvalidParam(_))) => {
            return Err(CliError::ConfigInvalid { line: 0, column: 0, message: format!("{}: {e}", cfg.scenario_id) });
        }
        Err(e) => (Outcome::Error { message: e.to_string() }, None),
    };
    let (status, exit_code) = status_and_exit(&outcome, &checks);
    let report = Report {
        schema: REPORT_SCHEMA.into(),
        scenario_id: cfg.scenario_id.clone(),
        status,
        exit_code,
        outcome,
        checks,
        moments,
        replay: Replay { seed: mc.seed, config_hash: cfg.config_hash(), config_file: "replay.json".into() },
        runtime_seconds: if opts.canonical { None } else { Some(start.elapsed().as_secs_f64()) },
    };
    Ok(RunArtifacts { report, solution, envelopes, y0_rows, effective: cfg })
}

/// Output directory of a scenario: `<out_dir>/<scenario_id>`, unless the
/// config names its own `output_dir`.
pub fn scenario_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    match &cfg.output_dir {
        Some(d) => PathBuf::from(d),
        None => opts.out_dir.join(&cfg.scenario_id),
    }
}

pub fn write_artifacts(art: &RunArtifacts, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&art.report).map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("replay.json"), art.effective.canonical_json())?;
    output::write_y0_csv(&dir.join("y0.csv"), &art.y0_rows)?;
    if let Some(sol) = &art.solution {
        output::write_solution_csv(&dir.join("solution.csv"), sol)?;
    }
    for (name, env) in &art.envelopes {
        output::write_envelope_csv(&dir.join(format!("{name}.csv")), env)?;
    }
    Ok(())
}

/// Loads, runs and writes one scenario. Returns the report, or the error
/// that stopped the run before a report existed.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<Report, CliError> {
    let cfg = ScenarioConfig::load(path)?;
    let art = execute(&cfg, opts)?;
    write_artifacts(&art, &scenario_dir(&art.effective, opts))?;
    Ok(art.report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario_id: String,
    pub status: String,
    pub exit_code: i32,
    pub y0: Option<f64>,
    pub margin: Option<f64>,
    pub runtime_seconds: Option<f64>,
}

/// Runs every `*.json` in `dir` (sorted by name), concurrently within the
/// current pool, and writes `summary.csv` to the output directory. The
/// aggregate exit code is the largest member code.
pub fn run_suite(dir: &Path, opts: &RunOptions) -> Result<(i32, Vec<SummaryRow>), CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let rows: Vec<SummaryRow> = files
        .par_iter()
        .map(|f| {
            let start = Instant::now();
            let runtime = |canonical: bool| if canonical { None } else { Some(start.elapsed().as_secs_f64()) };
            match run_scenario(f, opts) {
                Ok(rep) => SummaryRow {
                    scenario_id: rep.scenario_id.clone(),
                    status: rep.status.clone(),
                    exit_code: rep.exit_code,
                    y0: rep.y0(),
                    margin: rep.worst_margin(),
                    runtime_seconds: runtime(opts.canonical),
                },
                Err(e) => SummaryRow {
                    scenario_id: f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                    status: if e.exit_code() == EXIT_INVALID { "INVALID".into() } else { "ERROR".into() },
                    exit_code: e.exit_code(),
                    y0: None,
                    margin: None,
                    runtime_seconds: runtime(opts.canonical),
                },
            }
        })
        .collect();
    fs::create_dir_all(&opts.out_dir)?;
    output::write_summary_csv(&opts.out_dir.join("summary.csv"), &rows)?;
    let code = rows.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_PASS);
    Ok((code, rows))
}
