//! CSV artifacts and the tidy plot-data merge.

use std::path::Path;

use qbsde_core::{EnvelopeSolution, SolutionProcess};

use crate::error::CliError;
use crate::runner::{SummaryRow, Y0Row};

const Z95: f64 = 1.96;

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-node summary: `t, Y_mean, Y_std, Z_mean1.., clip_count`, then
/// `K_mean, K_std, active_fraction` when the run is reflected. Trailing
/// `*_stderr` columns carry the Monte Carlo error of each mean for plotting.
/// `Z` columns appear for stochastic runs only and are empty at `T`.
pub fn write_solution_csv(path: &Path, sol: &SolutionProcess) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let m = sol.grid.steps;
    let stochastic = !sol.is_deterministic();
    let cols = sol.columns();
    let zs = if stochastic { sol.d } else { 0 };
    let mut header = vec!["t".to_string(), "Y_mean".into(), "Y_std".into()];
    header.extend((1..=zs).map(|k| format!("Z_mean{k}")));
    header.push("clip_count".into());
    if sol.k.is_some() {
        header.extend(["K_mean".into(), "K_std".into(), "active_fraction".into()]);
    }
    header.push("Y_stderr".into());
    header.extend((1..=zs).map(|k| format!("Z_stderr{k}")));
    if sol.k.is_some() {
        header.push("K_stderr".into());
    }
    w.write_record(&header)?;
    for i in 0..=m {
        let mut rec = vec![sol.grid.node(i).to_string(), sol.mean_y(i).to_string(), sol.std_y(i).to_string()];
        let mut z_se = Vec::with_capacity(zs);
        for k in 0..zs {
            if i < m {
                let mz = sol.mean_z(i, k);
                let var = (0..cols).map(|p| (sol.z_at(i, p, k) - mz).powi(2)).sum::<f64>() / (cols.max(2) - 1) as f64;
                rec.push(mz.to_string());
                z_se.push(cell(Some((var / cols as f64).sqrt())));
            } else {
                rec.push(String::new());
                z_se.push(String::new());
            }
        }
        rec.push(sol.meta.clips_per_step.get(i).copied().unwrap_or(0).to_string());
        if sol.k.is_some() {
            let active = if i < m { cell(Some(sol.active_fraction(i))) } else { String::new() };
            rec.extend([sol.mean_k(i).to_string(), sol.std_k(i).to_string(), active]);
        }
        rec.push(sol.stderr(i).to_string());
        rec.extend(z_se);
        if sol.k.is_some() {
            rec.push((sol.std_k(i) / (cols as f64).sqrt()).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `t, value` per node; non-finite values (past a blow-up) are left empty.
pub fn write_envelope_csv(path: &Path, env: &EnvelopeSolution) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "value"])?;
    for (t, v) in env.rows() {
        w.write_record([t.to_string(), cell(v.is_finite().then_some(v))])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_y0_csv(path: &Path, rows: &[Y0Row]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario_id", "variant", "steps", "y0", "stderr"])?;
    for r in rows {
        w.write_record([r.scenario_id.clone(), r.variant.clone(), r.steps.to_string(), r.y0.to_string(), r.stderr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario_id", "status", "exit_code", "y0", "margin", "runtime_seconds"])?;
    for r in rows {
        w.write_record([
            r.scenario_id.clone(),
            r.status.clone(),
            r.exit_code.to_string(),
            cell(r.y0),
            cell(r.margin),
            cell(r.runtime_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the tidy plot table.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotRow {
    pub t: f64,
    pub series: String,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

fn parse(v: &str, path: &Path) -> Result<Option<f64>, CliError> {
    if v.is_empty() {
        return Ok(None);
    }
    v.parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::FileFormat(format!("{}: not a number: {v:?}", path.display())))
}

/// Merges solution and envelope CSVs into `(t, series, mean, lo, hi)` rows.
/// All inputs must share the same `t` column.
pub fn merge_plotdata(inputs: &[&Path]) -> Result<Vec<PlotRow>, CliError> {
    let mut out = Vec::new();
    let mut shared_t: Option<Vec<f64>> = None;
    for path in inputs {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("t") {
            return Err(CliError::FileFormat(format!("{}: first column must be t", path.display())));
        }
        let records: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>()?;
        let mut ts = Vec::with_capacity(records.len());
        for rec in &records {
            ts.push(parse(&rec[0], path)?.ok_or_else(|| CliError::FileFormat(format!("{}: empty t", path.display())))?);
        }
        match &shared_t {
            None => shared_t = Some(ts.clone()),
            Some(prev) if *prev != ts => {
                return Err(CliError::FileFormat(format!("{}: time grid differs from the first input", path.display())));
            }
            _ => {}
        }
        // (series, mean column, stderr column); bands are mean ± 1.96 stderr
        let mut series: Vec<(String, usize, Option<usize>)> = Vec::new();
        if header.len() == 2 && header[1] == "value" {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "value".into());
            series.push((name, 1, None));
        } else {
            for (j, h) in header.iter().enumerate() {
                if let Some((name, suffix)) = h.split_once("_mean") {
                    let se = format!("{name}_stderr{suffix}");
                    let js = header
                        .iter()
                        .position(|x| *x == se)
                        .ok_or_else(|| CliError::FileFormat(format!("{}: missing column {se}", path.display())))?;
                    series.push((format!("{name}{suffix}"), j, Some(js)));
                }
            }
            if series.is_empty() {
                return Err(CliError::FileFormat(format!("{}: no series columns", path.display())));
            }
        }
        for (name, jm, js) in series {
            for (rec, &t) in records.iter().zip(&ts) {
                let Some(mean) = parse(&rec[jm], path)? else { continue };
                let half = match js {
                    Some(js) => match parse(&rec[js], path)? {
                        Some(se) => Z95 * se,
                        None => continue,
                    },
                    None => 0.0,
                };
                out.push(PlotRow { t, series: name.clone(), mean, lo: mean - half, hi: mean + half });
            }
        }
    }
    Ok(out)
}

pub fn write_plotdata(path: &Path, rows: &[PlotRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "series", "mean", "lo", "hi"])?;
    for r in rows {
        w.write_record([r.t.to_string(), r.series.clone(), r.mean.to_string(), r.lo.to_string(), r.hi.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
