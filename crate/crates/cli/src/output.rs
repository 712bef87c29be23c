//! Result files. Everything is written as UTF-8 with LF line endings and
//! floats at 17 significant digits, so identical runs produce identical
//! bytes.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use tb_optctl_core::measures::{format_float, SUMMARY_CSV_HEADER};
use tb_optctl_core::{IcerTable64, ScenarioResult64};

use crate::config::RunConfig;
use crate::run::RunOutcome;

pub fn summary_csv(results: &[ScenarioResult64]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for result in results {
        out.push_str(&result.summary_row().csv_record());
        out.push('\n');
    }
    out
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,S,L1,I,L2,R,u1,u2,E,lam1,lam2,lam3,lam4,lam5";

/// Plot-ready node-by-node dump of one solved cell.
pub fn trajectory_csv(result: &ScenarioResult64) -> String {
    let grid = result.solution.state_traj.grid();
    let mut out = String::with_capacity(grid.n_nodes() * 64);
    out.push_str(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for k in 0..grid.n_nodes() {
        let x = result.solution.state_traj.value(k);
        let u = result.solution.control_traj.value(k);
        let lam = result.solution.adjoint_traj.value(k);
        let e = result.measures.efficacy_traj.value(k);
        let fields = [
            grid.node(k),
            x.s,
            x.l1,
            x.i,
            x.l2,
            x.r,
            u.u1,
            u.u2,
            e,
            lam.lam1,
            lam.lam2,
            lam.lam3,
            lam.lam4,
            lam.lam5,
        ];
        let row: Vec<String> = fields.iter().map(|&v| format_float(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub const ICER_CSV_HEADER: &str = "strategy,A,TC,ACER,ICER,dominated";

pub fn icer_csv(table: &IcerTable64) -> String {
    let mut out = String::from(ICER_CSV_HEADER);
    out.push('\n');
    for entry in &table.entries {
        let acer = entry.acer.map(format_float).unwrap_or_default();
        let icer = entry.icer.map(format_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            entry.label,
            format_float(entry.cases_averted),
            format_float(entry.total_cost),
            acer,
            icer,
            entry.dominated,
        ));
    }
    out
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Cell {
    label: String,
    beta: f64,
    sigma_r: f64,
    objective: f64,
    equilibrium_residual: f64,
    equilibrium_converged: bool,
    sweep_residual: f64,
    sweep_iterations: usize,
    sweep_converged: bool,
}

#[derive(Serialize)]
struct CellError {
    label: String,
    message: String,
}

#[derive(Serialize)]
struct BatchReport<'c> {
    tool: Tool,
    config: &'c crate::config::FileConfig,
    cells: Vec<Cell>,
    errors: Vec<CellError>,
    non_converged: usize,
}

/// Provenance record for one batch: tool version, the exact configuration
/// (re-parseable into the same run), and per-cell convergence diagnostics.
/// Carries no timings or host details, so reruns reproduce it bit for bit.
pub fn batch_json(config: &RunConfig, outcome: &RunOutcome) -> Result<String> {
    let echo = config.echo();
    let report = BatchReport {
        tool: Tool {
            name: "tb-optctl",
            version: env!("CARGO_PKG_VERSION"),
        },
        config: &echo,
        cells: outcome
            .results
            .iter()
            .map(|r| Cell {
                label: r.spec.label.clone(),
                beta: r.spec.params.beta,
                sigma_r: r.spec.params.sigma_r,
                objective: r.solution.objective,
                equilibrium_residual: r.diagnostics.equilibrium_residual,
                equilibrium_converged: r.diagnostics.equilibrium_converged,
                sweep_residual: r.diagnostics.sweep_residual,
                sweep_iterations: r.diagnostics.sweep_iterations,
                sweep_converged: r.diagnostics.sweep_converged,
            })
            .collect(),
        errors: outcome
            .cell_errors
            .iter()
            .map(|(label, message)| CellError {
                label: label.clone(),
                message: message.clone(),
            })
            .collect(),
        non_converged: outcome.non_converged,
    };
    let mut text = serde_json::to_string_pretty(&report).context("serializing batch report")?;
    text.push('\n');
    Ok(text)
}

/// Writes the full bundle into the configured output directory and returns
/// the paths written.
pub fn write_all(config: &RunConfig, outcome: &RunOutcome) -> Result<Vec<PathBuf>> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut emit = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };

    emit("summary.csv".to_owned(), summary_csv(&outcome.results))?;
    for result in &outcome.results {
        emit(
            format!("trajectory_{}.csv", result.spec.label),
            trajectory_csv(result),
        )?;
    }
    if let Some(table) = &outcome.table {
        emit("icer.csv".to_owned(), icer_csv(table))?;
    }
    emit("batch.json".to_owned(), batch_json(config, outcome)?)?;
    Ok(written)
}
