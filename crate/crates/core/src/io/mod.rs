//! Command runner and file formats behind the `replica-es` binary.
//!
//! Every command produces a [`Table`] with fixed headers. Written to a file,
//! it is accompanied by a manifest JSON that records the parameters,
//! tolerances and a sha256 of each output file (schema in
//! `docs/manifest-schema.md`).

mod figure;
mod manifest;
mod table;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{exit, CurveError, McError, RunError};
use crate::geometry::{trace, trace_phase_boundary, transition_width, Branch, CurveKind, CurveResult, CurveStatus};
use crate::mc::{estimate_summary, Estimate, MCConfig, MCSummary};
use crate::saddle::{solve_reduced, ProblemParams, ReducedSolution};

pub use figure::{
    CurveRequest, FigureId, FigureItem, FigureRecipe, DELTA_LEVELS, FIG6_ETAS, FIG7_DELTA_LEVELS, FIG8_LEVELS,
    Q0_LEVELS,
};
pub use manifest::{sha256_hex, FileEntry, Manifest, Tolerances, SCHEMA_VERSION};
pub use table::{Cell, Table};

pub const SOLVE_COLUMNS: &[&str] =
    &["alpha", "r", "eta", "q0", "rel_error", "delta", "epsilon", "free_energy", "es_in", "es_in_cvar", "residual_norm"];
pub const CURVE_COLUMNS: &[&str] =
    &["alpha", "r", "eta", "q0", "delta", "epsilon", "es_in", "branch_label", "residual_norm", "turning"];
pub const MC_COLUMNS: &[&str] = &["quantity", "mc_mean", "mc_se", "n", "replica", "z_score"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?}; expected csv or json")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Solve { params: ProblemParams },
    Curve { request: CurveRequest },
    Mc { config: MCConfig, compare: bool },
    Figure { id: FigureId },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Curve { .. } => "curve",
            Command::Mc { .. } => "mc",
            Command::Figure { .. } => "figure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Output file; for `figure`, the output directory. `None` writes the
    /// table to stdout (figures default to a directory named after the id).
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// Check every parameter block before anything is computed.
    pub fn validate(&self) -> Result<(), RunError> {
        match &self.command {
            Command::Solve { params } => {
                ProblemParams::new(params.alpha, params.r, params.eta)?;
            }
            Command::Curve { request: CurveRequest::Level { spec } } => {
                spec.validate()?;
                if spec.kind == CurveKind::PhaseBoundary {
                    return Err(RunError::Usage("phase boundary requests carry an alpha range only".into()));
                }
            }
            Command::Curve { request: CurveRequest::Boundary { alpha_range, .. } } => {
                crate::geometry::CurveSpec::phase_boundary(*alpha_range).validate()?;
            }
            Command::Mc { config, .. } => config.validate()?,
            Command::Figure { .. } => {}
        }
        Ok(())
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Files written, manifest last.
    pub files: Vec<PathBuf>,
    /// Names of truncated curves.
    pub truncated: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.truncated.is_empty() {
            exit::OK
        } else {
            exit::TRUNCATED
        }
    }
}

pub fn solve_table(sol: &ReducedSolution) -> Table {
    let p = sol.params;
    let mut t = Table::new(SOLVE_COLUMNS);
    t.push(vec![
        p.alpha.into(),
        p.r.into(),
        p.eta.into(),
        sol.q0.into(),
        sol.rel_error.into(),
        sol.delta.into(),
        sol.epsilon.into(),
        sol.free_energy.into(),
        sol.es_in_sample.into(),
        sol.es_in_cvar.into(),
        sol.residual_norm.into(),
    ]);
    t
}

/// One row per point in continuation order. Boundary points carry the
/// extrapolated `r_c`, where `q₀` and `Δ` are infinite and the remaining
/// order parameters are not defined.
pub fn curve_table(curve: &CurveResult) -> Table {
    let mut t = Table::new(CURVE_COLUMNS);
    for pt in &curve.points {
        let s = &pt.solution;
        let p = s.params;
        let row = if pt.branch == Branch::Boundary {
            vec![
                pt.x.into(),
                pt.r.into(),
                0.0.into(),
                f64::INFINITY.into(),
                f64::INFINITY.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                pt.branch.label().into(),
                f64::NAN.into(),
                pt.turning.into(),
            ]
        } else {
            vec![
                p.alpha.into(),
                p.r.into(),
                p.eta.into(),
                s.q0.into(),
                s.delta.into(),
                s.epsilon.into(),
                s.es_in_sample.into(),
                pt.branch.label().into(),
                s.residual_norm.into(),
                pt.turning.into(),
            ]
        };
        t.push(row);
    }
    if let CurveStatus::Truncated(reason) = &curve.status {
        t.status = Some(format!("truncated: {reason}"));
    }
    t
}

/// MC estimates, with replica values and z-scores when `replica` is given.
/// `es_in` is compared with the replica ES without the regularizer and
/// `cost` with the replica ES including it.
pub fn mc_table(summary: &MCSummary, replica: Option<&ReducedSolution>) -> Table {
    let mut t = Table::new(MC_COLUMNS);
    let nan = f64::NAN;
    let mut row = |name: &str, e: Estimate, reference: Option<f64>| {
        let r = reference.unwrap_or(nan);
        let z = if reference.is_some() { e.z_score(r) } else { nan };
        t.push(vec![name.into(), e.mean.into(), e.se.into(), (e.n as f64).into(), r.into(), z.into()]);
    };
    row("q0", summary.q0_hat, replica.map(|s| s.q0));
    row("es_ratio", summary.es_ratio_hat, replica.map(|s| s.q0.sqrt()));
    row("delta", summary.delta_hat, replica.map(|s| s.delta));
    row("epsilon", summary.eps_hat, replica.map(|s| s.epsilon));
    row("es_in", summary.es_in_hat, replica.map(|s| s.es_in_cvar));
    row("cost", summary.cost_hat, replica.map(|s| s.es_in_sample));
    let n = summary.config.n_samples as f64;
    t.push(vec!["feasible_fraction".into(), summary.feasible_fraction.into(), nan.into(), n.into(), nan.into(), nan.into()]);
    t
}

pub fn compute_curve(request: &CurveRequest) -> Result<CurveResult, CurveError> {
    match request {
        CurveRequest::Level { spec } => trace(spec),
        CurveRequest::Boundary { alpha_range, options } => trace_phase_boundary(*alpha_range, options),
    }
}

/// Width and turning point of an `r(η)` curve, when it has them.
fn derived(curve: &CurveResult) -> Value {
    if curve.spec.kind != CurveKind::ROfEta {
        return Value::Null;
    }
    let Some(&k) = curve.turning_points.first() else { return Value::Null };
    let turn = &curve.points[k];
    let mut v = json!({"turning_eta": turn.x, "turning_r": turn.r});
    if let Ok(w) = transition_width(curve) {
        v["transition_width"] = json!(w);
    }
    v
}

fn write_table(table: &Table, format: Format, path: &Path) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| manifest::io_error(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| manifest::io_error(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let res = match format {
        Format::Csv => table.write_csv(&mut w),
        Format::Json => table.write_json(&mut w),
    };
    res.and_then(|_| w.flush()).map_err(|e| manifest::io_error(path, e))
}

fn emit(table: &Table, format: Format, stdout: &mut dyn Write) -> Result<(), RunError> {
    let res = match format {
        Format::Csv => table.write_csv(&mut *stdout),
        Format::Json => table.write_json(&mut *stdout),
    };
    res.map_err(|e| RunError::Io { path: "<stdout>".into(), message: e.to_string() })
}

/// Manifest path next to an output file: `out.csv` → `out.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

/// Write `table` to the configured destination; with a file destination,
/// also write its manifest.
fn deliver(
    cfg: &RunConfig,
    table: &Table,
    derived: Value,
    stdout: &mut dyn Write,
) -> Result<Outcome, RunError> {
    let truncated: Vec<String> = table.status.iter().map(|_| "output".to_string()).collect();
    let Some(path) = &cfg.output else {
        emit(table, cfg.format, stdout)?;
        return Ok(Outcome { files: Vec::new(), truncated });
    };
    write_table(table, cfg.format, path)?;
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut m = Manifest::new(cfg.command.name(), serde_json::to_value(&cfg.command).expect("command serializes"));
    m.add_file(dir, &name, table.rows.len(), table.status.as_deref(), derived)?;
    let mpath = manifest_path_for(path);
    m.write(&mpath)?;
    Ok(Outcome { files: vec![path.clone(), mpath], truncated })
}

/// Run one command. On failures that still have something to report (an
/// unreachable level, all MC replications unbounded) the table is written
/// with a status line before the error is returned.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<Outcome, RunError> {
    cfg.validate()?;
    match &cfg.command {
        Command::Solve { params } => {
            let sol = solve_reduced(params, None)?;
            deliver(cfg, &solve_table(&sol), Value::Null, stdout)
        }
        Command::Curve { request } => match compute_curve(request) {
            Ok(curve) => deliver(cfg, &curve_table(&curve), derived(&curve), stdout),
            Err(e) => {
                let mut t = Table::new(CURVE_COLUMNS);
                t.status = Some(format!("error: {e}"));
                deliver(cfg, &t, Value::Null, stdout)?;
                Err(e.into())
            }
        },
        Command::Mc { config, compare } => {
            let replica = if *compare {
                ProblemParams::new(config.alpha, config.r(), config.eta)
                    .and_then(|p| solve_reduced(&p, None))
                    .ok()
            } else {
                None
            };
            match estimate_summary(config) {
                Ok(s) => deliver(cfg, &mc_table(&s, replica.as_ref()), Value::Null, stdout),
                Err(McError::AllUnbounded) => {
                    let mut t = Table::new(MC_COLUMNS);
                    let nan = f64::NAN;
                    let n = config.n_samples as f64;
                    t.push(vec!["feasible_fraction".into(), 0.0.into(), nan.into(), n.into(), nan.into(), nan.into()]);
                    t.status = Some("error: every replication was unbounded".into());
                    deliver(cfg, &t, Value::Null, stdout)?;
                    Err(McError::AllUnbounded.into())
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Figure { id } => run_figure(cfg, *id),
    }
}

fn run_figure(cfg: &RunConfig, id: FigureId) -> Result<Outcome, RunError> {
    let recipe = FigureRecipe::new(id);
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from(id.to_string()));
    fs::create_dir_all(&dir).map_err(|e| manifest::io_error(&dir, e))?;
    info!("{id}: {} curves into {}", recipe.items.len(), dir.display());
    let results: Vec<Result<CurveResult, CurveError>> =
        recipe.items.par_iter().map(|item| compute_curve(&item.curve)).collect();

    let mut m = Manifest::new("figure", serde_json::to_value(&recipe).expect("recipe serializes"));
    m.notes = recipe.notes.clone();
    let mut outcome = Outcome { files: Vec::new(), truncated: Vec::new() };
    for (item, result) in recipe.items.iter().zip(results) {
        let (table, extra) = match &result {
            Ok(curve) => (curve_table(curve), derived(curve)),
            Err(e) => {
                let mut t = Table::new(CURVE_COLUMNS);
                t.status = Some(format!("error: {e}"));
                (t, Value::Null)
            }
        };
        let name = format!("{}.{}", item.name, cfg.format.extension());
        let path = dir.join(&name);
        write_table(&table, cfg.format, &path)?;
        m.add_file(&dir, &name, table.rows.len(), table.status.as_deref(), extra)?;
        if table.status.is_some() {
            outcome.truncated.push(item.name.clone());
        }
        outcome.files.push(path);
    }
    let mpath = dir.join("manifest.json");
    m.write(&mpath)?;
    outcome.files.push(mpath);
    Ok(outcome)
}
