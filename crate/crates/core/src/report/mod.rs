//! Run artifacts for humans: SVG charts, the Markdown pruning summary and
//! the run manifest.

mod svg;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use svg::{bar_chart, line_chart, Series};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pruner::PruneTrace;
use crate::testbed::{read_json, write_json, Testbed};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    /// `loss_history.csv` to `loss.svg`.
    Loss,
    /// `predictions.csv` to `prediction.svg`.
    Prediction,
    /// `causality.csv` to `causality.svg`.
    Causality,
}

impl ChartKind {
    pub const ALL: [ChartKind; 3] = [ChartKind::Loss, ChartKind::Prediction, ChartKind::Causality];

    pub fn source(self) -> &'static str {
        match self {
            ChartKind::Loss => "loss_history.csv",
            ChartKind::Prediction => "predictions.csv",
            ChartKind::Causality => "causality.csv",
        }
    }

    pub fn output(self) -> &'static str {
        match self {
            ChartKind::Loss => "loss.svg",
            ChartKind::Prediction => "prediction.svg",
            ChartKind::Causality => "causality.svg",
        }
    }
}

/// Charts written and the reasons any were skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChartOutcome {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl ChartOutcome {
    pub fn merge(&mut self, other: ChartOutcome) {
        self.written.extend(other.written);
        self.warnings.extend(other.warnings);
    }
}

fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Data { path: path.to_path_buf(), message: e.to_string() })?;
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader.records().map(|r| r.map(|r| r.iter().map(str::to_string).collect())).collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

fn numeric(path: &Path, value: &str) -> Result<f64> {
    value.parse().map_err(|_| Error::Data { path: path.to_path_buf(), message: format!("`{value}` is not a number") })
}

fn chart_svg(kind: ChartKind, csv_path: &Path, title: &str) -> Result<Option<String>> {
    let (header, rows) = read_columns(csv_path)?;
    if rows.is_empty() {
        return Ok(None);
    }
    let cell = |row: &Vec<String>, k: usize| -> Result<f64> {
        let value = row.get(k).ok_or_else(|| Error::Data { path: csv_path.to_path_buf(), message: "short row".into() })?;
        numeric(csv_path, value)
    };
    let svg = match kind {
        ChartKind::Loss | ChartKind::Prediction => {
            let mut series: Vec<Series> =
                header[1..].iter().map(|name| Series { name: name.clone(), points: Vec::with_capacity(rows.len()) }).collect();
            for row in &rows {
                let x = cell(row, 0)?;
                for (k, s) in series.iter_mut().enumerate() {
                    s.points.push((x, cell(row, k + 1)?));
                }
            }
            if kind == ChartKind::Loss {
                line_chart(title, "epoch", "MSE", &series, true)
            } else {
                line_chart(title, "t", "standardized target", &series, false)
            }
        }
        ChartKind::Causality => {
            let mut bars: Vec<(usize, String, f64)> =
                rows.iter().map(|r| Ok((cell(r, 2)? as usize, r[0].clone(), cell(r, 1)?))).collect::<Result<_>>()?;
            bars.sort_by_key(|b| b.0);
            let bars: Vec<(String, f64)> = bars.into_iter().map(|(_, n, s)| (n, s)).collect();
            bar_chart(title, "causality score", &bars)
        }
    };
    Ok(Some(svg))
}

/// Renders `kind` from its CSV in `dir`. A missing, empty or unreadable
/// source is skipped with a warning.
pub fn render_chart(kind: ChartKind, dir: &Path, title: &str) -> ChartOutcome {
    let source = dir.join(kind.source());
    let mut outcome = ChartOutcome::default();
    if !source.exists() {
        outcome.warnings.push(format!("{}: missing, chart skipped", source.display()));
        return outcome;
    }
    match chart_svg(kind, &source, title) {
        Ok(Some(svg)) => {
            let out = dir.join(kind.output());
            match std::fs::write(&out, svg) {
                Ok(()) => outcome.written.push(out),
                Err(e) => outcome.warnings.push(format!("{}: {e}", out.display())),
            }
        }
        Ok(None) => outcome.warnings.push(format!("{}: no rows, chart skipped", source.display())),
        Err(e) => outcome.warnings.push(format!("{e}, chart skipped")),
    }
    outcome
}

/// Renders every chart kind in `dir` and in its `iteration_*` directories.
pub fn render_charts(dir: &Path) -> ChartOutcome {
    let mut dirs = vec![dir.to_path_buf()];
    if let Ok(entries) = std::fs::read_dir(dir) {
        let mut iterations: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("iteration_")))
            .collect();
        iterations.sort();
        dirs.extend(iterations);
    }
    let mut outcome = ChartOutcome::default();
    for d in &dirs {
        for kind in ChartKind::ALL {
            if d.join(kind.source()).exists() {
                outcome.merge(render_chart(kind, d, &chart_title(kind, d)));
            }
        }
    }
    if outcome.written.is_empty() && outcome.warnings.is_empty() {
        outcome.warnings.push(format!("{}: no chartable artifacts found", dir.display()));
    }
    outcome
}

pub(crate) fn chart_title(kind: ChartKind, dir: &Path) -> String {
    let scope = dir.file_name().map(|n| n.to_string_lossy().replace('_', " ")).unwrap_or_default();
    let what = match kind {
        ChartKind::Loss => "Loss history",
        ChartKind::Prediction => "Prediction vs truth",
        ChartKind::Causality => "Causality scores",
    };
    if scope.starts_with("iteration") {
        format!("{what} ({scope})")
    } else {
        what.to_string()
    }
}

/// Markdown table of the pruning iterations with a closing final-set row.
pub fn summary_table(testbed: Option<Testbed>, trace: &PruneTrace) -> String {
    let name = testbed.map(|t| t.name()).unwrap_or("dataset");
    let mut out = format!("# Sensor pruning: {name}\n\n");
    out.push_str("| Testbed | Iteration | Sensors removed / final set | Best val loss |\n");
    out.push_str("|---|---|---|---|\n");
    for rec in &trace.iterations {
        let action = if rec.iteration == 0 {
            format!("Initial set: {{{}}}", rec.channels.join(", "))
        } else {
            format!("Removed {{{}}}", rec.removed.join(", "))
        };
        out.push_str(&format!("| {name} | {} | {action} | {:.4e} |\n", rec.iteration, rec.val_loss));
    }
    let final_loss = trace.iterations[trace.final_iteration].val_loss;
    out.push_str(&format!(
        "| {name} | final ({}) | Final set: {{{}}} | {final_loss:.4e} |\n",
        trace.final_iteration,
        trace.final_channels.join(", ")
    ));
    out.push_str(&format!(
        "\nStop reason: {}. Lowest validation loss at iteration {}.\n",
        serde_json::to_value(trace.stop_reason).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
        trace.best_iteration
    ));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: String,
    pub path: PathBuf,
}

/// Everything needed to rerun a command: the full configuration, the inputs
/// and the overrides, plus what the run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub run_id: String,
    pub command: String,
    pub testbed: Option<Testbed>,
    pub config: RunConfig,
    pub inputs: Vec<Artifact>,
    pub artifacts: Vec<Artifact>,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub warnings: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, testbed: Option<Testbed>, config: RunConfig, inputs: Vec<Artifact>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            run_id: String::new(),
            command: command.to_string(),
            testbed,
            config,
            inputs,
            artifacts: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            warnings: Vec::new(),
        }
    }

    pub fn add(&mut self, kind: &str, path: impl Into<PathBuf>) {
        self.artifacts.push(Artifact { kind: kind.to_string(), path: path.into() });
    }

    /// Hash of the command, testbed, configuration and input file contents.
    pub fn compute_run_id(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        hasher.update(self.command.as_bytes());
        hasher.update([0]);
        hasher.update(self.testbed.map(|t| t.name()).unwrap_or("").as_bytes());
        hasher.update([0]);
        hasher.update(self.config.to_toml().as_bytes());
        for input in &self.inputs {
            hasher.update([0]);
            hasher.update(input.kind.as_bytes());
            hasher.update(std::fs::read(&input.path).map_err(|e| Error::io(&input.path, e))?);
        }
        let digest = hasher.finalize();
        Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Stamps the run id and finish time, checks that every artifact exists,
    /// and writes the manifest to `path`.
    pub fn finish(mut self, path: &Path) -> Result<RunManifest> {
        self.run_id = self.compute_run_id()?;
        self.finished_unix = unix_now();
        if let Some(missing) = self.artifacts.iter().find(|a| !a.path.exists()) {
            return Err(Error::Data { path: missing.path.clone(), message: "artifact was not written".into() });
        }
        write_json(path, &self)?;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let manifest: RunManifest = read_json(path)?;
        manifest.config.validate()?;
        Ok(manifest)
    }

    pub fn input(&self, kind: &str) -> Option<&Path> {
        self.inputs.iter().find(|a| a.kind == kind).map(|a| a.path.as_path())
    }
}
