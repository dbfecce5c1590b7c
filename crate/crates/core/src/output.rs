//! Run artefacts on disk.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::scenario::Scenario;
use crate::trace::{write_csv_file, TraceRecord};

pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const SCENARIO_FILE: &str = "scenario.resolved.json";

/// Write `trace.csv`, `metrics.json` and `scenario.resolved.json` into
/// `out_dir`, creating it if needed.
pub fn write_outputs(out_dir: &Path, scenario: &Scenario, trace: &[TraceRecord], metrics: &Metrics) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let trace_path = out_dir.join(TRACE_FILE);
    write_csv_file(trace, &trace_path)?;
    let metrics_path = out_dir.join(METRICS_FILE);
    write_text(&metrics_path, &metrics_json(metrics))?;
    let scenario_path = out_dir.join(SCENARIO_FILE);
    write_text(&scenario_path, &(scenario.to_json_pretty() + "\n"))?;
    Ok(vec![trace_path, metrics_path, scenario_path])
}

pub fn metrics_json(metrics: &Metrics) -> String {
    serde_json::to_string_pretty(metrics).expect("metrics serialize") + "\n"
}

pub fn read_metrics(path: &Path) -> Result<Metrics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
