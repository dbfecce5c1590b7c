//! One-parameter sweeps over a base scenario, run in parallel.

use std::io::Write;

use rayon::prelude::*;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::scenario::Scenario;
use crate::sim::run_scenario;

/// Turn `transition.hc_dtheta` or `/transition/hc_dtheta` into a JSON pointer.
pub fn to_pointer(path: &str) -> String {
    if path.starts_with('/') {
        path.to_owned()
    } else {
        format!("/{}", path.replace('.', "/"))
    }
}

/// Copy of `base` with the field at `path` replaced by `value`.
pub fn with_param(base: &Scenario, path: &str, value: &Value) -> Result<Scenario> {
    let mut doc = serde_json::to_value(base).expect("scenario serializes");
    let pointer = to_pointer(path);
    let slot = doc
        .pointer_mut(&pointer)
        .ok_or_else(|| Error::config(path, "no such scenario parameter"))?;
    *slot = value.clone();
    Scenario::from_json_str(&doc.to_string())
}

/// Split a comma-separated list into JSON values; bare words become strings.
pub fn parse_values(list: &str) -> Vec<Value> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_owned())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: Value,
    pub outcome: std::result::Result<Metrics, String>,
}

/// Run every variant. A failing variant is recorded and the rest continue;
/// only an invalid parameter path aborts the sweep up front.
pub fn sweep(base: &Scenario, path: &str, values: &[Value]) -> Result<Vec<SweepRow>> {
    if serde_json::to_value(base)
        .expect("scenario serializes")
        .pointer(&to_pointer(path))
        .is_none()
    {
        return Err(Error::config(path, "no such scenario parameter"));
    }
    Ok(values
        .par_iter()
        .map(|v| {
            let outcome = with_param(base, path, v)
                .and_then(|sc| run_scenario(&sc))
                .map(|run| run.metrics)
                .map_err(|e| e.to_string());
            SweepRow {
                value: v.clone(),
                outcome,
            }
        })
        .collect())
}

const METRIC_COLUMNS: [&str; 11] = [
    "t_t2",
    "t_t3",
    "speed_osc_pp_t3",
    "current_osc_pp_t3",
    "dq_convergence_time",
    "delta_hat_settle_time",
    "t2_speed_jump",
    "t2_angle_jump",
    "residual_delta_hat_deg",
    "stall_detected",
    "fault",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Combined table: the swept value, every metric, then any error.
pub fn write_sweep_csv<W: Write>(param: &str, rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{},{},error", csv_field(param), METRIC_COLUMNS.join(","))?;
    for row in rows {
        let value = match &row.value {
            Value::String(s) => s.clone(),
            v => v.to_string(),
        };
        let mut fields = vec![csv_field(&value)];
        match &row.outcome {
            Ok(m) => {
                let obj = serde_json::to_value(m).expect("metrics serialize");
                for col in METRIC_COLUMNS {
                    fields.push(match &obj[col] {
                        Value::Null => String::new(),
                        Value::String(s) => csv_field(s),
                        v => v.to_string(),
                    });
                }
                fields.push(String::new());
            }
            Err(e) => {
                fields.extend(std::iter::repeat_n(String::new(), METRIC_COLUMNS.len()));
                fields.push(csv_field(e));
            }
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
