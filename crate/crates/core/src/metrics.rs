//! Transition-quality figures computed from a trace alone.

use serde::{Deserialize, Serialize};

use crate::controller::Terminal;
use crate::trace::TraceRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Length of the window after T3 entry used for oscillation figures (s).
    pub t3_window: f64,
    /// Largest dq gap between the true and used frames counted as converged (A).
    pub dq_threshold: f64,
    /// |δ̂| band counted as settled (deg).
    pub settle_band_deg: f64,
    /// Window after T2 entry for the speed jump (s).
    pub t2_window: f64,
    /// Tail of the trace averaged for the residual angle error (s).
    pub residual_window: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            t3_window: 1.0,
            dq_threshold: 0.1,
            settle_band_deg: 2.0,
            t2_window: 0.05,
            residual_window: 0.5,
        }
    }
}

/// `None` marks an event that never happened in the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Metrics {
    /// T2 entry time (s).
    pub t_t2: Option<f64>,
    /// T3 entry time (s).
    pub t_t3: Option<f64>,
    /// Peak-to-peak rotor speed in the T3 window (rpm).
    pub speed_osc_pp_t3: Option<f64>,
    /// Peak-to-peak true q-axis current in the T3 window (A).
    pub current_osc_pp_t3: Option<f64>,
    /// Time after T3 entry from which the dq gap stays under threshold (s).
    pub dq_convergence_time: Option<f64>,
    /// Time after T3 entry from which |δ̂| stays inside the band (s).
    pub delta_hat_settle_time: Option<f64>,
    /// Largest speed excursion within the T2 window, relative to the speed
    /// at entry (rpm).
    pub t2_speed_jump: Option<f64>,
    /// Transform-angle step at T2 entry relative to the virtual frame (rad).
    pub t2_angle_jump: Option<f64>,
    /// Mean |δ̂| over the trailing window, T3 samples only (deg).
    pub residual_delta_hat_deg: Option<f64>,
    /// δ* went negative during I-f startup.
    pub stall_detected: bool,
    pub fault: Option<String>,
}

fn first_in(trace: &[TraceRecord], terminal: Terminal) -> Option<usize> {
    trace.iter().position(|r| r.terminal == terminal)
}

fn peak_to_peak(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (lo <= hi).then_some(hi - lo)
}

/// Time, relative to `t0`, of the first sample from index `from` on after
/// which `ok` holds for every remaining sample.
fn settle_time(trace: &[TraceRecord], from: usize, t0: f64, ok: impl Fn(&TraceRecord) -> bool) -> Option<f64> {
    let tail = &trace[from..];
    let last_bad = tail.iter().rposition(|r| !ok(r));
    let idx = match last_bad {
        None => 0,
        Some(i) if i + 1 < tail.len() => i + 1,
        Some(_) => return None,
    };
    Some(tail[idx].t - t0)
}

pub fn compute_metrics(trace: &[TraceRecord], cfg: &MetricsConfig) -> Metrics {
    let mut m = Metrics {
        stall_detected: trace
            .iter()
            .any(|r| matches!(r.terminal, Terminal::T1If | Terminal::Align) && r.delta_star_deg < 0.0),
        ..Default::default()
    };

    if let Some(k) = first_in(trace, Terminal::Fault) {
        let from = trace[..k].last().map_or(Terminal::T1If, |r| r.terminal);
        m.fault = Some(format!("estimator lock lost in {from:?} at t = {:.4} s", trace[k].t));
    }

    if let Some(k2) = first_in(trace, Terminal::T2Est) {
        let t2 = trace[k2].t;
        m.t_t2 = Some(t2);
        m.t2_angle_jump = Some(crate::frames::wrap_pi(trace[k2].theta_used - trace[k2].theta_star).abs());
        let w0 = trace[k2].omega_m_rpm;
        m.t2_speed_jump = trace[k2..]
            .iter()
            .take_while(|r| r.t <= t2 + cfg.t2_window + 1e-12)
            .map(|r| (r.omega_m_rpm - w0).abs())
            .reduce(f64::max);
    }

    let Some(k3) = first_in(trace, Terminal::T3Sensorless) else {
        return m;
    };
    let t3 = trace[k3].t;
    m.t_t3 = Some(t3);
    let window: Vec<&TraceRecord> = trace[k3..]
        .iter()
        .take_while(|r| r.t <= t3 + cfg.t3_window + 1e-12)
        .collect();
    m.speed_osc_pp_t3 = peak_to_peak(window.iter().map(|r| r.omega_m_rpm));
    m.current_osc_pp_t3 = peak_to_peak(window.iter().map(|r| r.i_q_true));

    let in_t3 = |r: &TraceRecord| r.terminal == Terminal::T3Sensorless;
    m.dq_convergence_time = settle_time(trace, k3, t3, |r| {
        in_t3(r) && (r.i_d_true - r.i_d_hat).abs().max((r.i_q_true - r.i_q_hat).abs()) < cfg.dq_threshold
    });
    m.delta_hat_settle_time = settle_time(trace, k3, t3, |r| in_t3(r) && r.delta_hat_deg.abs() < cfg.settle_band_deg);

    let t_last = trace.last().map_or(t3, |r| r.t);
    let tail: Vec<f64> = trace[k3..]
        .iter()
        .filter(|r| in_t3(r) && r.t >= t_last - cfg.residual_window - 1e-12)
        .map(|r| r.delta_hat_deg.abs())
        .collect();
    if !tail.is_empty() {
        m.residual_delta_hat_deg = Some(tail.iter().sum::<f64>() / tail.len() as f64);
    }
    m
}
