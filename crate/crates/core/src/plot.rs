//! Minimal SVG line charts for traces.
//!
//! Each figure is a vertical stack of panels sharing the time axis, with
//! dashed markers wherever the terminal changes. Long series are reduced to
//! per-pixel min/max pairs so files stay small without hiding peaks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frames::wrap_2pi;
use crate::trace::TraceRecord;

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 40.0;
const GAP: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.to_owned(),
            points,
        }
    }

    fn from_trace(name: &str, trace: &[TraceRecord], f: impl Fn(&TraceRecord) -> f64) -> Self {
        Self::new(name, trace.iter().map(|r| (r.t, f(r))).collect())
    }
}

pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
}

pub struct Figure {
    pub title: String,
    pub panels: Vec<Panel>,
    /// Vertical markers (x, label).
    pub markers: Vec<(f64, String)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Keep first, min, max and last of each bucket, in x order.
fn decimate(points: &[(f64, f64)], buckets: usize) -> Vec<(f64, f64)> {
    if points.len() <= 4 * buckets {
        return points.to_vec();
    }
    let per = points.len().div_ceil(buckets);
    let mut out = Vec::with_capacity(4 * buckets);
    for chunk in points.chunks(per) {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in chunk.iter().enumerate() {
            if p.1 < chunk[lo].1 {
                lo = i;
            }
            if p.1 > chunk[hi].1 {
                hi = i;
            }
        }
        let mut idx = vec![0, lo, hi, chunk.len() - 1];
        idx.sort_unstable();
        idx.dedup();
        out.extend(idx.into_iter().map(|i| chunk[i]));
    }
    out
}

/// Rounded tick step giving roughly `n` ticks over `span`.
fn tick_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        // flat or single point
        let pad = 0.5 * (1.0 + lo.abs() * 1e-3);
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

impl Figure {
    pub fn to_svg(&self) -> String {
        let n = self.panels.len().max(1) as f64;
        let height = MARGIN_T + n * PANEL_H + (n - 1.0) * GAP + 45.0;
        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let (x0, x1) = range(
            self.panels
                .iter()
                .flat_map(|p| p.series.iter())
                .flat_map(|s| s.points.iter().map(|p| p.0)),
        );
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * plot_w;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        for (pi, panel) in self.panels.iter().enumerate() {
            let top = MARGIN_T + pi as f64 * (PANEL_H + GAP);
            let bottom = top + PANEL_H;
            let (y0, y1) = range(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
            let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * PANEL_H;

            let _ = writeln!(
                s,
                r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
            );
            let ystep = tick_step(y1 - y0, 5.0);
            let mut y = (y0 / ystep).ceil() * ystep;
            while y <= y1 {
                let py = sy(y);
                let _ = writeln!(
                    s,
                    r##"<line x1="{MARGIN_L}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e4e4e4"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                    MARGIN_L + plot_w,
                    MARGIN_L - 6.0,
                    py + 4.0,
                    fmt_tick(y, ystep)
                );
                y += ystep;
            }
            let xstep = tick_step(x1 - x0, 8.0);
            let mut x = (x0 / xstep).ceil() * xstep;
            while x <= x1 {
                let px = sx(x);
                let _ = writeln!(
                    s,
                    r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    bottom + 16.0,
                    fmt_tick(x, xstep)
                );
                x += xstep;
            }
            let _ = writeln!(
                s,
                r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
                top + PANEL_H / 2.0,
                escape(&panel.y_label)
            );

            for (mx, label) in &self.markers {
                let px = sx(*mx);
                let _ = writeln!(
                    s,
                    r##"<line x1="{px:.2}" y1="{top}" x2="{px:.2}" y2="{bottom}" stroke="#777" stroke-dasharray="4 3"/><text x="{:.2}" y="{:.2}" font-size="10" fill="#555">{}</text>"##,
                    px + 3.0,
                    top + 12.0,
                    escape(label)
                );
            }

            for (si, series) in panel.series.iter().enumerate() {
                let color = COLORS[si % COLORS.len()];
                let pts = decimate(&series.points, plot_w as usize);
                let mut path = String::new();
                for (k, (x, y)) in pts.iter().filter(|p| p.1.is_finite()).enumerate() {
                    let _ = write!(path, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, sx(*x), sy(*y));
                }
                if pts.len() == 1 {
                    let (x, y) = pts[0];
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, sx(x), sy(y));
                } else if !path.is_empty() {
                    let _ = writeln!(
                        s,
                        r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.2"/>"#
                    );
                }
                let ly = top + 14.0 + 16.0 * si as f64;
                let lx = MARGIN_L + plot_w + 10.0;
                let _ = writeln!(
                    s,
                    r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                    lx + 18.0,
                    lx + 22.0,
                    ly + 4.0,
                    escape(&series.name)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="middle">t (s)</text>"#,
            MARGIN_L + plot_w / 2.0,
            height - 8.0
        );
        s.push_str("</svg>\n");
        s
    }
}

fn terminal_markers(trace: &[TraceRecord]) -> Vec<(f64, String)> {
    trace
        .windows(2)
        .filter(|w| w[0].terminal != w[1].terminal)
        .map(|w| (w[1].t, format!("{:?}", w[1].terminal)))
        .collect()
}

/// The five standard figures for a trace, keyed by file name.
pub fn figures(trace: &[TraceRecord]) -> Vec<(&'static str, Figure)> {
    let markers = terminal_markers(trace);
    let fig = |title: &str, panels: Vec<Panel>| Figure {
        title: title.to_owned(),
        panels,
        markers: markers.clone(),
    };
    let panel = |label: &str, series: Vec<Series>| Panel {
        y_label: label.to_owned(),
        series,
    };
    let s = |name: &str, f: fn(&TraceRecord) -> f64| Series::from_trace(name, trace, f);

    vec![
        (
            "speed.svg",
            fig(
                "Rotor speed",
                vec![panel(
                    "speed (rpm)",
                    vec![s("ω_m", |r| r.omega_m_rpm), s("ω̂", |r| r.omega_hat_rpm)],
                )],
            ),
        ),
        (
            "theta_hat_vs_star.svg",
            fig(
                "Estimated vs virtual frame angle",
                vec![
                    panel(
                        "angle (rad)",
                        vec![s("θ̂", |r| wrap_2pi(r.theta_hat)), s("θ*", |r| wrap_2pi(r.theta_star))],
                    ),
                    panel(
                        "θ̂ − θ* (deg)",
                        vec![s("error", |r| {
                            crate::frames::wrap_pi(r.theta_hat - r.theta_star).to_degrees()
                        })],
                    ),
                ],
            ),
        ),
        (
            "theta_true_vs_hat.svg",
            fig(
                "True vs estimated rotor angle",
                vec![
                    panel(
                        "angle (rad)",
                        vec![s("θ_e", |r| wrap_2pi(r.theta_e)), s("θ̂ + θ_c", |r| wrap_2pi(r.theta_hat + r.theta_c))],
                    ),
                    panel("δ̂ (deg)", vec![s("δ̂", |r| r.delta_hat_deg)]),
                ],
            ),
        ),
        (
            "currents_true.svg",
            fig(
                "Phase currents and rotor-frame currents",
                vec![
                    panel(
                        "phase current (A)",
                        vec![s("i_a", |r| r.i_a), s("i_b", |r| r.i_b), s("i_c", |r| r.i_c)],
                    ),
                    panel("rotor frame (A)", vec![s("i_d", |r| r.i_d_true), s("i_q", |r| r.i_q_true)]),
                ],
            ),
        ),
        (
            "currents_estimated.svg",
            fig(
                "Currents in the controller frame",
                vec![panel(
                    "current (A)",
                    vec![s("î_d", |r| r.i_d_hat), s("î_q", |r| r.i_q_hat)],
                )],
            ),
        ),
    ]
}

/// Write the standard figures into `dir`, returning the paths written.
pub fn emit_plots(trace: &[TraceRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    figures(trace)
        .into_iter()
        .map(|(name, fig)| {
            let path = dir.join(name);
            std::fs::write(&path, fig.to_svg()).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_keeps_extremes() {
        let pts: Vec<_> = (0..10_000).map(|k| (k as f64, if k == 4321 { 9.0 } else { 0.0 })).collect();
        let d = decimate(&pts, 100);
        assert!(d.len() <= 400);
        assert!(d.contains(&(4321.0, 9.0)));
        assert!(d.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(10.0, 5.0), 2.0);
        assert!((tick_step(0.3, 5.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn labels_are_escaped() {
        let f = Figure {
            title: "a < b & c".into(),
            panels: vec![],
            markers: vec![],
        };
        assert!(f.to_svg().contains("a &lt; b &amp; c"));
    }
}
