//! Per-control-cycle telemetry and its CSV form.
//!
//! Real-valued columns are written with at most nine significant digits in
//! plain decimal notation; `terminal` is the numeric code and `locked` is
//! 0/1. Angles are unwrapped radians except the two `*_deg` columns, which
//! are wrapped to (−180°, 180°].

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::Terminal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub theta_e: f64,
    pub theta_star: f64,
    pub theta_hat: f64,
    pub theta_used: f64,
    pub theta_c: f64,
    pub omega_m_rpm: f64,
    pub omega_hat_rpm: f64,
    pub i_a: f64,
    pub i_b: f64,
    pub i_c: f64,
    /// Motor current in the true rotor frame.
    pub i_d_true: f64,
    pub i_q_true: f64,
    /// Motor current in the frame the controller is using.
    pub i_d_hat: f64,
    pub i_q_hat: f64,
    pub u_d_cmd: f64,
    pub u_q_cmd: f64,
    pub terminal: Terminal,
    pub delta_star_deg: f64,
    pub delta_hat_deg: f64,
    pub locked: bool,
}

pub const COLUMNS: [&str; 21] = [
    "t",
    "theta_e",
    "theta_star",
    "theta_hat",
    "theta_used",
    "theta_c",
    "omega_m_rpm",
    "omega_hat_rpm",
    "i_a",
    "i_b",
    "i_c",
    "i_d_true",
    "i_q_true",
    "i_d_hat",
    "i_q_hat",
    "u_d_cmd",
    "u_q_cmd",
    "terminal",
    "delta_star_deg",
    "delta_hat_deg",
    "locked",
];

const T_COL: usize = 17;
const LOCKED_COL: usize = 20;

/// Round to nine significant digits.
pub fn quantize(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

impl TraceRecord {
    fn reals(&self) -> [f64; 19] {
        [
            self.t,
            self.theta_e,
            self.theta_star,
            self.theta_hat,
            self.theta_used,
            self.theta_c,
            self.omega_m_rpm,
            self.omega_hat_rpm,
            self.i_a,
            self.i_b,
            self.i_c,
            self.i_d_true,
            self.i_q_true,
            self.i_d_hat,
            self.i_q_hat,
            self.u_d_cmd,
            self.u_q_cmd,
            self.delta_star_deg,
            self.delta_hat_deg,
        ]
    }

    fn from_reals(r: [f64; 19], terminal: Terminal, locked: bool) -> Self {
        Self {
            t: r[0],
            theta_e: r[1],
            theta_star: r[2],
            theta_hat: r[3],
            theta_used: r[4],
            theta_c: r[5],
            omega_m_rpm: r[6],
            omega_hat_rpm: r[7],
            i_a: r[8],
            i_b: r[9],
            i_c: r[10],
            i_d_true: r[11],
            i_q_true: r[12],
            i_d_hat: r[13],
            i_q_hat: r[14],
            u_d_cmd: r[15],
            u_q_cmd: r[16],
            terminal,
            delta_star_deg: r[17],
            delta_hat_deg: r[18],
            locked,
        }
    }

    /// The record exactly as it reads back from CSV.
    pub fn quantized(&self) -> Self {
        Self::from_reals(self.reals().map(quantize), self.terminal, self.locked)
    }

    fn write_row(&self, line: &mut String) {
        let r = self.reals();
        let mut reals = r.iter();
        for col in 0..COLUMNS.len() {
            if col > 0 {
                line.push(',');
            }
            match col {
                T_COL => write!(line, "{}", self.terminal.code()),
                LOCKED_COL => write!(line, "{}", u8::from(self.locked)),
                _ => write!(line, "{}", quantize(*reals.next().expect("19 reals"))),
            }
            .expect("writing to a String");
        }
    }
}

pub fn quantize_trace(trace: &[TraceRecord]) -> Vec<TraceRecord> {
    trace.iter().map(TraceRecord::quantized).collect()
}

pub fn write_csv<W: Write>(trace: &[TraceRecord], w: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{}", COLUMNS.join(","))?;
    let mut line = String::with_capacity(256);
    for rec in trace {
        line.clear();
        rec.write_row(&mut line);
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn write_csv_file(trace: &[TraceRecord], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(trace, f).map_err(|e| Error::io(path, e))
}

/// Parse a trace CSV. `origin` names the source in error messages.
pub fn read_csv<R: Read>(r: R, origin: &Path) -> Result<Vec<TraceRecord>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_owned(),
        message: format!("line {line}: {message}"),
    };
    let mut lines = BufReader::new(r).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(origin, e))?,
        None => return Err(parse_err(1, "missing header".into())),
    };
    if header.trim_end() != COLUMNS.join(",") {
        return Err(parse_err(1, format!("unexpected header, want `{}`", COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(parse_err(n, format!("expected {} fields, got {}", COLUMNS.len(), fields.len())));
        }
        let mut reals = [0.0; 19];
        let mut j = 0;
        let mut terminal = Terminal::T1If;
        let mut locked = false;
        for (col, field) in fields.iter().enumerate() {
            match col {
                T_COL => {
                    terminal = field
                        .parse::<u8>()
                        .ok()
                        .and_then(Terminal::from_code)
                        .ok_or_else(|| parse_err(n, format!("bad terminal code `{field}`")))?;
                }
                LOCKED_COL => {
                    locked = match *field {
                        "0" => false,
                        "1" => true,
                        _ => return Err(parse_err(n, format!("bad locked flag `{field}`"))),
                    };
                }
                _ => {
                    reals[j] = field
                        .parse()
                        .map_err(|_| parse_err(n, format!("column `{}`: bad number `{field}`", COLUMNS[col])))?;
                    j += 1;
                }
            }
        }
        out.push(TraceRecord::from_reals(reals, terminal, locked));
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f, path)
}
