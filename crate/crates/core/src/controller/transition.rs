//! Terminal sequencing from I-f startup to sensorless FOC.
//!
//! * `T1If`: transforms use the virtual frame θ*.
//! * `Align`: still θ*, while an offset `o` slews until `θ̂ + o` matches θ*.
//! * `T2Est`: transforms use `θ̂ + o` with the startup current held.
//! * `T3Sensorless`: transforms use `θ̂ + θ_c` with `θ_c` seeded from `o`
//!   and refined by the hill climb; the speed loop owns `i_q*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::LockReport;
use crate::frames::wrap_pi;
use crate::plant::check_positive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransitionMode {
    #[default]
    Scheduled,
    ConditionBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionConfig {
    pub mode: TransitionMode,
    /// Start of alignment (s, scheduled mode).
    pub t_align: f64,
    /// Switch to the estimated frame (s, scheduled mode).
    pub t_to_t2: f64,
    /// Switch to sensorless FOC (s, scheduled mode).
    pub t_to_t3: f64,
    /// Slew limit of the alignment offset (rad/s).
    pub align_ramp_rate: f64,
    /// Alignment is complete when the offset is this close to its target (rad).
    pub align_tol: f64,
    /// ...for at least this long (s).
    pub align_dwell: f64,
    /// Minimum time in T2 before T3 (s); the only T2 criterion in
    /// condition-based mode.
    pub t2_dwell: f64,
    /// Hill-climb step (rad).
    pub hc_dtheta: f64,
    /// Control cycles per hill-climb decision.
    pub hc_h: usize,
    /// Span of three successive reversals that counts as converged (rad).
    pub hc_stop_band: f64,
    /// Series resistance whose drop `R·î_q` is removed from `û_q` before it
    /// is climbed (Ω). Stator plus cable by default; zero climbs raw `û_q`.
    pub hc_r_comp: f64,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self {
            mode: TransitionMode::Scheduled,
            t_align: 2.5,
            t_to_t2: 3.0,
            t_to_t3: 3.5,
            align_ramp_rate: 2.0,
            align_tol: 0.01,
            align_dwell: 0.01,
            t2_dwell: 0.5,
            hc_dtheta: 0.005,
            hc_h: 20,
            hc_stop_band: 0.0125,
            hc_r_comp: 2.16 + 11.76,
        }
    }
}

impl TransitionConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(0.0 <= self.t_align && self.t_align < self.t_to_t2 && self.t_to_t2 < self.t_to_t3) {
            return Err(Error::config(
                format!("{prefix}.t_align"),
                format!(
                    "switch times must satisfy 0 ≤ t_align < t_to_t2 < t_to_t3 (s), got {} / {} / {}",
                    self.t_align, self.t_to_t2, self.t_to_t3
                ),
            ));
        }
        check_positive(prefix, "align_ramp_rate", self.align_ramp_rate, "rad/s")?;
        check_positive(prefix, "align_tol", self.align_tol, "rad")?;
        crate::plant::check_non_negative(prefix, "align_dwell", self.align_dwell, "s")?;
        crate::plant::check_non_negative(prefix, "t2_dwell", self.t2_dwell, "s")?;
        check_positive(prefix, "hc_dtheta", self.hc_dtheta, "rad")?;
        check_positive(prefix, "hc_stop_band", self.hc_stop_band, "rad")?;
        crate::plant::check_non_negative(prefix, "hc_r_comp", self.hc_r_comp, "Ω")?;
        if self.hc_h == 0 {
            return Err(Error::config(format!("{prefix}.hc_h"), "must be ≥ 1 (control cycles)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Terminal {
    #[default]
    T1If,
    Align,
    T2Est,
    T3Sensorless,
    /// Lock lost after leaving the virtual frame; outputs are zeroed.
    Fault,
}

impl Terminal {
    /// Numeric code written to traces.
    pub fn code(self) -> u8 {
        match self {
            Terminal::T1If => 1,
            Terminal::Align => 2,
            Terminal::T2Est => 3,
            Terminal::T3Sensorless => 4,
            Terminal::Fault => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => Terminal::T1If,
            2 => Terminal::Align,
            3 => Terminal::T2Est,
            4 => Terminal::T3Sensorless,
            5 => Terminal::Fault,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlignState {
    /// Offset added to θ̂ (rad).
    pub offset: f64,
    /// Time the offset has continuously been within tolerance (s).
    pub in_tol_for: f64,
    pub complete: bool,
}

/// Slew the offset towards `wrap(θ* - θ̂)` and track completion.
pub fn align_compensator_step(theta_hat: f64, theta_star: f64, st: &mut AlignState, cfg: &TransitionConfig, dt: f64) -> f64 {
    let target = wrap_pi(theta_star - theta_hat);
    let gap = wrap_pi(target - st.offset);
    let max_step = cfg.align_ramp_rate * dt;
    st.offset = wrap_pi(st.offset + gap.clamp(-max_step, max_step));
    if wrap_pi(target - st.offset).abs() < cfg.align_tol {
        st.in_tol_for += dt;
    } else {
        st.in_tol_for = 0.0;
    }
    st.complete = st.in_tol_for >= cfg.align_dwell;
    st.offset
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SupervisorState {
    pub terminal: Terminal,
    /// Time the current terminal was entered (s).
    pub entered_at: f64,
    /// ALIGN→T2 was due but alignment or lock was missing.
    pub align_held: bool,
}

/// Everything the supervisor looks at besides time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisorInputs {
    pub lock: LockReport,
    pub align_complete: bool,
    pub omega_star_saturated: bool,
}

/// Decide the terminal for this control cycle. Transitions only move forward.
pub fn transition_supervisor(st: &mut SupervisorState, t: f64, inp: &SupervisorInputs, cfg: &TransitionConfig) -> Terminal {
    let scheduled = cfg.mode == TransitionMode::Scheduled;
    let next = match st.terminal {
        Terminal::T1If => {
            let go = if scheduled {
                t >= cfg.t_align
            } else {
                inp.omega_star_saturated && inp.lock.locked
            };
            go.then_some(Terminal::Align)
        }
        Terminal::Align => {
            let due = !scheduled || t >= cfg.t_to_t2;
            let ready = inp.align_complete && inp.lock.locked;
            if due && !ready && scheduled {
                st.align_held = true;
            }
            (due && ready).then_some(Terminal::T2Est)
        }
        Terminal::T2Est if !inp.lock.locked => Some(Terminal::Fault),
        Terminal::T2Est => {
            let dwell = t - st.entered_at >= cfg.t2_dwell;
            let go = if scheduled { t >= cfg.t_to_t3 && dwell } else { dwell };
            go.then_some(Terminal::T3Sensorless)
        }
        Terminal::T3Sensorless if !inp.lock.locked => Some(Terminal::Fault),
        Terminal::T3Sensorless | Terminal::Fault => None,
    };
    if let Some(n) = next {
        st.terminal = n;
        st.entered_at = t;
    }
    st.terminal
}

/// Angle used by the Park transforms in each terminal.
pub fn select_transform_angle(terminal: Terminal, theta_star: f64, theta_hat: f64, align_offset: f64, theta_c: f64) -> f64 {
    match terminal {
        Terminal::T1If | Terminal::Align => theta_star,
        Terminal::T2Est => theta_hat + align_offset,
        Terminal::T3Sensorless | Terminal::Fault => theta_hat + theta_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn locked(l: bool) -> LockReport {
        LockReport {
            locked: l,
            emf_mag: 40.0,
            eps_rms: 0.0,
        }
    }

    #[test]
    fn aligned_frames_target_zero() {
        let cfg = TransitionConfig::default();
        let mut st = AlignState::default();
        align_compensator_step(1.3, 1.3, &mut st, &cfg, 2e-4);
        assert_eq!(st.offset, 0.0);
    }

    #[test]
    fn constant_gap_completes_at_ramp_rate() {
        let cfg = TransitionConfig::default();
        let dt = 2e-4;
        let mut st = AlignState::default();
        let mut reached = None;
        let mut done = None;
        for k in 1..5000 {
            align_compensator_step(0.0, 0.4, &mut st, &cfg, dt);
            let t = k as f64 * dt;
            if reached.is_none() && st.in_tol_for > 0.0 {
                reached = Some(t);
            }
            if st.complete {
                done = Some(t);
                break;
            }
        }
        let reached = reached.unwrap();
        assert!((reached - 0.2).abs() < 0.01, "reached at {reached}");
        assert!((done.unwrap() - reached - cfg.align_dwell).abs() <= dt + 1e-12);
    }

    #[test]
    fn default_schedule() {
        let cfg = TransitionConfig::default();
        let mut st = SupervisorState::default();
        let inp = SupervisorInputs {
            lock: locked(true),
            align_complete: true,
            omega_star_saturated: true,
        };
        let mut switches = vec![];
        let dt = 2e-4;
        let mut prev = st.terminal;
        for k in 0..25_000 {
            let t = k as f64 * dt;
            let term = transition_supervisor(&mut st, t, &inp, &cfg);
            if term != prev {
                switches.push((term, t));
                prev = term;
            }
        }
        let times: Vec<f64> = switches.iter().map(|s| s.1).collect();
        assert_eq!(switches.len(), 3);
        for (got, want) in times.iter().zip([2.5, 3.0, 3.5]) {
            assert!((got - want).abs() <= dt, "{got} vs {want}");
        }
    }

    #[test]
    fn never_locked_holds_in_align() {
        let cfg = TransitionConfig::default();
        let mut st = SupervisorState::default();
        let inp = SupervisorInputs {
            lock: locked(false),
            align_complete: false,
            omega_star_saturated: true,
        };
        for k in 0..25_000 {
            transition_supervisor(&mut st, k as f64 * 2e-4, &inp, &cfg);
        }
        assert_eq!(st.terminal, Terminal::Align);
        assert!(st.align_held);
    }

    #[test]
    fn lock_loss_after_t2_faults() {
        let cfg = TransitionConfig::default();
        let mut st = SupervisorState {
            terminal: Terminal::T3Sensorless,
            ..Default::default()
        };
        let inp = SupervisorInputs {
            lock: locked(false),
            align_complete: true,
            omega_star_saturated: true,
        };
        assert_eq!(transition_supervisor(&mut st, 4.0, &inp, &cfg), Terminal::Fault);
        assert_eq!(transition_supervisor(&mut st, 4.1, &inp, &cfg), Terminal::Fault);
    }

    #[test]
    fn condition_based_switches_on_lock() {
        let cfg = TransitionConfig {
            mode: TransitionMode::ConditionBased,
            ..Default::default()
        };
        let mut st = SupervisorState::default();
        let inp = SupervisorInputs {
            lock: locked(true),
            align_complete: true,
            omega_star_saturated: true,
        };
        assert_eq!(transition_supervisor(&mut st, 1.5, &inp, &cfg), Terminal::Align);
        assert_eq!(transition_supervisor(&mut st, 1.6, &inp, &cfg), Terminal::T2Est);
        assert_eq!(transition_supervisor(&mut st, 1.7, &inp, &cfg), Terminal::T2Est);
        assert_eq!(transition_supervisor(&mut st, 2.1, &inp, &cfg), Terminal::T3Sensorless);
    }

    #[test]
    fn transform_angle_per_terminal() {
        assert_eq!(select_transform_angle(Terminal::T1If, 1.0, 2.0, 0.5, 0.1), 1.0);
        assert_eq!(select_transform_angle(Terminal::Align, 1.0, 2.0, 0.5, 0.1), 1.0);
        assert_eq!(select_transform_angle(Terminal::T2Est, 1.0, 2.0, 0.5, 0.1), 2.5);
        assert_eq!(select_transform_angle(Terminal::T3Sensorless, 1.0, 2.0, 0.5, 0.1), 2.1);
        // θ_c seeded from the offset keeps the angle continuous
        assert_eq!(
            select_transform_angle(Terminal::T2Est, 1.0, 2.0, 0.5, 0.0),
            select_transform_angle(Terminal::T3Sensorless, 1.0, 2.0, 0.5, 0.5)
        );
    }

    #[test]
    fn codes_roundtrip() {
        for t in [Terminal::T1If, Terminal::Align, Terminal::T2Est, Terminal::T3Sensorless, Terminal::Fault] {
            assert_eq!(Terminal::from_code(t.code()), Some(t));
        }
    }
}
