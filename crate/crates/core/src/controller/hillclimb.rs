//! Fixed-step hill climbing on the q-axis voltage.
//!
//! In steady state the q-axis voltage seen in the compensated estimated frame
//! contains `ω·ψ·cos δ̂`, so it peaks when the frame lines up with the rotor.
//! Every `h` control cycles the window average is compared with the previous
//! one; the step direction is kept while it rises and reversed otherwise.
//!
//! The controller feeds `û_q − R·î_q` rather than raw `û_q`. Through a long
//! cable the resistive drop is large, and once the speed loop trims `î_q`
//! as torque recovers, the drop term pulls the raw voltage the wrong way at
//! large misalignment.

use serde::{Deserialize, Serialize};

use super::transition::TransitionConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillClimbState {
    pub theta_c: f64,
    /// Current step direction, ±1.
    pub sign: f64,
    pub prev_avg: Option<f64>,
    pub accum: f64,
    pub cycles: usize,
    pub decisions: usize,
    /// `theta_c` at the most recent direction reversals, newest last.
    pub flip_points: Vec<f64>,
    pub converged: bool,
}

impl HillClimbState {
    pub fn new(theta_c: f64) -> Self {
        Self {
            theta_c,
            sign: 1.0,
            prev_avg: None,
            accum: 0.0,
            cycles: 0,
            decisions: 0,
            flip_points: Vec::with_capacity(3),
            converged: false,
        }
    }
}

/// Feed one control cycle's `û_q` and return the compensation angle to use
/// from the next cycle on.
///
/// The climb stops once three successive reversals happen within
/// `hc_stop_band` of each other; `theta_c` is then parked at the centre of
/// that band and held.
pub fn hillclimb_step(u_q: f64, st: &mut HillClimbState, cfg: &TransitionConfig) -> f64 {
    if st.converged {
        return st.theta_c;
    }
    st.accum += u_q;
    st.cycles += 1;
    if st.cycles < cfg.hc_h {
        return st.theta_c;
    }
    let avg = st.accum / st.cycles as f64;
    st.accum = 0.0;
    st.cycles = 0;
    st.decisions += 1;

    if let Some(prev) = st.prev_avg {
        if avg <= prev {
            st.sign = -st.sign;
            if st.flip_points.len() == 3 {
                st.flip_points.remove(0);
            }
            st.flip_points.push(st.theta_c);
            if st.flip_points.len() == 3 {
                let lo = st.flip_points.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = st.flip_points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi - lo <= cfg.hc_stop_band {
                    st.theta_c = 0.5 * (lo + hi);
                    st.converged = true;
                    st.prev_avg = Some(avg);
                    return st.theta_c;
                }
            }
        }
    }
    st.prev_avg = Some(avg);
    st.theta_c += st.sign * cfg.hc_dtheta;
    st.theta_c
}
