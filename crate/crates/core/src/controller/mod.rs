//! Field-oriented control with I-f startup and the three-terminal transition
//! to sensorless operation.

pub mod hillclimb;
pub mod loops;
pub mod pi;
pub mod startup;
pub mod transition;

use serde::{Deserialize, Serialize};

use crate::estimator::EstimateOutput;
use crate::frames::{inverse_park, park, AlphaBeta, Dq};
use crate::plant::MotorParams;

pub use hillclimb::{hillclimb_step, HillClimbState};
pub use loops::{current_loop_step, speed_loop_step, CurrentLoopState};
pub use pi::{PiGains, PiState};
pub use startup::{if_reference, IfReference, IfStartupParams};
pub use transition::{
    align_compensator_step, select_transform_angle, transition_supervisor, AlignState, SupervisorInputs, SupervisorState,
    Terminal, TransitionConfig, TransitionMode,
};

/// Gains for the three PI loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGains {
    /// dq current loops (A in, V out).
    pub current: PiGains,
    /// Speed loop (electrical rad/s in, A out).
    pub speed: PiGains,
    /// Cutoff of the first-order filter on ω̂ feeding the speed loop
    /// (rad/s); zero disables it.
    pub speed_filter_cutoff: f64,
}

impl ControlGains {
    /// Current loops at `ω_cc = 2π·300 rad/s` (`kp = L_s·ω_cc`,
    /// `ki = R_s·ω_cc`); fixed speed gains behind a 30 rad/s filter on ω̂.
    pub fn for_motor(mp: &MotorParams) -> Self {
        let w_cc = std::f64::consts::TAU * 300.0;
        // The speed loop closes through the estimated angle, whose bias moves
        // with current through the cable drop. High kp with an unfiltered ω̂
        // loses lock; these were picked for the 300 rpm pump operating point.
        Self {
            current: PiGains::symmetric(mp.l_s * w_cc, mp.r_s * w_cc, 400.0),
            speed: PiGains::symmetric(0.12, 0.5, 5.0),
            speed_filter_cutoff: 30.0,
        }
    }

    pub fn validate(&self, prefix: &str) -> crate::Result<()> {
        self.current.validate(&format!("{prefix}.current"))?;
        self.speed.validate(&format!("{prefix}.speed"))?;
        crate::plant::check_non_negative(prefix, "speed_filter_cutoff", self.speed_filter_cutoff, "rad/s")
    }
}

impl Default for ControlGains {
    fn default() -> Self {
        Self::for_motor(&MotorParams::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub supervisor: SupervisorState,
    /// Virtual frame angle θ* (rad, unwrapped).
    pub theta_star: f64,
    pub omega_star: f64,
    pub align: AlignState,
    pub hill: HillClimbState,
    pub current_pi: CurrentLoopState,
    pub speed_pi: PiState,
    /// Filtered ω̂ seen by the speed loop (electrical rad/s).
    pub omega_fb: f64,
    pub i_dq_ref: Dq,
    pub u_dq_cmd: Dq,
}

impl ControllerState {
    pub fn terminal(&self) -> Terminal {
        self.supervisor.terminal
    }

    /// Compensation angle; zero until T3 seeds it.
    pub fn theta_c(&self) -> f64 {
        match self.terminal() {
            Terminal::T3Sensorless | Terminal::Fault => self.hill.theta_c,
            _ => 0.0,
        }
    }
}

/// What the controller hands back each cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub terminal: Terminal,
    /// Virtual frame angle in force this cycle.
    pub theta_star: f64,
    pub theta_used: f64,
    pub i_dq_meas: Dq,
    pub u_dq_cmd: Dq,
    pub u_ab_cmd: AlphaBeta,
}

#[derive(Debug, Clone)]
pub struct Controller {
    pub motor: MotorParams,
    pub startup: IfStartupParams,
    pub gains: ControlGains,
    pub transition: TransitionConfig,
    state: ControllerState,
}

impl Controller {
    pub fn new(motor: MotorParams, startup: IfStartupParams, gains: ControlGains, transition: TransitionConfig) -> Self {
        let state = ControllerState {
            supervisor: SupervisorState::default(),
            theta_star: -startup.initial_lag,
            omega_star: 0.0,
            align: AlignState::default(),
            hill: HillClimbState::new(0.0),
            current_pi: CurrentLoopState::default(),
            speed_pi: PiState::default(),
            omega_fb: 0.0,
            i_dq_ref: Dq::ZERO,
            u_dq_cmd: Dq::ZERO,
        };
        Self {
            motor,
            startup,
            gains,
            transition,
            state,
        }
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// Place the virtual frame before the first cycle. Startup assumes it
    /// lags the rotor by `initial_lag`.
    pub fn seed_virtual_frame(&mut self, theta_star: f64) {
        self.state.theta_star = theta_star;
    }

    /// One control cycle at time `t` given measured motor currents and the
    /// latest estimate.
    pub fn step(&mut self, t: f64, i_meas: AlphaBeta, est: &EstimateOutput, dt: f64) -> ControlOutput {
        let st = &mut self.state;
        let theta_hat = est.state.theta_hat;
        let omega_hat = est.state.omega_hat;

        let reference = if_reference(t, &self.startup, st.theta_star, dt);
        let theta_star = st.theta_star;
        st.omega_star = reference.omega_star;

        let before = st.supervisor.terminal;
        let inputs = SupervisorInputs {
            lock: est.lock,
            align_complete: st.align.complete,
            omega_star_saturated: reference.omega_star >= self.startup.omega_target,
        };
        let terminal = transition_supervisor(&mut st.supervisor, t, &inputs, &self.transition);
        if terminal != before {
            self.on_switch(before, terminal, omega_hat);
        }
        let st = &mut self.state;
        let cfg = &self.transition;

        if terminal == Terminal::Align {
            align_compensator_step(theta_hat, theta_star, &mut st.align, cfg, dt);
        }

        let theta_used = select_transform_angle(terminal, theta_star, theta_hat, st.align.offset, st.hill.theta_c);
        let i_dq_meas = park(i_meas, theta_used);

        let (i_dq_ref, omega_elec) = match terminal {
            Terminal::T1If | Terminal::Align => (reference.i_dq_ref, reference.omega_star),
            Terminal::T2Est => (reference.i_dq_ref, omega_hat),
            Terminal::T3Sensorless => {
                let wc = self.gains.speed_filter_cutoff;
                st.omega_fb = if wc > 0.0 {
                    st.omega_fb + (omega_hat - st.omega_fb) * (1.0 - (-wc * dt).exp())
                } else {
                    omega_hat
                };
                let iq = speed_loop_step(self.startup.omega_target, st.omega_fb, &mut st.speed_pi, &self.gains.speed, dt);
                (Dq::new(self.startup.i_d_star, iq), omega_hat)
            }
            Terminal::Fault => (Dq::ZERO, 0.0),
        };

        let u_dq = if terminal == Terminal::Fault {
            Dq::ZERO
        } else {
            current_loop_step(
                i_dq_ref,
                i_dq_meas,
                omega_elec,
                &mut st.current_pi,
                &self.gains.current,
                &self.motor,
                dt,
            )
        };

        if terminal == Terminal::T3Sensorless {
            hillclimb_step(u_dq.q - cfg.hc_r_comp * i_dq_meas.q, &mut st.hill, cfg);
        }

        st.i_dq_ref = i_dq_ref;
        st.u_dq_cmd = u_dq;
        st.theta_star = reference.theta_star;

        ControlOutput {
            terminal,
            theta_star,
            theta_used,
            i_dq_meas,
            u_dq_cmd: u_dq,
            u_ab_cmd: inverse_park(u_dq, theta_used),
        }
    }

    fn on_switch(&mut self, from: Terminal, to: Terminal, omega_hat: f64) {
        let st = &mut self.state;
        match to {
            Terminal::T3Sensorless => {
                // θ_c := o keeps the transform angle continuous.
                st.hill = HillClimbState::new(st.align.offset);
                st.omega_fb = omega_hat;
                let err = self.startup.omega_target - omega_hat;
                st.speed_pi.preload(self.startup.i_q_star, err, &self.gains.speed);
            }
            Terminal::Fault => {
                log::warn!("estimator lock lost in {from:?}; outputs zeroed");
                st.current_pi = CurrentLoopState::default();
                st.speed_pi.reset();
            }
            _ => {}
        }
        log::debug!("terminal {from:?} -> {to:?}");
    }
}
