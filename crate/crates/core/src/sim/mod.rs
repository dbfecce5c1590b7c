//! Fixed-step co-simulation of the plant and the sampled controller.
//!
//! Every control period the loop samples the motor currents, runs the
//! estimator and controller, records one [`TraceRecord`], then integrates
//! the plant over `dt_ctrl / dt_plant` sub-steps with the command held.

pub mod delay;
pub mod integrator;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::{ControlOutput, Controller, Terminal};
use crate::error::{Error, Result};
use crate::estimator::{EstimateOutput, Estimator};
use crate::frames::{inverse_clarke, park, wrap_pi, AlphaBeta};
use crate::metrics::{compute_metrics, Metrics, MetricsConfig};
use crate::plant::{
    electromagnetic_torque, inverter_current, plant_derivatives, PlantInput, PlantParams, PlantState,
};
use crate::plant::check_positive;
use crate::scenario::Scenario;
use crate::trace::{quantize_trace, TraceRecord};

pub use delay::DelayLine;
pub use integrator::{integrate_step, Integrator};

/// Voltage the observer is fed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// The controller's own command (terminal voltage is not measured).
    #[default]
    CommandVoltage,
    /// Motor-terminal voltage averaged over the last control period.
    PlantVoltage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation added to each measured αβ current (A).
    pub current_noise_std: f64,
    pub enabled: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            current_noise_std: 0.01,
            enabled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Plant integration step (s).
    pub dt_plant: f64,
    /// Control period (s); an integer multiple of `dt_plant`.
    pub dt_ctrl: f64,
    /// Simulated duration (s).
    pub t_end: f64,
    pub integrator: Integrator,
    /// Measurement delay in control periods.
    pub delay_cycles: usize,
    pub noise: NoiseConfig,
    pub rng_seed: u64,
    pub feedback_mode: FeedbackMode,
    /// Draw the true initial rotor angle from the seeded RNG instead of
    /// using `initial_rotor_angle`; the virtual frame is still placed as if
    /// the rotor sat at `initial_rotor_angle`.
    pub randomize_initial_angle: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_plant: 1e-5,
            dt_ctrl: 2e-4,
            t_end: 5.0,
            integrator: Integrator::Rk4,
            delay_cycles: 0,
            noise: NoiseConfig::default(),
            rng_seed: 1,
            feedback_mode: FeedbackMode::CommandVoltage,
            randomize_initial_angle: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "dt_plant", self.dt_plant, "s")?;
        check_positive(prefix, "dt_ctrl", self.dt_ctrl, "s")?;
        check_positive(prefix, "t_end", self.t_end, "s")?;
        let ratio = self.dt_ctrl / self.dt_plant;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::config(
                format!("{prefix}.dt_ctrl"),
                format!(
                    "must be an integer multiple of dt_plant ({} s), got {} s",
                    self.dt_plant, self.dt_ctrl
                ),
            ));
        }
        let std = self.noise.current_noise_std;
        if !(std.is_finite() && std >= 0.0) {
            return Err(Error::config(
                format!("{prefix}.noise.current_noise_std"),
                format!("must be ≥ 0 (A), got {std}"),
            ));
        }
        Ok(())
    }

    pub fn substeps(&self) -> usize {
        (self.dt_ctrl / self.dt_plant).round() as usize
    }

    /// Number of control periods; the trace has one more row than this.
    pub fn cycles(&self) -> usize {
        (self.t_end / self.dt_ctrl).round() as usize
    }
}

/// Electrical rad/s to mechanical rpm.
pub fn elec_to_rpm(omega_elec: f64, pole_pairs: u32) -> f64 {
    omega_elec / f64::from(pole_pairs) * 60.0 / TAU
}

pub fn mech_to_rpm(omega_m: f64) -> f64 {
    omega_m * 60.0 / TAU
}

/// First moment the virtual frame overtook the rotor during startup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StallEvent {
    pub t: f64,
    pub delta_star: f64,
}

/// One scenario's state machine: plant, estimator, controller and the
/// measurement chain between them.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    params: PlantParams,
    plant: PlantState,
    estimator: Estimator,
    controller: Controller,
    delay: DelayLine<AlphaBeta>,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    k: usize,
    /// Command held over the previous control period.
    u_prev: AlphaBeta,
    /// Motor-terminal voltage averaged over the previous control period.
    v_motor_avg: AlphaBeta,
    stall: Option<StallEvent>,
}

impl Simulation {
    pub fn new(sc: &Scenario) -> Result<Self> {
        sc.validate()?;
        let cfg = sc.sim.clone();
        let params = sc.plant_params();
        let model = sc.controller_motor.clone().unwrap_or_else(|| sc.motor.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

        let theta0 = if cfg.randomize_initial_angle {
            rng.random_range(0.0..TAU)
        } else {
            sc.initial_rotor_angle
        };
        let plant = PlantState {
            theta_e: theta0,
            ..Default::default()
        };

        let estimator = Estimator::new(model.clone(), sc.observer.clone(), sc.pll.clone(), sc.lock.clone());
        let mut controller = Controller::new(model, sc.startup.clone(), sc.pi.clone(), sc.transition.clone());
        controller.seed_virtual_frame(sc.initial_rotor_angle - sc.startup.initial_lag);

        let noise = (cfg.noise.enabled && cfg.noise.current_noise_std > 0.0)
            .then(|| Normal::new(0.0, cfg.noise.current_noise_std).expect("validated std"));

        Ok(Self {
            delay: DelayLine::new(cfg.delay_cycles),
            cfg,
            params,
            plant,
            estimator,
            controller,
            rng,
            noise,
            k: 0,
            u_prev: AlphaBeta::ZERO,
            v_motor_avg: AlphaBeta::ZERO,
            stall: None,
        })
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.cfg.dt_ctrl
    }

    pub fn plant(&self) -> &PlantState {
        &self.plant
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn stall(&self) -> Option<StallEvent> {
        self.stall
    }

    fn measure(&mut self) -> AlphaBeta {
        let mut i = self.plant.i_motor;
        if let Some(n) = &self.noise {
            i.alpha += n.sample(&mut self.rng);
            i.beta += n.sample(&mut self.rng);
        }
        self.delay.push(i)
    }

    /// Sample, estimate and control at the current instant without
    /// advancing the plant. Returns the record for this instant.
    fn control(&mut self) -> Result<TraceRecord> {
        let t = self.time();
        let dt = self.cfg.dt_ctrl;
        let i_meas = self.measure();
        let u_obs = match self.cfg.feedback_mode {
            FeedbackMode::CommandVoltage => self.u_prev,
            FeedbackMode::PlantVoltage => self.v_motor_avg,
        };
        let est = self.estimator.step(i_meas, u_obs, dt).map_err(|e| stamp(e, t))?;
        let out = self.controller.step(t, i_meas, &est, dt);
        self.u_prev = out.u_ab_cmd;

        let delta_star = wrap_pi(self.plant.theta_e - out.theta_star);
        if matches!(out.terminal, Terminal::T1If | Terminal::Align) && delta_star < 0.0 && self.stall.is_none() {
            log::warn!(
                "stall: rotor fell behind the virtual frame at t = {t:.4} s (δ* = {:.1}°); \
                 self-stabilization lost, raise i_q_star or slow the ramp",
                delta_star.to_degrees()
            );
            self.stall = Some(StallEvent { t, delta_star });
        }
        Ok(self.record(t, &est, &out))
    }

    fn record(&self, t: f64, est: &EstimateOutput, out: &ControlOutput) -> TraceRecord {
        let p = &self.plant;
        let pole_pairs = self.params.motor.pole_pairs;
        let theta_c = self.controller.state().theta_c();
        let [i_a, i_b, i_c] = inverse_clarke(p.i_motor);
        let i_true = park(p.i_motor, p.theta_e);
        let i_frame = park(p.i_motor, out.theta_used);
        TraceRecord {
            t,
            theta_e: p.theta_e,
            theta_star: out.theta_star,
            theta_hat: est.state.theta_hat,
            theta_used: out.theta_used,
            theta_c,
            omega_m_rpm: mech_to_rpm(p.omega_m),
            omega_hat_rpm: elec_to_rpm(est.state.omega_hat, pole_pairs),
            i_a,
            i_b,
            i_c,
            i_d_true: i_true.d,
            i_q_true: i_true.q,
            i_d_hat: i_frame.d,
            i_q_hat: i_frame.q,
            u_d_cmd: out.u_dq_cmd.d,
            u_q_cmd: out.u_dq_cmd.q,
            terminal: out.terminal,
            delta_star_deg: wrap_pi(p.theta_e - out.theta_star).to_degrees(),
            delta_hat_deg: wrap_pi(p.theta_e - est.state.theta_hat - theta_c).to_degrees(),
            locked: est.lock.locked,
        }
    }

    /// Integrate the plant across one control period with `u_cmd` held.
    fn advance_plant(&mut self, u_cmd: AlphaBeta) -> Result<()> {
        let n = self.cfg.substeps();
        let h = self.cfg.dt_plant;
        let i_dc_ref = self.params.front_end.i_dc_rated;
        let mut v_sum = AlphaBeta::ZERO;
        for j in 0..n {
            let t = self.time() + j as f64 * h;
            v_sum = v_sum + self.plant.motor_voltage(&self.params.cable);
            let params = &self.params;
            let f = |x: &[f64; PlantState::DIM]| -> Result<[f64; PlantState::DIM]> {
                let s = PlantState::from_array(x);
                let input = PlantInput {
                    i_inv: inverter_current(u_cmd, &s, params),
                    i_dc_ref,
                };
                Ok(plant_derivatives(&s, &input, params)?.to_array())
            };
            let before = self.plant;
            let next = integrate_step(&before.to_array(), f, h, self.cfg.integrator).map_err(|e| stamp(e, t))?;
            let mut next = PlantState::from_array(&next);
            if let Some(component) = next.first_non_finite() {
                return Err(Error::NumericBlowup { t: Some(t), component });
            }
            // Re-stick when the rotor passes through zero speed without
            // enough torque to break away.
            if before.omega_m != 0.0
                && next.omega_m * before.omega_m <= 0.0
                && electromagnetic_torque(&next, &self.params.motor).abs() <= self.params.load.t_0
            {
                next.omega_m = 0.0;
            }
            self.plant = next;
        }
        self.v_motor_avg = v_sum * (1.0 / n as f64);
        self.k += 1;
        Ok(())
    }

    /// Run one control cycle and integrate to the next one.
    pub fn step_cycle(&mut self) -> Result<TraceRecord> {
        let rec = self.control()?;
        self.advance_plant(self.u_prev)?;
        Ok(rec)
    }

    /// Run to `t_end`, one record per control instant including both ends.
    pub fn run(&mut self) -> Result<Vec<TraceRecord>> {
        let n = self.cfg.cycles();
        let mut trace = Vec::with_capacity(n + 1);
        for _ in 0..n {
            trace.push(self.step_cycle()?);
        }
        trace.push(self.control()?);
        Ok(trace)
    }
}

fn stamp(e: Error, t: f64) -> Error {
    match e {
        Error::NumericBlowup { t: None, component } => Error::NumericBlowup { t: Some(t), component },
        other => other,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub metrics: Metrics,
    pub stall: Option<StallEvent>,
}

/// Simulate a scenario end to end. Metrics are computed from the trace as
/// it will be written to disk, so re-deriving them from the CSV matches.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput> {
    let mut sim = Simulation::new(sc)?;
    let trace = sim.run()?;
    let metrics = compute_metrics(&quantize_trace(&trace), &MetricsConfig::default());
    Ok(RunOutput {
        trace,
        metrics,
        stall: sim.stall(),
    })
}
