//! Back-EMF observer and phase-locked loop.
//!
//! The observer runs the stationary-frame motor model
//! `L_s·dî/dt = -R_s·î + u - ê + L_s·g·(i - î)` with the EMF carried as an
//! extra state. Because a PMSM's EMF vector rotates at the electrical speed,
//! the EMF state is propagated as `dê/dt = ω̂·J·ê - c·g·L_s·(i - î)`, which
//! makes the steady-state estimate exact at constant speed instead of
//! lagging the way a plain low-pass disturbance estimate would.
//!
//! The PLL turns `ê` into an angle: the quadrature detector
//! `ε = (-ê_α·cos θ̂ - ê_β·sin θ̂) / max(‖ê‖, floor)` equals `sin(θ_e - θ̂)`
//! for an exact EMF, and a PI plus integrator drives it to zero.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::AlphaBeta;
use crate::plant::{check_positive, MotorParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverParams {
    /// Current-error correction gain (1/s).
    pub g_obs: f64,
    /// EMF estimator bandwidth (rad/s).
    pub emf_filter_cutoff: f64,
}

impl Default for ObserverParams {
    fn default() -> Self {
        Self {
            g_obs: 2000.0,
            emf_filter_cutoff: 1500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PllParams {
    /// Proportional gain (rad/s per unit phase error).
    pub kp_pll: f64,
    /// Integral gain (rad/s² per unit phase error).
    pub ki_pll: f64,
    /// Clamp on the estimated electrical speed (rad/s).
    pub omega_hat_limit: f64,
    /// Lowest mechanical speed at which the EMF is trusted (rad/s). The
    /// detector's normalisation floor is `0.05·k_e·omega_min`.
    pub omega_min: f64,
}

impl Default for PllParams {
    fn default() -> Self {
        Self {
            kp_pll: 200.0,
            ki_pll: 10_000.0,
            omega_hat_limit: 1000.0,
            omega_min: 10.0,
        }
    }
}

impl PllParams {
    pub fn emf_floor(&self, motor: &MotorParams) -> f64 {
        0.05 * motor.k_e() * self.omega_min
    }
}

/// Thresholds for declaring the estimate trustworthy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockParams {
    /// Minimum EMF magnitude (V).
    pub emf_threshold: f64,
    /// Maximum RMS phase-detector output over the window (unitless).
    pub eps_rms_threshold: f64,
    /// Window length in control cycles.
    pub window: usize,
}

impl Default for LockParams {
    fn default() -> Self {
        Self {
            emf_threshold: 5.0,
            eps_rms_threshold: 0.05,
            window: 250,
        }
    }
}

impl ObserverParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "g_obs", self.g_obs, "1/s")?;
        check_positive(prefix, "emf_filter_cutoff", self.emf_filter_cutoff, "rad/s")
    }
}

impl PllParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "kp_pll", self.kp_pll, "rad/s")?;
        check_positive(prefix, "ki_pll", self.ki_pll, "rad/s²")?;
        check_positive(prefix, "omega_hat_limit", self.omega_hat_limit, "rad/s")?;
        check_positive(prefix, "omega_min", self.omega_min, "rad/s")
    }
}

impl LockParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "emf_threshold", self.emf_threshold, "V")?;
        check_positive(prefix, "eps_rms_threshold", self.eps_rms_threshold, "unitless")?;
        if self.window == 0 {
            return Err(Error::config(format!("{prefix}.window"), "must be ≥ 1 (control cycles)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimatorState {
    pub i_hat: AlphaBeta,
    pub e_hat: AlphaBeta,
    /// Estimated electrical angle (rad, unwrapped).
    pub theta_hat: f64,
    /// Estimated electrical speed (rad/s).
    pub omega_hat: f64,
    pub pll_integrator: f64,
    /// Last current innovation `i - î`, applied on the next step.
    pub innovation: AlphaBeta,
}

/// One observer step.
///
/// `i_meas` is the current sampled now and `u_cmd` the voltage that was
/// applied over the interval that just ended. The prediction from the previous
/// sample to this one uses the innovation recorded last time; the new
/// innovation is stored for the next call.
pub fn observer_step(
    i_meas: AlphaBeta,
    u_cmd: AlphaBeta,
    st: &EstimatorState,
    mp: &MotorParams,
    op: &ObserverParams,
    dt: f64,
) -> Result<EstimatorState> {
    if !i_meas.is_finite() || !u_cmd.is_finite() {
        return Err(Error::NumericBlowup {
            t: None,
            component: "observer input",
        });
    }
    let rot = st.omega_hat * dt;
    // EMF at the middle of the interval drives the current prediction.
    let e_mid = st.e_hat.rotate(0.5 * rot);
    let di = (u_cmd - e_mid - st.i_hat * mp.r_s) * (dt / mp.l_s);
    let i_hat = st.i_hat + di + st.innovation * (op.g_obs * dt);
    let e_hat = st.e_hat.rotate(rot) - st.innovation * (op.emf_filter_cutoff * op.g_obs * mp.l_s * dt);
    Ok(EstimatorState {
        i_hat,
        e_hat,
        innovation: i_meas - i_hat,
        ..*st
    })
}

/// Quadrature phase detector; `sin(θ_e - θ̂)` for an exact EMF.
pub fn phase_error(e_hat: AlphaBeta, theta_hat: f64, floor: f64) -> f64 {
    let (s, c) = theta_hat.sin_cos();
    (-e_hat.alpha * c - e_hat.beta * s) / e_hat.norm().max(floor)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllOutput {
    pub eps: f64,
    /// False when `‖ê‖` is below the floor; the loop then coasts on the last
    /// speed estimate.
    pub emf_ok: bool,
}

pub fn pll_step(e_hat: AlphaBeta, st: &EstimatorState, pp: &PllParams, emf_floor: f64, dt: f64) -> (EstimatorState, PllOutput) {
    let mut next = *st;
    let emf_ok = e_hat.norm() >= emf_floor;
    let eps = if emf_ok {
        phase_error(e_hat, st.theta_hat, emf_floor)
    } else {
        0.0
    };
    if emf_ok {
        let lim = pp.omega_hat_limit;
        next.omega_hat = (st.pll_integrator + pp.kp_pll * eps).clamp(-lim, lim);
        next.pll_integrator = (st.pll_integrator + pp.ki_pll * eps * dt).clamp(-lim, lim);
    }
    next.theta_hat = st.theta_hat + next.omega_hat * dt;
    (next, PllOutput { eps, emf_ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockReport {
    pub locked: bool,
    /// EMF magnitude (V).
    pub emf_mag: f64,
    pub eps_rms: f64,
}

/// Lock predicate over a window of phase-detector samples.
///
/// # Panics
/// If `eps_window` is empty.
pub fn lock_quality(emf_mag: f64, eps_window: &[f64], lp: &LockParams) -> LockReport {
    assert!(!eps_window.is_empty(), "lock window must not be empty");
    let eps_rms = (eps_window.iter().map(|e| e * e).sum::<f64>() / eps_window.len() as f64).sqrt();
    LockReport {
        locked: emf_mag > lp.emf_threshold && eps_rms < lp.eps_rms_threshold,
        emf_mag,
        eps_rms,
    }
}

/// Observer, PLL and lock window bundled for use inside a control loop.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub motor: MotorParams,
    pub observer: ObserverParams,
    pub pll: PllParams,
    pub lock: LockParams,
    emf_floor: f64,
    state: EstimatorState,
    eps_window: VecDeque<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOutput {
    pub state: EstimatorState,
    pub pll: PllOutput,
    pub lock: LockReport,
}

impl Estimator {
    pub fn new(motor: MotorParams, observer: ObserverParams, pll: PllParams, lock: LockParams) -> Self {
        let emf_floor = pll.emf_floor(&motor);
        let window = lock.window;
        Self {
            motor,
            observer,
            pll,
            lock,
            emf_floor,
            state: EstimatorState::default(),
            eps_window: VecDeque::with_capacity(window),
        }
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn emf_floor(&self) -> f64 {
        self.emf_floor
    }

    pub fn step(&mut self, i_meas: AlphaBeta, u_applied: AlphaBeta, dt: f64) -> Result<EstimateOutput> {
        let obs = observer_step(i_meas, u_applied, &self.state, &self.motor, &self.observer, dt)?;
        let (next, pll) = pll_step(obs.e_hat, &obs, &self.pll, self.emf_floor, dt);
        self.state = next;

        if self.eps_window.len() == self.lock.window {
            self.eps_window.pop_front();
        }
        // Samples without a usable EMF count as full-scale error.
        self.eps_window.push_back(if pll.emf_ok { pll.eps } else { 1.0 });
        let window = self.eps_window.make_contiguous();
        let mut lock = lock_quality(next.e_hat.norm(), window, &self.lock);
        lock.locked &= window.len() == self.lock.window;

        Ok(EstimateOutput {
            state: next,
            pll,
            lock,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::wrap_pi;
    use crate::plant::back_emf;
    use std::f64::consts::TAU;

    #[test]
    fn fixed_point_is_preserved() {
        let mp = MotorParams::default();
        let op = ObserverParams::default();
        let e = AlphaBeta::new(3.0, -4.0);
        let i = AlphaBeta::new(0.7, 0.2);
        let st = EstimatorState {
            i_hat: i,
            e_hat: e,
            ..Default::default()
        };
        let u = i * mp.r_s + e;
        let mut s = st;
        for _ in 0..1000 {
            s = observer_step(i, u, &s, &mp, &op, 2e-4).unwrap();
        }
        assert!((s.i_hat - i).norm() <= 1e-9);
        assert!((s.e_hat - e).norm() <= 1e-9);
    }

    #[test]
    fn zero_inputs_stay_zero() {
        let mp = MotorParams::default();
        let mut s = EstimatorState::default();
        for _ in 0..100 {
            s = observer_step(AlphaBeta::ZERO, AlphaBeta::ZERO, &s, &mp, &ObserverParams::default(), 2e-4).unwrap();
        }
        assert_eq!(s, EstimatorState::default());
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let r = observer_step(
            AlphaBeta::new(f64::NAN, 0.0),
            AlphaBeta::ZERO,
            &EstimatorState::default(),
            &MotorParams::default(),
            &ObserverParams::default(),
            2e-4,
        );
        assert!(r.is_err());
    }

    #[test]
    fn phase_detector_identity() {
        let mp = MotorParams::default();
        for k in 0..200 {
            let theta = -7.0 + 0.071 * k as f64;
            let theta_hat = 3.3 - 0.113 * k as f64;
            let e = back_emf(theta, 30.0, &mp);
            let eps = phase_error(e, theta_hat, 1e-3);
            assert!((eps - (theta - theta_hat).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn pll_coasts_when_aligned() {
        let mp = MotorParams::default();
        let st = EstimatorState {
            theta_hat: 1.0,
            omega_hat: 100.0,
            pll_integrator: 100.0,
            ..Default::default()
        };
        let (next, out) = pll_step(back_emf(1.0, 10.0, &mp), &st, &PllParams::default(), 0.1, 1e-3);
        assert!(out.eps.abs() < 1e-15);
        assert!(out.emf_ok);
        assert!((next.theta_hat - 1.1).abs() < 1e-12);
    }

    #[test]
    fn pll_flags_small_emf() {
        let st = EstimatorState {
            omega_hat: 50.0,
            ..Default::default()
        };
        let (next, out) = pll_step(AlphaBeta::new(1e-3, 0.0), &st, &PllParams::default(), 0.5, 1e-3);
        assert!(!out.emf_ok);
        assert_eq!(next.omega_hat, 50.0);
        assert!((next.theta_hat - 0.05).abs() < 1e-15);
    }

    #[test]
    fn pll_locks_from_half_radian() {
        // 300 rpm at 6 pole pairs: 30 Hz electrical.
        let mp = MotorParams::default();
        let w_e = TAU * 30.0;
        let w_m = w_e / 6.0;
        let dt = 2e-4;
        let pp = PllParams::default();
        let floor = pp.emf_floor(&mp);
        let mut st = EstimatorState {
            theta_hat: -0.5,
            ..Default::default()
        };
        let mut worst_late: f64 = 0.0;
        for k in 0..=1500 {
            let t = k as f64 * dt;
            let theta = w_e * t;
            if t >= 0.3 {
                worst_late = worst_late.max(wrap_pi(theta - st.theta_hat).abs());
            }
            let (n, _) = pll_step(back_emf(theta, w_m, &mp), &st, &pp, floor, dt);
            st = n;
        }
        assert!(worst_late < 0.01, "residual {worst_late}");
    }

    #[test]
    fn pll_tracks_constant_acceleration_with_bounded_error() {
        let mp = MotorParams::default();
        let pp = PllParams::default();
        let dt = 2e-4;
        let accel = 150.0; // electrical rad/s²
        let mut st = EstimatorState::default();
        let mut late_err: f64 = 0.0;
        for k in 0..10_000 {
            let t = k as f64 * dt;
            let theta = 0.5 * accel * t * t;
            let w_m = (accel * t / 6.0).max(1.0);
            let (n, _) = pll_step(back_emf(theta, w_m, &mp), &st, &pp, 0.0, dt);
            st = n;
            if t > 1.0 {
                late_err = late_err.max(wrap_pi(0.5 * accel * (t + dt).powi(2) - st.theta_hat).abs());
            }
        }
        // Type-2 loop: steady error ≈ accel / ki.
        let bound = accel / pp.ki_pll * 1.5;
        assert!(late_err <= bound, "{late_err} > {bound}");
    }

    /// Motor branch driven by a sinusoidal voltage at constant speed,
    /// integrated finely with RK4; the observer samples it every control cycle.
    #[test]
    fn observer_converges_to_true_emf() {
        let mp = MotorParams::default();
        let op = ObserverParams::default();
        let w_e = TAU * 30.0;
        let w_m = w_e / 6.0;
        let dt = 2e-4;
        let sub = 40;
        let h = dt / sub as f64;
        // Voltage command leading the EMF so a current of about 1 A flows.
        let u_of = |k: usize| {
            let th = w_e * (k as f64 * dt + 0.5 * dt);
            AlphaBeta::from_angle(th + 1.9) * (mp.k_e() * w_m + 4.0)
        };
        let mut x = [0.0, 0.0];
        let mut st = EstimatorState {
            omega_hat: w_e,
            theta_hat: 0.0,
            ..Default::default()
        };
        let mut u_prev = AlphaBeta::ZERO;
        let mut rel = f64::NAN;
        for k in 0..=1000 {
            let t = k as f64 * dt;
            let i = AlphaBeta::new(x[0], x[1]);
            st = observer_step(i, u_prev, &st, &mp, &op, dt).unwrap();
            st.theta_hat = w_e * t;
            if k == 1000 {
                let e_true = back_emf(w_e * t, w_m, &mp);
                rel = (st.e_hat - e_true).norm() / e_true.norm();
            }
            let u = u_of(k);
            for s in 0..sub {
                let t0 = t + s as f64 * h;
                let f = |tt: f64, y: &[f64; 2]| {
                    let e = back_emf(w_e * tt, w_m, &mp);
                    [
                        (u.alpha - e.alpha - mp.r_s * y[0]) / mp.l_s,
                        (u.beta - e.beta - mp.r_s * y[1]) / mp.l_s,
                    ]
                };
                let k1 = f(t0, &x);
                let k2 = f(t0 + 0.5 * h, &[x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
                let k3 = f(t0 + 0.5 * h, &[x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
                let k4 = f(t0 + h, &[x[0] + h * k3[0], x[1] + h * k3[1]]);
                for j in 0..2 {
                    x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
            u_prev = u;
        }
        assert!(rel <= 0.02, "relative EMF error {rel}");
    }

    #[test]
    fn observer_current_error_decays_at_least_at_half_gain() {
        let mp = MotorParams::default();
        let op = ObserverParams::default();
        let dt = 2e-4;
        let i_true = AlphaBeta::new(1.0, 0.0);
        let u = i_true * mp.r_s;
        let mut st = EstimatorState::default();
        let mut errs = Vec::new();
        for _ in 0..40 {
            st = observer_step(i_true, u, &st, &mp, &op, dt).unwrap();
            errs.push(st.innovation.norm());
        }
        // Fit the decay rate from the log of the error envelope.
        let (a, b) = (errs[2].max(1e-300), errs[12].max(1e-300));
        let rate = (a / b).ln() / (10.0 * dt);
        assert!(rate >= op.g_obs / 2.0 / 2.0, "rate {rate}");
    }

    #[test]
    fn lock_quality_examples() {
        let lp = LockParams::default();
        let r = lock_quality(0.0, &[0.0; 10], &lp);
        assert!(!r.locked);
        let r = lock_quality(40.0, &[0.0; 10], &lp);
        assert_eq!(r.eps_rms, 0.0);
        assert!(r.locked);
        let r = lock_quality(40.0, &[0.3, -0.3], &lp);
        assert!(!r.locked);
        assert!((r.eps_rms - 0.3).abs() < 1e-15);
    }
}
