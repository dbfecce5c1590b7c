//! dq current regulators and the outer speed loop.

use crate::frames::Dq;
use crate::plant::MotorParams;

use super::pi::{PiGains, PiState};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurrentLoopState {
    pub d: PiState,
    pub q: PiState,
}

/// PI current control with the dq cross-coupling and EMF feedforward:
///
/// ```text
/// u_d = PI_d(i_d* - i_d) - ω·L_s·i_q
/// u_q = PI_q(i_q* - i_q) + ω·L_s·i_d + ω·k_e/P
/// ```
pub fn current_loop_step(
    i_dq_ref: Dq,
    i_dq_meas: Dq,
    omega_elec: f64,
    st: &mut CurrentLoopState,
    gains: &PiGains,
    mp: &MotorParams,
    dt: f64,
) -> Dq {
    let err = i_dq_ref - i_dq_meas;
    let ff_d = -omega_elec * mp.l_s * i_dq_meas.q;
    let ff_q = omega_elec * mp.l_s * i_dq_meas.d + omega_elec * mp.flux_elec();
    // The feedforward shifts the window the PI may use so the total command
    // stays inside the gains' output range.
    let shifted = |ff: f64| PiGains {
        output_min: gains.output_min - ff,
        output_max: gains.output_max - ff,
        ..*gains
    };
    let u_d = st.d.step(err.d, &shifted(ff_d), dt) + ff_d;
    let u_q = st.q.step(err.q, &shifted(ff_q), dt) + ff_q;
    Dq::new(u_d, u_q)
}

/// Speed PI producing the q-axis current reference (electrical rad/s in).
pub fn speed_loop_step(omega_ref: f64, omega_hat: f64, st: &mut PiState, gains: &PiGains, dt: f64) -> f64 {
    st.step(omega_ref - omega_hat, gains, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::AlphaBeta;

    fn current_gains(mp: &MotorParams) -> PiGains {
        let w = std::f64::consts::TAU * 300.0;
        PiGains::symmetric(mp.l_s * w, mp.r_s * w, 400.0)
    }

    #[test]
    fn zero_error_zero_speed_gives_integrator_carry() {
        let mp = MotorParams::default();
        let g = current_gains(&mp);
        let mut st = CurrentLoopState::default();
        let u = current_loop_step(Dq::new(0.0, 1.0), Dq::new(0.0, 1.0), 0.0, &mut st, &g, &mp, 2e-4);
        assert_eq!(u, Dq::ZERO);
        st.q.integrator = 3.0;
        let u = current_loop_step(Dq::new(0.0, 1.0), Dq::new(0.0, 1.0), 0.0, &mut st, &g, &mp, 2e-4);
        assert_eq!(u, Dq::new(0.0, 3.0));
    }

    #[test]
    fn emf_feedforward_on_q_axis() {
        let mp = MotorParams::default();
        let g = current_gains(&mp);
        let mut st = CurrentLoopState::default();
        let w = 188.0;
        let u = current_loop_step(Dq::ZERO, Dq::ZERO, w, &mut st, &g, &mp, 2e-4);
        assert!((u.q - w * mp.k_e() / 6.0).abs() < 1e-12);
        assert_eq!(u.d, 0.0);
    }

    /// Voltage-driven RL branch (no EMF) integrated finely between control
    /// samples; the current must reach 90% of a step within 5 ms.
    #[test]
    fn step_response_rise_time() {
        let mp = MotorParams::default();
        let g = current_gains(&mp);
        let dt = 2e-4;
        let sub = 50;
        let h = dt / sub as f64;
        let mut st = CurrentLoopState::default();
        let mut i = AlphaBeta::ZERO;
        let target = 2.0;
        let mut t90 = None;
        for k in 0..200 {
            let meas = Dq::new(i.alpha, i.beta);
            if t90.is_none() && meas.q >= 0.9 * target {
                t90 = Some(k as f64 * dt);
            }
            let u = current_loop_step(Dq::new(0.0, target), meas, 0.0, &mut st, &g, &mp, dt);
            let u = AlphaBeta::new(u.d, u.q);
            for _ in 0..sub {
                // exact RL update over h
                let a = (-mp.r_s * h / mp.l_s).exp();
                i = i * a + u * ((1.0 - a) / mp.r_s);
            }
        }
        let t90 = t90.expect("never reached 90%");
        assert!(t90 <= 5e-3, "t90 = {t90}");
    }

    #[test]
    fn speed_loop_saturates() {
        let g = PiGains::symmetric(0.05, 0.5, 5.0);
        let mut st = PiState::default();
        assert_eq!(speed_loop_step(1e6, 0.0, &mut st, &g, 2e-4), 5.0);
    }

    /// Rigid rotor with a constant disturbance torque: integral action drives
    /// the speed error to zero.
    #[test]
    fn speed_loop_rejects_constant_disturbance() {
        let mp = MotorParams::default();
        let g = PiGains::symmetric(0.04, 0.3, 5.0);
        let dt = 2e-4;
        let mut st = PiState::default();
        let (mut w_e, w_ref) = (180.0, 188.5);
        let t_dist = 0.8;
        for _ in 0..50_000 {
            let iq = speed_loop_step(w_ref, w_e, &mut st, &g, dt);
            let dw_m = (mp.k_e() * iq - t_dist) / mp.inertia;
            w_e += 6.0 * dw_m * dt;
        }
        assert!((w_e - w_ref).abs() < 1e-6, "residual {}", w_e - w_ref);
    }
}
