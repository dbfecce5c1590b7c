//! Continuous-time physics of the motor, output filter, long cable and the
//! averaged current-source inverter.
//!
//! The plant is a set of first-order ODEs over [`PlantState`]. The mechanical
//! speed `omega_m` is in mechanical rad/s; the electrical angle advances at
//! `pole_pairs * omega_m`. Back-EMF is
//!
//! ```text
//! e_α = -k_e·ω_m·sin θ_e,    e_β = k_e·ω_m·cos θ_e,    k_e = (√3/2)·ψ_f·P
//! ```
//!
//! and the motor branch obeys `L_s·di/dt = -R_s·i - e + u` in αβ. Torque is
//! defined through power balance, `T_e·ω_m = e·i`, so every αβ power term in
//! this module uses the same unit scaling and the stored energy closes
//! against the dissipated and injected power.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::AlphaBeta;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorParams {
    /// Stator resistance (Ω).
    pub r_s: f64,
    /// Synchronous inductance (H).
    pub l_s: f64,
    /// Permanent-magnet flux linkage (Wb).
    pub psi_f: f64,
    pub pole_pairs: u32,
    /// Rotor plus load inertia (kg·m²).
    pub inertia: f64,
    /// Viscous friction (N·m·s/rad).
    pub b_visc: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            r_s: 2.16,
            l_s: 4.56e-3,
            psi_f: 0.25,
            pole_pairs: 6,
            inertia: 0.01,
            b_visc: 1e-4,
        }
    }
}

impl MotorParams {
    /// Back-EMF constant in V·s/rad of mechanical speed.
    pub fn k_e(&self) -> f64 {
        0.5 * 3f64.sqrt() * self.psi_f * f64::from(self.pole_pairs)
    }

    /// Flux constant seen by the electrical-speed dq equations, `k_e / P`.
    pub fn flux_elec(&self) -> f64 {
        self.k_e() / f64::from(self.pole_pairs)
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "r_s", self.r_s, "Ω")?;
        check_positive(prefix, "l_s", self.l_s, "H")?;
        check_positive(prefix, "psi_f", self.psi_f, "Wb")?;
        check_positive(prefix, "inertia", self.inertia, "kg·m²")?;
        check_non_negative(prefix, "b_visc", self.b_visc, "N·m·s/rad")?;
        if self.pole_pairs == 0 {
            return Err(Error::config(
                format!("{prefix}.pole_pairs"),
                "must be an integer ≥ 1 (pole pairs)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CableTopology {
    /// Motor wired straight to the output filter.
    Direct,
    /// Lumped series R–L with a single shunt C at the motor end.
    SeriesRlShuntC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CableParams {
    /// Series resistance (Ω).
    pub r_c: f64,
    /// Series inductance (H).
    pub l_c: f64,
    /// Shunt capacitance (F).
    pub c_c: f64,
    pub topology: CableTopology,
}

impl Default for CableParams {
    fn default() -> Self {
        Self {
            r_c: 11.76,
            l_c: 9.7e-3,
            c_c: 111e-9,
            topology: CableTopology::SeriesRlShuntC,
        }
    }
}

impl CableParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_non_negative(prefix, "r_c", self.r_c, "Ω")?;
        check_non_negative(prefix, "l_c", self.l_c, "H")?;
        check_non_negative(prefix, "c_c", self.c_c, "F")?;
        if self.topology == CableTopology::SeriesRlShuntC {
            check_positive(prefix, "l_c", self.l_c, "H")?;
            check_positive(prefix, "c_c", self.c_c, "F")?;
        }
        Ok(())
    }
}

/// DC link and inverter output stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveFrontEnd {
    /// Output filter capacitance (F).
    pub c_o: f64,
    /// DC-link current ceiling and regulation target (A).
    pub i_dc_rated: f64,
    /// DC-current regulation time constant (s).
    pub tau_dc: f64,
    /// Bandwidth of the averaged modulator that drives the output capacitor
    /// voltage to the commanded vector (rad/s).
    pub v_reg_bandwidth: f64,
    /// DC inductance (H). Recorded only.
    pub l_dc: f64,
    /// Grid line voltage (V). Recorded only.
    pub v_g: f64,
    /// Grid frequency (Hz). Recorded only.
    pub f_g: f64,
}

impl Default for DriveFrontEnd {
    fn default() -> Self {
        Self {
            c_o: 50e-6,
            i_dc_rated: 10.0,
            tau_dc: 5e-3,
            v_reg_bandwidth: 2e4,
            l_dc: 10e-3,
            v_g: 480.0,
            f_g: 60.0,
        }
    }
}

impl DriveFrontEnd {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "c_o", self.c_o, "F")?;
        check_positive(prefix, "i_dc_rated", self.i_dc_rated, "A")?;
        check_positive(prefix, "tau_dc", self.tau_dc, "s")?;
        check_positive(prefix, "v_reg_bandwidth", self.v_reg_bandwidth, "rad/s")?;
        check_non_negative(prefix, "l_dc", self.l_dc, "H")?;
        check_non_negative(prefix, "v_g", self.v_g, "V")?;
        check_non_negative(prefix, "f_g", self.f_g, "Hz")?;
        Ok(())
    }
}

/// Pump-style load: `T_L = T_0·sign(ω_m) + k_pump·ω_m·|ω_m|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadModel {
    /// Constant (Coulomb/breakaway) torque (N·m).
    pub t_0: f64,
    /// Quadratic coefficient (N·m·s²/rad²).
    pub k_pump: f64,
}

impl Default for LoadModel {
    fn default() -> Self {
        // T_L(300 rpm) ≈ 0.4·k_e·i_q* with the shipped startup current of 2 A.
        Self {
            t_0: 0.2,
            k_pump: 8.5e-4,
        }
    }
}

impl LoadModel {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_non_negative(prefix, "t_0", self.t_0, "N·m")?;
        check_non_negative(prefix, "k_pump", self.k_pump, "N·m·s²/rad²")?;
        Ok(())
    }
}

/// Everything the derivative function needs besides the state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlantParams {
    pub motor: MotorParams,
    pub cable: CableParams,
    pub front_end: DriveFrontEnd,
    pub load: LoadModel,
}

/// Continuous state of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    /// Electrical rotor angle (rad, unwrapped).
    pub theta_e: f64,
    /// Mechanical speed (rad/s).
    pub omega_m: f64,
    pub i_motor: AlphaBeta,
    pub v_co: AlphaBeta,
    pub i_cable: AlphaBeta,
    pub v_cc: AlphaBeta,
    pub i_dc: f64,
}

impl PlantState {
    pub const DIM: usize = 11;

    pub const COMPONENTS: [&'static str; Self::DIM] = [
        "theta_e",
        "omega_m",
        "i_motor.alpha",
        "i_motor.beta",
        "v_co.alpha",
        "v_co.beta",
        "i_cable.alpha",
        "i_cable.beta",
        "v_cc.alpha",
        "v_cc.beta",
        "i_dc",
    ];

    pub fn to_array(&self) -> [f64; Self::DIM] {
        [
            self.theta_e,
            self.omega_m,
            self.i_motor.alpha,
            self.i_motor.beta,
            self.v_co.alpha,
            self.v_co.beta,
            self.i_cable.alpha,
            self.i_cable.beta,
            self.v_cc.alpha,
            self.v_cc.beta,
            self.i_dc,
        ]
    }

    pub fn from_array(x: &[f64; Self::DIM]) -> Self {
        Self {
            theta_e: x[0],
            omega_m: x[1],
            i_motor: AlphaBeta::new(x[2], x[3]),
            v_co: AlphaBeta::new(x[4], x[5]),
            i_cable: AlphaBeta::new(x[6], x[7]),
            v_cc: AlphaBeta::new(x[8], x[9]),
            i_dc: x[10],
        }
    }

    /// Name of the first non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.to_array()
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| Self::COMPONENTS[i])
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some(component) => Err(Error::NumericBlowup { t: None, component }),
            None => Ok(()),
        }
    }

    /// Voltage at the motor terminals.
    pub fn motor_voltage(&self, cable: &CableParams) -> AlphaBeta {
        match cable.topology {
            CableTopology::Direct => self.v_co,
            CableTopology::SeriesRlShuntC => self.v_cc,
        }
    }

    /// Current leaving the output filter towards the motor.
    pub fn output_current(&self, cable: &CableParams) -> AlphaBeta {
        match cable.topology {
            CableTopology::Direct => self.i_motor,
            CableTopology::SeriesRlShuntC => self.i_cable,
        }
    }
}

/// Inputs held constant across one plant derivative evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantInput {
    /// αβ current injected by the inverter (already saturated to `i_dc`).
    pub i_inv: AlphaBeta,
    /// DC-link current reference (A).
    pub i_dc_ref: f64,
}

pub fn back_emf(theta_e: f64, omega_m: f64, p: &MotorParams) -> AlphaBeta {
    let (s, c) = theta_e.sin_cos();
    let k = p.k_e() * omega_m;
    AlphaBeta::new(-k * s, k * c)
}

pub fn electromagnetic_torque(state: &PlantState, p: &MotorParams) -> f64 {
    let (s, c) = state.theta_e.sin_cos();
    p.k_e() * (-state.i_motor.alpha * s + state.i_motor.beta * c)
}

/// Load torque opposing motion. At standstill the constant term acts as a
/// breakaway threshold: it cancels `applied` torque up to `±T_0`.
pub fn load_torque(omega_m: f64, applied: f64, load: &LoadModel) -> f64 {
    if omega_m == 0.0 {
        applied.clamp(-load.t_0, load.t_0)
    } else {
        load.t_0 * omega_m.signum() + load.k_pump * omega_m * omega_m.abs()
    }
}

/// `L_s·di/dt` of the motor branch for terminal voltage `u` and EMF `e`.
pub fn motor_branch_voltage(i: AlphaBeta, u: AlphaBeta, e: AlphaBeta, p: &MotorParams) -> AlphaBeta {
    u - e - i * p.r_s
}

/// Current the averaged inverter injects to hold the output capacitor at
/// `u_cmd`, limited to the available DC-link current.
pub fn inverter_current(u_cmd: AlphaBeta, state: &PlantState, params: &PlantParams) -> AlphaBeta {
    let fe = &params.front_end;
    let i_out = state.output_current(&params.cable);
    let i_cmd = i_out + (u_cmd - state.v_co) * (fe.c_o * fe.v_reg_bandwidth);
    i_cmd.clamp_norm(state.i_dc.max(0.0))
}

pub fn plant_derivatives(state: &PlantState, input: &PlantInput, params: &PlantParams) -> Result<PlantState> {
    state.check_finite()?;
    let PlantParams {
        motor,
        cable,
        front_end,
        load,
    } = params;

    let e = back_emf(state.theta_e, state.omega_m, motor);
    let u_motor = state.motor_voltage(cable);
    let di_motor = motor_branch_voltage(state.i_motor, u_motor, e, motor) * (1.0 / motor.l_s);

    let (dv_co, di_cable, dv_cc) = match cable.topology {
        CableTopology::Direct => (
            (input.i_inv - state.i_motor) * (1.0 / front_end.c_o),
            AlphaBeta::ZERO,
            AlphaBeta::ZERO,
        ),
        CableTopology::SeriesRlShuntC => (
            (input.i_inv - state.i_cable) * (1.0 / front_end.c_o),
            (state.v_co - state.i_cable * cable.r_c - state.v_cc) * (1.0 / cable.l_c),
            (state.i_cable - state.i_motor) * (1.0 / cable.c_c),
        ),
    };

    let t_e = electromagnetic_torque(state, motor);
    let domega = if state.omega_m == 0.0 && t_e.abs() <= load.t_0 {
        // stiction
        0.0
    } else {
        (t_e - load_torque(state.omega_m, t_e, load) - motor.b_visc * state.omega_m) / motor.inertia
    };

    Ok(PlantState {
        theta_e: f64::from(motor.pole_pairs) * state.omega_m,
        omega_m: domega,
        i_motor: di_motor,
        v_co: dv_co,
        i_cable: di_cable,
        v_cc: dv_cc,
        i_dc: (input.i_dc_ref - state.i_dc) / front_end.tau_dc,
    })
}

pub fn stored_energy(state: &PlantState, params: &PlantParams) -> f64 {
    let m = &params.motor;
    let mut e = 0.5 * m.l_s * state.i_motor.dot(state.i_motor)
        + 0.5 * params.front_end.c_o * state.v_co.dot(state.v_co)
        + 0.5 * m.inertia * state.omega_m * state.omega_m;
    if params.cable.topology == CableTopology::SeriesRlShuntC {
        e += 0.5 * params.cable.l_c * state.i_cable.dot(state.i_cable)
            + 0.5 * params.cable.c_c * state.v_cc.dot(state.v_cc);
    }
    e
}

/// Instantaneous power flows (W) used to audit the energy balance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerFlows {
    pub injected: f64,
    pub stator_loss: f64,
    pub cable_loss: f64,
    pub friction_loss: f64,
    pub load: f64,
}

impl PowerFlows {
    /// Net rate of change of stored energy implied by the flows.
    pub fn net(&self) -> f64 {
        self.injected - self.stator_loss - self.cable_loss - self.friction_loss - self.load
    }
}

pub fn power_flows(state: &PlantState, input: &PlantInput, params: &PlantParams) -> PowerFlows {
    let m = &params.motor;
    let t_e = electromagnetic_torque(state, m);
    let t_l = if state.omega_m == 0.0 {
        0.0
    } else {
        load_torque(state.omega_m, t_e, &params.load)
    };
    let cable_loss = match params.cable.topology {
        CableTopology::Direct => 0.0,
        CableTopology::SeriesRlShuntC => params.cable.r_c * state.i_cable.dot(state.i_cable),
    };
    PowerFlows {
        injected: state.v_co.dot(input.i_inv),
        stator_loss: m.r_s * state.i_motor.dot(state.i_motor),
        cable_loss,
        friction_loss: m.b_visc * state.omega_m * state.omega_m,
        load: t_l * state.omega_m,
    }
}

pub(crate) fn check_positive(prefix: &str, key: &str, v: f64, unit: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            format!("{prefix}.{key}"),
            format!("must be > 0 ({unit}), got {v}"),
        ))
    }
}

pub(crate) fn check_non_negative(prefix: &str, key: &str, v: f64, unit: &str) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            format!("{prefix}.{key}"),
            format!("must be ≥ 0 ({unit}), got {v}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn params() -> PlantParams {
        PlantParams::default()
    }

    #[test]
    fn k_e_matches_definition() {
        let m = MotorParams::default();
        assert_eq!(m.k_e(), (3f64.sqrt() / 2.0) * m.psi_f * 6.0);
        assert!((m.flux_elec() * 6.0 - m.k_e()).abs() < 1e-15);
    }

    #[test]
    fn back_emf_examples() {
        let p = MotorParams::default();
        let w = 31.4;
        let e = back_emf(0.0, w, &p);
        assert_eq!(e.alpha, 0.0);
        assert_eq!(e.beta, p.k_e() * w);

        assert_eq!(back_emf(1.234, 0.0, &p).norm(), 0.0);

        let e = back_emf(FRAC_PI_2, w, &p);
        assert!((e.alpha + p.k_e() * w).abs() < 1e-12 * p.k_e() * w);
        assert!(e.beta.abs() < 1e-12 * p.k_e() * w);
    }

    #[test]
    fn torque_examples() {
        let p = MotorParams::default();
        let mut s = PlantState {
            theta_e: 0.8,
            ..Default::default()
        };
        assert_eq!(electromagnetic_torque(&s, &p), 0.0);

        let dir = AlphaBeta::new(-0.8f64.sin(), 0.8f64.cos());
        s.i_motor = dir * 1.7;
        assert!((electromagnetic_torque(&s, &p) - p.k_e() * 1.7).abs() < 1e-12);
    }

    #[test]
    fn load_torque_examples() {
        let l = LoadModel::default();
        assert_eq!(load_torque(0.0, 0.0, &l), 0.0);
        assert_eq!(load_torque(0.0, 5.0, &l), l.t_0);
        assert_eq!(load_torque(0.0, -0.1, &l), -0.1);

        let pure = LoadModel { t_0: 0.0, k_pump: 2e-3 };
        assert!((load_torque(12.0, 0.0, &pure) - 2e-3 * 144.0).abs() < 1e-15);

        // Monotone in |ω| by finite-difference sign check.
        let h = 1e-4;
        for k in 1..400 {
            let w = k as f64 * 0.25;
            assert!(load_torque(w + h, 0.0, &l) - load_torque(w, 0.0, &l) > 0.0);
            assert!(load_torque(-w - h, 0.0, &l) - load_torque(-w, 0.0, &l) < 0.0);
        }
    }

    #[test]
    fn zero_state_is_equilibrium() {
        let d = plant_derivatives(&PlantState::default(), &PlantInput::default(), &params()).unwrap();
        assert!(d.to_array().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stiction_holds_rotor_below_breakaway() {
        let p = params();
        let k_e = p.motor.k_e();
        let s = PlantState {
            i_motor: AlphaBeta::new(0.0, 0.5 * p.load.t_0 / k_e),
            ..Default::default()
        };
        let d = plant_derivatives(&s, &PlantInput::default(), &p).unwrap();
        assert_eq!(d.omega_m, 0.0);

        let s = PlantState {
            i_motor: AlphaBeta::new(0.0, 2.0 * p.load.t_0 / k_e),
            ..Default::default()
        };
        let d = plant_derivatives(&s, &PlantInput::default(), &p).unwrap();
        assert!((d.omega_m - p.load.t_0 / p.motor.inertia).abs() < 1e-12);
    }

    #[test]
    fn non_finite_state_names_component() {
        let s = PlantState {
            v_co: AlphaBeta::new(0.0, f64::NAN),
            ..Default::default()
        };
        match plant_derivatives(&s, &PlantInput::default(), &params()) {
            Err(Error::NumericBlowup { component, .. }) => assert_eq!(component, "v_co.beta"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn direct_topology_motor_branch_is_the_stationary_frame_model() {
        let mut p = params();
        p.cable.topology = CableTopology::Direct;
        let s = PlantState {
            theta_e: 0.3,
            omega_m: 20.0,
            i_motor: AlphaBeta::new(1.2, -0.4),
            v_co: AlphaBeta::new(10.0, 30.0),
            ..Default::default()
        };
        let d = plant_derivatives(&s, &PlantInput::default(), &p).unwrap();
        let e = back_emf(s.theta_e, s.omega_m, &p.motor);
        let m = &p.motor;
        let dia = (-m.r_s * s.i_motor.alpha - e.alpha + s.v_co.alpha) / m.l_s;
        let dib = (-m.r_s * s.i_motor.beta - e.beta + s.v_co.beta) / m.l_s;
        assert!((d.i_motor.alpha - dia).abs() < 1e-9);
        assert!((d.i_motor.beta - dib).abs() < 1e-9);
        assert_eq!(d.i_cable, AlphaBeta::ZERO);
        assert_eq!(d.v_cc, AlphaBeta::ZERO);
        assert!((d.theta_e - 6.0 * 20.0).abs() < 1e-12);
    }

    #[test]
    fn energy_examples() {
        let p = params();
        assert_eq!(stored_energy(&PlantState::default(), &p), 0.0);
        let s = PlantState {
            v_co: AlphaBeta::new(3.0, 0.0),
            ..Default::default()
        };
        assert!((stored_energy(&s, &p) - 0.5 * p.front_end.c_o * 9.0).abs() < 1e-15);
    }

    #[test]
    fn inverter_current_respects_dc_ceiling() {
        let p = params();
        let s = PlantState {
            i_dc: 1.5,
            ..Default::default()
        };
        let i = inverter_current(AlphaBeta::new(1e4, 0.0), &s, &p);
        assert!((i.norm() - 1.5).abs() < 1e-12);
        let s = PlantState::default();
        assert_eq!(inverter_current(AlphaBeta::new(100.0, 0.0), &s, &p), AlphaBeta::ZERO);
    }

    #[test]
    fn validation_rejects_negative_inductance() {
        let m = MotorParams {
            l_s: -1e-3,
            ..Default::default()
        };
        let err = m.validate("motor").unwrap_err().to_string();
        assert!(err.contains("motor.l_s"), "{err}");
        assert!(err.contains("(H)"), "{err}");
    }
}
