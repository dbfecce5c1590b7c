//! Scenario files: one JSON object with a section per parameter group.
//!
//! Missing sections and fields take their defaults and unknown keys are
//! rejected. Errors name the offending key path and its unit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{ControlGains, IfStartupParams, TransitionConfig};
use crate::error::{Error, Result};
use crate::estimator::{LockParams, ObserverParams, PllParams};
use crate::plant::{CableParams, DriveFrontEnd, LoadModel, MotorParams, PlantParams};
use crate::sim::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub motor: MotorParams,
    pub cable: CableParams,
    pub front_end: DriveFrontEnd,
    pub load: LoadModel,
    pub startup: IfStartupParams,
    pub pi: ControlGains,
    pub observer: ObserverParams,
    pub pll: PllParams,
    pub lock: LockParams,
    pub transition: TransitionConfig,
    pub sim: SimConfig,
    /// True rotor angle at t = 0 (electrical rad).
    pub initial_rotor_angle: f64,
    /// Motor model used by the controller and estimator when it differs from
    /// the plant (parameter-mismatch studies).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controller_motor: Option<MotorParams>,
}

impl Scenario {
    pub fn plant_params(&self) -> PlantParams {
        PlantParams {
            motor: self.motor.clone(),
            cable: self.cable.clone(),
            front_end: self.front_end.clone(),
            load: self.load.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.motor.validate("motor")?;
        self.cable.validate("cable")?;
        self.front_end.validate("front_end")?;
        self.load.validate("load")?;
        self.startup.validate("startup")?;
        self.pi.validate("pi")?;
        self.observer.validate("observer")?;
        self.pll.validate("pll")?;
        self.lock.validate("lock")?;
        self.transition.validate("transition")?;
        self.sim.validate("sim")?;
        if let Some(m) = &self.controller_motor {
            m.validate("controller_motor")?;
        }
        if !self.initial_rotor_angle.is_finite() {
            return Err(Error::config("initial_rotor_angle", "must be finite (rad)"));
        }
        Ok(())
    }

    /// Parse and validate. Blank input yields the defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let text = if text.trim().is_empty() { "{}" } else { text };
        let de = &mut serde_json::Deserializer::from_str(text);
        let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let reason = match unit_of(&key) {
                Some(unit) => format!("{} (expected {unit})", e.inner()),
                None => e.inner().to_string(),
            };
            Error::config(key, reason)
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config { key, reason } => Error::Parse {
                path: path.to_owned(),
                message: format!("`{key}`: {reason}"),
            },
            other => other,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Unit of a scenario field, keyed on its last path segment.
pub fn unit_of(path: &str) -> Option<&'static str> {
    let leaf = path.rsplit('.').next()?;
    Some(match leaf {
        "r_s" | "r_c" | "hc_r_comp" => "Ω",
        "l_s" | "l_c" | "l_dc" => "H",
        "psi_f" => "Wb",
        "inertia" => "kg·m²",
        "b_visc" => "N·m·s/rad",
        "c_c" | "c_o" => "F",
        "i_dc_rated" | "i_q_star" | "i_d_star" | "current_noise_std" => "A",
        "tau_dc" | "dt_plant" | "dt_ctrl" | "t_end" | "t_align" | "t_to_t2" | "t_to_t3" | "align_dwell"
        | "t2_dwell" => "s",
        "v_reg_bandwidth" | "emf_filter_cutoff" | "omega_target" | "omega_hat_limit" | "omega_min"
        | "align_ramp_rate" | "kp_pll" => "rad/s",
        "ki_pll" | "k_omega" => "rad/s²",
        "g_obs" => "1/s",
        "v_g" | "emf_threshold" => "V",
        "f_g" => "Hz",
        "t_0" => "N·m",
        "k_pump" => "N·m·s²/rad²",
        "initial_lag" | "initial_rotor_angle" | "align_tol" | "hc_dtheta" | "hc_stop_band" => "rad",
        "pole_pairs" | "hc_h" | "window" | "delay_cycles" | "rng_seed" => "non-negative integer",
        "enabled" | "randomize_initial_angle" => "boolean",
        _ => return None,
    })
}
