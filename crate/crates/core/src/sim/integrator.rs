//! Fixed-step explicit integrators over flat state arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

#[inline]
fn axpy<const N: usize>(x: &[f64; N], k: f64, d: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| x[i] + k * d[i])
}

/// Advance `x` by one step of size `dt`. The derivative closure may fail;
/// a non-finite result is reported as a blow-up naming the offending index.
pub fn integrate_step<const N: usize, F>(x: &[f64; N], mut f: F, dt: f64, method: Integrator) -> Result<[f64; N]>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let next = match method {
        Integrator::Euler => axpy(x, dt, &f(x)?),
        Integrator::Rk4 => {
            let k1 = f(x)?;
            let k2 = f(&axpy(x, 0.5 * dt, &k1))?;
            let k3 = f(&axpy(x, 0.5 * dt, &k2))?;
            let k4 = f(&axpy(x, dt, &k3))?;
            std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        }
    };
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NumericBlowup {
            t: None,
            component: "integrator state",
        })
    }
}
