//! Reference-frame vectors and the rotations between them.
//!
//! All transforms are amplitude invariant: a balanced three-phase set of
//! peak `I` maps to an αβ vector of magnitude `I`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A vector in the stationary αβ frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

/// A vector in a rotating dq frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dq {
    pub d: f64,
    pub q: f64,
}

impl AlphaBeta {
    pub const ZERO: Self = Self { alpha: 0.0, beta: 0.0 };

    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// Unit vector at electrical angle `theta`.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    pub fn norm(self) -> f64 {
        self.alpha.hypot(self.beta)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.alpha * other.alpha + self.beta * other.beta
    }

    pub fn angle(self) -> f64 {
        self.beta.atan2(self.alpha)
    }

    /// Rotate counter-clockwise by `theta`.
    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.alpha - s * self.beta, s * self.alpha + c * self.beta)
    }

    /// Scale the vector down so its magnitude does not exceed `limit`.
    pub fn clamp_norm(self, limit: f64) -> Self {
        let n = self.norm();
        if n > limit && n > 0.0 {
            self * (limit / n)
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite()
    }
}

impl Dq {
    pub const ZERO: Self = Self { d: 0.0, q: 0.0 };

    pub const fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn norm(self) -> f64 {
        self.d.hypot(self.q)
    }
}

macro_rules! impl_vec_ops {
    ($t:ident, $a:ident, $b:ident) => {
        impl Add for $t {
            type Output = Self;
            fn add(self, o: Self) -> Self {
                Self { $a: self.$a + o.$a, $b: self.$b + o.$b }
            }
        }
        impl Sub for $t {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                Self { $a: self.$a - o.$a, $b: self.$b - o.$b }
            }
        }
        impl Mul<f64> for $t {
            type Output = Self;
            fn mul(self, k: f64) -> Self {
                Self { $a: self.$a * k, $b: self.$b * k }
            }
        }
        impl Neg for $t {
            type Output = Self;
            fn neg(self) -> Self {
                Self { $a: -self.$a, $b: -self.$b }
            }
        }
    };
}

impl_vec_ops!(AlphaBeta, alpha, beta);
impl_vec_ops!(Dq, d, q);

/// Park transform: rotate an αβ vector by `-theta` into the dq frame whose
/// d axis sits at `theta`.
pub fn park(x: AlphaBeta, theta: f64) -> Dq {
    let (s, c) = theta.sin_cos();
    Dq::new(c * x.alpha + s * x.beta, -s * x.alpha + c * x.beta)
}

/// Inverse Park transform: rotate a dq vector by `+theta` back to αβ.
pub fn inverse_park(x: Dq, theta: f64) -> AlphaBeta {
    let (s, c) = theta.sin_cos();
    AlphaBeta::new(c * x.d - s * x.q, s * x.d + c * x.q)
}

/// αβ to phase quantities (a, b, c).
pub fn inverse_clarke(x: AlphaBeta) -> [f64; 3] {
    let half_sqrt3 = 0.5 * 3f64.sqrt();
    [
        x.alpha,
        -0.5 * x.alpha + half_sqrt3 * x.beta,
        -0.5 * x.alpha - half_sqrt3 * x.beta,
    ]
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_pi(theta: f64) -> f64 {
    let mut w = theta.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_2pi(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}
