//! Smooth periodic initial data used by the experiments.

use core::f64::consts::PI;

use num_complex::Complex64;

/// `u_0` on the domain `[L_f, L_f + L]`, with `θ = 2π(x - L_f)/L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `c`.
    Constant(Complex64),
    /// `e^{i m θ}`.
    PlaneWave { frequency: i32 },
    /// `e^{i a cos θ}`, all Fourier modes present with super-exponential decay.
    PhaseModulated { amplitude: f64 },
    /// `e^{i m θ} + b cos θ`.
    Mixed { frequency: i32, cosine: f64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::PlaneWave { frequency: 1 }
    }
}

impl InitialData {
    pub fn eval(&self, x: f64, left: f64, length: f64) -> Complex64 {
        let theta = 2.0 * PI * (x - left) / length;
        match *self {
            InitialData::Constant(c) => c,
            InitialData::PlaneWave { frequency } => Complex64::from_polar(1.0, frequency as f64 * theta),
            InitialData::PhaseModulated { amplitude } => Complex64::from_polar(1.0, amplitude * libm::cos(theta)),
            InitialData::Mixed { frequency, cosine } => {
                Complex64::from_polar(1.0, frequency as f64 * theta) + cosine * libm::cos(theta)
            }
        }
    }
}
