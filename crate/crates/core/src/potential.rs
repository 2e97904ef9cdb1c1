//! Real potentials `Q(x)`.

use alloc::sync::Arc;
use core::f64::consts::PI;
use core::fmt;

/// Potential `Q` of the equation, evaluated pointwise at quadrature or
/// collocation nodes.
#[derive(Clone)]
pub enum Potential {
    Constant(f64),
    /// `amplitude · cos(2π(x - L_f)/L)` on the domain `[L_f, L_f + L]`.
    Cosine { amplitude: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Default for Potential {
    fn default() -> Self {
        Potential::Constant(0.0)
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Constant(q) => write!(f, "Constant({q})"),
            Potential::Cosine { amplitude } => write!(f, "Cosine {{ amplitude: {amplitude} }}"),
            Potential::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Potential {
    pub fn eval(&self, x: f64, left: f64, length: f64) -> f64 {
        match self {
            Potential::Constant(q) => *q,
            Potential::Cosine { amplitude } => amplitude * libm::cos(2.0 * PI * (x - left) / length),
            Potential::Custom(f) => f(x),
        }
    }

    /// The value when `Q` is spatially constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Potential::Constant(q) => Some(*q),
            Potential::Cosine { amplitude } if *amplitude == 0.0 => Some(0.0),
            _ => None,
        }
    }
}
