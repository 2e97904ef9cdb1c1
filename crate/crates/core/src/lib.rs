//! Symplectic local discontinuous Galerkin (LDG) discretization of the
//! one-dimensional stochastic linear Schrödinger equation
//!
//! ```text
//! i du - (Δu + Q(x) u) dt = u ∘ dW,     x ∈ [L_f, L_r] periodic,
//! ```
//!
//! driven by a real Q-Wiener process `W = Σ_k β_k(t) φ e_k(x)` in the
//! Stratonovich sense.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! - [`mesh`], [`basis`], [`field`], [`projection`]: periodic 1-D meshes,
//!   cell-local Legendre bases, Gauss quadrature, the L²-projection `𝒫` and
//!   the right-endpoint projection `𝒫⁻`.
//! - [`noise`]: spectral Q-Wiener increments, the `κ = √(4|ln Δt|)`
//!   truncation, path coupling across resolutions.
//! - [`ldg`]: the implicit midpoint LDG step with alternating fluxes, the
//!   charge diagnostic and the dense one-step operator.
//! - [`spectral`]: Fourier-collocation midpoint reference solver and the
//!   closed-form solution for spatially constant noise.
//! - [`lab`]: Monte-Carlo mean-square error estimation and order studies.
//!
//! File formats, the CLI and thread-parallel executors live in the `sldg`
//! companion crate.

#![no_std]

extern crate alloc;

pub mod basis;
pub mod error;
pub mod fft;
pub mod field;
pub mod initial;
pub mod lab;
pub mod ldg;
pub mod linalg;
pub mod mesh;
pub mod noise;
pub mod potential;
pub mod projection;
pub mod spectral;

pub use error::{Error, Result};
pub use field::DgField;
pub use mesh::{Mesh, Side};
pub use num_complex::Complex64;
