//! Projections of functions onto `V_h^k`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{self, GaussLegendre};
use crate::error::Result;
use crate::field::DgField;
use crate::mesh::Mesh;

/// Which projection maps initial data into the discrete space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// Standard cell-wise L² projection `𝒫`.
    L2,
    /// `𝒫⁻`: moments against `P^{k-1}` plus right-endpoint interpolation.
    #[default]
    RightEndpoint,
}

impl Projection {
    pub fn apply<F>(self, f: F, mesh: Arc<Mesh>, degree: usize) -> Result<DgField>
    where
        F: Fn(f64) -> Complex64,
    {
        match self {
            Projection::L2 => project_l2(f, mesh, degree),
            Projection::RightEndpoint => project_minus(f, mesh, degree),
        }
    }
}

/// Cell moments `(2m+1)/2 ∫_{-1}^{1} f P_m dξ` for `m < count`.
fn moments<F>(f: &F, mesh: &Mesh, cell: usize, count: usize, rule: &GaussLegendre) -> Vec<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); count];
    let mut p = alloc::vec![0.0; count.max(1)];
    for (&xi, &w) in rule.nodes().iter().zip(rule.weights()) {
        let v = f(mesh.to_physical(cell, xi));
        basis::fill_legendre(xi, &mut p);
        for m in 0..count {
            out[m] += v * (w * p[m]);
        }
    }
    for (m, c) in out.iter_mut().enumerate() {
        *c *= (2 * m + 1) as f64 / 2.0;
    }
    out
}

/// `𝒫f`: `∫_{I_j} (𝒫f - f) v dx = 0` for all `v ∈ P^k(I_j)`.
pub fn project_l2<F>(f: F, mesh: Arc<Mesh>, degree: usize) -> Result<DgField>
where
    F: Fn(f64) -> Complex64,
{
    let rule = GaussLegendre::new(basis::quadrature_points(degree))?;
    let mut coeffs = Vec::with_capacity(mesh.cells() * (degree + 1));
    for j in 0..mesh.cells() {
        coeffs.extend(moments(&f, &mesh, j, degree + 1, &rule));
    }
    DgField::from_coeffs(mesh, degree, coeffs)
}

/// `𝒫⁻f`: moments against `P^{k-1}(I_j)` and `𝒫⁻f(x_{j+1/2}^-) = f(x_{j+1/2})`.
///
/// In the Legendre basis the local system is triangular: the first `k`
/// coefficients are the L² moments and the last one closes the endpoint
/// condition, since `P_m(1) = 1`.
pub fn project_minus<F>(f: F, mesh: Arc<Mesh>, degree: usize) -> Result<DgField>
where
    F: Fn(f64) -> Complex64,
{
    let rule = GaussLegendre::new(basis::quadrature_points(degree))?;
    let mut coeffs = Vec::with_capacity(mesh.cells() * (degree + 1));
    for j in 0..mesh.cells() {
        let mut cell = moments(&f, &mesh, j, degree, &rule);
        let lower: Complex64 = cell.iter().sum();
        cell.push(f(mesh.bounds(j).1) - lower);
        coeffs.extend(cell);
    }
    DgField::from_coeffs(mesh, degree, coeffs)
}
