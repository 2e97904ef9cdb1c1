//! Discontinuous piecewise-polynomial complex fields.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{self, GaussLegendre};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Side};

/// Element of `V_h^k ⊕ i V_h^k`: per-cell Legendre coefficients of
/// `u_h = r_h + i s_h`.
///
/// Coefficients are stored row-major, `coeffs[j * (k + 1) + m]` multiplying
/// `P_m` mapped onto cell `j`.
#[derive(Debug, Clone)]
pub struct DgField {
    mesh: Arc<Mesh>,
    degree: usize,
    coeffs: Vec<Complex64>,
}

/// One-sided values of a field at node `x_{node}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceValue {
    pub node: usize,
    /// `u⁻`, from the cell ending at the node.
    pub left: Complex64,
    /// `u⁺`, from the cell starting at the node (periodic wrap at the ends).
    pub right: Complex64,
}

impl TraceValue {
    pub fn jump(&self) -> Complex64 {
        self.left - self.right
    }
}

impl DgField {
    pub fn zeros(mesh: Arc<Mesh>, degree: usize) -> Self {
        let n = mesh.cells() * (degree + 1);
        Self {
            mesh,
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_coeffs(mesh: Arc<Mesh>, degree: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != mesh.cells() * (degree + 1) {
            return Err(Error::param(
                "coeffs",
                alloc::format!(
                    "expected {} coefficients for J={} k={}, got {}",
                    mesh.cells() * (degree + 1),
                    mesh.cells(),
                    degree,
                    coeffs.len()
                ),
            ));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::param("coeffs", "coefficients must be finite"));
        }
        Ok(Self {
            mesh,
            degree,
            coeffs,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn cell(&self, j: usize) -> &[Complex64] {
        let m = self.modes();
        &self.coeffs[j * m..(j + 1) * m]
    }

    /// True when both fields live in the same discrete space.
    pub fn same_space(&self, other: &DgField) -> bool {
        self.degree == other.degree
            && (Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh)
    }

    /// Value of the cell-`j` expansion at reference coordinate `ξ`.
    pub fn eval_in_cell(&self, j: usize, xi: f64) -> Complex64 {
        let mut p = [0.0f64; 16];
        let cell = self.cell(j);
        if cell.len() <= p.len() {
            basis::fill_legendre(xi, &mut p[..cell.len()]);
            cell.iter().zip(&p).map(|(c, &w)| c * w).sum()
        } else {
            let p = basis::legendre_values(self.degree, xi);
            cell.iter().zip(&p).map(|(c, &w)| c * w).sum()
        }
    }

    pub fn eval(&self, x: f64, side: Side) -> Result<Complex64> {
        let (j, xi) = self.mesh.locate(x, side)?;
        Ok(self.eval_in_cell(j, xi))
    }

    /// Traces at node `x_{node}`, `node ∈ 0..=J`.
    pub fn trace(&self, node: usize) -> TraceValue {
        let cells = self.mesh.cells();
        let left_cell = if node == 0 { cells - 1 } else { node - 1 };
        let right_cell = if node == cells { 0 } else { node };
        TraceValue {
            node,
            left: self.cell(left_cell).iter().sum(),
            right: self
                .cell(right_cell)
                .iter()
                .enumerate()
                .map(|(m, c)| c * basis::left_endpoint_value(m))
                .sum(),
        }
    }

    /// `∫ a b̄ dx`, exact through Legendre orthogonality.
    pub fn inner(&self, other: &DgField) -> Result<Complex64> {
        if !self.same_space(other) {
            return Err(Error::MeshMismatch);
        }
        let k1 = self.modes();
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..self.mesh.cells() {
            let half = 0.5 * self.mesh.width(j);
            let a = &self.coeffs[j * k1..(j + 1) * k1];
            let b = &other.coeffs[j * k1..(j + 1) * k1];
            let cell: Complex64 = a
                .iter()
                .zip(b)
                .enumerate()
                .map(|(m, (x, y))| x * y.conj() * basis::reference_mass(m))
                .sum();
            total += cell * half;
        }
        Ok(total)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.charge())
    }

    /// Discrete charge `∫_{L_f}^{L_r} |u_h|² dx`.
    pub fn charge(&self) -> f64 {
        mass_norm_sq(&self.mesh, self.degree, &self.coeffs)
    }

    /// `‖u_h - f‖²_{L²}` with an `n`-point Gauss rule per cell.
    pub fn l2_distance_sq<F>(&self, f: F, points: usize) -> Result<f64>
    where
        F: Fn(f64) -> Complex64,
    {
        let rule = GaussLegendre::new(points)?;
        let mut total = 0.0;
        for j in 0..self.mesh.cells() {
            let half = 0.5 * self.mesh.width(j);
            let mut cell = 0.0;
            for (&xi, &w) in rule.nodes().iter().zip(rule.weights()) {
                let x = self.mesh.to_physical(j, xi);
                cell += w * (self.eval_in_cell(j, xi) - f(x)).norm_sqr();
            }
            total += half * cell;
        }
        Ok(total)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &DgField, b: Complex64) -> Result<DgField> {
        if !self.same_space(other) {
            return Err(Error::MeshMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(DgField {
            mesh: self.mesh.clone(),
            degree: self.degree,
            coeffs,
        })
    }

    pub fn sub(&self, other: &DgField) -> Result<DgField> {
        let one = Complex64::new(1.0, 0.0);
        self.combine(one, other, -one)
    }

    pub fn scale(&self, a: Complex64) -> DgField {
        DgField {
            mesh: self.mesh.clone(),
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }
}

/// Mass-norm `‖v‖²_M = Σ_j Σ_m Δx_j/(2m+1) |v_{j,m}|²` of a raw coefficient
/// vector.
pub fn mass_norm_sq(mesh: &Mesh, degree: usize, coeffs: &[Complex64]) -> f64 {
    let k1 = degree + 1;
    let mut total = 0.0;
    for j in 0..mesh.cells() {
        let half = 0.5 * mesh.width(j);
        let cell: f64 = coeffs[j * k1..(j + 1) * k1]
            .iter()
            .enumerate()
            .map(|(m, c)| c.norm_sqr() * basis::reference_mass(m))
            .sum();
        total += half * cell;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::project_l2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn unit_mesh(cells: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(0.0, 1.0, cells).unwrap())
    }

    #[test]
    fn constant_field_evaluates_and_has_unit_norm() {
        let mesh = unit_mesh(5);
        let f = project_l2(|_| c(1.0), mesh, 2).unwrap();
        for &x in &[0.0, 0.13, 0.4, 0.999, 1.0] {
            let v = f.eval(x, Side::Left).unwrap();
            assert!((v - c(1.0)).norm() < 1e-14);
        }
        assert!((f.norm() - 1.0).abs() < 1e-14);
        assert!((f.charge() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn continuous_field_has_matching_traces() {
        let mesh = unit_mesh(4);
        let f = project_l2(|x| c(x), mesh, 1).unwrap();
        let l = f.eval(0.5, Side::Left).unwrap();
        let r = f.eval(0.5, Side::Right).unwrap();
        assert!((l - r).norm() < 1e-14);
        assert!((l - c(0.5)).norm() < 1e-14);
    }

    #[test]
    fn step_function_projection_jumps_at_node() {
        // Brute force: each side is the cell polynomial evaluated directly.
        let mesh = unit_mesh(4);
        let step = |x: f64| if x < 0.4 { c(0.0) } else { c(1.0) };
        let f = project_l2(step, mesh.clone(), 1).unwrap();
        let left_poly: Complex64 = f.cell(1).iter().sum();
        let right_poly = f.cell(2)[0] - f.cell(2)[1];
        let l = f.eval(0.5, Side::Left).unwrap();
        let r = f.eval(0.5, Side::Right).unwrap();
        assert_eq!(l, left_poly);
        assert_eq!(r, right_poly);
        assert!((l - r).norm() > 0.1);
        // Cell 2 is entirely in the "1" region.
        assert!((r - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn orthogonal_modes_have_zero_inner_product() {
        let mesh = unit_mesh(3);
        let mut a = DgField::zeros(mesh.clone(), 2);
        let mut b = DgField::zeros(mesh, 2);
        a.coeffs_mut()[0] = c(1.0);
        b.coeffs_mut()[1] = Complex64::new(0.0, 2.0);
        assert_eq!(a.inner(&b).unwrap(), c(0.0));
    }

    #[test]
    fn inner_product_matches_dense_quadrature() {
        let mesh = Arc::new(Mesh::from_nodes(alloc::vec![0.0, 0.1, 0.35, 0.6, 1.0]).unwrap());
        let k = 3;
        let mut state = 12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let n = mesh.cells() * (k + 1);
        let a: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
        let b: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
        let fa = DgField::from_coeffs(mesh.clone(), k, a).unwrap();
        let fb = DgField::from_coeffs(mesh.clone(), k, b).unwrap();
        let rule = GaussLegendre::new(20).unwrap();
        let mut dense = Complex64::new(0.0, 0.0);
        for j in 0..mesh.cells() {
            let (x0, x1) = mesh.bounds(j);
            let re = rule.integrate(x0, x1, |x| {
                let (cj, xi) = mesh.locate(x, Side::Left).unwrap();
                (fa.eval_in_cell(cj, xi) * fb.eval_in_cell(cj, xi).conj()).re
            });
            let im = rule.integrate(x0, x1, |x| {
                let (cj, xi) = mesh.locate(x, Side::Left).unwrap();
                (fa.eval_in_cell(cj, xi) * fb.eval_in_cell(cj, xi).conj()).im
            });
            dense += Complex64::new(re, im);
        }
        let exact = fa.inner(&fb).unwrap();
        assert!((exact - dense).norm() < 1e-12);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let a = DgField::zeros(unit_mesh(4), 1);
        let b = DgField::zeros(unit_mesh(4), 2);
        let d = DgField::zeros(unit_mesh(5), 1);
        assert_eq!(a.inner(&b), Err(Error::MeshMismatch));
        assert_eq!(a.inner(&d), Err(Error::MeshMismatch));
        let e = DgField::zeros(unit_mesh(4), 1);
        assert!(a.inner(&e).is_ok());
    }

    #[test]
    fn out_of_domain_evaluation_rejected() {
        let a = DgField::zeros(unit_mesh(4), 1);
        assert!(matches!(
            a.eval(-0.1, Side::Left),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn charge_matches_squared_norm() {
        let f = project_l2(|x| Complex64::new(libm::cos(3.0 * x), x), unit_mesh(7), 2).unwrap();
        let n = f.norm();
        assert!((f.charge() - n * n).abs() < 1e-14);
        assert!((f.inner(&f).unwrap().re - f.charge()).abs() < 1e-14);
    }
}
