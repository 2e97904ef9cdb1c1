//! Implicit midpoint LDG scheme.
//!
//! With `u_h = r_h + i s_h` and auxiliary `p_h = (s_h)_x`, `q_h = (r_h)_x`,
//! one step solves, for every test function in `V_h^k`,
//!
//! ```text
//! M (r^{n+1} - r^n) =  G s^{n+1/2},     M (s^{n+1} - s^n) = -G r^{n+1/2},
//! G = Δt W_a M⁻¹ W_b + Δt M_Q + M_W(ΔW̃_n)
//! ```
//!
//! where `M` is the (diagonal) Legendre mass matrix, `W_b` the weak
//! derivative producing `p_h`/`q_h` with flux `ŝ`/`r̂`, `W_a` the weak
//! derivative of `p_h`/`q_h` with flux `p̂`/`q̂`, and `M_Q`, `M_W` the
//! quadrature mass matrices weighted by `Q` and the noise increment. The
//! auxiliary variables are eliminated cell-locally through `M⁻¹`. In complex
//! form the step is the Cayley transform
//! `(M + i G/2) u^{n+1} = (M - i G/2) u^n`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{self, GaussLegendre};
use crate::error::{Error, Result};
use crate::field::{mass_norm_sq, DgField};
use crate::linalg::{bicgstab, norm2, BandedLu, BlockJacobi, BlockMatrix, SolveStats};
use crate::mesh::{Mesh, Side};
use crate::noise::{self, IncrementField, NoisePath, NoiseSpec};
use crate::potential::Potential;
use crate::projection::Projection;

/// Largest unknown count solved by direct banded factorization; above it the
/// step uses block-Jacobi preconditioned BiCGSTAB.
pub const DIRECT_SOLVE_LIMIT: usize = 4096;

/// Largest unknown count accepted by [`LdgSolver::step_operator`].
pub const STEP_OPERATOR_LIMIT: usize = 1024;

/// Choice of one-sided traces for the numerical fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxOrientation {
    /// `p̂ = p⁺, r̂ = r⁻, q̂ = q⁺, ŝ = s⁻`.
    #[default]
    Alternating,
    /// `p̂ = p⁻, r̂ = r⁺, q̂ = q⁻, ŝ = s⁺`.
    Mirrored,
    /// `p̂ = p⁻, r̂ = r⁻, q̂ = q⁻, ŝ = s⁻`; not charge conserving, kept as a
    /// negative control.
    SameSide,
}

impl FluxOrientation {
    /// Sides of `(p̂, q̂)` and `(ŝ, r̂)`.
    fn sides(self) -> (Side, Side) {
        match self {
            FluxOrientation::Alternating => (Side::Right, Side::Left),
            FluxOrientation::Mirrored => (Side::Left, Side::Right),
            FluxOrientation::SameSide => (Side::Left, Side::Left),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub mesh: Arc<Mesh>,
    pub degree: usize,
    pub dt: f64,
    pub steps: usize,
    pub flux: FluxOrientation,
    pub potential: Potential,
    pub noise: NoiseSpec,
    pub lin_tol: f64,
    pub initial_projection: Projection,
    pub direct_limit: usize,
}

impl SchemeConfig {
    pub fn new(mesh: Arc<Mesh>, degree: usize, dt: f64, t_final: f64, noise: NoiseSpec) -> Result<Self> {
        if degree < 1 {
            return Err(Error::param("k", "polynomial degree must be at least 1"));
        }
        noise::kappa(dt)?;
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::param("t_final", "must be finite and non-negative"));
        }
        let ratio = t_final / dt;
        let steps = libm::round(ratio);
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::param(
                "dt",
                alloc::format!("T/Δt = {ratio} is not an integer step count"),
            ));
        }
        if (noise.basis().left() - mesh.left()).abs() > 1e-12 * mesh.length()
            || (noise.basis().length() - mesh.length()).abs() > 1e-12 * mesh.length()
        {
            return Err(Error::InvalidDomain("noise basis and mesh cover different domains".into()));
        }
        Ok(Self {
            mesh,
            degree,
            dt,
            steps: steps as usize,
            flux: FluxOrientation::default(),
            potential: Potential::default(),
            noise,
            lin_tol: 1e-12,
            initial_projection: Projection::default(),
            direct_limit: DIRECT_SOLVE_LIMIT,
        })
    }

    pub fn with_flux(mut self, flux: FluxOrientation) -> Self {
        self.flux = flux;
        self
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.initial_projection = projection;
        self
    }

    pub fn with_direct_limit(mut self, unknowns: usize) -> Self {
        self.direct_limit = unknowns;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-10) {
            return Err(Error::param("lin_tol", alloc::format!("must lie in (0, 1e-10], got {tol}")));
        }
        self.lin_tol = tol;
        Ok(self)
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn unknowns(&self) -> usize {
        self.mesh.cells() * (self.degree + 1)
    }
}

/// Linear system `A u^{n+1} = b` of one step, in coefficient space.
#[derive(Debug, Clone)]
pub struct StepSystem {
    pub matrix: BlockMatrix<Complex64>,
    pub rhs: Vec<Complex64>,
}

impl StepSystem {
    /// Solves to relative residual `tol`: banded LU up to `direct_limit`
    /// unknowns, preconditioned BiCGSTAB above.
    pub fn solve(&self, tol: f64, direct_limit: usize, guess: &[Complex64]) -> Result<(Vec<Complex64>, SolveStats)> {
        let n = self.matrix.dim();
        let bnorm = norm2(&self.rhs);
        if bnorm == 0.0 {
            return Ok((vec![Complex64::new(0.0, 0.0); n], SolveStats { iterations: 0, residual: 0.0 }));
        }
        if n <= direct_limit {
            let lu = BandedLu::factor(&self.matrix)?;
            let mut x = lu.solve(&self.rhs);
            let mut residual = self.residual(&x, bnorm);
            let mut iterations = 1;
            // Iterative refinement when the direct solve alone misses `tol`.
            while residual > tol && iterations < 4 {
                let ax = self.matrix.matvec(&x);
                let r: Vec<Complex64> = self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
                let d = lu.solve(&r);
                x.iter_mut().zip(&d).for_each(|(x, d)| *x += d);
                residual = self.residual(&x, bnorm);
                iterations += 1;
            }
            if residual > tol {
                return Err(Error::NoConvergence { iterations, residual });
            }
            Ok((x, SolveStats { iterations, residual }))
        } else {
            let pre = BlockJacobi::new(&self.matrix)?;
            let mut x = guess.to_vec();
            let stats = bicgstab(
                |v, out| self.matrix.matvec_into(v, out),
                |r, z| pre.apply(r, z),
                &self.rhs,
                &mut x,
                tol,
                20 * n.max(50),
            )?;
            Ok((x, stats))
        }
    }

    fn residual(&self, x: &[Complex64], bnorm: f64) -> f64 {
        let ax = self.matrix.matvec(x);
        libm::sqrt(ax.iter().zip(&self.rhs).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>()) / bnorm
    }
}

/// Per-step diagnostics of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<DgField>,
    pub charges: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DgField {
        self.states.last().expect("trajectory holds u_0")
    }

    /// `max_n |Q_{n+1} - Q_n| / Q_0`.
    pub fn max_step_drift(&self) -> f64 {
        relative_step_drift(&self.charges)
    }

    /// `max_n |Q_n - Q_0| / Q_0`.
    pub fn max_cumulative_drift(&self) -> f64 {
        relative_cumulative_drift(&self.charges)
    }
}

pub fn relative_step_drift(charges: &[f64]) -> f64 {
    let c0 = charges.first().copied().unwrap_or(0.0);
    if c0 == 0.0 {
        return 0.0;
    }
    charges.windows(2).map(|w| (w[1] - w[0]).abs() / c0).fold(0.0, f64::max)
}

pub fn relative_cumulative_drift(charges: &[f64]) -> f64 {
    let c0 = charges.first().copied().unwrap_or(0.0);
    if c0 == 0.0 {
        return 0.0;
    }
    charges.iter().map(|c| (c - c0).abs() / c0).fold(0.0, f64::max)
}

/// `∫ |u_h|² dx`.
pub fn discrete_charge(u: &DgField) -> f64 {
    u.charge()
}

/// Weak derivative `W^σ`: `(W^σ v)_n = -∫ v (φ_n)_x dx + v̂ φ_n⁻|_{j+1/2} - v̂ φ_n⁺|_{j-1/2}`
/// with `v̂ = v^σ`.
pub fn weak_derivative(cells: usize, degree: usize, side: Side) -> BlockMatrix<f64> {
    let b = degree + 1;
    let mut w = BlockMatrix::new(cells, b);
    let mut diag = vec![0.0; b * b];
    let mut right = vec![0.0; b * b];
    let mut left = vec![0.0; b * b];
    for n in 0..b {
        let sign_n = basis::left_endpoint_value(n);
        for m in 0..b {
            let sign_m = basis::left_endpoint_value(m);
            diag[n * b + m] -= basis::derivative_moment(m, n);
            match side {
                Side::Left => {
                    diag[n * b + m] += 1.0;
                    left[n * b + m] -= sign_n;
                }
                Side::Right => {
                    right[n * b + m] += sign_m;
                    diag[n * b + m] -= sign_n * sign_m;
                }
            }
        }
    }
    for j in 0..cells {
        w.add_block(j, j, &diag);
        match side {
            Side::Left => w.add_block(j, (j + cells - 1) % cells, &left),
            Side::Right => w.add_block(j, (j + 1) % cells, &right),
        }
    }
    w
}

/// Precomputed operators of the scheme on one mesh.
#[derive(Debug, Clone)]
pub struct LdgSolver {
    cfg: SchemeConfig,
    mass: Vec<f64>,
    /// `Δt (W_a M⁻¹ W_b + M_Q)`.
    static_part: BlockMatrix<f64>,
    rule: GaussLegendre,
    /// `P_m(ξ_q)`, row-major `q * (k+1) + m`.
    basis_table: Vec<f64>,
    /// `e_k(x_{j,q})`, row-major `(j * n_q + q) * modes + k`.
    noise_table: Vec<f64>,
}

impl LdgSolver {
    pub fn new(cfg: SchemeConfig) -> Result<Self> {
        let mesh = cfg.mesh.clone();
        let cells = mesh.cells();
        let k1 = cfg.degree + 1;
        let mass: Vec<f64> = (0..cells)
            .flat_map(|j| {
                let h = mesh.width(j);
                (0..k1).map(move |m| h / (2 * m + 1) as f64)
            })
            .collect();
        let (outer, inner) = cfg.flux.sides();
        let w_outer = weak_derivative(cells, cfg.degree, outer);
        let mut w_inner = weak_derivative(cells, cfg.degree, inner);
        // M⁻¹ W_inner, scaling each row by the inverse mass.
        let inv_mass = {
            let mut d = BlockMatrix::new(cells, k1);
            for j in 0..cells {
                let mut blk = vec![0.0; k1 * k1];
                for m in 0..k1 {
                    blk[m * k1 + m] = 1.0 / mass[j * k1 + m];
                }
                d.add_block(j, j, &blk);
            }
            d
        };
        w_inner = inv_mass.mul(&w_inner);
        let stiffness = w_outer.mul(&w_inner);

        let rule = GaussLegendre::new(basis::quadrature_points(cfg.degree))?;
        let nq = rule.len();
        let mut basis_table = vec![0.0; nq * k1];
        for (q, &xi) in rule.nodes().iter().enumerate() {
            basis::fill_legendre(xi, &mut basis_table[q * k1..(q + 1) * k1]);
        }
        let (left, length) = (mesh.left(), mesh.length());
        let q_values: Vec<f64> = (0..cells)
            .flat_map(|j| {
                let mesh = &mesh;
                let potential = &cfg.potential;
                rule.nodes()
                    .iter()
                    .map(move |&xi| potential.eval(mesh.to_physical(j, xi), left, length))
            })
            .collect();
        let solver_partial = Self {
            cfg: cfg.clone(),
            mass,
            static_part: BlockMatrix::new(cells, k1),
            rule,
            basis_table,
            noise_table: Vec::new(),
        };
        let potential_mass = solver_partial.weighted_mass(&q_values);
        let static_part = stiffness.plus(&potential_mass).scaled(cfg.dt);

        let modes = cfg.noise.modes();
        let basis_fn = *cfg.noise.basis();
        let mut noise_table = vec![0.0; cells * nq * modes];
        for j in 0..cells {
            for (q, &xi) in solver_partial.rule.nodes().iter().enumerate() {
                let x = mesh.to_physical(j, xi);
                for k in 0..modes {
                    noise_table[(j * nq + q) * modes + k] = basis_fn.eval(k, x);
                }
            }
        }
        Ok(Self {
            static_part,
            noise_table,
            ..solver_partial
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.cfg.mesh
    }

    pub fn mass_diagonal(&self) -> &[f64] {
        &self.mass
    }

    /// Block-diagonal `∫_{I_j} w φ_n φ_m dx` from values of `w` at the
    /// quadrature nodes, `values[j * n_q + q]`.
    fn weighted_mass(&self, values: &[f64]) -> BlockMatrix<f64> {
        let mesh = &self.cfg.mesh;
        let k1 = self.cfg.degree + 1;
        let nq = self.rule.len();
        let mut out = BlockMatrix::new(mesh.cells(), k1);
        let mut blk = vec![0.0; k1 * k1];
        for j in 0..mesh.cells() {
            let half = 0.5 * mesh.width(j);
            blk.iter_mut().for_each(|v| *v = 0.0);
            for (q, &w) in self.rule.weights().iter().enumerate() {
                let wv = w * half * values[j * nq + q];
                if wv == 0.0 {
                    continue;
                }
                let p = &self.basis_table[q * k1..(q + 1) * k1];
                for n in 0..k1 {
                    for m in 0..k1 {
                        blk[n * k1 + m] += wv * p[n] * p[m];
                    }
                }
            }
            out.add_block(j, j, &blk);
        }
        out
    }

    /// `ΔW̃_n` at every quadrature node.
    fn increment_values(&self, incr: &IncrementField) -> Vec<f64> {
        let modes = self.cfg.noise.modes();
        let coeffs = incr.coefficients();
        let points = self.noise_table.len() / modes.max(1);
        (0..points)
            .map(|p| {
                let row = &self.noise_table[p * modes..(p + 1) * modes];
                row.iter().zip(coeffs).map(|(e, c)| e * c).sum()
            })
            .collect()
    }

    /// Real symmetric (for conservative fluxes) `G` of the current step.
    pub fn step_generator(&self, incr: &IncrementField) -> Result<BlockMatrix<f64>> {
        if incr.coefficients().len() > self.cfg.noise.modes() {
            return Err(Error::param("increment", "more modes than the configured noise spectrum"));
        }
        if incr.is_zero() {
            return Ok(self.static_part.clone());
        }
        let noise_mass = self.weighted_mass(&self.increment_values(incr));
        Ok(self.static_part.plus(&noise_mass))
    }

    fn cayley_pair(&self, incr: &IncrementField) -> Result<(BlockMatrix<Complex64>, BlockMatrix<Complex64>)> {
        let g = self.step_generator(incr)?;
        let k1 = self.cfg.degree + 1;
        let mut mass = BlockMatrix::new(self.cfg.mesh.cells(), k1);
        for j in 0..self.cfg.mesh.cells() {
            let mut blk = vec![Complex64::new(0.0, 0.0); k1 * k1];
            for m in 0..k1 {
                blk[m * k1 + m] = Complex64::new(self.mass[j * k1 + m], 0.0);
            }
            mass.add_block(j, j, &blk);
        }
        let half_ig = g.map(|v| Complex64::new(0.0, 0.5 * v));
        let lhs = mass.plus(&half_ig);
        let rhs = mass.plus(&half_ig.scaled(Complex64::new(-1.0, 0.0)));
        Ok((lhs, rhs))
    }

    pub fn assemble_step(&self, u_n: &DgField, incr: &IncrementField) -> Result<StepSystem> {
        self.check_field(u_n)?;
        let (lhs, rhs_op) = self.cayley_pair(incr)?;
        let rhs = rhs_op.matvec(u_n.coeffs());
        Ok(StepSystem { matrix: lhs, rhs })
    }

    pub fn step(&self, u_n: &DgField, incr: &IncrementField) -> Result<(DgField, SolveStats)> {
        let system = self.assemble_step(u_n, incr)?;
        let (x, stats) = system.solve(self.cfg.lin_tol, self.cfg.direct_limit, u_n.coeffs())?;
        Ok((DgField::from_coeffs(self.cfg.mesh.clone(), self.cfg.degree, x)?, stats))
    }

    /// Dense `A` with `coeffs(u^{n+1}) = A · coeffs(u^n)`, row-major.
    pub fn step_operator(&self, incr: &IncrementField) -> Result<Vec<Complex64>> {
        let n = self.cfg.unknowns();
        if n > STEP_OPERATOR_LIMIT {
            return Err(Error::TooLarge {
                unknowns: n,
                limit: STEP_OPERATOR_LIMIT,
            });
        }
        let (lhs, rhs) = self.cayley_pair(incr)?;
        let lu = BandedLu::factor(&lhs)?;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for col in 0..n {
            e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            e[col] = Complex64::new(1.0, 0.0);
            let column = lu.solve(&rhs.matvec(&e));
            for row in 0..n {
                out[row * n + col] = column[row];
            }
        }
        Ok(out)
    }

    /// Mass norm `‖v‖_M`: L² norm of the field with coefficients `v`.
    pub fn mass_norm(&self, v: &[Complex64]) -> f64 {
        libm::sqrt(mass_norm_sq(&self.cfg.mesh, self.cfg.degree, v))
    }

    pub fn project_initial<F: Fn(f64) -> Complex64>(&self, f: F) -> Result<DgField> {
        self.cfg
            .initial_projection
            .apply(f, self.cfg.mesh.clone(), self.cfg.degree)
    }

    fn check_field(&self, u: &DgField) -> Result<()> {
        if u.degree() != self.cfg.degree
            || !(Arc::ptr_eq(u.mesh(), &self.cfg.mesh) || **u.mesh() == *self.cfg.mesh)
        {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    fn check_path(&self, path: &NoisePath) -> Result<()> {
        if self.cfg.steps == 0 {
            return Ok(());
        }
        if path.steps() < self.cfg.steps || (path.dt() - self.cfg.dt).abs() > 1e-12 * self.cfg.dt {
            return Err(Error::param(
                "path",
                alloc::format!(
                    "path has {} steps of {}, scheme needs {} of {}",
                    path.steps(),
                    path.dt(),
                    self.cfg.steps,
                    self.cfg.dt
                ),
            ));
        }
        Ok(())
    }

    /// Full trajectory `u_h^0, …, u_h^N` with per-step charge log.
    pub fn run(&self, path: &NoisePath, u0: DgField) -> Result<Trajectory> {
        self.check_field(&u0)?;
        self.check_path(path)?;
        let mut traj = Trajectory {
            dt: self.cfg.dt,
            charges: vec![u0.charge()],
            residuals: vec![0.0],
            iterations: vec![0],
            states: vec![u0],
        };
        for n in 0..self.cfg.steps {
            let incr = path.increment(&self.cfg.noise, n).map_err(|e| e.at_step(n))?;
            let (next, stats) = self
                .step(traj.states.last().unwrap(), &incr)
                .map_err(|e| e.at_step(n))?;
            let charge = next.charge();
            if !charge.is_finite() {
                return Err(Error::param("state", "charge is not finite").at_step(n));
            }
            traj.charges.push(charge);
            traj.residuals.push(stats.residual);
            traj.iterations.push(stats.iterations);
            traj.states.push(next);
        }
        Ok(traj)
    }

    /// Like [`run`](Self::run) but keeps only the final state and the charges.
    pub fn run_final(&self, path: Option<&NoisePath>, u0: DgField) -> Result<(DgField, Vec<f64>)> {
        self.check_field(&u0)?;
        if let Some(p) = path {
            self.check_path(p)?;
        }
        let zero = self.cfg.noise.zero_increment();
        let mut u = u0;
        let mut charges = Vec::with_capacity(self.cfg.steps + 1);
        charges.push(u.charge());
        for n in 0..self.cfg.steps {
            let (next, _) = match path {
                Some(p) => {
                    let incr = p.increment(&self.cfg.noise, n).map_err(|e| e.at_step(n))?;
                    self.step(&u, &incr)
                }
                None => self.step(&u, &zero),
            }
            .map_err(|e| e.at_step(n))?;
            charges.push(next.charge());
            u = next;
        }
        Ok((u, charges))
    }
}
