//! Fourier collocation reference solver with the same midpoint time stepping.
//!
//! One step solves
//! `(I + (i/2)(Δt(Δ + Q) + ΔW̃_n)) u^{n+1} = (I - (i/2)(Δt(Δ + Q) + ΔW̃_n)) u^n`
//! on `n` equispaced nodes, applying `Δ` through the FFT and the
//! multiplications pointwise. The system is solved by BiCGSTAB, right
//! preconditioned with the Fourier-diagonal part of the operator.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{signed_frequency, Fft};
use crate::field::DgField;
use crate::linalg::{bicgstab, SolveStats};
use crate::mesh::Mesh;
use crate::noise::{IncrementField, NoiseSpec};
use crate::potential::Potential;
use crate::projection::{project_l2, project_minus};

/// Equispaced periodic collocation grid with a power-of-two node count.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    left: f64,
    length: f64,
    fft: Arc<Fft>,
    /// `λ_m²` for every FFT bin.
    lambda_sq: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(left: f64, right: f64, points: usize) -> Result<Self> {
        if !(left.is_finite() && right.is_finite()) || left >= right {
            return Err(Error::InvalidDomain(alloc::format!("need finite L_f < L_r, got [{left}, {right}]")));
        }
        let fft = Arc::new(Fft::new(points)?);
        let length = right - left;
        let lambda_sq = (0..points)
            .map(|m| {
                let l = 2.0 * PI * signed_frequency(m, points) as f64 / length;
                l * l
            })
            .collect();
        Ok(Self {
            left,
            length,
            fft,
            lambda_sq,
        })
    }

    pub fn points(&self) -> usize {
        self.fft.len()
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        self.left + self.length * j as f64 / self.points() as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points()).map(|j| self.node(j))
    }

    pub fn lambda_sq(&self) -> &[f64] {
        &self.lambda_sq
    }

    pub fn sample<F: Fn(f64) -> Complex64>(&self, f: F) -> SpectralState {
        SpectralState {
            grid: self.clone(),
            values: self.nodes().map(f).collect(),
        }
    }
}

/// Nodal values on a [`SpectralGrid`].
#[derive(Debug, Clone)]
pub struct SpectralState {
    grid: SpectralGrid,
    values: Vec<Complex64>,
}

impl SpectralState {
    pub fn from_values(grid: SpectralGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::param(
                "values",
                alloc::format!("expected {} nodal values, got {}", grid.points(), values.len()),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Unnormalized DFT coefficients.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.values.clone();
        self.grid.fft.forward(&mut s);
        s
    }

    /// `∫ |u|² dx` of the trigonometric interpolant.
    pub fn charge(&self) -> f64 {
        let n = self.grid.points() as f64;
        self.grid.length / n * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `‖u‖²_{H¹} = ∫ |u|² + |u_x|² dx` of the interpolant.
    pub fn h1_norm_sq(&self) -> f64 {
        let n = self.grid.points() as f64;
        let spec = self.spectrum();
        let sum: f64 = spec
            .iter()
            .zip(&self.grid.lambda_sq)
            .map(|(c, l)| (1.0 + l) * c.norm_sqr())
            .sum();
        self.grid.length / (n * n) * sum
    }

    /// Band-limited interpolant evaluated at `x`; the Nyquist mode enters as
    /// a cosine so the interpolant of real data stays real.
    pub fn interpolant(&self) -> Interpolant {
        let n = self.grid.points();
        let spec = self.spectrum();
        let scale = 1.0 / n as f64;
        let modes = (0..n)
            .map(|m| {
                let f = signed_frequency(m, n);
                (f, spec[m] * scale)
            })
            .collect();
        Interpolant {
            left: self.grid.left,
            length: self.grid.length,
            nyquist: (n / 2) as i64,
            modes,
        }
    }

    pub fn distance(&self, other: &SpectralState) -> Result<f64> {
        if other.grid.points() != self.grid.points() {
            return Err(Error::MeshMismatch);
        }
        let n = self.grid.points() as f64;
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok(libm::sqrt(self.grid.length / n * sum))
    }

    /// `𝒫⁻` of the interpolant onto `V_h^k`.
    pub fn restrict_to_dg(&self, mesh: Arc<Mesh>, degree: usize) -> Result<DgField> {
        let f = self.interpolant();
        project_minus(|x| f.eval(x), mesh, degree)
    }

    /// Cell-wise L² projection of the interpolant onto `V_h^k`.
    pub fn project_to_dg(&self, mesh: Arc<Mesh>, degree: usize) -> Result<DgField> {
        let f = self.interpolant();
        project_l2(|x| f.eval(x), mesh, degree)
    }
}

/// Trigonometric interpolant of a [`SpectralState`].
#[derive(Debug, Clone)]
pub struct Interpolant {
    left: f64,
    length: f64,
    nyquist: i64,
    modes: Vec<(i64, Complex64)>,
}

impl Interpolant {
    pub fn eval(&self, x: f64) -> Complex64 {
        let theta = 2.0 * PI * (x - self.left) / self.length;
        // e^{iθ} powers by recurrence from one sin/cos pair.
        let base = Complex64::from_polar(1.0, theta);
        let mut pos = Complex64::new(1.0, 0.0);
        let mut out = Complex64::new(0.0, 0.0);
        let mut by_freq: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); (self.nyquist + 1) as usize];
        for f in 0..=self.nyquist {
            by_freq[f as usize] = pos;
            if f % 32 == 31 {
                // limit recurrence drift
                pos = Complex64::from_polar(1.0, (f + 1) as f64 * theta);
            } else {
                pos *= base;
            }
        }
        for &(f, c) in &self.modes {
            let e = if f == self.nyquist {
                Complex64::new(by_freq[f as usize].re, 0.0)
            } else if f >= 0 {
                by_freq[f as usize]
            } else {
                by_freq[(-f) as usize].conj()
            };
            out += c * e;
        }
        out
    }
}

/// Exact free evolution `e^{iΔ t}`: Fourier mode `λ` gains `e^{iλ²t}`.
pub fn free_evolution(u: &SpectralState, t: f64) -> SpectralState {
    let mut spec = u.spectrum();
    for (c, l) in spec.iter_mut().zip(&u.grid.lambda_sq) {
        *c *= Complex64::from_polar(1.0, l * t);
    }
    u.grid.fft.inverse(&mut spec);
    SpectralState {
        grid: u.grid.clone(),
        values: spec,
    }
}

/// Exact solution `S(t)u_0 · e^{-i(Q t + c β(t))}` for constant `Q` and
/// constant-in-space noise of amplitude `c` driven by the scalar Brownian
/// value `beta`.
pub fn commuting_exact(
    u0: &SpectralState,
    potential: &Potential,
    noise: &NoiseSpec,
    beta: f64,
    t: f64,
) -> Result<SpectralState> {
    let q = potential
        .as_constant()
        .ok_or_else(|| Error::param("Q", "exact solution needs a constant potential"))?;
    let c = if noise.is_zero() {
        0.0
    } else {
        noise
            .constant_amplitude()
            .ok_or_else(|| Error::param("noise", "exact solution needs spatially constant noise"))?
    };
    let mut out = free_evolution(u0, t);
    let phase = Complex64::from_polar(1.0, -(q * t + c * beta));
    out.values.iter_mut().for_each(|v| *v *= phase);
    Ok(out)
}

/// Midpoint collocation stepper.
#[derive(Debug, Clone)]
pub struct SpectralSolver {
    grid: SpectralGrid,
    dt: f64,
    q: Vec<f64>,
    q_mean: f64,
    modes: usize,
    /// `e_k(x_j)`, row-major `j * modes + k`.
    noise_table: Vec<f64>,
    tol: f64,
}

impl SpectralSolver {
    pub fn new(grid: SpectralGrid, dt: f64, potential: &Potential, noise: &NoiseSpec) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        let q: Vec<f64> = grid
            .nodes()
            .map(|x| potential.eval(x, grid.left, grid.length))
            .collect();
        let q_mean = q.iter().sum::<f64>() / q.len() as f64;
        let modes = noise.modes();
        let basis = *noise.basis();
        let mut noise_table = vec![0.0; grid.points() * modes];
        for (j, x) in grid.nodes().enumerate() {
            for k in 0..modes {
                noise_table[j * modes + k] = basis.eval(k, x);
            }
        }
        Ok(Self {
            grid,
            dt,
            q,
            q_mean,
            modes,
            noise_table,
            tol: 1e-13,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-12) {
            return Err(Error::param("tol", alloc::format!("must lie in (0, 1e-12], got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn noise_values(&self, incr: &IncrementField) -> Result<Vec<f64>> {
        let c = incr.coefficients();
        if c.len() > self.modes {
            return Err(Error::param("increment", "more modes than the configured noise spectrum"));
        }
        Ok((0..self.grid.points())
            .map(|j| {
                let row = &self.noise_table[j * self.modes..(j + 1) * self.modes];
                row.iter().zip(c).map(|(e, c)| e * c).sum()
            })
            .collect())
    }

    /// `v + σ (i/2)(Δt(Δ + Q) + w) v` with `σ = ±1`.
    fn apply(&self, w: &[f64], sigma: f64, v: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        scratch.copy_from_slice(v);
        self.grid.fft.forward(scratch);
        for (c, l) in scratch.iter_mut().zip(&self.grid.lambda_sq) {
            *c *= -l;
        }
        self.grid.fft.inverse(scratch);
        let half_i = Complex64::new(0.0, 0.5 * sigma);
        for j in 0..v.len() {
            let lv = self.dt * (scratch[j] + self.q[j] * v[j]) + w[j] * v[j];
            out[j] = v[j] + half_i * lv;
        }
    }

    pub fn step(&self, u: &SpectralState, incr: &IncrementField) -> Result<(SpectralState, SolveStats)> {
        let n = self.grid.points();
        if u.grid.points() != n {
            return Err(Error::MeshMismatch);
        }
        let w = self.noise_values(incr)?;
        let w_mean = w.iter().sum::<f64>() / n as f64;
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        self.apply(&w, -1.0, &u.values, &mut rhs, &mut scratch);

        // Inverse of the Fourier-diagonal part with Q and ΔW̃ replaced by
        // their means; exact when both are constant.
        let inv_diag: Vec<Complex64> = self
            .grid
            .lambda_sq
            .iter()
            .map(|l| {
                let d = Complex64::new(1.0, 0.0)
                    + Complex64::new(0.0, 0.5) * (self.dt * (self.q_mean - l) + w_mean);
                d.inv()
            })
            .collect();
        // Rounding in `A v` alone leaves a relative residual of about
        // `ε ‖A‖`, so the stopping test never asks for less.
        let lambda_max = self.grid.lambda_sq.iter().copied().fold(0.0, f64::max);
        let q_max = self.q.iter().fold(0.0f64, |m, q| m.max(q.abs()));
        let w_max = w.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let op_norm = 1.0 + 0.5 * (self.dt * (lambda_max + q_max) + w_max);
        let tol = self.tol.max(4.0 * f64::EPSILON * op_norm);
        let fft = &self.grid.fft;
        let mut x = u.values.clone();
        let mut op_scratch = vec![Complex64::new(0.0, 0.0); n];
        let stats = bicgstab(
            |v, out| self.apply(&w, 1.0, v, out, &mut op_scratch),
            |r, z| {
                z.copy_from_slice(r);
                fft.forward(z);
                z.iter_mut().zip(&inv_diag).for_each(|(z, d)| *z *= d);
                fft.inverse(z);
            },
            &rhs,
            &mut x,
            tol,
            500,
        )?;
        Ok((
            SpectralState {
                grid: self.grid.clone(),
                values: x,
            },
            stats,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoisePath;

    fn wave(x: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * x)
    }

    #[test]
    fn stiff_step_converges_to_rounding_floor() {
        let grid = SpectralGrid::new(0.0, 1.0, 512).unwrap();
        let noise = NoiseSpec::zero(0.0, 1.0, 1).unwrap();
        let solver = SpectralSolver::new(grid.clone(), 0.05, &Potential::Cosine { amplitude: 1.0 }, &noise).unwrap();
        let u = grid.sample(wave);
        let (v, stats) = solver.step(&u, &noise.zero_increment()).unwrap();
        assert!(stats.residual < 1e-9);
        assert!((v.charge() - u.charge()).abs() < 1e-10);
    }

    #[test]
    fn charge_and_h1_of_plane_wave() {
        let grid = SpectralGrid::new(0.0, 1.0, 16).unwrap();
        let u = grid.sample(wave);
        assert!((u.charge() - 1.0).abs() < 1e-14);
        let expect = 1.0 + 4.0 * PI * PI;
        assert!((u.h1_norm_sq() - expect).abs() < 1e-11);
    }

    #[test]
    fn interpolant_reproduces_nodes_and_band_limited_functions() {
        let grid = SpectralGrid::new(-1.0, 2.0, 32).unwrap();
        let f = |x: f64| {
            let t = 2.0 * PI * (x + 1.0) / 3.0;
            Complex64::new(libm::cos(3.0 * t), libm::sin(7.0 * t)) + 0.5 * libm::cos(16.0 * t)
        };
        let u = grid.sample(f);
        let p = u.interpolant();
        for x in [-0.93, 0.0, 0.4142, 1.77] {
            assert!((p.eval(x) - f(x)).norm() < 1e-12, "{x}");
        }
        for (j, x) in grid.nodes().enumerate() {
            assert!((p.eval(x) - u.values()[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn deterministic_step_matches_cayley_factor() {
        // (1 - iΔtλ²/2) u¹ = (1 + iΔtλ²/2) u⁰ for Fourier mode λ.
        let grid = SpectralGrid::new(0.0, 1.0, 16).unwrap();
        let dt = 0.01;
        let noise = NoiseSpec::zero(0.0, 1.0, 1).unwrap();
        let solver = SpectralSolver::new(grid.clone(), dt, &Potential::default(), &noise).unwrap();
        let u0 = grid.sample(wave);
        let (u1, _) = solver.step(&u0, &noise.zero_increment()).unwrap();
        let l2 = 4.0 * PI * PI;
        let factor = Complex64::new(1.0, 0.5 * dt * l2) / Complex64::new(1.0, -0.5 * dt * l2);
        for (a, b) in u1.values().iter().zip(u0.values()) {
            assert!((a - factor * b).norm() < 1e-13);
        }
    }

    #[test]
    fn noisy_step_conserves_charge() {
        let grid = SpectralGrid::new(0.0, 1.0, 64).unwrap();
        let noise = NoiseSpec::power_law(0.0, 1.0, 32, 3.0, 1.0).unwrap();
        let solver = SpectralSolver::new(grid.clone(), 0.01, &Potential::Cosine { amplitude: 2.0 }, &noise).unwrap();
        let path = NoisePath::sample(32, 0.01, 3, 5, 0).unwrap();
        let mut u = grid.sample(|x| Complex64::from_polar(1.0, libm::cos(2.0 * PI * x)));
        let c0 = u.charge();
        for n in 0..3 {
            let (next, stats) = solver.step(&u, &path.increment(&noise, n).unwrap()).unwrap();
            assert!(stats.residual <= 1e-13);
            u = next;
        }
        assert!((u.charge() - c0).abs() / c0 < 1e-11);
    }

    #[test]
    fn commuting_case_matches_exact_solution_to_second_order() {
        let q = 1.0;
        let c = 0.5;
        let grid = SpectralGrid::new(0.0, 1.0, 16).unwrap();
        let noise = NoiseSpec::constant(0.0, 1.0, c).unwrap();
        let pot = Potential::Constant(q);
        let u0 = grid.sample(wave);
        let mut errors = Vec::new();
        for steps in [40usize, 80] {
            let dt = 0.2 / steps as f64;
            // smooth driving path β(t) = 0.3 t
            let xi = vec![0.3 * libm::sqrt(dt); steps];
            let path = NoisePath::from_normals(dt, steps, 1, 0, xi).unwrap();
            let solver = SpectralSolver::new(grid.clone(), dt, &pot, &noise).unwrap();
            let mut u = u0.clone();
            for n in 0..steps {
                u = solver.step(&u, &path.increment(&noise, n).unwrap()).unwrap().0;
            }
            let beta = path.brownian(0, steps);
            let exact = commuting_exact(&u0, &pot, &noise, beta, 0.2).unwrap();
            errors.push(u.distance(&exact).unwrap());
        }
        let rate = libm::log2(errors[0] / errors[1]);
        assert!((rate - 2.0).abs() < 0.1, "{rate}");
    }

    #[test]
    fn exact_solution_rejects_non_commuting_data() {
        let grid = SpectralGrid::new(0.0, 1.0, 8).unwrap();
        let u0 = grid.sample(wave);
        let noise = NoiseSpec::constant(0.0, 1.0, 1.0).unwrap();
        assert!(commuting_exact(&u0, &Potential::Cosine { amplitude: 1.0 }, &noise, 0.0, 1.0).is_err());
        let multi = NoiseSpec::power_law(0.0, 1.0, 3, 3.0, 1.0).unwrap();
        assert!(commuting_exact(&u0, &Potential::Constant(1.0), &multi, 0.0, 1.0).is_err());
    }

    #[test]
    fn free_evolution_is_unitary_and_rotates_modes() {
        let grid = SpectralGrid::new(0.0, 1.0, 8).unwrap();
        let u0 = grid.sample(wave);
        let u = free_evolution(&u0, 0.3);
        let phase = Complex64::from_polar(1.0, 4.0 * PI * PI * 0.3);
        for (a, b) in u.values().iter().zip(u0.values()) {
            assert!((a - phase * b).norm() < 1e-13);
        }
    }

    #[test]
    fn restriction_to_dg_is_accurate() {
        let grid = SpectralGrid::new(0.0, 1.0, 32).unwrap();
        let u = grid.sample(wave);
        let mesh = Arc::new(Mesh::uniform(0.0, 1.0, 32).unwrap());
        let dg = u.restrict_to_dg(mesh.clone(), 2).unwrap();
        let err = libm::sqrt(dg.l2_distance_sq(wave, 12).unwrap());
        assert!(err < 1e-4, "{err}");
        let dg = u.project_to_dg(mesh, 2).unwrap();
        let err2 = libm::sqrt(dg.l2_distance_sq(wave, 12).unwrap());
        assert!(err2 <= err);
    }

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::new(0.0, 1.0, 12).is_err());
        assert!(SpectralGrid::new(1.0, 0.0, 8).is_err());
    }
}
