//! Spectral Q-Wiener noise on the periodic domain.
//!
//! `W(t, x) = Σ_k β_k(t) μ_k e_k(x)` with the real Fourier basis
//! `e_0 = 1/√L`, `e_{2m-1} = √(2/L) cos(2πm(x-L_f)/L)`,
//! `e_{2m} = √(2/L) sin(2πm(x-L_f)/L)` and `φ` diagonal with eigenvalues `μ_k`.
//! Each step draws `ξ_{k,n} ~ N(0,1)` and uses the clamped value
//! `ζ_{k,n} = clamp(ξ_{k,n}, -κ, κ)`, `κ = √(4|ln Δt|)`, in the increment
//! `ΔW̃_n(x) = Σ_k √Δt ζ_{k,n} μ_k e_k(x)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Real orthonormal Fourier basis of `L²(L_f, L_f + L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierBasis {
    left: f64,
    length: f64,
}

impl FourierBasis {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite()) || left >= right {
            return Err(Error::InvalidDomain(format!(
                "need finite L_f < L_r, got [{left}, {right}]"
            )));
        }
        Ok(Self {
            left,
            length: right - left,
        })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Integer frequency `m` of basis function `e_k`.
    #[inline]
    pub fn frequency(k: usize) -> usize {
        (k + 1) / 2
    }

    /// Angular wavenumber `2πm/L` of `e_k`.
    #[inline]
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * Self::frequency(k) as f64 / self.length
    }

    pub fn eval(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            return 1.0 / libm::sqrt(self.length);
        }
        let arg = self.wavenumber(k) * (x - self.left);
        let scale = libm::sqrt(2.0 / self.length);
        if k % 2 == 1 {
            scale * libm::cos(arg)
        } else {
            scale * libm::sin(arg)
        }
    }
}

/// Spectral description of `φ` on the basis `e_k`, `k < modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    basis: FourierBasis,
    eigenvalues: Vec<f64>,
    decay: Option<f64>,
}

impl NoiseSpec {
    /// `μ_k = amplitude · (1 + k)^{-decay}` for `k < modes`.
    pub fn power_law(left: f64, right: f64, modes: usize, decay: f64, amplitude: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::param("modes", "need at least one noise mode"));
        }
        if !(decay.is_finite() && decay >= 0.0) {
            return Err(Error::param("decay", format!("must be finite and non-negative, got {decay}")));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::param(
                "amplitude",
                format!("must be finite and non-negative, got {amplitude}"),
            ));
        }
        let eigenvalues = (0..modes)
            .map(|k| amplitude * libm::pow(1.0 + k as f64, -decay))
            .collect();
        Ok(Self {
            basis: FourierBasis::new(left, right)?,
            eigenvalues,
            decay: Some(decay),
        })
    }

    /// Spatially constant noise `W(t, x) = c β_0(t)`.
    pub fn constant(left: f64, right: f64, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::param("amplitude", "must be finite"));
        }
        let basis = FourierBasis::new(left, right)?;
        Ok(Self {
            basis,
            eigenvalues: vec![c * libm::sqrt(basis.length())],
            decay: None,
        })
    }

    /// `φ = 0` with `modes` (silent) modes.
    pub fn zero(left: f64, right: f64, modes: usize) -> Result<Self> {
        Self::from_eigenvalues(left, right, vec![0.0; modes.max(1)])
    }

    pub fn from_eigenvalues(left: f64, right: f64, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::param("modes", "need at least one noise mode"));
        }
        if eigenvalues.iter().any(|m| !m.is_finite()) {
            return Err(Error::param("eigenvalues", "must be finite"));
        }
        Ok(Self {
            basis: FourierBasis::new(left, right)?,
            eigenvalues,
            decay: None,
        })
    }

    pub fn basis(&self) -> &FourierBasis {
        &self.basis
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn decay(&self) -> Option<f64> {
        self.decay
    }

    pub fn is_zero(&self) -> bool {
        self.eigenvalues.iter().all(|&m| m == 0.0)
    }

    /// `Some(c)` when only the constant mode is active, with `φe_0 ≡ c`.
    pub fn constant_amplitude(&self) -> Option<f64> {
        if self.eigenvalues[1..].iter().any(|&m| m != 0.0) {
            return None;
        }
        Some(self.eigenvalues[0] / libm::sqrt(self.basis.length()))
    }

    /// Highest active integer frequency.
    pub fn max_frequency(&self) -> usize {
        self.eigenvalues
            .iter()
            .rposition(|&m| m != 0.0)
            .map_or(0, FourierBasis::frequency)
    }

    /// Partial sum `Σ_{k<terms} μ_k² (1 + k²)³`, the finite proxy for
    /// `‖φ‖²` in `𝓛₂(L²; H³)`.
    pub fn h3_proxy(&self, terms: usize) -> f64 {
        self.eigenvalues
            .iter()
            .take(terms)
            .enumerate()
            .map(|(k, m)| {
                let w = 1.0 + (k * k) as f64;
                m * m * w * w * w
            })
            .sum()
    }

    /// `Σ_k μ_k² ‖e_k‖²_{H¹}`.
    pub fn h1_trace(&self) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let lam = self.basis.wavenumber(k);
                m * m * (1.0 + lam * lam)
            })
            .sum()
    }

    /// `E‖ΔW̃_n - ΔW_n‖²_{H¹} = Δt · E[(ζ-ξ)²] · Σ_k μ_k² ‖e_k‖²_{H¹}`.
    pub fn truncation_h1_moment(&self, dt: f64) -> Result<f64> {
        Ok(dt * truncation_tail_moment(kappa(dt)?) * self.h1_trace())
    }

    /// Increment field built directly from per-mode values `ζ_k` and `Δt`.
    pub fn increment(&self, dt: f64, zeta: &[f64]) -> IncrementField {
        let sqrt_dt = libm::sqrt(dt);
        let coefficients = self
            .eigenvalues
            .iter()
            .zip(zeta)
            .map(|(m, z)| sqrt_dt * z * m)
            .collect();
        IncrementField {
            basis: self.basis,
            coefficients,
        }
    }

    pub fn zero_increment(&self) -> IncrementField {
        IncrementField {
            basis: self.basis,
            coefficients: vec![0.0; self.modes()],
        }
    }
}

/// `κ = √(4 |ln Δt|)`.
pub fn kappa(dt: f64) -> Result<f64> {
    if !(dt > 0.0 && dt < 1.0) {
        return Err(Error::param(
            "dt",
            format!("truncation level κ = √(4|ln Δt|) needs 0 < Δt < 1, got {dt}"),
        ));
    }
    Ok(libm::sqrt(4.0 * libm::log(dt).abs()))
}

/// `ζ^κ`: clamp of `ξ` to `[-κ, κ]`.
#[inline]
pub fn truncate(xi: f64, kappa: f64) -> f64 {
    if xi > kappa {
        kappa
    } else if xi < -kappa {
        -kappa
    } else {
        xi
    }
}

/// Sampled Wiener increments for `steps` steps of size `dt`.
///
/// Stores, per step `n` and mode `k` (row-major, `n * modes + k`), the
/// standard normal `ξ`, its clamp `ζ`, and the untruncated Brownian increment
/// `β_k(t_{n+1}) - β_k(t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    dt: f64,
    steps: usize,
    modes: usize,
    seed: u64,
    sample: u64,
    kappa: f64,
    xi: Vec<f64>,
    zeta: Vec<f64>,
    increments: Vec<f64>,
}

fn stream_rng(seed: u64, sample: u64, mode: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&sample.to_le_bytes());
    key[16..24].copy_from_slice(b"sldgwien");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(mode as u64);
    rng
}

impl NoisePath {
    /// Draws a path with one deterministic stream per `(seed, sample, mode)`.
    pub fn sample(modes: usize, dt: f64, steps: usize, seed: u64, sample: u64) -> Result<Self> {
        let kappa = kappa(dt)?;
        if steps == 0 {
            return Err(Error::param("steps", "need at least one step"));
        }
        if modes == 0 {
            return Err(Error::param("modes", "need at least one noise mode"));
        }
        let mut xi = vec![0.0; steps * modes];
        for k in 0..modes {
            let mut rng = stream_rng(seed, sample, k);
            for n in 0..steps {
                xi[n * modes + k] = StandardNormal.sample(&mut rng);
            }
        }
        let sqrt_dt = libm::sqrt(dt);
        let increments = xi.iter().map(|x| sqrt_dt * x).collect();
        Ok(Self::assemble(dt, steps, modes, seed, sample, kappa, xi, increments))
    }

    /// Rebuilds a path from stored normals (e.g. a file dump).
    pub fn from_normals(dt: f64, steps: usize, modes: usize, seed: u64, xi: Vec<f64>) -> Result<Self> {
        let kappa = kappa(dt)?;
        if steps == 0 || modes == 0 || xi.len() != steps * modes {
            return Err(Error::param(
                "normals",
                format!("expected {steps}×{modes} = {} values, got {}", steps * modes, xi.len()),
            ));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("normals", "must be finite"));
        }
        let sqrt_dt = libm::sqrt(dt);
        let increments = xi.iter().map(|x| sqrt_dt * x).collect();
        Ok(Self::assemble(dt, steps, modes, seed, 0, kappa, xi, increments))
    }

    /// Paths for several step counts over `[0, t_final]` sharing one
    /// Brownian motion.
    ///
    /// Each mode is sampled exactly on the union of all time grids; every
    /// returned path's increments are differences of that common motion.
    pub fn sample_coupled(
        modes: usize,
        t_final: f64,
        step_counts: &[usize],
        seed: u64,
        sample: u64,
    ) -> Result<Vec<Self>> {
        if step_counts.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::param("t_final", "must be positive"));
        }
        if modes == 0 {
            return Err(Error::param("modes", "need at least one noise mode"));
        }
        for &n in step_counts {
            if n == 0 {
                return Err(Error::param("steps", "need at least one step"));
            }
            kappa(t_final / n as f64)?;
        }
        // Union grid as reduced fractions i/N, ordered exactly.
        let mut grid: Vec<(u64, u64)> = Vec::new();
        for &n in step_counts {
            for i in 0..=n as u64 {
                let g = gcd(i, n as u64);
                grid.push((i / g, n as u64 / g));
            }
        }
        grid.sort_by(|a, b| (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128)));
        grid.dedup();
        let times: Vec<f64> = grid
            .iter()
            .map(|&(i, n)| t_final * i as f64 / n as f64)
            .collect();
        let position = |i: u64, n: u64| -> usize {
            let g = gcd(i, n);
            let key = (i / g, n / g);
            grid.binary_search_by(|p| (p.0 as u128 * key.1 as u128).cmp(&(key.0 as u128 * p.1 as u128)))
                .expect("grid point present")
        };
        // β_k on the union grid.
        let mut brownian = vec![0.0; times.len() * modes];
        for k in 0..modes {
            let mut rng = stream_rng(seed, sample, k);
            let mut b = 0.0;
            for t in 1..times.len() {
                let z: f64 = StandardNormal.sample(&mut rng);
                b += libm::sqrt(times[t] - times[t - 1]) * z;
                brownian[t * modes + k] = b;
            }
        }
        step_counts
            .iter()
            .map(|&n| {
                let dt = t_final / n as f64;
                let sqrt_dt = libm::sqrt(dt);
                let mut increments = vec![0.0; n * modes];
                for step in 0..n {
                    let a = position(step as u64, n as u64);
                    let b = position(step as u64 + 1, n as u64);
                    for k in 0..modes {
                        increments[step * modes + k] = brownian[b * modes + k] - brownian[a * modes + k];
                    }
                }
                let xi = increments.iter().map(|w| w / sqrt_dt).collect();
                Ok(Self::assemble(dt, n, modes, seed, sample, kappa(dt)?, xi, increments))
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dt: f64,
        steps: usize,
        modes: usize,
        seed: u64,
        sample: u64,
        kappa: f64,
        xi: Vec<f64>,
        increments: Vec<f64>,
    ) -> Self {
        let zeta = xi.iter().map(|&x| truncate(x, kappa)).collect();
        Self {
            dt,
            steps,
            modes,
            seed,
            sample,
            kappa,
            xi,
            zeta,
            increments,
        }
    }

    /// Coarse path with step `factor·Δt`: normals `ξ' = Σ ξ / √factor` over
    /// each block of fine steps, truncated again with `κ(factor·Δt)`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::param(
                "factor",
                format!("{factor} does not divide the {} fine steps", self.steps),
            ));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let steps = self.steps / factor;
        let dt = self.dt * factor as f64;
        let kappa = kappa(dt)?;
        let modes = self.modes;
        let scale = 1.0 / libm::sqrt(factor as f64);
        let mut xi = vec![0.0; steps * modes];
        let mut increments = vec![0.0; steps * modes];
        for n in 0..steps {
            for k in 0..modes {
                let mut s = 0.0;
                let mut w = 0.0;
                for i in 0..factor {
                    let idx = (n * factor + i) * modes + k;
                    s += self.xi[idx];
                    w += self.increments[idx];
                }
                xi[n * modes + k] = s * scale;
                increments[n * modes + k] = w;
            }
        }
        Ok(Self::assemble(dt, steps, modes, self.seed, self.sample, kappa, xi, increments))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_id(&self) -> u64 {
        self.sample
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn normals(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi(&self, k: usize, n: usize) -> f64 {
        self.xi[n * self.modes + k]
    }

    pub fn zeta(&self, k: usize, n: usize) -> f64 {
        self.zeta[n * self.modes + k]
    }

    pub fn truncated_step(&self, n: usize) -> &[f64] {
        &self.zeta[n * self.modes..(n + 1) * self.modes]
    }

    /// Untruncated `β_k(t_{n+1}) - β_k(t_n)`.
    pub fn brownian_increment(&self, k: usize, n: usize) -> f64 {
        self.increments[n * self.modes + k]
    }

    /// `β_k(t_n)`, summed in step order.
    pub fn brownian(&self, k: usize, n: usize) -> f64 {
        (0..n).map(|s| self.brownian_increment(k, s)).sum()
    }

    /// `ΔW̃_n` for the given noise spectrum.
    pub fn increment(&self, spec: &NoiseSpec, n: usize) -> Result<IncrementField> {
        if n >= self.steps {
            return Err(Error::param(
                "step",
                format!("step {n} out of range for a {}-step path", self.steps),
            ));
        }
        if spec.modes() > self.modes {
            return Err(Error::param(
                "modes",
                format!("spectrum has {} modes, path only {}", spec.modes(), self.modes),
            ));
        }
        Ok(spec.increment(self.dt, self.truncated_step(n)))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Truncated increment `ΔW̃_n(x) = Σ_k c_k e_k(x)` with real
/// `c_k = √Δt ζ_k μ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementField {
    basis: FourierBasis,
    coefficients: Vec<f64>,
}

impl IncrementField {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn basis(&self) -> &FourierBasis {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, c)| c * self.basis.eval(k, x))
            .sum()
    }
}

fn normal_pdf(y: f64) -> f64 {
    libm::exp(-0.5 * y * y) / libm::sqrt(2.0 * PI)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Gaussian tail integral `2 ∫_κ^∞ g(y - κ) φ(y) dy` with the factor
/// `φ(κ)` pulled out so the integrand stays O(1).
fn tail_integral<G: Fn(f64) -> f64>(kappa: f64, g: G) -> f64 {
    let h = |t: f64| g(t) * libm::exp(-kappa * t - 0.5 * t * t);
    let upper = 40.0 / (1.0 + kappa);
    2.0 * normal_pdf(kappa) * adaptive_simpson(&h, 0.0, upper.max(12.0), 1e-15)
}

/// `E[(ζ - ξ)²] = 2 ∫_κ^∞ (y - κ)² φ(y) dy` for `ξ ~ N(0, 1)`.
pub fn truncation_tail_moment(kappa: f64) -> f64 {
    tail_integral(kappa, |t| t * t)
}

/// `E[(ζ² - ξ²)²] = 2 ∫_κ^∞ (y² - κ²)² φ(y) dy`.
pub fn truncation_square_tail_moment(kappa: f64) -> f64 {
    tail_integral(kappa, |t| {
        let v = t * (2.0 * kappa + t);
        v * v
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_values() {
        assert!((kappa(libm::exp(-1.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!((kappa(libm::exp(-4.0)).unwrap() - 4.0).abs() < 1e-15);
        // √(4 ln 100) evaluated in high precision: 4.291932052…
        assert!((kappa(0.01).unwrap() - 4.291_932_052_0).abs() < 1e-9);
        assert!(kappa(1.0).is_err());
        assert!(kappa(1.5).is_err());
        assert!(kappa(0.0).is_err());
        assert!(kappa(-0.1).is_err());
    }

    #[test]
    fn truncation_clamps() {
        assert_eq!(truncate(5.0, 2.0), 2.0);
        assert_eq!(truncate(-5.0, 2.0), -2.0);
        assert_eq!(truncate(0.3, 2.0), 0.3);
        assert_eq!(truncate(2.0, 2.0), 2.0);
    }

    #[test]
    fn sampling_is_deterministic_and_clamped() {
        let a = NoisePath::sample(8, 0.01, 50, 7, 3).unwrap();
        let b = NoisePath::sample(8, 0.01, 50, 7, 3).unwrap();
        assert_eq!(a, b);
        let c = NoisePath::sample(8, 0.01, 50, 7, 4).unwrap();
        assert_ne!(a.normals(), c.normals());
        for n in 0..50 {
            for k in 0..8 {
                assert!(a.zeta(k, n).abs() <= a.kappa());
                if a.xi(k, n).abs() <= a.kappa() {
                    assert_eq!(a.zeta(k, n), a.xi(k, n));
                }
            }
        }
    }

    #[test]
    fn modes_use_independent_streams() {
        // Adding modes does not change the draws of existing ones.
        let a = NoisePath::sample(2, 0.1, 10, 1, 0).unwrap();
        let b = NoisePath::sample(5, 0.1, 10, 1, 0).unwrap();
        for n in 0..10 {
            assert_eq!(a.xi(1, n), b.xi(1, n));
        }
    }

    #[test]
    fn normal_draws_have_zero_mean_unit_variance() {
        let p = NoisePath::sample(10, 0.5, 10_000, 99, 0).unwrap();
        let n = p.normals().len() as f64;
        let mean = p.normals().iter().sum::<f64>() / n;
        let var = p.normals().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn coarsening_identity_and_variance() {
        let fine = NoisePath::sample(10, 1.0 / 4096.0, 40_960, 5, 1).unwrap();
        assert_eq!(fine.coarsen(1).unwrap(), fine);
        let coarse = fine.coarsen(4).unwrap();
        assert_eq!(coarse.steps(), 10_240);
        assert!((coarse.dt() - 4.0 / 4096.0).abs() < 1e-18);
        let xs = coarse.normals();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.03, "var {var}");
        // √(mΔt)·ξ' = Σ √Δt·ξ
        for n in 0..20 {
            for k in 0..10 {
                let lhs = libm::sqrt(coarse.dt()) * coarse.xi(k, n);
                let rhs: f64 = (0..4).map(|i| libm::sqrt(fine.dt()) * fine.xi(k, 4 * n + i)).sum();
                assert!((lhs - rhs).abs() < 1e-14);
                let direct = fine.brownian_increment(k, 4 * n)
                    + fine.brownian_increment(k, 4 * n + 1)
                    + fine.brownian_increment(k, 4 * n + 2)
                    + fine.brownian_increment(k, 4 * n + 3);
                assert_eq!(coarse.brownian_increment(k, n), direct);
                assert!(coarse.zeta(k, n).abs() <= coarse.kappa());
            }
        }
        assert!(coarse.kappa() < fine.kappa());
        assert!(fine.coarsen(3).is_err());
        assert!(fine.coarsen(0).is_err());
    }

    #[test]
    fn coupled_paths_share_the_brownian_endpoint() {
        let paths = NoisePath::sample_coupled(3, 0.5, &[52, 116, 256], 11, 2).unwrap();
        for k in 0..3 {
            let ends: Vec<f64> = paths.iter().map(|p| p.brownian(k, p.steps())).collect();
            assert!((ends[0] - ends[1]).abs() < 1e-12);
            assert!((ends[0] - ends[2]).abs() < 1e-12);
        }
        // Nested grids: 4 steps of size T/8 make up 2 of size T/4.
        let nested = NoisePath::sample_coupled(1, 1.0, &[4, 8], 0, 0).unwrap();
        for n in 0..4 {
            let fine = nested[1].brownian_increment(0, 2 * n) + nested[1].brownian_increment(0, 2 * n + 1);
            assert!((nested[0].brownian_increment(0, n) - fine).abs() < 1e-14);
        }
    }

    #[test]
    fn coupled_normals_are_standard() {
        let mut all = Vec::new();
        for s in 0..40 {
            let paths = NoisePath::sample_coupled(4, 0.5, &[52, 116], 3, s).unwrap();
            all.extend_from_slice(paths[0].normals());
        }
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 / libm::sqrt(n));
        assert!((var - 1.0).abs() < 0.06, "var {var}");
    }

    #[test]
    fn zero_spectrum_gives_zero_increment() {
        let spec = NoiseSpec::zero(0.0, 1.0, 6).unwrap();
        let path = NoisePath::sample(6, 0.01, 3, 0, 0).unwrap();
        let inc = path.increment(&spec, 1).unwrap();
        for &x in &[0.0, 0.3, 0.77] {
            assert_eq!(inc.eval(x), 0.0);
        }
        assert!(path.increment(&spec, 3).is_err());
    }

    #[test]
    fn single_constant_mode_increment() {
        let spec = NoiseSpec::from_eigenvalues(0.0, 2.0, alloc::vec![0.7]).unwrap();
        let inc = spec.increment(0.25, &[1.0]);
        let e0 = 1.0 / libm::sqrt(2.0);
        for &x in &[0.0, 0.5, 1.9] {
            assert!((inc.eval(x) - 0.5 * 0.7 * e0).abs() < 1e-15);
        }
        assert_eq!(NoiseSpec::constant(0.0, 2.0, 0.5).unwrap().constant_amplitude(), Some(0.5));
    }

    #[test]
    fn fourier_basis_is_orthonormal() {
        let basis = FourierBasis::new(-1.0, 2.0).unwrap();
        let rule = crate::basis::GaussLegendre::new(40).unwrap();
        for a in 0..9 {
            for b in 0..9 {
                let v = rule.integrate(-1.0, 2.0, |x| basis.eval(a, x) * basis.eval(b, x));
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12, "{a} {b} {v}");
            }
        }
    }

    #[test]
    fn tail_moment_matches_closed_form() {
        // 2[(1+κ²) Q(κ) - κ φ(κ)] with Q(κ) = erfc(κ/√2)/2.
        for &dt in &[1e-1, 1e-2, 1e-3, 1e-4] {
            let k = kappa(dt).unwrap();
            let closed = 2.0 * ((1.0 + k * k) * 0.5 * libm::erfc(k / libm::sqrt(2.0)) - k * normal_pdf(k));
            let quad = truncation_tail_moment(k);
            assert!(((quad - closed) / closed).abs() < 1e-6, "dt {dt}: {quad} vs {closed}");
            assert!(quad <= dt * dt, "dt {dt}: {quad}");
        }
    }

    #[test]
    fn tail_moment_at_one_hundredth() {
        let dt: f64 = 0.01;
        let m = truncation_tail_moment(kappa(dt).unwrap());
        assert!(m > 0.0 && m <= 1e-4);
    }

    #[test]
    fn square_tail_moment_scales_like_dt_squared() {
        // E[(ζ² - ξ²)²] Δt² ≤ K Δt⁴ shape: the ratio to Δt² stays bounded.
        let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&dt: &f64| truncation_square_tail_moment(kappa(dt).unwrap()) / (dt * dt))
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] <= w[0] * 1.01, "{ratios:?}");
        }
    }

    #[test]
    fn h3_proxy_partial_sums() {
        // Decay 4 makes μ_k²(1+k²)³ ~ k^{-2}: partial sums settle.
        let spec = NoiseSpec::power_law(0.0, 1.0, 4096, 4.0, 1.0).unwrap();
        let a = spec.h3_proxy(1024);
        let b = spec.h3_proxy(4096);
        assert!((b - a) / b < 2e-3);
        let default = NoiseSpec::power_law(0.0, 1.0, 32, 3.0, 1.0).unwrap();
        assert!(default.h3_proxy(32).is_finite());
    }
}
