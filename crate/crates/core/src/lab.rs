//! Monte-Carlo error estimation, order fitting and the convergence studies.
//!
//! Every study draws one noise path per sample index, computes a vector of
//! per-resolution squared errors for that path, and reduces the samples in
//! index order. Samples may run concurrently through a [`SampleExecutor`];
//! the reduction order keeps results independent of scheduling.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::DgField;
use crate::initial::InitialData;
use crate::ldg::{FluxOrientation, LdgSolver, SchemeConfig};
use crate::mesh::Mesh;
use crate::noise::{NoisePath, NoiseSpec};
use crate::potential::Potential;
use crate::spectral::{commuting_exact, SpectralGrid, SpectralSolver, SpectralState};

/// Runs `count` independent sample tasks and returns results by index.
pub trait SampleExecutor {
    fn run<T, F>(&self, count: usize, task: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send;
}

/// Runs samples one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl SampleExecutor for Sequential {
    fn run<T, F>(&self, count: usize, task: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        (0..count).map(|i| task(i).map_err(|e| e.at_sample(i))).collect()
    }
}

/// Sample statistics of squared errors `e_i²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsError {
    /// `√(mean e²)`.
    pub rms: f64,
    /// Standard error of `rms` (delta method); infinite for one sample.
    pub stderr: f64,
    pub mean_sq: f64,
    /// Standard error of `mean_sq`.
    pub mean_sq_stderr: f64,
    pub samples: usize,
}

/// Statistics of the squared errors `sq[i] = ‖approx_i - ref_i‖²`.
pub fn ms_error(sq: &[f64]) -> Result<MsError> {
    if sq.is_empty() {
        return Err(Error::EmptyInput);
    }
    if sq.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::param("errors", "squared errors must be finite and non-negative"));
    }
    let m = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / m;
    let rms = libm::sqrt(mean);
    let mean_sq_stderr = if sq.len() < 2 {
        f64::INFINITY
    } else {
        let var = sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        libm::sqrt(var / m)
    };
    let stderr = if rms > 0.0 {
        mean_sq_stderr / (2.0 * rms)
    } else if mean_sq_stderr.is_finite() {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(MsError {
        rms,
        stderr,
        mean_sq: mean,
        mean_sq_stderr,
        samples: sq.len(),
    })
}

impl MsError {
    /// A deterministic error: no sampling uncertainty.
    pub fn exact(value: f64) -> Self {
        Self {
            rms: value,
            stderr: 0.0,
            mean_sq: value * value,
            mean_sq_stderr: 0.0,
            samples: 1,
        }
    }
}

/// Mean-square L² error over pairs of fields on the same space.
pub fn ms_error_fields(pairs: &[(DgField, DgField)]) -> Result<MsError> {
    let sq = pairs
        .iter()
        .map(|(a, b)| a.sub(b).map(|d| d.charge()))
        .collect::<Result<Vec<_>>>()?;
    ms_error(&sq)
}

/// Least-squares line through `(ln scale, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard deviation of the slope propagated from the per-point
    /// standard errors.
    pub slope_sigma: f64,
    /// RMS of the log residuals.
    pub residual: f64,
}

impl OrderFit {
    pub fn slope_lo(&self) -> f64 {
        self.slope - 2.0 * self.slope_sigma
    }

    pub fn slope_hi(&self) -> f64 {
        self.slope + 2.0 * self.slope_sigma
    }
}

/// Slope of `ln value` against `ln scale`; needs at least three points.
pub fn fit_order(points: &[(f64, f64)]) -> Result<f64> {
    let with_errors: Vec<(f64, f64, f64)> = points.iter().map(|&(s, v)| (s, v, 0.0)).collect();
    Ok(fit_with_errors(&with_errors)?.slope)
}

/// Fit through `(scale, value, stderr)` points with the slope uncertainty
/// propagated from `stderr / value` in log space.
pub fn fit_with_errors(points: &[(f64, f64, f64)]) -> Result<OrderFit> {
    if points.len() < 3 {
        return Err(Error::param(
            "points",
            format!("an order fit needs at least 3 resolutions, got {}", points.len()),
        ));
    }
    if points.iter().any(|&(s, v, _)| !(s > 0.0 && v > 0.0)) {
        return Err(Error::param("points", "scales and errors must be positive"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| libm::log(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "all scales coincide"));
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>() / sxx;
    let intercept = ym - slope * xm;
    let var: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| {
            let w = (x - xm) / sxx;
            let rel = p.2 / p.1;
            w * w * rel * rel
        })
        .sum();
    let residual = libm::sqrt(
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum::<f64>()
            / n,
    );
    Ok(OrderFit {
        slope,
        intercept,
        slope_sigma: libm::sqrt(var),
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Fitted slope inside the band.
    Pass,
    /// Slope outside the band but its `±2σ` interval overlaps it.
    Marginal,
    Fail,
}

pub fn verdict(fit: &OrderFit, lo: f64, hi: f64) -> Verdict {
    if fit.slope >= lo && fit.slope <= hi {
        Verdict::Pass
    } else if fit.slope_hi() >= lo && fit.slope_lo() <= hi {
        Verdict::Marginal
    } else {
        Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    /// Cells `J` for spatial studies, steps `N` for temporal ones, the cost
    /// for cost-rate studies.
    pub resolution: usize,
    pub h: f64,
    pub dt: f64,
    pub error: MsError,
    /// `error / (h^{k+1} Δt^{-1/2})` for stochastic spatial studies.
    pub bound_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub experiment: String,
    pub rows: Vec<ErrorRow>,
    /// `None` when fewer than three resolutions were run.
    pub fit: Option<OrderFit>,
    /// Wall time in seconds, filled by callers that have a clock.
    pub wall_time: Option<f64>,
    /// Whether the fit uses `mean_sq` rather than `rms`.
    pub fits_mean_square: bool,
}

impl ErrorReport {
    fn build(experiment: &str, rows: Vec<ErrorRow>, scale: fn(&ErrorRow) -> f64, mean_square: bool) -> Self {
        let points: Vec<(f64, f64, f64)> = rows
            .iter()
            .map(|r| {
                if mean_square {
                    (scale(r), r.error.mean_sq, r.error.mean_sq_stderr)
                } else {
                    (scale(r), r.error.rms, r.error.stderr)
                }
            })
            .collect();
        Self {
            experiment: experiment.into(),
            fit: fit_with_errors(&points).ok(),
            rows,
            wall_time: None,
            fits_mean_square: mean_square,
        }
    }

    pub fn insufficient_points(&self) -> bool {
        self.fit.is_none()
    }

    pub fn verdict(&self, lo: f64, hi: f64) -> Verdict {
        self.fit.as_ref().map_or(Verdict::Fail, |f| verdict(f, lo, hi))
    }

    /// Largest increase of the error between successive refinements beyond
    /// `2·stderr`; `None` when errors decrease monotonically within slack.
    pub fn monotonicity_violation(&self) -> Option<usize> {
        self.rows.windows(2).position(|w| {
            let slack = 2.0 * (w[0].error.stderr.min(1e300) + w[1].error.stderr.min(1e300));
            w[1].error.rms > w[0].error.rms + slack
        })
    }
}

/// Domain, coefficients and data shared by every study.
#[derive(Debug, Clone)]
pub struct Problem {
    pub left: f64,
    pub right: f64,
    pub potential: Potential,
    pub noise: NoiseSpec,
    pub initial: InitialData,
    pub t_final: f64,
}

impl Problem {
    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn u0(&self) -> impl Fn(f64) -> Complex64 + '_ {
        let (left, length) = (self.left, self.length());
        move |x| self.initial.eval(x, left, length)
    }

    fn steps_for(&self, n: usize) -> f64 {
        self.t_final / n as f64
    }

    fn spectral_grid(&self, points: usize) -> Result<SpectralGrid> {
        let grid = SpectralGrid::new(self.left, self.right, points)?;
        let needed = 2 * self.noise.max_frequency() + 2;
        if !self.noise.is_zero() && points < needed {
            return Err(Error::param(
                "points",
                format!("{points} collocation points cannot resolve noise frequency {}", self.noise.max_frequency()),
            ));
        }
        Ok(grid)
    }

    fn ldg(&self, cells: usize, degree: usize, steps: usize, noise: &NoiseSpec) -> Result<LdgSolver> {
        let mesh = Arc::new(Mesh::uniform(self.left, self.right, cells)?);
        let dt = self.steps_for(steps);
        let cfg = SchemeConfig::new(mesh, degree, dt, self.t_final, noise.clone())?
            .with_potential(self.potential.clone())
            .with_flux(FluxOrientation::Alternating);
        LdgSolver::new(cfg)
    }
}

fn run_spectral(solver: &SpectralSolver, noise: &NoiseSpec, path: Option<&NoisePath>, u0: SpectralState, steps: usize) -> Result<SpectralState> {
    let zero = noise.zero_increment();
    let mut u = u0;
    for n in 0..steps {
        let incr = match path {
            Some(p) => p.increment(noise, n)?,
            None => zero.clone(),
        };
        u = solver.step(&u, &incr).map_err(|e| e.at_step(n))?.0;
    }
    Ok(u)
}

/// Squared L² distance between a DG field and the band-limited interpolant
/// of a spectral state.
pub fn dg_spectral_distance_sq(u: &DgField, reference: &SpectralState) -> Result<f64> {
    let f = reference.interpolant();
    u.l2_distance_sq(|x| f.eval(x), 2 * u.degree() + 8)
}

fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if levels.contains(&0) {
        return Err(Error::param("levels", "resolutions must be positive"));
    }
    Ok(())
}

/// Spatial discretization used inside a temporal study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalSpace {
    Spectral { points: usize },
    Ldg { cells: usize, degree: usize },
}

/// Reference solution for a temporal study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalReference {
    /// Closed form for constant `Q` and a single constant noise mode.
    Commuting,
    /// Spectral run with `refine`× the finest step count on a grid of
    /// `points` nodes.
    FineSpectral { points: usize, refine: usize },
}

#[derive(Debug, Clone)]
pub struct TemporalStudy {
    pub problem: Problem,
    /// Step counts `N`, each dividing the finest one.
    pub steps: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub space: TemporalSpace,
    pub reference: TemporalReference,
}

/// Mean-square error at `T` against a path-coupled reference, per `Δt`.
pub fn temporal_order_study<E: SampleExecutor>(study: &TemporalStudy, exec: &E) -> Result<ErrorReport> {
    check_levels(&study.steps)?;
    if study.samples == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let p = &study.problem;
    let finest = *study.steps.iter().max().unwrap();
    let (ref_steps, ref_points) = match study.reference {
        TemporalReference::Commuting => (finest, None),
        TemporalReference::FineSpectral { points, refine } => (finest * refine.max(1), Some(points)),
    };
    if let Some(bad) = study.steps.iter().find(|&&n| ref_steps % n != 0) {
        return Err(Error::param("steps", format!("{bad} does not divide the reference step count {ref_steps}")));
    }
    if study.reference == TemporalReference::Commuting
        && (p.potential.as_constant().is_none() || (!p.noise.is_zero() && p.noise.constant_amplitude().is_none()))
    {
        return Err(Error::param("reference", "commuting reference needs constant Q and constant noise"));
    }

    enum Space {
        Spectral(SpectralGrid, Vec<SpectralSolver>),
        Ldg(Vec<LdgSolver>),
    }
    let space = match study.space {
        TemporalSpace::Spectral { points } => {
            let grid = p.spectral_grid(points)?;
            let solvers = study
                .steps
                .iter()
                .map(|&n| SpectralSolver::new(grid.clone(), p.steps_for(n), &p.potential, &p.noise))
                .collect::<Result<Vec<_>>>()?;
            Space::Spectral(grid, solvers)
        }
        TemporalSpace::Ldg { cells, degree } => Space::Ldg(
            study
                .steps
                .iter()
                .map(|&n| p.ldg(cells, degree, n, &p.noise))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let ref_grid = match ref_points {
        Some(points) => Some(p.spectral_grid(points)?),
        None => None,
    };
    let ref_solver = match &ref_grid {
        Some(g) => Some(SpectralSolver::new(g.clone(), p.steps_for(ref_steps), &p.potential, &p.noise)?),
        None => None,
    };
    let exact_grid = match (&space, &ref_grid) {
        (_, Some(g)) => g.clone(),
        (Space::Spectral(g, _), None) => g.clone(),
        (Space::Ldg(_), None) => p.spectral_grid(256)?,
    };
    let modes = p.noise.modes();

    let per_sample = exec.run(study.samples, |i| {
        let fine = NoisePath::sample(modes, p.steps_for(ref_steps), ref_steps, study.seed, i as u64)?;
        let reference = match &ref_solver {
            Some(solver) => run_spectral(solver, &p.noise, Some(&fine), exact_grid.sample(p.u0()), ref_steps)?,
            None => {
                let beta = if p.noise.is_zero() { 0.0 } else { fine.brownian(0, ref_steps) };
                commuting_exact(&exact_grid.sample(p.u0()), &p.potential, &p.noise, beta, p.t_final)?
            }
        };
        study
            .steps
            .iter()
            .enumerate()
            .map(|(level, &n)| {
                let path = fine.coarsen(ref_steps / n)?;
                match &space {
                    Space::Spectral(grid, solvers) => {
                        let u = run_spectral(&solvers[level], &p.noise, Some(&path), grid.sample(p.u0()), n)?;
                        if grid.points() == reference.grid().points() {
                            let d = u.distance(&reference)?;
                            Ok(d * d)
                        } else {
                            let f = reference.interpolant();
                            let g = u.interpolant();
                            Ok(distance_sq_on(grid.points().max(reference.grid().points()) * 2, p, |x| f.eval(x) - g.eval(x)))
                        }
                    }
                    Space::Ldg(solvers) => {
                        let solver = &solvers[level];
                        let u0 = solver.project_initial(p.u0())?;
                        let (u, _) = solver.run_final(Some(&path), u0)?;
                        dg_spectral_distance_sq(&u, &reference)
                    }
                }
            })
            .collect::<Result<Vec<f64>>>()
    })?;

    let h = match study.space {
        TemporalSpace::Spectral { points } => p.length() / points as f64,
        TemporalSpace::Ldg { cells, .. } => p.length() / cells as f64,
    };
    let rows = study
        .steps
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let sq: Vec<f64> = per_sample.iter().map(|s| s[level]).collect();
            Ok(ErrorRow {
                resolution: n,
                h,
                dt: p.steps_for(n),
                error: ms_error(&sq)?,
                bound_ratio: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport::build("temporal-order", rows, |r| r.dt, false))
}

/// `∫ |f|²` by the trapezoid rule on `points` equispaced nodes, exact for
/// trigonometric polynomials of degree below `points`.
fn distance_sq_on<F: Fn(f64) -> Complex64>(points: usize, p: &Problem, f: F) -> f64 {
    let h = p.length() / points as f64;
    (0..points).map(|j| f(p.left + j as f64 * h).norm_sqr()).sum::<f64>() * h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialMode {
    /// Noise switched off.
    Deterministic,
    /// The same path drives every mesh.
    Stochastic,
}

#[derive(Debug, Clone)]
pub struct SpatialStudy {
    pub problem: Problem,
    pub degree: usize,
    pub cells: Vec<usize>,
    pub dt: f64,
    pub samples: usize,
    pub seed: u64,
    pub mode: SpatialMode,
    /// Collocation points of the reference; defaults to the smallest power
    /// of two at least `8·max J`.
    pub reference_points: Option<usize>,
}

/// LDG against a spectral run with the same `Δt` and the same path, per `h`.
pub fn spatial_order_study<E: SampleExecutor>(study: &SpatialStudy, exec: &E) -> Result<ErrorReport> {
    check_levels(&study.cells)?;
    if study.samples == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let p = &study.problem;
    let noise = match study.mode {
        SpatialMode::Deterministic => NoiseSpec::zero(p.left, p.right, 1)?,
        SpatialMode::Stochastic => p.noise.clone(),
    };
    let ratio = p.t_final / study.dt;
    let steps = libm::round(ratio) as usize;
    if steps == 0 || (ratio - steps as f64).abs() > 1e-9 * ratio {
        return Err(Error::param("dt", "T/Δt must be a positive integer"));
    }
    let j_max = *study.cells.iter().max().unwrap();
    let points = study
        .reference_points
        .unwrap_or_else(|| (8 * j_max).next_power_of_two());
    let grid = {
        let problem = Problem {
            noise: noise.clone(),
            ..p.clone()
        };
        problem.spectral_grid(points)?
    };
    let reference = SpectralSolver::new(grid.clone(), study.dt, &p.potential, &noise)?;
    let solvers = study
        .cells
        .iter()
        .map(|&j| p.ldg(j, study.degree, steps, &noise))
        .collect::<Result<Vec<_>>>()?;
    let samples = match study.mode {
        SpatialMode::Deterministic => 1,
        SpatialMode::Stochastic => study.samples,
    };
    let per_sample = exec.run(samples, |i| {
        let path = match study.mode {
            SpatialMode::Deterministic => None,
            SpatialMode::Stochastic => Some(NoisePath::sample(noise.modes(), study.dt, steps, study.seed, i as u64)?),
        };
        let r = run_spectral(&reference, &noise, path.as_ref(), grid.sample(p.u0()), steps)?;
        solvers
            .iter()
            .map(|solver| {
                let u0 = solver.project_initial(p.u0())?;
                let (u, _) = solver.run_final(path.as_ref(), u0)?;
                dg_spectral_distance_sq(&u, &r)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let k1 = (study.degree + 1) as f64;
    let rows = study
        .cells
        .iter()
        .enumerate()
        .map(|(level, &j)| {
            let sq: Vec<f64> = per_sample.iter().map(|s| s[level]).collect();
            let error = match study.mode {
                SpatialMode::Deterministic => MsError::exact(libm::sqrt(sq[0])),
                SpatialMode::Stochastic => ms_error(&sq)?,
            };
            let h = p.length() / j as f64;
            let bound_ratio = match study.mode {
                SpatialMode::Deterministic => None,
                SpatialMode::Stochastic => Some(error.rms / (libm::pow(h, k1) / libm::sqrt(study.dt))),
            };
            Ok(ErrorRow {
                resolution: j,
                h,
                dt: study.dt,
                error,
                bound_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match study.mode {
        SpatialMode::Deterministic => "spatial-order-deterministic",
        SpatialMode::Stochastic => "spatial-order-stochastic",
    };
    Ok(ErrorReport::build(name, rows, |r| r.h, false))
}

/// Step and cell counts balancing the error terms at cost `M`:
/// `N = round(M^{(2k+2)/(2k+5)})`, `J = round(M^{3/(2k+5)})`.
pub fn cost_balanced_resolution(cost: usize, degree: usize) -> (usize, usize) {
    let m = cost as f64;
    let d = (2 * degree + 5) as f64;
    let n = libm::round(libm::pow(m, (2 * degree + 2) as f64 / d)) as usize;
    let j = libm::round(libm::pow(m, 3.0 / d)) as usize;
    (n.max(1), j.max(2))
}

/// `-(2k+2)/(2k+5)`.
pub fn cost_rate_target(degree: usize) -> f64 {
    -((2 * degree + 2) as f64) / (2 * degree + 5) as f64
}

#[derive(Debug, Clone)]
pub struct CostRateStudy {
    /// Must admit the commuting closed form.
    pub problem: Problem,
    pub degree: usize,
    pub costs: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Collocation points of the exact reference.
    pub reference_points: usize,
}

/// LDG error at cost-balanced `(N, J)` against the commuting closed form,
/// with one Brownian motion shared across all costs of a sample.
pub fn cost_rate_study<E: SampleExecutor>(study: &CostRateStudy, exec: &E) -> Result<ErrorReport> {
    check_levels(&study.costs)?;
    if study.samples == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let p = &study.problem;
    let resolutions: Vec<(usize, usize)> = study
        .costs
        .iter()
        .map(|&c| cost_balanced_resolution(c, study.degree))
        .collect();
    let solvers = resolutions
        .iter()
        .map(|&(n, j)| p.ldg(j, study.degree, n, &p.noise))
        .collect::<Result<Vec<_>>>()?;
    let grid = p.spectral_grid(study.reference_points)?;
    let step_counts: Vec<usize> = resolutions.iter().map(|r| r.0).collect();
    let modes = p.noise.modes();
    let per_sample = exec.run(study.samples, |i| {
        let paths = NoisePath::sample_coupled(modes, p.t_final, &step_counts, study.seed, i as u64)?;
        let beta = if p.noise.is_zero() {
            0.0
        } else {
            paths[0].brownian(0, step_counts[0])
        };
        let exact = commuting_exact(&grid.sample(p.u0()), &p.potential, &p.noise, beta, p.t_final)?;
        solvers
            .iter()
            .zip(&paths)
            .map(|(solver, path)| {
                let u0 = solver.project_initial(p.u0())?;
                let (u, _) = solver.run_final(Some(path), u0)?;
                dg_spectral_distance_sq(&u, &exact)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let rows = study
        .costs
        .iter()
        .enumerate()
        .map(|(level, &cost)| {
            let sq: Vec<f64> = per_sample.iter().map(|s| s[level]).collect();
            let (n, j) = resolutions[level];
            Ok(ErrorRow {
                resolution: cost,
                h: p.length() / j as f64,
                dt: p.steps_for(n),
                error: ms_error(&sq)?,
                bound_ratio: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport::build("cost-rate", rows, |r| r.resolution as f64, false))
}

#[derive(Debug, Clone)]
pub struct RegularityStudy {
    pub problem: Problem,
    pub points: usize,
    pub samples: usize,
    pub seed: u64,
    /// Step counts over `[0, T]` for the Hölder fit.
    pub holder_steps: Vec<usize>,
    /// Step size and number of steps of the moment check.
    pub moment_dt: f64,
    pub moment_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    /// Sample mean of `‖u^n‖²_{H¹}`, `n = 0..=steps`.
    pub mean_h1_sq: Vec<f64>,
    /// Mean over the first ten steps.
    pub window: f64,
    pub running_max: f64,
}

impl MomentCheck {
    pub fn ratio(&self) -> f64 {
        if self.window == 0.0 {
            if self.running_max == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.running_max / self.window
        }
    }

    pub fn bounded(&self, factor: f64) -> bool {
        self.ratio() <= factor
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub moment: MomentCheck,
    /// Mean of `‖u^{n+1} - u^n‖²` over steps and samples against `Δt`,
    /// fitted on the mean square.
    pub holder: ErrorReport,
}

/// Moment boundedness of `‖u^n‖²_{H¹}` and the Hölder increment scaling,
/// both on the spectral solver.
pub fn regularity_checks<E: SampleExecutor>(study: &RegularityStudy, exec: &E) -> Result<RegularityReport> {
    check_levels(&study.holder_steps)?;
    if study.samples == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let p = &study.problem;
    let grid = p.spectral_grid(study.points)?;
    let modes = p.noise.modes();

    let moment = {
        let solver = SpectralSolver::new(grid.clone(), study.moment_dt, &p.potential, &p.noise)?;
        let steps = study.moment_steps;
        let series = exec.run(study.samples, |i| {
            let path = NoisePath::sample(modes, study.moment_dt, steps.max(1), study.seed, i as u64)?;
            let mut u = grid.sample(p.u0());
            let mut out = Vec::with_capacity(steps + 1);
            out.push(u.h1_norm_sq());
            for n in 0..steps {
                u = solver.step(&u, &path.increment(&p.noise, n)?).map_err(|e| e.at_step(n))?.0;
                out.push(u.h1_norm_sq());
            }
            Ok(out)
        })?;
        let m = study.samples as f64;
        let mean: Vec<f64> = (0..=steps)
            .map(|n| series.iter().map(|s| s[n]).sum::<f64>() / m)
            .collect();
        let w = mean.len().min(10);
        let window = mean[..w].iter().sum::<f64>() / w as f64;
        MomentCheck {
            running_max: mean.iter().copied().fold(0.0, f64::max),
            window,
            mean_h1_sq: mean,
        }
    };

    let solvers = study
        .holder_steps
        .iter()
        .map(|&n| SpectralSolver::new(grid.clone(), p.steps_for(n), &p.potential, &p.noise))
        .collect::<Result<Vec<_>>>()?;
    let per_sample = exec.run(study.samples, |i| {
        study
            .holder_steps
            .iter()
            .zip(&solvers)
            .map(|(&n, solver)| {
                let path = NoisePath::sample(modes, p.steps_for(n), n, study.seed, i as u64)?;
                let mut u = grid.sample(p.u0());
                let mut acc = 0.0;
                for step in 0..n {
                    let next = solver.step(&u, &path.increment(&p.noise, step)?).map_err(|e| e.at_step(step))?.0;
                    let d = next.distance(&u)?;
                    acc += d * d;
                    u = next;
                }
                Ok(acc / n as f64)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let rows = study
        .holder_steps
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let sq: Vec<f64> = per_sample.iter().map(|s| s[level]).collect();
            Ok(ErrorRow {
                resolution: n,
                h: p.length() / study.points as f64,
                dt: p.steps_for(n),
                error: ms_error(&sq)?,
                bound_ratio: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularityReport {
        moment,
        holder: ErrorReport::build("regularity-holder", rows, |r| r.dt, true),
    })
}

/// One row of the truncation diagnostic table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub dt: f64,
    pub kappa: f64,
    /// `E[(ζ - ξ)²]` per mode.
    pub tail_moment: f64,
    /// `E‖ΔW̃ - ΔW‖²_{H¹}` for the configured spectrum.
    pub h1_moment: f64,
}

pub fn truncation_table(noise: &NoiseSpec, dts: &[f64]) -> Result<Vec<TailRow>> {
    dts.iter()
        .map(|&dt| {
            let kappa = crate::noise::kappa(dt)?;
            Ok(TailRow {
                dt,
                kappa,
                tail_moment: crate::noise::truncation_tail_moment(kappa),
                h1_moment: noise.truncation_h1_moment(dt)?,
            })
        })
        .collect()
}
