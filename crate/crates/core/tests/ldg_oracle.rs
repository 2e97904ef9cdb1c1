//! Brute-force reconstruction of one LDG step from the real weak forms.
//!
//! The oracle keeps `r`, `s`, `p`, `q` as separate unknowns, builds every
//! bilinear form by composite Simpson quadrature of explicitly written
//! Legendre polynomials, and solves the resulting dense real system.

use std::sync::Arc;

use num_complex::Complex64;
use sldg_core::ldg::{FluxOrientation, LdgSolver, SchemeConfig};
use sldg_core::noise::{NoisePath, NoiseSpec};
use sldg_core::potential::Potential;
use sldg_core::{DgField, Mesh};

fn legendre(m: usize, xi: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => xi,
        2 => 0.5 * (3.0 * xi * xi - 1.0),
        _ => unreachable!(),
    }
}

fn legendre_dxi(m: usize, xi: f64) -> f64 {
    match m {
        0 => 0.0,
        1 => 1.0,
        2 => 3.0 * xi,
        _ => unreachable!(),
    }
}

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 400;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

struct Space {
    cells: usize,
    degree: usize,
    h: f64,
}

impl Space {
    fn dim(&self) -> usize {
        self.cells * (self.degree + 1)
    }
    fn split(&self, i: usize) -> (usize, usize) {
        (i / (self.degree + 1), i % (self.degree + 1))
    }
    fn xi(&self, cell: usize, x: f64) -> f64 {
        2.0 * (x - cell as f64 * self.h) / self.h - 1.0
    }

    /// `∫ w φ_a φ_b`.
    fn weighted(&self, w: &dyn Fn(f64) -> f64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let ((ca, ma), (cb, mb)) = (self.split(a), self.split(b));
                if ca != cb {
                    continue;
                }
                let (l, r) = (ca as f64 * self.h, (ca + 1) as f64 * self.h);
                out[a][b] = simpson(l, r, |x| w(x) * legendre(ma, self.xi(ca, x)) * legendre(mb, self.xi(ca, x)));
            }
        }
        out
    }

    /// Row = test function, column = trial function of
    /// `-∫ v φ_x + v̂ φ⁻|_{j+1/2} - v̂ φ⁺|_{j-1/2}` with `v̂ = v^σ`, `right`
    /// selecting `σ = +`.
    fn weak_derivative(&self, right: bool) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for test in 0..n {
            for trial in 0..n {
                let ((ct, mt), (cv, mv)) = (self.split(test), self.split(trial));
                if ct == cv {
                    let (l, r) = (ct as f64 * self.h, (ct + 1) as f64 * self.h);
                    out[test][trial] -= simpson(l, r, |x| {
                        legendre(mv, self.xi(cv, x)) * legendre_dxi(mt, self.xi(ct, x)) * 2.0 / self.h
                    });
                }
            }
        }
        for node in 0..self.cells {
            let (lc, rc) = (node, (node + 1) % self.cells);
            for test in 0..n {
                let (ct, mt) = self.split(test);
                let weight = if ct == lc {
                    legendre(mt, 1.0)
                } else if ct == rc {
                    -legendre(mt, -1.0)
                } else {
                    0.0
                };
                let weight = if ct == lc && ct == rc { unreachable!() } else { weight };
                if weight == 0.0 {
                    continue;
                }
                for trial in 0..n {
                    let (cv, mv) = self.split(trial);
                    let trace = match right {
                        false if cv == lc => legendre(mv, 1.0),
                        true if cv == rc => legendre(mv, -1.0),
                        _ => 0.0,
                    };
                    out[test][trial] += weight * trace;
                }
            }
        }
        out
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Takes one step of the four-field system and returns `r + i s`.
fn oracle_step(
    space: &Space,
    flux: FluxOrientation,
    dt: f64,
    q: &dyn Fn(f64) -> f64,
    dw: &dyn Fn(f64) -> f64,
    u0: &[Complex64],
) -> Vec<Complex64> {
    let n = space.dim();
    let (a_right, b_right) = match flux {
        FluxOrientation::Alternating => (true, false),
        FluxOrientation::Mirrored => (false, true),
        FluxOrientation::SameSide => (false, false),
    };
    let mass = space.weighted(&|_| 1.0);
    let wa = space.weak_derivative(a_right);
    let wb = space.weak_derivative(b_right);
    let mq = space.weighted(q);
    let mw = space.weighted(dw);
    let c: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dt * mq[i][j] + mw[i][j]).collect())
        .collect();
    let r0: Vec<f64> = u0.iter().map(|z| z.re).collect();
    let s0: Vec<f64> = u0.iter().map(|z| z.im).collect();

    // unknowns [r1, s1, p, q]
    let big = 4 * n;
    let mut a = vec![vec![0.0; big]; big];
    let mut rhs = vec![0.0; big];
    let (mr0, ms0) = (matvec(&mass, &r0), matvec(&mass, &s0));
    let (cr0, cs0) = (matvec(&c, &r0), matvec(&c, &s0));
    let (br0, bs0) = (matvec(&wb, &r0), matvec(&wb, &s0));
    for i in 0..n {
        for j in 0..n {
            // M r1 - Δt W_a p - C s1/2 = M r0 + C s0/2
            a[i][j] = mass[i][j];
            a[i][2 * n + j] = -dt * wa[i][j];
            a[i][n + j] = -0.5 * c[i][j];
            // M s1 + Δt W_a q + C r1/2 = M s0 - C r0/2
            a[n + i][n + j] = mass[i][j];
            a[n + i][3 * n + j] = dt * wa[i][j];
            a[n + i][j] = 0.5 * c[i][j];
            // M p - W_b s1/2 = W_b s0/2
            a[2 * n + i][2 * n + j] = mass[i][j];
            a[2 * n + i][n + j] = -0.5 * wb[i][j];
            // M q - W_b r1/2 = W_b r0/2
            a[3 * n + i][3 * n + j] = mass[i][j];
            a[3 * n + i][j] = -0.5 * wb[i][j];
        }
        rhs[i] = mr0[i] + 0.5 * cs0[i];
        rhs[n + i] = ms0[i] - 0.5 * cr0[i];
        rhs[2 * n + i] = 0.5 * bs0[i];
        rhs[3 * n + i] = 0.5 * br0[i];
    }
    let z = solve_dense(a, rhs);
    (0..n).map(|i| Complex64::new(z[i], z[n + i])).collect()
}

fn check(cells: usize, degree: usize, flux: FluxOrientation) {
    let dt = 0.1;
    let mesh = Arc::new(Mesh::uniform(0.0, 1.0, cells).unwrap());
    // Polynomial Q and constant noise keep the scheme's Gauss rule exact,
    // so the oracle and the scheme should agree to rounding.
    let noise = NoiseSpec::constant(0.0, 1.0, 0.7).unwrap();
    let q = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
    let cfg = SchemeConfig::new(mesh.clone(), degree, dt, dt, noise.clone())
        .unwrap()
        .with_flux(flux)
        .with_potential(Potential::Custom(Arc::new(q)));
    let solver = LdgSolver::new(cfg).unwrap();
    let path = NoisePath::sample(1, dt, 1, 11, 0).unwrap();
    let incr = path.increment(&noise, 0).unwrap();

    let n = cells * (degree + 1);
    let u0: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos() - 0.3))
        .collect();
    let field = DgField::from_coeffs(mesh, degree, u0.clone()).unwrap();
    let (next, _) = solver.step(&field, &incr).unwrap();

    let space = Space { cells, degree, h: 1.0 / cells as f64 };
    let expect = oracle_step(
        &space,
        flux,
        dt,
        &q,
        &|x| incr.eval(x),
        &u0,
    );
    let err = next
        .coeffs()
        .iter()
        .zip(&expect)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "J={cells} k={degree} {flux:?}: {err}");

    // the dense step operator reproduces the same update
    let op = solver.step_operator(&incr).unwrap();
    for row in 0..n {
        let v: Complex64 = (0..n).map(|c| op[row * n + c] * u0[c]).sum();
        assert!((v - expect[row]).norm() < 1e-9);
    }
}

#[test]
fn two_cells_linear_alternating() {
    check(2, 1, FluxOrientation::Alternating);
}

#[test]
fn two_cells_linear_mirrored_and_same_side() {
    check(2, 1, FluxOrientation::Mirrored);
    check(2, 1, FluxOrientation::SameSide);
}

#[test]
fn three_cells_quadratic() {
    check(3, 2, FluxOrientation::Alternating);
    check(3, 2, FluxOrientation::Mirrored);
}
