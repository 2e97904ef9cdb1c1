//! Legendre polynomials on the reference cell `[-1, 1]` and Gauss-Legendre
//! quadrature.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Values `P_0(ξ), …, P_degree(ξ)` by the three-term recurrence.
pub fn legendre_values(degree: usize, xi: f64) -> Vec<f64> {
    let mut out = vec![0.0; degree + 1];
    fill_legendre(xi, &mut out);
    out
}

/// Writes `P_m(ξ)` for `m < out.len()` into `out`.
pub fn fill_legendre(xi: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = xi;
    }
    for m in 2..out.len() {
        let mf = m as f64;
        out[m] = ((2.0 * mf - 1.0) * xi * out[m - 1] - (mf - 1.0) * out[m - 2]) / mf;
    }
}

/// Derivatives `P_m'(ξ)` for `m = 0..=degree`.
///
/// Uses `P_m' = m P_{m-1} + ξ P_{m-1}'`, valid on the closed interval
/// including the endpoints.
pub fn legendre_derivatives(degree: usize, xi: f64) -> Vec<f64> {
    let p = legendre_values(degree, xi);
    let mut d = vec![0.0; degree + 1];
    for m in 1..=degree {
        d[m] = m as f64 * p[m - 1] + xi * d[m - 1];
    }
    d
}

/// `P_m(-1) = (-1)^m`.
#[inline]
pub fn left_endpoint_value(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `∫_{-1}^{1} P_m² dξ = 2 / (2m + 1)`.
#[inline]
pub fn reference_mass(m: usize) -> f64 {
    2.0 / (2 * m + 1) as f64
}

/// `∫_{-1}^{1} P_m P_n' dξ`: equal to 2 when `n > m` and `n + m` is odd, 0
/// otherwise.
#[inline]
pub fn derivative_moment(m: usize, n: usize) -> f64 {
    if n > m && (n + m) % 2 == 1 {
        2.0
    } else {
        0.0
    }
}

/// Gauss-Legendre rule with `n` points on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("quadrature points", "need at least one point"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        // Roots are symmetric; Newton from the Chebyshev-like initial guess.
        for i in 0..(n + 1) / 2 {
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.len() - 1
    }

    /// `∫_a^b f dx` with the rule mapped affinely onto `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for m in 2..=n {
        let mf = m as f64;
        let p2 = ((2.0 * mf - 1.0) * x * p1 - (mf - 1.0) * p0) / mf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss points per cell used for variable-coefficient integrals at degree
/// `k`.
#[inline]
pub fn quadrature_points(degree: usize) -> usize {
    degree + 3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_monomials_exactly() {
        for n in 1..=12 {
            let rule = GaussLegendre::new(n).unwrap();
            for m in 0..=rule.exact_degree() {
                let exact = if m % 2 == 1 { 0.0 } else { 2.0 / (m as f64 + 1.0) };
                let got = rule.integrate(-1.0, 1.0, |x| libm::pow(x, m as f64));
                let err = (got - exact).abs();
                assert!(
                    err <= 1e-13 * exact.abs().max(1.0),
                    "n={n} m={m} got={got} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn quadrature_on_shifted_interval() {
        let rule = GaussLegendre::new(4).unwrap();
        // ∫_2^5 x^7 dx = (5^8 - 2^8)/8
        let exact = (libm::pow(5.0, 8.0) - 256.0) / 8.0;
        let got = rule.integrate(2.0, 5.0, |x| libm::pow(x, 7.0));
        assert!(((got - exact) / exact).abs() < 1e-13);
    }

    #[test]
    fn zero_points_rejected() {
        assert!(GaussLegendre::new(0).is_err());
    }

    #[test]
    fn legendre_orthogonality_and_endpoint_values() {
        let rule = GaussLegendre::new(10).unwrap();
        for m in 0..6 {
            for n in 0..6 {
                let v = rule.integrate(-1.0, 1.0, |x| {
                    let p = legendre_values(6, x);
                    p[m] * p[n]
                });
                let expect = if m == n { reference_mass(m) } else { 0.0 };
                assert!((v - expect).abs() < 1e-14);
            }
            let p = legendre_values(6, 1.0);
            assert_eq!(p[m], 1.0);
            let p = legendre_values(6, -1.0);
            assert_eq!(p[m], left_endpoint_value(m));
        }
    }

    #[test]
    fn derivative_moments_match_quadrature() {
        let rule = GaussLegendre::new(10).unwrap();
        for m in 0..6 {
            for n in 0..6 {
                let v = rule.integrate(-1.0, 1.0, |x| {
                    legendre_values(6, x)[m] * legendre_derivatives(6, x)[n]
                });
                assert!((v - derivative_moment(m, n)).abs() < 1e-13, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn derivative_at_endpoints() {
        // P_m'(1) = m(m+1)/2
        let d = legendre_derivatives(5, 1.0);
        for (m, v) in d.iter().enumerate() {
            assert!((v - (m * (m + 1)) as f64 / 2.0).abs() < 1e-14);
        }
    }
}
