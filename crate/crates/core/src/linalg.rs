//! Block-sparse matrices over periodic cell graphs and the linear solvers
//! used by the implicit steps.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalars the block matrices are generic over.
pub trait Scalar: Copy + Default + PartialEq + Add<Output = Self> + AddAssign + Mul<Output = Self> {}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// Square matrix made of `block × block` dense blocks indexed by cell pairs.
///
/// Row `i` stores only the column cells it couples to.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix<T> {
    cells: usize,
    block: usize,
    rows: Vec<Vec<(usize, Vec<T>)>>,
}

impl<T: Scalar> BlockMatrix<T> {
    pub fn new(cells: usize, block: usize) -> Self {
        Self {
            cells,
            block,
            rows: vec![Vec::new(); cells],
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn dim(&self) -> usize {
        self.cells * self.block
    }

    /// Adds `values` (row-major `block × block`) into block `(row, col)`.
    pub fn add_block(&mut self, row: usize, col: usize, values: &[T]) {
        debug_assert_eq!(values.len(), self.block * self.block);
        let entry = self.block_mut(row, col);
        for (e, v) in entry.iter_mut().zip(values) {
            *e += *v;
        }
    }

    fn block_mut(&mut self, row: usize, col: usize) -> &mut Vec<T> {
        let b = self.block;
        let r = &mut self.rows[row];
        let idx = match r.iter().position(|(c, _)| *c == col) {
            Some(i) => i,
            None => {
                r.push((col, vec![T::default(); b * b]));
                r.sort_by_key(|(c, _)| *c);
                r.iter().position(|(c, _)| *c == col).unwrap()
            }
        };
        &mut r[idx].1
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&[T]> {
        self.rows[row]
            .iter()
            .find(|(c, _)| *c == col)
            .map(|(_, v)| v.as_slice())
    }

    /// Column cells coupled to `row`.
    pub fn row_cells(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[row].iter().map(|(c, _)| *c)
    }

    pub fn entry(&self, r: usize, c: usize) -> T {
        let b = self.block;
        self.block(r / b, c / b)
            .map_or(T::default(), |blk| blk[(r % b) * b + c % b])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::default(); self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        let b = self.block;
        for (i, row) in self.rows.iter().enumerate() {
            let out = &mut y[i * b..(i + 1) * b];
            out.iter_mut().for_each(|v| *v = T::default());
            for (j, blk) in row {
                let xs = &x[j * b..(j + 1) * b];
                for a in 0..b {
                    let mut acc = T::default();
                    for d in 0..b {
                        acc += blk[a * b + d] * xs[d];
                    }
                    out[a] += acc;
                }
            }
        }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BlockMatrix<T>) -> BlockMatrix<T> {
        let b = self.block;
        let mut out = BlockMatrix::new(self.cells, b);
        let mut tmp = vec![T::default(); b * b];
        for (i, row) in self.rows.iter().enumerate() {
            for (k, a) in row {
                for (j, c) in &other.rows[*k] {
                    tmp.iter_mut().for_each(|v| *v = T::default());
                    for r in 0..b {
                        for s in 0..b {
                            let mut acc = T::default();
                            for t in 0..b {
                                acc += a[r * b + t] * c[t * b + s];
                            }
                            tmp[r * b + s] = acc;
                        }
                    }
                    out.add_block(i, *j, &tmp);
                }
            }
        }
        out
    }

    /// `self` with every block scaled by `s`.
    pub fn scaled(&self, s: T) -> BlockMatrix<T> {
        let mut out = self.clone();
        for row in &mut out.rows {
            for (_, blk) in row {
                blk.iter_mut().for_each(|v| *v = *v * s);
            }
        }
        out
    }

    /// `self + other`.
    pub fn plus(&self, other: &BlockMatrix<T>) -> BlockMatrix<T> {
        let mut out = self.clone();
        for (i, row) in other.rows.iter().enumerate() {
            for (j, blk) in row {
                out.add_block(i, *j, blk);
            }
        }
        out
    }

    pub fn map<U: Scalar, F: Fn(T) -> U>(&self, f: F) -> BlockMatrix<U> {
        BlockMatrix {
            cells: self.cells,
            block: self.block,
            rows: self
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(j, blk)| (*j, blk.iter().map(|v| f(*v)).collect()))
                        .collect()
                })
                .collect(),
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim();
        let b = self.block;
        let mut out = vec![T::default(); n * n];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, blk) in row {
                for r in 0..b {
                    for c in 0..b {
                        out[(i * b + r) * n + j * b + c] = blk[r * b + c];
                    }
                }
            }
        }
        out
    }

    /// Largest periodic cell distance between coupled cells.
    pub fn cell_bandwidth(&self) -> usize {
        let j = self.cells;
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter().map(move |(c, _)| {
                    let d = if *c > i { *c - i } else { i - *c };
                    d.min(j - d)
                })
            })
            .max()
            .unwrap_or(0)
    }
}

/// Cell order `0, J-1, 1, J-2, …` that turns periodic nearest-neighbour
/// coupling into a banded pattern.
fn interleaved_positions(cells: usize) -> Vec<usize> {
    let mut pos = vec![0; cells];
    let mut p = 0;
    let (mut lo, mut hi) = (0usize, cells);
    while lo < hi {
        pos[lo] = p;
        p += 1;
        lo += 1;
        if lo < hi {
            hi -= 1;
            pos[hi] = p;
            p += 1;
        }
    }
    pos
}

/// Relative pivot threshold below which a factorization is declared
/// singular.
pub const PIVOT_GUARD: f64 = 1e-12;

/// Banded LU factorization with partial pivoting of a block matrix whose
/// cells are reordered by [`interleaved_positions`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// Row `r` covers columns `r - kl ..= r + kl + ku`.
    band: Vec<Complex64>,
    multipliers: Vec<Complex64>,
    pivots: Vec<usize>,
    /// Scalar index in the banded ordering for each original index.
    order: Vec<usize>,
}

impl BandedLu {
    pub fn factor(matrix: &BlockMatrix<Complex64>) -> Result<Self> {
        let cells = matrix.cells();
        let b = matrix.block_size();
        let n = matrix.dim();
        let pos = interleaved_positions(cells);
        let order: Vec<usize> = (0..n).map(|i| pos[i / b] * b + i % b).collect();

        let (mut kl, mut ku) = (0usize, 0usize);
        let mut scale = 0.0f64;
        for i in 0..cells {
            for j in matrix.row_cells(i) {
                let (pi, pj) = (pos[i], pos[j]);
                if pi >= pj {
                    kl = kl.max((pi - pj) * b + b - 1);
                    ku = ku.max(b - 1);
                }
                if pj >= pi {
                    ku = ku.max((pj - pi) * b + b - 1);
                    kl = kl.max(b - 1);
                }
                for v in matrix.block(i, j).unwrap() {
                    scale = scale.max(v.norm());
                }
            }
        }
        kl = kl.min(n - 1);
        ku = ku.min(n - 1);
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            band: vec![Complex64::new(0.0, 0.0); n * width],
            multipliers: vec![Complex64::new(0.0, 0.0); n * kl.max(1)],
            pivots: vec![0; n],
            order,
        };
        for i in 0..cells {
            for j in matrix.row_cells(i) {
                let blk = matrix.block(i, j).unwrap();
                for r in 0..b {
                    for c in 0..b {
                        let (rr, cc) = (lu.order[i * b + r], lu.order[j * b + c]);
                        *lu.at_mut(rr, cc) = blk[r * b + c];
                    }
                }
            }
        }
        lu.eliminate(scale)?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> Complex64 {
        self.band[self.idx(r, c)]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut Complex64 {
        let i = self.idx(r, c);
        &mut self.band[i]
    }

    fn eliminate(&mut self, scale: f64) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let threshold = PIVOT_GUARD * scale;
        for c in 0..n {
            let last_row = (c + kl).min(n - 1);
            let last_col = (c + kl + ku).min(n - 1);
            let mut p = c;
            let mut best = self.at(c, c).norm();
            for r in c + 1..=last_row {
                let v = self.at(r, c).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > threshold) {
                return Err(Error::Singular { row: c, pivot: best });
            }
            self.pivots[c] = p;
            if p != c {
                for cc in c..=last_col {
                    let (i, j) = (self.idx(c, cc), self.idx(p, cc));
                    self.band.swap(i, j);
                }
            }
            let pivot = self.at(c, c);
            for r in c + 1..=last_row {
                let l = self.at(r, c) / pivot;
                self.multipliers[c * kl.max(1) + (r - c - 1)] = l;
                *self.at_mut(r, c) = Complex64::new(0.0, 0.0);
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for cc in c + 1..=last_col {
                    let u = self.at(c, cc);
                    *self.at_mut(r, cc) -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper scalar bandwidth of the reordered matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let kl = self.kl;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (i, v) in rhs.iter().enumerate() {
            y[self.order[i]] = *v;
        }
        for c in 0..n {
            let p = self.pivots[c];
            if p != c {
                y.swap(c, p);
            }
            let last_row = (c + kl).min(n - 1);
            let yc = y[c];
            for r in c + 1..=last_row {
                y[r] -= self.multipliers[c * kl.max(1) + (r - c - 1)] * yc;
            }
        }
        for r in (0..n).rev() {
            let last_col = (r + kl + self.ku).min(n - 1);
            let mut acc = y[r];
            for c in r + 1..=last_col {
                acc -= self.at(r, c) * y[c];
            }
            y[r] = acc / self.at(r, r);
        }
        (0..n).map(|i| y[self.order[i]]).collect()
    }
}

/// Dense LU with partial pivoting (row-major input).
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<Complex64>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let threshold = PIVOT_GUARD * scale;
        let mut pivots = vec![0; n];
        for c in 0..n {
            let mut p = c;
            let mut best = a[c * n + c].norm();
            for r in c + 1..n {
                let v = a[r * n + c].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > threshold) {
                return Err(Error::Singular { row: c, pivot: best });
            }
            pivots[c] = p;
            if p != c {
                for k in 0..n {
                    a.swap(c * n + k, p * n + k);
                }
            }
            let piv = a[c * n + c];
            for r in c + 1..n {
                let l = a[r * n + c] / piv;
                a[r * n + c] = l;
                for k in c + 1..n {
                    let u = a[c * n + k];
                    a[r * n + k] -= l * u;
                }
            }
        }
        Ok(Self { n, lu: a, pivots })
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        for c in 0..n {
            b.swap(c, self.pivots[c]);
        }
        for r in 0..n {
            let mut acc = b[r];
            for c in 0..r {
                acc -= self.lu[r * n + c] * b[c];
            }
            b[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..n {
                acc -= self.lu[r * n + c] * b[c];
            }
            b[r] = acc / self.lu[r * n + r];
        }
    }
}

/// Diagonal-block (block Jacobi) preconditioner.
#[derive(Debug, Clone)]
pub struct BlockJacobi {
    block: usize,
    factors: Vec<DenseLu>,
}

impl BlockJacobi {
    pub fn new(matrix: &BlockMatrix<Complex64>) -> Result<Self> {
        let b = matrix.block_size();
        let factors = (0..matrix.cells())
            .map(|i| {
                let blk = matrix
                    .block(i, i)
                    .map_or_else(|| vec![Complex64::new(0.0, 0.0); b * b], |v| v.to_vec());
                DenseLu::factor(b, blk)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { block: b, factors })
    }

    pub fn apply(&self, r: &[Complex64], z: &mut [Complex64]) {
        z.copy_from_slice(r);
        let b = self.block;
        for (i, f) in self.factors.iter().enumerate() {
            f.solve_in_place(&mut z[i * b..(i + 1) * b]);
        }
    }
}

#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm2(a: &[Complex64]) -> f64 {
    libm::sqrt(a.iter().map(|v| v.norm_sqr()).sum::<f64>())
}

/// Outcome of an iterative or direct solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖`.
    pub residual: f64,
}

/// Right-preconditioned BiCGSTAB for `A x = b`, starting from the contents
/// of `x`.
pub fn bicgstab<A, P>(
    mut apply: A,
    mut precond: P,
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats>
where
    A: FnMut(&[Complex64], &mut [Complex64]),
    P: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = zero);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![zero; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let mut p = vec![zero; n];
    let mut v = vec![zero; n];
    let mut y = vec![zero; n];
    let mut s = vec![zero; n];
    let mut z = vec![zero; n];
    let mut t = vec![zero; n];
    let (mut rho, mut alpha, mut omega) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    let mut res = norm2(&r) / bnorm;
    if res <= tol {
        return Ok(SolveStats { iterations: 0, residual: res });
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut y);
        apply(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.norm() == 0.0 {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
            x[i] += alpha * y[i];
        }
        res = norm2(&s) / bnorm;
        if res <= tol {
            return finish(&mut apply, b, x, bnorm, it, tol);
        }
        precond(&s, &mut z);
        apply(&z, &mut t);
        let tt = dot(&t, &t);
        if tt.norm() == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r) / bnorm;
        if res <= tol {
            return finish(&mut apply, b, x, bnorm, it, tol);
        }
        if omega.norm() == 0.0 {
            break;
        }
    }
    let stats = true_residual(&mut apply, b, x, bnorm);
    if stats <= tol {
        return Ok(SolveStats {
            iterations: max_iter,
            residual: stats,
        });
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: stats,
    })
}

fn true_residual<A: FnMut(&[Complex64], &mut [Complex64])>(
    apply: &mut A,
    b: &[Complex64],
    x: &[Complex64],
    bnorm: f64,
) -> f64 {
    let mut ax = vec![Complex64::new(0.0, 0.0); b.len()];
    apply(x, &mut ax);
    libm::sqrt(ax.iter().zip(b).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>()) / bnorm
}

fn finish<A: FnMut(&[Complex64], &mut [Complex64])>(
    apply: &mut A,
    b: &[Complex64],
    x: &[Complex64],
    bnorm: f64,
    iterations: usize,
    tol: f64,
) -> Result<SolveStats> {
    // The recursive residual can drift from the true one.
    let residual = true_residual(apply, b, x, bnorm);
    if residual <= 10.0 * tol {
        Ok(SolveStats { iterations, residual })
    } else {
        Err(Error::NoConvergence { iterations, residual })
    }
}
