//! Periodic one-dimensional cell partitions.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Which one-sided limit to take at a cell interface.
///
/// `Left` is the trace `u⁻` coming from the cell on the left of the node,
/// `Right` is `u⁺` coming from the cell on its right. At the domain ends the
/// missing neighbour is supplied by periodic wrap-around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Partition `L_f = x_{1/2} < x_{3/2} < … < x_{J+1/2} = L_r` of the periodic
/// domain into `J` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    h: f64,
    regularity: f64,
}

impl Mesh {
    /// `cells` equal cells on `[left, right]`.
    pub fn uniform(left: f64, right: f64, cells: usize) -> Result<Self> {
        check_domain(left, right)?;
        if cells < 2 {
            return Err(Error::InvalidDomain(format!(
                "a periodic mesh needs at least 2 cells, got {cells}"
            )));
        }
        let width = (right - left) / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|j| left + j as f64 * width).collect();
        nodes[cells] = right;
        Ok(Self {
            nodes,
            h: width,
            regularity: 1.0,
        })
    }

    /// Mesh from an explicit, strictly increasing node list.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidDomain(format!(
                "a periodic mesh needs at least 2 cells, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        check_domain(nodes[0], nodes[nodes.len() - 1])?;
        let mut h = 0.0f64;
        let mut min = f64::INFINITY;
        for w in nodes.windows(2) {
            let dx = w[1] - w[0];
            if !(dx > 0.0) || !dx.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "nodes must be strictly increasing and finite (found {} then {})",
                    w[0], w[1]
                )));
            }
            h = h.max(dx);
            min = min.min(dx);
        }
        Ok(Self {
            nodes,
            h,
            regularity: min / h,
        })
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn left(&self) -> f64 {
        self.nodes[0]
    }

    pub fn right(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.right() - self.left()
    }

    /// Largest cell width.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Constant `c` with `Δx_j ≥ c·h` for every cell.
    pub fn regularity(&self) -> f64 {
        self.regularity
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    pub fn bounds(&self, cell: usize) -> (f64, f64) {
        (self.nodes[cell], self.nodes[cell + 1])
    }

    pub fn center(&self, cell: usize) -> f64 {
        0.5 * (self.nodes[cell] + self.nodes[cell + 1])
    }

    /// Physical coordinate of reference point `ξ ∈ [-1, 1]` in `cell`.
    #[inline]
    pub fn to_physical(&self, cell: usize, xi: f64) -> f64 {
        self.center(cell) + 0.5 * self.width(cell) * xi
    }

    /// Cell index and reference coordinate of `x`, taking the one-sided
    /// limit `side` when `x` is a node.
    pub fn locate(&self, x: f64, side: Side) -> Result<(usize, f64)> {
        let (left, right) = (self.left(), self.right());
        if !(x >= left && x <= right) {
            return Err(Error::OutOfDomain { x, left, right });
        }
        let last = self.cells() - 1;
        // Index of the first node strictly greater than x.
        let upper = self.nodes.partition_point(|&node| node <= x);
        let on_node = upper > 0 && self.nodes[upper - 1] == x;
        if on_node {
            let node = upper - 1;
            return Ok(match side {
                Side::Left if node == 0 => (last, 1.0),
                Side::Left => (node - 1, 1.0),
                Side::Right if node == self.cells() => (0, -1.0),
                Side::Right => (node, -1.0),
            });
        }
        let cell = upper - 1;
        let (a, b) = self.bounds(cell);
        let xi = (2.0 * x - a - b) / (b - a);
        Ok((cell, xi.clamp(-1.0, 1.0)))
    }
}

fn check_domain(left: f64, right: f64) -> Result<()> {
    if !(left.is_finite() && right.is_finite()) || left >= right {
        return Err(Error::InvalidDomain(format!(
            "need finite L_f < L_r, got [{left}, {right}]"
        )));
    }
    Ok(())
}
