//! Cluster-state graphs. Nodes are numbered row-major; edge lists use 1-based labels.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::RMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGraph {
    adjacency: RMatrix,
    shape: Option<(usize, usize)>,
}

/// Rectangular grid with nearest-neighbour edges.
pub fn grid_graph(rows: usize, cols: usize) -> Result<ClusterGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config(format!(
            "grid dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let n = rows * cols;
    let mut a = RMatrix::zeros(n, n);
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            if c + 1 < cols {
                a[(k, k + 1)] = 1.0;
                a[(k + 1, k)] = 1.0;
            }
            if r + 1 < rows {
                a[(k, k + cols)] = 1.0;
                a[(k + cols, k)] = 1.0;
            }
        }
    }
    Ok(ClusterGraph {
        adjacency: a,
        shape: Some((rows, cols)),
    })
}

impl ClusterGraph {
    /// Arbitrary graph from a symmetric 0/1 adjacency matrix with empty diagonal.
    pub fn from_adjacency(adjacency: RMatrix) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::Dimension(format!(
                "adjacency must be square, got {}x{}",
                n,
                adjacency.ncols()
            )));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Config(format!("adjacency has a self-loop at node {}", i + 1)));
            }
            for j in 0..n {
                let v = adjacency[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Config(format!(
                        "adjacency entry ({}, {}) = {v} is not 0 or 1",
                        i + 1,
                        j + 1
                    )));
                }
                if v != adjacency[(j, i)] {
                    return Err(Error::Config(format!(
                        "adjacency is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { adjacency, shape: None })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &RMatrix {
        &self.adjacency
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    /// True for grids with at least one odd side, the family with a known
    /// closed-form target. Always false for non-grid graphs.
    pub fn odd_side_ok(&self) -> bool {
        matches!(self.shape, Some((r, c)) if r % 2 == 1 || c % 2 == 1)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency
            .row_iter()
            .map(|row| row.iter().filter(|&&v| v != 0.0).count())
            .collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[(i, j)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// One edge per line, `k k'`, 1-based.
    pub fn edge_list(&self) -> String {
        let mut s = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{} {}", i + 1, j + 1);
        }
        s
    }

    /// Relabels nodes: node `perm[k]` of the result is node `k` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes();
        if perm.len() != n {
            return Err(Error::Dimension(format!(
                "permutation has {} entries for {n} nodes",
                perm.len()
            )));
        }
        let mut a = RMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(perm[i], perm[j])] = self.adjacency[(i, j)];
            }
        }
        Self::from_adjacency(a)
    }
}
