//! Gaussian-state scores: fidelity to a pure target, nullifier variances and
//! symplectic purity, all in the convention where the vacuum covariance is `I`.

use log::debug;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ClusterGraph;
use crate::numerics::{symmetric_eigen, RMatrix};

/// Tolerance below 1 for the smallest symplectic eigenvalue of a physical state.
pub const PHYSICAL_TOL: f64 = 1e-6;

/// `F = 2^N / √det(E1 + E2)`, valid when at least one state is pure.
pub fn fidelity(e1: &RMatrix, e2: &RMatrix) -> Result<f64> {
    let dim = e1.nrows();
    if !dim.is_multiple_of(2) || e1.ncols() != dim || e2.shape() != e1.shape() {
        return Err(Error::Dimension(format!(
            "fidelity needs two 2N×2N matrices, got {:?} and {:?}",
            e1.shape(),
            e2.shape()
        )));
    }
    let n = dim / 2;
    let sum = e1 + e2;
    let chol = sum
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("E1 + E2 is not positive definite".into()))?;
    // Work with log det to stay finite at large N.
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let f = (n as f64 * std::f64::consts::LN_2 - 0.5 * log_det).exp();
    if !(0.0..=1.0).contains(&f) {
        debug!("fidelity {f} clamped to [0, 1]");
    }
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullifierSet {
    /// `N × 2N`, acting on `(x_1 … x_N, p_1 … p_N)`.
    pub q: RMatrix,
}

/// `Q = (Θˢ - AΘᶜ, Θᶜ + AΘˢ)` with `Θᶜ = diag(cos θ_k)`, `Θˢ = diag(sin θ_k)`.
pub fn nullifier_matrix(graph: &ClusterGraph, theta: &[f64]) -> Result<NullifierSet> {
    let n = graph.n_nodes();
    if theta.len() != n {
        return Err(Error::Dimension(format!("{} phases for {n} nodes", theta.len())));
    }
    let a = graph.adjacency();
    let mut q = RMatrix::zeros(n, 2 * n);
    for k in 0..n {
        q[(k, k)] += theta[k].sin();
        q[(k, n + k)] += theta[k].cos();
        for kp in 0..n {
            let akk = a[(k, kp)];
            if akk != 0.0 {
                q[(k, kp)] -= akk * theta[kp].cos();
                q[(k, n + kp)] += akk * theta[kp].sin();
            }
        }
    }
    Ok(NullifierSet { q })
}

/// Diagonal of `Q E Qᵀ`.
pub fn nullifier_variances(e: &RMatrix, set: &NullifierSet) -> Result<Vec<f64>> {
    if set.q.ncols() != e.nrows() || e.nrows() != e.ncols() {
        return Err(Error::Dimension(format!(
            "Q is {:?}, E is {:?}",
            set.q.shape(),
            e.shape()
        )));
    }
    let qe = &set.q * e;
    Ok((0..set.q.nrows()).map(|k| qe.row(k).dot(&set.q.row(k))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurityReport {
    pub det: f64,
    pub min_symplectic: f64,
    pub physical: bool,
}

impl PurityReport {
    pub fn is_pure(&self, tol: f64) -> bool {
        (self.det - 1.0).abs() <= tol && (self.min_symplectic - 1.0).abs() <= tol
    }
}

/// Symplectic eigenvalues (ascending, one per mode) with `Ω = [[0, I], [-I, 0]]`.
///
/// Computed as the square roots of the eigenvalues of `-(E^½ Ω E^½)²`, each of
/// which appears twice.
pub fn symplectic_eigenvalues(e: &RMatrix) -> Result<Vec<f64>> {
    let dim = e.nrows();
    if !dim.is_multiple_of(2) || e.ncols() != dim {
        return Err(Error::Dimension(format!(
            "covariance must be 2N×2N, got {:?}",
            e.shape()
        )));
    }
    let n = dim / 2;
    let (vals, vecs) = symmetric_eigen(e);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::Numerical("covariance is not positive definite".into()));
    }
    let root = &vecs * RMatrix::from_diagonal(&vals.map(f64::sqrt)) * vecs.transpose();
    let omega = symplectic_form(n);
    let k = &root * omega * &root;
    let (sq, _) = symmetric_eigen(&(-(&k * &k)));
    Ok((0..n)
        .map(|i| 0.5 * (sq[2 * i].max(0.0).sqrt() + sq[2 * i + 1].max(0.0).sqrt()))
        .collect())
}

pub fn symplectic_form(n: usize) -> RMatrix {
    let mut omega = RMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        omega[(k, n + k)] = 1.0;
        omega[(n + k, k)] = -1.0;
    }
    omega
}

pub fn purity_check(e: &RMatrix) -> Result<PurityReport> {
    let sym = symplectic_eigenvalues(e)?;
    let min_symplectic = sym.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PurityReport {
        det: e.determinant(),
        min_symplectic,
        physical: min_symplectic >= 1.0 - PHYSICAL_TOL,
    })
}
