//! Target cluster state: the passive unitary `V`, phases `Θ` and `Φ`, the
//! auxiliary chain couplings and the squeezing `z`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dump::MatrixDump;
use crate::error::{Error, Result};
use crate::graph::ClusterGraph;
use crate::numerics::{self, c, frobenius, CMatrix, RMatrix, DEFAULT_TOL};

/// Entries of the first column of `V` smaller than this carry no usable phase.
const NEGLIGIBLE_ENTRY: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub graph: ClusterGraph,
    /// Passive mode transformation, `N×N` unitary.
    pub v: CMatrix,
    /// Local rotation phases `θ_k`; `Θ = diag(e^{-iθ_k})`.
    pub theta: Vec<f64>,
    /// Squeezing phases `φ_k` of the mechanical modes; `Φ = diag(e^{iφ_k/2})`.
    pub phi: Vec<f64>,
    /// Squeezing phase of the reservoir-coupled mode.
    pub phi_zero: f64,
    pub j0: f64,
    /// Chain couplings `J_1 … J_{N-1}`.
    pub chain: Vec<f64>,
    pub z: f64,
}

impl TargetSpec {
    pub fn new(
        graph: ClusterGraph,
        v: CMatrix,
        theta: Vec<f64>,
        phi: Vec<f64>,
        j0: f64,
        chain: Vec<f64>,
        z: f64,
    ) -> Result<Self> {
        let n = graph.n_nodes();
        if v.nrows() != n || v.ncols() != n {
            return Err(Error::Dimension(format!(
                "V is {}x{}, graph has {n} nodes",
                v.nrows(),
                v.ncols()
            )));
        }
        if theta.len() != n || phi.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} phases, got θ: {}, φ: {}",
                theta.len(),
                phi.len()
            )));
        }
        if chain.len() != n.saturating_sub(1) {
            return Err(Error::Dimension(format!(
                "expected {} chain couplings, got {}",
                n.saturating_sub(1),
                chain.len()
            )));
        }
        if !(j0 >= 0.0) || chain.iter().any(|&j| !(j >= 0.0)) {
            return Err(Error::Config("chain couplings J0 and J must be non-negative".into()));
        }
        if !z.is_finite() {
            return Err(Error::Config("squeezing z must be finite".into()));
        }
        let unit = frobenius(&(v.adjoint() * &v - CMatrix::identity(n, n)));
        if unit > DEFAULT_TOL {
            return Err(Error::Validation {
                what: "target V is not unitary",
                residual: unit,
                tol: DEFAULT_TOL,
            });
        }
        Ok(Self {
            graph,
            v,
            theta,
            phi,
            phi_zero: 0.0,
            j0,
            chain,
            z,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn theta_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n(),
            self.theta.iter().map(|&t| Complex64::from_polar(1.0, -t)),
        ))
    }

    pub fn phi_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n(),
            self.phi.iter().map(|&p| Complex64::from_polar(1.0, p / 2.0)),
        ))
    }

    /// Interior chain matrix: real antisymmetric tridiagonal with `-J_k` above
    /// and `J_k` below the diagonal.
    pub fn chain_matrix(&self) -> RMatrix {
        let n = self.n();
        let mut m = RMatrix::zeros(n, n);
        for (k, &j) in self.chain.iter().enumerate() {
            m[(k, k + 1)] = -j;
            m[(k + 1, k)] = j;
        }
        m
    }

    /// Same target with every coupling multiplied by `factor`.
    pub fn scaled_couplings(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.j0 *= factor;
        out.chain.iter_mut().for_each(|j| *j *= factor);
        out
    }

    pub fn to_dump(&self) -> TargetDump {
        TargetDump {
            n: self.n(),
            shape: self.graph.shape(),
            v: MatrixDump::from_complex(&self.v),
            theta: self.theta.clone(),
            phi: self.phi.clone(),
            j0: self.j0,
            chain: self.chain.clone(),
            z: self.z,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TargetDump {
    pub n: usize,
    pub shape: Option<(usize, usize)>,
    pub v: MatrixDump,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub j0: f64,
    pub chain: Vec<f64>,
    pub z: f64,
}

/// `Z0 = -i (A - i)(A + i)⁻¹`, evaluated through the eigendecomposition of `A`.
pub fn z0_matrix(graph: &ClusterGraph) -> CMatrix {
    numerics::symmetric_function(graph.adjacency(), |d| c(0.0, -1.0) * c(d, -1.0) / c(d, 1.0))
}

/// Closed-form target for rectangular grids: `Φ = I`, `θ_k = kπ/2`, all chain
/// couplings equal, and `V = Θ √(-i Z0)`.
pub fn rect_target(graph: &ClusterGraph, j0: f64, j: f64, z: f64) -> Result<TargetSpec> {
    let n = graph.n_nodes();
    let theta: Vec<f64> = (1..=n).map(|k| k as f64 * FRAC_PI_2).collect();
    let root = numerics::symmetric_unitary_sqrt(&(z0_matrix(graph) * c(0.0, -1.0)), DEFAULT_TOL)?;
    let rows = nalgebra::DVector::from_iterator(n, theta.iter().map(|&t| Complex64::from_polar(1.0, -t)));
    let v = CMatrix::from_diagonal(&rows) * root;
    TargetSpec::new(
        graph.clone(),
        v,
        theta,
        vec![0.0; n],
        j0,
        vec![j; n.saturating_sub(1)],
        z,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    /// Largest distance of `arg V_{k,1} - arg V_{ref,1}` from a multiple of π.
    pub phase_residual: f64,
    /// `‖J̄ Φ VᵀV Φ + Φ VᵀV Φ J̄‖_F` with `J̄` normalized to unit max entry.
    pub anticommutator_residual: f64,
    pub tolerance: f64,
}

impl ConstraintReport {
    pub fn realizable(&self) -> bool {
        self.phase_residual <= self.tolerance && self.anticommutator_residual <= self.tolerance
    }
}

/// Distance of `x` from the nearest multiple of π.
fn distance_to_pi_multiple(x: f64) -> f64 {
    let k = (x / std::f64::consts::PI).round();
    (x - k * std::f64::consts::PI).abs()
}

pub fn check_constraints(spec: &TargetSpec) -> ConstraintReport {
    let n = spec.n();
    let column: Vec<Complex64> = (0..n).map(|k| spec.v[(k, 0)]).collect();
    let reference = column
        .iter()
        .copied()
        .fold(c(0.0, 0.0), |best, z| if z.norm() > best.norm() { z } else { best });
    let scale = reference.norm();
    let phase_residual = column
        .iter()
        .filter(|z| z.norm() > NEGLIGIBLE_ENTRY * scale.max(1.0))
        .map(|z| distance_to_pi_multiple(z.arg() - reference.arg()))
        .fold(0.0, f64::max);

    let jbar = spec.chain_matrix();
    let jmax = jbar.amax();
    let jbar = numerics::to_complex(&if jmax > 0.0 { jbar / jmax } else { jbar });
    let phi = spec.phi_matrix();
    let inner = &phi * spec.v.transpose() * &spec.v * &phi;
    let anticommutator_residual = frobenius(&(&jbar * &inner + &inner * &jbar));

    ConstraintReport {
        phase_residual,
        anticommutator_residual,
        tolerance: DEFAULT_TOL,
    }
}

/// Quadrature covariance (`x = b + b†`, `p = -i(b - b†)`, vacuum = identity)
/// of the pure target state.
pub fn target_covariance(spec: &TargetSpec) -> RMatrix {
    let n = spec.n();
    let (ch, sh) = (spec.z.cosh(), spec.z.sinh());
    let phi2 = spec.phi_matrix().map(|p| p * p);
    let v = &spec.v;
    let vc = v.conjugate();
    let mut b = CMatrix::zeros(2 * n, 2 * n);
    b.view_mut((0, 0), (n, n)).copy_from(&(v * c(ch, 0.0)));
    b.view_mut((0, n), (n, n)).copy_from(&(v * &phi2 * c(sh, 0.0)));
    b.view_mut((n, 0), (n, n))
        .copy_from(&(&vc * phi2.conjugate() * c(sh, 0.0)));
    b.view_mut((n, n), (n, n)).copy_from(&(&vc * c(ch, 0.0)));
    let mut swap = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        swap[(k, n + k)] = c(1.0, 0.0);
        swap[(n + k, k)] = c(1.0, 0.0);
    }
    let r = quadrature_map(n);
    let e = &r * &b * swap * b.transpose() * r.transpose() * c(0.5, 0.0);
    let e = numerics::real_part(&e);
    (&e + e.transpose()) * 0.5
}

/// `R = [[I, I], [-iI, iI]]`, mapping `(b, b†)` to `(x, p)`.
pub fn quadrature_map(n: usize) -> CMatrix {
    let mut r = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        r[(k, k)] = c(1.0, 0.0);
        r[(k, n + k)] = c(1.0, 0.0);
        r[(n + k, k)] = c(0.0, -1.0);
        r[(n + k, n + k)] = c(0.0, 1.0);
    }
    r
}
