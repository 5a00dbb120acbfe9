//! Dense complex linear-algebra kernels: real-symmetric eigendecomposition,
//! the principal square root of a symmetric unitary matrix, and (shifted)
//! Lyapunov solvers for `M C + C Mᵀ + s C = -N`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Eigenvalues closer than this to -1 are refused by [`symmetric_unitary_sqrt`].
pub const BRANCH_CUT_GUARD: f64 = 1e-12;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 100_000;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

/// Eigendecomposition of a real symmetric matrix with eigenvalues sorted
/// ascending; column `k` of the returned matrix is the eigenvector of value `k`.
pub fn symmetric_eigen(a: &RMatrix) -> (DVector<f64>, RMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), RMatrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // Fix the sign so the largest component is positive.
        let (imax, _) =
            col.iter().enumerate().fold(
                (0, 0.0),
                |(bi, bv), (i, v)| if v.abs() > bv + 1e-12 { (i, v.abs()) } else { (bi, bv) },
            );
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Applies a scalar function to a real symmetric matrix through its eigendecomposition.
pub fn symmetric_function(a: &RMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (vals, vecs) = symmetric_eigen(a);
    let q = to_complex(&vecs);
    let d = CMatrix::from_diagonal(&vals.map(f));
    &q * d * q.transpose()
}

/// Orthogonal `Q` that simultaneously diagonalizes a family of commuting real
/// symmetric matrices. Each matrix in turn splits the current eigenspaces.
fn joint_diagonalize(mats: &[RMatrix]) -> RMatrix {
    let n = mats[0].nrows();
    let mut q = RMatrix::identity(n, n);
    let mut groups: Vec<Vec<usize>> = vec![(0..n).collect()];
    for m in mats {
        let scale = m.amax().max(1.0);
        let mut next_groups = Vec::new();
        for g in &groups {
            let qg = RMatrix::from_fn(n, g.len(), |i, j| q[(i, g[j])]);
            let sub = qg.transpose() * m * &qg;
            let (vals, vecs) = symmetric_eigen(&sub);
            let rotated = &qg * vecs;
            for (j, &col) in g.iter().enumerate() {
                q.set_column(col, &rotated.column(j));
            }
            let mut start = 0;
            for j in 1..=g.len() {
                if j == g.len() || (vals[j] - vals[j - 1]).abs() > 1e-9 * scale {
                    next_groups.push(g[start..j].to_vec());
                    start = j;
                }
            }
        }
        groups = next_groups;
    }
    q
}

/// Principal square root of a complex symmetric unitary matrix.
///
/// A symmetric unitary `Z` has commuting real symmetric parts, so it factors as
/// `Q D Qᵀ` with `Q` real orthogonal and `|D_kk| = 1`. The root is
/// `Q √D Qᵀ` with the principal scalar branch (argument in (-π, π]).
pub fn symmetric_unitary_sqrt(z: &CMatrix, tol: f64) -> Result<CMatrix> {
    let n = z.nrows();
    if z.ncols() != n {
        return Err(Error::Dimension(format!(
            "expected square matrix, got {}x{}",
            n,
            z.ncols()
        )));
    }
    let asym = frobenius(&(z - z.transpose()));
    if asym > tol {
        return Err(Error::Validation {
            what: "symmetric_unitary_sqrt: input not symmetric",
            residual: asym,
            tol,
        });
    }
    let unit = frobenius(&(z.adjoint() * z - CMatrix::identity(n, n)));
    if unit > tol {
        return Err(Error::Validation {
            what: "symmetric_unitary_sqrt: input not unitary",
            residual: unit,
            tol,
        });
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let x = real_part(z);
    let y = imag_part(z);
    // An irrational mix first, so that accidental degeneracies of x alone do
    // not leave mixed eigenspaces.
    let mixed = &x + &y * std::f64::consts::FRAC_1_SQRT_2 * std::f64::consts::E.recip();
    let q = joint_diagonalize(&[mixed, x, y]);
    let qc = to_complex(&q);
    let d = qc.transpose() * z * &qc;
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(d[(i, j)].norm());
            }
        }
    }
    if off > 10.0 * tol {
        return Err(Error::Validation {
            what: "symmetric_unitary_sqrt: joint diagonalization",
            residual: off,
            tol,
        });
    }
    let mut roots = DVector::from_element(n, c(0.0, 0.0));
    for k in 0..n {
        let lambda = d[(k, k)];
        let distance = (lambda + 1.0).norm();
        if lambda.im == 0.0 {
            // Exactly real (including -1): arg is 0 or π, both inside (-π, π].
            roots[k] = c(lambda.re, 0.0).sqrt();
        } else if distance < BRANCH_CUT_GUARD {
            return Err(Error::BranchCut { distance });
        } else {
            roots[k] = lambda.sqrt();
        }
    }
    Ok(&qc * CMatrix::from_diagonal(&roots) * qc.transpose())
}

/// Eigenvalues of a general complex matrix (diagonal of its complex Schur form).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Numerical("complex Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Relative residual `‖M C + C Mᵀ + s C + N‖ / ‖N‖` (absolute when `N = 0`).
pub fn lyapunov_residual(m: &CMatrix, n: &CMatrix, shift: Complex64, sol: &CMatrix) -> f64 {
    let r = m * sol + sol * m.transpose() + sol * shift + n;
    let scale = frobenius(n);
    let res = frobenius(&r);
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

/// Bartels–Stewart solver for `M C + C Mᵀ + s C = -N` that factors `M` once
/// and reuses the Schur form across right-hand sides and shifts.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    m: CMatrix,
    u: CMatrix,
    t: CMatrix,
}

impl LyapunovSolver {
    pub fn new(m: &CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "drift must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let schur = m
            .clone()
            .try_schur(SCHUR_EPS, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::Numerical("complex Schur decomposition did not converge".into()))?;
        let (u, t) = schur.unpack();
        Ok(Self { m: m.clone(), u, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Smallest `|λi + λj + shift|` over eigenvalue pairs of `M`, i.e. the
    /// smallest eigenvalue modulus of the Lyapunov superoperator.
    pub fn smallest_pair_sum(&self, shift: Complex64) -> f64 {
        let ev = self.eigenvalues();
        let mut best = f64::INFINITY;
        for a in &ev {
            for b in &ev {
                best = best.min((a + b + shift).norm());
            }
        }
        best
    }

    pub fn solve(&self, n: &CMatrix, shift: Complex64) -> Result<CMatrix> {
        let dim = self.m.nrows();
        if n.nrows() != dim || n.ncols() != dim {
            return Err(Error::Dimension(format!(
                "diffusion is {}x{}, drift is {dim}x{dim}",
                n.nrows(),
                n.ncols()
            )));
        }
        let scale = 2.0 * (0..dim).fold(0.0f64, |acc, i| acc.max(self.t[(i, i)].norm())) + shift.norm();
        let guard = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let smallest = self.smallest_pair_sum(shift);
        if smallest <= guard {
            return Err(Error::SingularSuperoperator { smallest });
        }

        let mut x = self.solve_transformed(&(-(self.u.adjoint() * n * self.u.conjugate())), shift);
        let mut sol = &self.u * &x * self.u.transpose();

        // One step of iterative refinement.
        let resid = &self.m * &sol + &sol * self.m.transpose() + &sol * shift + n;
        if frobenius(&resid) > DEFAULT_TOL * frobenius(n) {
            x = self.solve_transformed(&(-(self.u.adjoint() * resid * self.u.conjugate())), shift);
            sol += &self.u * &x * self.u.transpose();
        }
        Ok(sol)
    }

    /// Solves `T X + X Tᵀ + s X = F` for upper-triangular `T`, last column first.
    fn solve_transformed(&self, f: &CMatrix, shift: Complex64) -> CMatrix {
        let t = &self.t;
        let n = t.nrows();
        let mut x = CMatrix::zeros(n, n);
        for j in (0..n).rev() {
            let mut rhs: DVector<Complex64> = f.column(j).into_owned();
            for k in (j + 1)..n {
                let tjk = t[(j, k)];
                if tjk != c(0.0, 0.0) {
                    rhs.axpy(-tjk, &x.column(k), c(1.0, 0.0));
                }
            }
            let diag_shift = t[(j, j)] + shift;
            for i in (0..n).rev() {
                let mut acc = rhs[i];
                for l in (i + 1)..n {
                    acc -= t[(i, l)] * x[(l, j)];
                }
                x[(i, j)] = acc / (t[(i, i)] + diag_shift);
            }
        }
        x
    }
}

/// Solves `M C + C Mᵀ = -N`.
pub fn solve_lyapunov(m: &CMatrix, n: &CMatrix) -> Result<CMatrix> {
    LyapunovSolver::new(m)?.solve(n, c(0.0, 0.0))
}

/// Solves `M C + C Mᵀ + shift·C = -N`.
pub fn solve_shifted_lyapunov(m: &CMatrix, n: &CMatrix, shift: Complex64) -> Result<CMatrix> {
    LyapunovSolver::new(m)?.solve(n, shift)
}

/// Reference solver: Kronecker vectorization `(I⊗M + M⊗I + s I) vec C = -vec N`
/// with a dense LU factorization. Cost grows as `dim⁶`; intended for small systems.
pub fn solve_lyapunov_kronecker(m: &CMatrix, n: &CMatrix, shift: Complex64) -> Result<CMatrix> {
    let dim = m.nrows();
    if m.ncols() != dim || n.nrows() != dim || n.ncols() != dim {
        return Err(Error::Dimension(
            "Kronecker Lyapunov operands must be square and equal size".into(),
        ));
    }
    let id = CMatrix::identity(dim, dim);
    let mut op = id.kronecker(m) + m.kronecker(&id);
    for i in 0..dim * dim {
        op[(i, i)] += shift;
    }
    let rhs = DVector::from_iterator(dim * dim, n.iter().map(|z| -z));
    let lu = op.lu();
    let solution = lu.solve(&rhs).ok_or_else(|| {
        let smallest = LyapunovSolver::new(m)
            .map(|s| s.smallest_pair_sum(shift))
            .unwrap_or(0.0);
        Error::SingularSuperoperator { smallest }
    })?;
    Ok(CMatrix::from_iterator(dim, dim, solution.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path3() -> RMatrix {
        RMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
    }

    #[test]
    fn sqrt_of_one_by_one_identity() {
        let s = symmetric_unitary_sqrt(&CMatrix::identity(1, 1), DEFAULT_TOL).unwrap();
        assert_relative_eq!(s[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(s[(0, 0)].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sqrt_of_minus_identity_is_i() {
        let z = -CMatrix::identity(2, 2);
        let s = symmetric_unitary_sqrt(&z, DEFAULT_TOL).unwrap();
        assert!(max_abs(&(s - CMatrix::identity(2, 2) * c(0.0, 1.0))) < 1e-15);
    }

    #[test]
    fn noisy_eigenvalue_at_cut_is_refused() {
        let eps: f64 = 1e-13;
        let lam = c(-(1.0 - eps * eps).sqrt(), -eps);
        let z = CMatrix::identity(2, 2) * lam;
        let err = symmetric_unitary_sqrt(&z, DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, Error::BranchCut { .. }));
    }

    #[test]
    fn sqrt_of_path_graph_z0() {
        let z0 = symmetric_function(&path3(), |d| c(0.0, -1.0) * (c(d, -1.0) / c(d, 1.0)));
        let z = &z0 * c(0.0, -1.0);
        let s = symmetric_unitary_sqrt(&z, DEFAULT_TOL).unwrap();
        assert!(frobenius(&(&s * &s - &z)) < 1e-12);
        assert!(frobenius(&(&s - s.transpose())) < 1e-12);
        assert!(frobenius(&(s.adjoint() * &s - CMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn sqrt_rejects_non_unitary() {
        let z = CMatrix::identity(2, 2) * c(2.0, 0.0);
        assert!(matches!(
            symmetric_unitary_sqrt(&z, DEFAULT_TOL),
            Err(Error::Validation { .. })
        ));
        let mut z = CMatrix::identity(2, 2);
        z[(0, 1)] = c(0.1, 0.0);
        assert!(symmetric_unitary_sqrt(&z, DEFAULT_TOL).is_err());
    }

    #[test]
    fn lyapunov_scalar_balance() {
        let m = -CMatrix::identity(2, 2);
        let n = CMatrix::identity(2, 2) * c(2.0, 0.0);
        let sol = solve_lyapunov(&m, &n).unwrap();
        assert!(max_abs(&(sol - CMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn lyapunov_decoupled_diagonal() {
        let m = to_complex(&RMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0])));
        let n = to_complex(&RMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0])));
        let sol = solve_lyapunov(&m, &n).unwrap();
        let expected = to_complex(&RMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])));
        assert!(max_abs(&(sol - expected)) < 1e-14);
    }

    #[test]
    fn shifted_scalar() {
        let m = -CMatrix::identity(1, 1);
        let n = CMatrix::from_element(1, 1, c(4.0, 0.0));
        let sol = solve_shifted_lyapunov(&m, &n, c(0.0, 2.0)).unwrap();
        let expected = c(4.0, 0.0) / c(2.0, -2.0);
        assert!((sol[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn zero_shift_matches_unshifted() {
        let m = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c(-1.0 - i as f64, 0.3)
            } else {
                c(0.1 * (i + 2 * j) as f64, -0.05)
            }
        });
        let n = CMatrix::from_fn(3, 3, |i, j| c((i * j) as f64, (i + j) as f64 * 0.1));
        let a = solve_lyapunov(&m, &n).unwrap();
        let b = solve_shifted_lyapunov(&m, &n, c(0.0, 0.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn resonant_shift_is_refused() {
        let m = -CMatrix::identity(1, 1);
        let n = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let err = solve_shifted_lyapunov(&m, &n, c(2.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularSuperoperator { .. }));
        let err = solve_lyapunov_kronecker(&m, &n, c(2.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularSuperoperator { .. }));
    }

    #[test]
    fn bartels_stewart_matches_reference_path() {
        let m = CMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                c(-0.5 - 0.2 * i as f64, 0.7 * i as f64)
            } else {
                c(0.05 * ((3 * i + j) % 5) as f64, 0.02 * ((i + 4 * j) % 3) as f64)
            }
        });
        let n = CMatrix::from_fn(5, 5, |i, j| c(((i + j) % 3) as f64, 0.1 * (i as f64 - j as f64)));
        for shift in [c(0.0, 0.0), c(0.0, 2.0), c(0.0, -2.0)] {
            let bs = solve_shifted_lyapunov(&m, &n, shift).unwrap();
            let kr = solve_lyapunov_kronecker(&m, &n, shift).unwrap();
            assert!(max_abs(&(&bs - &kr)) < 1e-12);
            assert!(lyapunov_residual(&m, &n, shift, &bs) < 1e-12);
        }
    }

    #[test]
    fn sorted_symmetric_eigen() {
        let (vals, vecs) = symmetric_eigen(&path3());
        let s2 = 2f64.sqrt();
        assert_relative_eq!(vals[0], -s2, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(vals[2], s2, epsilon = 1e-14);
        let recon = &vecs * RMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - path3()).amax() < 1e-14);
    }
}
