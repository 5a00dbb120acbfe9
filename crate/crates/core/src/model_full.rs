//! Full linear Langevin model of `M+1` driven cavity modes and `N` mechanical
//! modes. Mode order is `a_0 … a_M, b_1 … b_N` followed by their adjoints.
//! Rates and times are in units of `ω0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dump::MatrixDump;
use crate::error::{Error, Result};
use crate::metrics;
use crate::numerics::{self, c, CMatrix, LyapunovSolver, RMatrix};
use crate::synthesis::CouplingPlan;
use crate::target::quadrature_map;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;

/// Smallest stability margin (units of `ω0`) accepted before solving.
pub const STABILITY_GUARD: f64 = 1e-12;

/// Tolerance of the physicality check `E + iΩ ⪰ 0`.
pub const PHYSICALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalParams {
    /// Mechanical reference frequency in rad/s; only used for thermal occupations.
    pub omega0: f64,
    pub kappa0: f64,
    /// Detuning of the reservoir mode.
    pub delta0: f64,
    /// Carrier detuning of the squeezed reservoir drive.
    pub eps_l0: f64,
    /// Mechanical damping rates, one per mode.
    pub gamma: Vec<f64>,
    /// Kelvin.
    pub temperature: f64,
    pub r: f64,
    pub phi0: f64,
}

impl PhysicalParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.omega0 > 0.0) {
            return Err(Error::Config("omega0 must be positive".into()));
        }
        if !(self.kappa0 > 0.0) {
            return Err(Error::Config("kappa0 must be positive".into()));
        }
        if self.gamma.len() != n {
            return Err(Error::Dimension(format!(
                "{} damping rates for {n} mechanical modes",
                self.gamma.len()
            )));
        }
        if self.gamma.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::Config("gamma must be non-negative".into()));
        }
        if !(self.temperature >= 0.0) || !(self.r >= 0.0) {
            return Err(Error::Config("temperature and r must be non-negative".into()));
        }
        if ![self.delta0, self.eps_l0, self.phi0].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("delta0, eps_l0 and phi0 must be finite".into()));
        }
        Ok(())
    }
}

/// Bose–Einstein occupation `1/(e^{ħω/k_BT} - 1)`; zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// `(n_s, m_s) = (sinh²r, e^{2iφ0} sinh r cosh r)`.
pub fn squeezed_bath_moments(r: f64, phi0: f64) -> (f64, Complex64) {
    let (s, ch) = (r.sinh(), r.cosh());
    (s * s, Complex64::from_polar(s * ch, 2.0 * phi0))
}

#[derive(Debug, Clone)]
pub struct FullModel {
    pub drift: CMatrix,
    /// `N0 + N_n`.
    pub diff_static: CMatrix,
    /// `N_m⁻`, oscillating as `e^{-2iεt}`.
    pub diff_minus: CMatrix,
    /// `N_m⁺`, oscillating as `e^{+2iεt}`.
    pub diff_plus: CMatrix,
    pub eps_l0: f64,
    pub n_optical: usize,
    pub n_mech: usize,
}

impl FullModel {
    pub fn dim(&self) -> usize {
        2 * (self.n_optical + self.n_mech)
    }
}

pub fn assemble(params: &PhysicalParams, plan: &CouplingPlan) -> Result<FullModel> {
    let n = plan.n();
    params.validate(n)?;
    let m = plan.m() + 1;
    if plan.kappa.len() + 1 != m || plan.detunings.len() + 1 != m || plan.delta_omega.len() != n {
        return Err(Error::Dimension(
            "coupling plan vectors do not match its mode counts".into(),
        ));
    }
    let tot = m + n;
    let g = plan.coupling_matrix();
    let i = c(0.0, 1.0);

    let kappa: Vec<f64> = std::iter::once(params.kappa0)
        .chain(plan.kappa.iter().copied())
        .collect();
    let delta: Vec<f64> = std::iter::once(params.delta0)
        .chain(plan.detunings.iter().copied())
        .collect();
    let omega: Vec<f64> = plan.delta_omega.iter().map(|d| 1.0 + d).collect();

    let mut a = CMatrix::zeros(2 * tot, 2 * tot);
    let (ai, bi, adi, bdi) = (0, m, tot, tot + m);
    for j in 0..m {
        a[(ai + j, ai + j)] = c(kappa[j], delta[j]);
        a[(adi + j, adi + j)] = c(kappa[j], -delta[j]);
    }
    for k in 0..n {
        a[(bi + k, bi + k)] = c(params.gamma[k], omega[k]);
        a[(bdi + k, bdi + k)] = c(params.gamma[k], -omega[k]);
    }
    for j in 0..m {
        for k in 0..n {
            let gjk = g[(j, k)];
            // a rows
            a[(ai + j, bi + k)] = i * gjk;
            a[(ai + j, bdi + k)] = i * gjk;
            // b rows
            a[(bi + k, ai + j)] = i * gjk.conj();
            a[(bi + k, adi + j)] = i * gjk;
            // a† rows
            a[(adi + j, bi + k)] = -i * gjk.conj();
            a[(adi + j, bdi + k)] = -i * gjk.conj();
            // b† rows
            a[(bdi + k, ai + j)] = -i * gjk.conj();
            a[(bdi + k, adi + j)] = -i * gjk;
        }
    }
    let drift = -a;

    let (ns, ms) = squeezed_bath_moments(params.r, params.phi0);
    let mut diff = CMatrix::zeros(2 * tot, 2 * tot);
    for j in 0..m {
        diff[(ai + j, adi + j)] = c(2.0 * kappa[j], 0.0);
    }
    for k in 0..n {
        let nbar = thermal_occupation(params.omega0 * omega[k], params.temperature);
        diff[(bi + k, bdi + k)] = c(2.0 * params.gamma[k] * (1.0 + nbar), 0.0);
        diff[(bdi + k, bi + k)] = c(2.0 * params.gamma[k] * nbar, 0.0);
    }
    diff[(ai, adi)] += c(2.0 * params.kappa0 * ns, 0.0);
    diff[(adi, ai)] += c(2.0 * params.kappa0 * ns, 0.0);
    let mut minus = CMatrix::zeros(2 * tot, 2 * tot);
    minus[(ai, ai)] = ms * (2.0 * params.kappa0);
    let mut plus = CMatrix::zeros(2 * tot, 2 * tot);
    plus[(adi, adi)] = ms.conj() * (2.0 * params.kappa0);

    Ok(FullModel {
        drift,
        diff_static: diff,
        diff_minus: minus,
        diff_plus: plus,
        eps_l0: params.eps_l0,
        n_optical: m,
        n_mech: n,
    })
}

/// `-max Re λ(drift)`; positive means stable.
pub fn stability_margin(model: &FullModel) -> Result<f64> {
    Ok(margin_of(&numerics::eigenvalues(&model.drift)?))
}

pub(crate) fn margin_of(eigs: &[Complex64]) -> f64 {
    -eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    /// Mechanical quadrature covariance, ordered `(x_1 … x_N, p_1 … p_N)`.
    pub covariance: RMatrix,
    pub stability_margin: f64,
    /// Worst relative Lyapunov residual of the solves.
    pub lyapunov_residual: f64,
    /// Largest imaginary part discarded from the covariance.
    pub imag_residual: f64,
    pub min_symplectic: f64,
    pub physical: bool,
}

impl SteadyStateResult {
    pub fn to_dump(&self) -> SteadyDump {
        SteadyDump {
            covariance: MatrixDump::from_real(&self.covariance),
            stability_margin: self.stability_margin,
            lyapunov_residual: self.lyapunov_residual,
            imag_residual: self.imag_residual,
            min_symplectic: self.min_symplectic,
            physical: self.physical,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyDump {
    pub covariance: MatrixDump,
    pub stability_margin: f64,
    pub lyapunov_residual: f64,
    pub imag_residual: f64,
    pub min_symplectic: f64,
    pub physical: bool,
}

/// Steady-state mechanical covariance at time `t` (units of `1/ω0`).
pub fn steady_covariance(model: &FullModel, t: f64) -> Result<SteadyStateResult> {
    let solver = LyapunovSolver::new(&model.drift)?;
    let margin = margin_of(&solver.eigenvalues());
    if !(margin > STABILITY_GUARD) {
        return Err(Error::Unstable { margin });
    }
    let two_eps = c(0.0, 2.0 * model.eps_l0);
    let mut parts = vec![(&model.diff_static, c(0.0, 0.0), c(1.0, 0.0))];
    if numerics::max_abs(&model.diff_minus) > 0.0 {
        parts.push((
            &model.diff_minus,
            two_eps,
            Complex64::from_polar(1.0, -2.0 * model.eps_l0 * t),
        ));
        parts.push((
            &model.diff_plus,
            -two_eps,
            Complex64::from_polar(1.0, 2.0 * model.eps_l0 * t),
        ));
    }
    let dim = model.dim();
    let mut corr = CMatrix::zeros(dim, dim);
    let mut residual: f64 = 0.0;
    for (n, shift, phase) in parts {
        let sol = solver.solve(n, shift)?;
        residual = residual.max(numerics::lyapunov_residual(&model.drift, n, shift, &sol));
        corr += sol * phase;
    }

    let (m, nm) = (model.n_optical, model.n_mech);
    let tot = m + nm;
    let idx: Vec<usize> = (m..tot).chain(tot + m..2 * tot).collect();
    let rot = Complex64::from_polar(1.0, t);
    let cb = CMatrix::from_fn(2 * nm, 2 * nm, |r, s| {
        let pr = if r < nm { rot } else { rot.conj() };
        let ps = if s < nm { rot } else { rot.conj() };
        pr * corr[(idx[r], idx[s])] * ps
    });
    let covariance = mechanical_covariance(&cb);
    let e = covariance.0;
    let sym = if nm > 0 {
        metrics::purity_check(&e)?.min_symplectic
    } else {
        1.0
    };
    let physical = sym >= 1.0 - PHYSICALITY_TOL;
    if !physical {
        log::warn!("steady covariance violates E + iΩ ⪰ 0 (min symplectic eigenvalue {sym:.6e})");
    }
    Ok(SteadyStateResult {
        covariance: e,
        stability_margin: margin,
        lyapunov_residual: residual,
        imag_residual: covariance.1,
        min_symplectic: sym,
        physical,
    })
}

/// `E = R (C + Cᵀ)/2 Rᵀ` for a mechanical correlation matrix ordered `(b, b†)`.
/// Returns the symmetrized real part and the largest discarded imaginary part.
pub fn mechanical_covariance(cb: &CMatrix) -> (RMatrix, f64) {
    let n = cb.nrows() / 2;
    let r = quadrature_map(n);
    let e = &r * ((cb + cb.transpose()) * c(0.5, 0.0)) * r.transpose();
    let imag = numerics::imag_part(&e).amax();
    let re = numerics::real_part(&e);
    ((&re + re.transpose()) * 0.5, imag)
}
