//! Coupling synthesis: from a target to the optomechanical couplings, detunings
//! and mechanical frequency offsets that engineer it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dump::MatrixDump;
use crate::error::{Error, Result};
use crate::numerics::{self, c, frobenius, symmetric_eigen, CMatrix, RMatrix, DEFAULT_TOL};
use crate::target::TargetSpec;

/// Relative tolerance of the `W^δ + Ḡ†DḠ = W^J` round trip.
pub const ROUND_TRIP_TOL: f64 = 1e-9;

/// Rows of `G` whose fit to the bare couplings is worse than this are infeasible.
pub const BARE_COUPLING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetuningPolicy {
    /// Resonant (or user-set) mechanics, detuning signs follow the eigenvalue signs.
    MixedSign,
    /// Mechanical offsets shift `W^J - W^δ` to be negative semidefinite so every `Δ_j > 0`.
    AllPositive,
}

impl std::fmt::Display for DetuningPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetuningPolicy::MixedSign => "mixed-sign",
            DetuningPolicy::AllPositive => "all-positive",
        })
    }
}

/// Inputs to [`synthesize`] beyond the target. Rates are in units of `ω0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub policy: DetuningPolicy,
    /// `|Δ_j|`: one value for all auxiliary modes, or one per mode.
    pub delta_magnitude: Vec<f64>,
    /// `κ_j` of the auxiliary modes, same length rule as `delta_magnitude`.
    pub kappa: Vec<f64>,
    /// Mechanical offsets `δω_k` for the mixed-sign policy; zero when absent.
    pub delta_omega: Option<Vec<f64>>,
    /// Target phase `arg α0` of the reservoir-mode couplings.
    pub drive_phase: f64,
    pub rank_tol: f64,
}

impl SynthesisOptions {
    pub fn new(policy: DetuningPolicy, delta: f64, kappa: f64) -> Self {
        Self {
            policy,
            delta_magnitude: vec![delta],
            kappa: vec![kappa],
            delta_omega: None,
            drive_phase: -std::f64::consts::FRAC_PI_2,
            rank_tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPlan {
    /// Couplings `G_{0,k}` of the reservoir mode, already rotated to the drive phase.
    pub g0: Vec<Complex64>,
    /// Rotation applied to the natural `G_{0,k}`; the matched bath phase is `φ0 + rotation`.
    pub g0_rotation: f64,
    /// `M × N` auxiliary couplings `Ḡ`.
    pub gbar: CMatrix,
    /// Signed `Δ_j`, `j = 1..M`.
    pub detunings: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Response factors `D_jj`.
    pub d_values: Vec<f64>,
    /// Retained eigenvalues `Λ̄` of `W^J - W^δ`.
    pub lambda: Vec<f64>,
    pub delta_omega: Vec<f64>,
    pub wj: RMatrix,
    pub policy: DetuningPolicy,
    /// `‖W^δ + Ḡ†DḠ - W^J‖ / ‖W^J‖`.
    pub round_trip_residual: f64,
    /// Imaginary/asymmetric part of the computed `W^J`, relative to `‖J̄‖`.
    pub wj_residual: f64,
}

impl CouplingPlan {
    pub fn n(&self) -> usize {
        self.g0.len()
    }

    pub fn m(&self) -> usize {
        self.gbar.nrows()
    }

    /// Stacked `(M+1) × N` coupling matrix, reservoir mode first.
    pub fn coupling_matrix(&self) -> CMatrix {
        let (m, n) = (self.m(), self.n());
        let mut g = CMatrix::zeros(m + 1, n);
        for k in 0..n {
            g[(0, k)] = self.g0[k];
        }
        g.view_mut((1, 0), (m, n)).copy_from(&self.gbar);
        g
    }

    /// `W^δ + Ḡ†DḠ` built from the plan itself.
    pub fn rebuilt_w(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.m(),
            self.d_values.iter().map(|&d| c(d, 0.0)),
        ));
        let wd = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n(),
            self.delta_omega.iter().map(|&d| c(d, 0.0)),
        ));
        wd + self.gbar.adjoint() * d * &self.gbar
    }

    pub fn to_dump(&self) -> PlanDump {
        PlanDump {
            n: self.n(),
            m: self.m(),
            policy: self.policy,
            g0: MatrixDump::from_vector(&self.g0),
            g0_rotation: self.g0_rotation,
            gbar: MatrixDump::from_complex(&self.gbar),
            detunings: self.detunings.clone(),
            kappa: self.kappa.clone(),
            d_values: self.d_values.clone(),
            lambda: self.lambda.clone(),
            delta_omega: self.delta_omega.clone(),
            wj: MatrixDump::from_real(&self.wj),
            round_trip_residual: self.round_trip_residual,
            wj_residual: self.wj_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlanDump {
    pub n: usize,
    pub m: usize,
    pub policy: DetuningPolicy,
    pub g0: MatrixDump,
    pub g0_rotation: f64,
    pub gbar: MatrixDump,
    pub detunings: Vec<f64>,
    pub kappa: Vec<f64>,
    pub d_values: Vec<f64>,
    pub lambda: Vec<f64>,
    pub delta_omega: Vec<f64>,
    pub wj: MatrixDump,
    pub round_trip_residual: f64,
    pub wj_residual: f64,
}

/// `W^J = i V Φ J̄ Φ* V†`, checked to be real symmetric.
pub fn wj_matrix(spec: &TargetSpec) -> Result<RMatrix> {
    wj_with_residual(spec).and_then(|(w, res)| {
        if res > DEFAULT_TOL {
            Err(Error::Constraint(format!(
                "W^J is not real symmetric (relative residual {res:.3e})"
            )))
        } else {
            Ok(w)
        }
    })
}

fn wj_with_residual(spec: &TargetSpec) -> Result<(RMatrix, f64)> {
    let jbar = numerics::to_complex(&spec.chain_matrix());
    let phi = spec.phi_matrix();
    let w = &spec.v * &phi * &jbar * phi.adjoint() * spec.v.adjoint() * c(0.0, 1.0);
    let scale = frobenius(&jbar);
    if scale == 0.0 {
        return Ok((RMatrix::zeros(spec.n(), spec.n()), 0.0));
    }
    let re = numerics::real_part(&w);
    let im = numerics::imag_part(&w);
    let asym = (&re - re.transpose()).norm();
    let residual = im.norm().max(asym) / scale;
    Ok(((&re + re.transpose()) * 0.5, residual))
}

/// Reservoir-mode couplings `G_{0,k} = -i J0 e^{-i(φ1 - φ0)/2} V*_{k,1}` rotated so their
/// common phase (mod π) becomes `drive_phase`. Returns the couplings and the rotation.
pub fn g0_vector(spec: &TargetSpec, drive_phase: f64) -> Result<(Vec<Complex64>, f64)> {
    let n = spec.n();
    let prefactor = c(0.0, -spec.j0) * Complex64::from_polar(1.0, -(spec.phi[0] - spec.phi_zero) / 2.0);
    let natural: Vec<Complex64> = (0..n).map(|k| prefactor * spec.v[(k, 0)].conj()).collect();
    let reference = natural
        .iter()
        .copied()
        .fold(c(0.0, 0.0), |b, z| if z.norm() > b.norm() { z } else { b });
    if reference.norm() == 0.0 {
        return Ok((natural, 0.0));
    }
    let psi = reference.arg();
    let mut worst: f64 = 0.0;
    for z in &natural {
        if z.norm() > 1e-12 * reference.norm() {
            let d = z.arg() - psi;
            worst = worst.max((d - (d / std::f64::consts::PI).round() * std::f64::consts::PI).abs());
        }
    }
    if worst > DEFAULT_TOL {
        return Err(Error::Constraint(format!(
            "reservoir couplings do not share a phase (deviation {worst:.3e} rad)"
        )));
    }
    let rotation = drive_phase - psi;
    let rot = Complex64::from_polar(1.0, rotation);
    Ok((natural.into_iter().map(|z| z * rot).collect(), rotation))
}

/// Eigendecomposition `W^J - W^δ = TᵀΛT` keeping `|λ| ≥ rank_tol·max|λ|`.
/// Returns `(Λ̄, T̄)` with `T̄` of shape `M × N`.
pub fn decompose_interaction(wj: &RMatrix, delta_omega: &[f64], rank_tol: f64) -> (Vec<f64>, RMatrix) {
    let n = wj.nrows();
    let mut diff = wj.clone();
    for k in 0..n {
        diff[(k, k)] -= delta_omega[k];
    }
    let (vals, vecs) = symmetric_eigen(&diff);
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return (Vec::new(), RMatrix::zeros(0, n));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i].abs() >= rank_tol * max).collect();
    let lambda = keep.iter().map(|&i| vals[i]).collect();
    let t = RMatrix::from_fn(keep.len(), n, |j, k| vecs[(k, keep[j])]);
    (lambda, t)
}

/// Mediated response `D(Δ) = -2Δ(κ² + Δ² - ω0²) / [(κ² + Δ² - ω0²)² + 4κ²ω0²]`.
pub fn response_d(kappa: f64, delta: f64, omega0: f64) -> f64 {
    let a = kappa * kappa + delta * delta - omega0 * omega0;
    -2.0 * delta * a / (a * a + 4.0 * kappa * kappa * omega0 * omega0)
}

fn expand(values: &[f64], m: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; m]),
        l if l == m => Ok(values.to_vec()),
        l => Err(Error::Config(format!(
            "{what} has {l} entries but synthesis needs {m} auxiliary modes"
        ))),
    }
}

/// Picks each `Δ_j = ±|Δ_j|` so that `D_jj Λ̄_j > 0`. Returns `(Δ_j, D_jj)`.
pub fn assign_detunings(lambda: &[f64], delta_mag: &[f64], kappa: &[f64], omega0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = lambda.len();
    let mut deltas = Vec::with_capacity(m);
    let mut ds = Vec::with_capacity(m);
    for j in 0..m {
        let (mag, k) = (delta_mag[j], kappa[j]);
        if !(mag > 0.0) || !(k > 0.0) {
            return Err(Error::Config(format!(
                "auxiliary mode {}: |Δ| and κ must be positive",
                j + 1
            )));
        }
        let a = k * k + mag * mag - omega0 * omega0;
        if a.abs() <= f64::EPSILON * (k * k + mag * mag + omega0 * omega0) {
            return Err(Error::Synthesis(format!(
                "D vanishes at |Δ| = {mag} for κ = {k}; choose a different detuning magnitude"
            )));
        }
        let d_plus = response_d(k, mag, omega0);
        let sign = if d_plus * lambda[j] > 0.0 { 1.0 } else { -1.0 };
        deltas.push(sign * mag);
        ds.push(sign * d_plus);
    }
    Ok((deltas, ds))
}

/// `Ḡ = √(D⁻¹Λ̄) T̄`.
pub fn coupling_matrix(lambda: &[f64], t: &RMatrix, d: &[f64]) -> Result<CMatrix> {
    let m = lambda.len();
    let mut g = CMatrix::zeros(m, t.ncols());
    for j in 0..m {
        let ratio = lambda[j] / d[j];
        if !(ratio > 0.0) {
            return Err(Error::Synthesis(format!(
                "D·Λ is not positive for auxiliary mode {}",
                j + 1
            )));
        }
        let s = ratio.sqrt();
        for k in 0..t.ncols() {
            g[(j, k)] = c(s * t[(j, k)], 0.0);
        }
    }
    Ok(g)
}

/// `δω_k = W^J_kk + δ0` with `δ0` the largest eigenvalue of the off-diagonal part of `W^J`.
pub fn positive_detuning_offsets(wj: &RMatrix) -> Vec<f64> {
    let n = wj.nrows();
    let mut off = wj.clone();
    off.fill_diagonal(0.0);
    let (vals, _) = symmetric_eigen(&off);
    let delta0 = if n == 0 { 0.0 } else { vals[n - 1] };
    (0..n).map(|k| wj[(k, k)] + delta0).collect()
}

pub fn synthesize(spec: &TargetSpec, opts: &SynthesisOptions) -> Result<CouplingPlan> {
    let n = spec.n();
    let (wj, wj_residual) = wj_with_residual(spec)?;
    if wj_residual > DEFAULT_TOL {
        return Err(Error::Constraint(format!(
            "W^J is not real symmetric (relative residual {wj_residual:.3e})"
        )));
    }
    let (g0, g0_rotation) = g0_vector(spec, opts.drive_phase)?;

    let delta_omega = match opts.policy {
        DetuningPolicy::AllPositive => positive_detuning_offsets(&wj),
        DetuningPolicy::MixedSign => match &opts.delta_omega {
            Some(d) if d.len() == n => d.clone(),
            Some(d) => {
                return Err(Error::Config(format!(
                    "delta_omega has {} entries for {n} modes",
                    d.len()
                )))
            }
            None => vec![0.0; n],
        },
    };
    let (lambda, t) = decompose_interaction(&wj, &delta_omega, opts.rank_tol);
    let m = lambda.len();
    let delta_mag = expand(&opts.delta_magnitude, m, "delta")?;
    let kappa = expand(&opts.kappa, m, "kappa")?;
    let (detunings, d_values) = assign_detunings(&lambda, &delta_mag, &kappa, 1.0)?;
    if opts.policy == DetuningPolicy::AllPositive {
        if let Some(j) = detunings.iter().position(|&d| d < 0.0) {
            return Err(Error::Synthesis(format!(
                "all-positive policy needs κ² + Δ² > ω0² (auxiliary mode {} would need Δ < 0)",
                j + 1
            )));
        }
    }
    let gbar = coupling_matrix(&lambda, &t, &d_values)?;

    let mut plan = CouplingPlan {
        g0,
        g0_rotation,
        gbar,
        detunings,
        kappa,
        d_values,
        lambda,
        delta_omega,
        wj,
        policy: opts.policy,
        round_trip_residual: 0.0,
        wj_residual,
    };
    let err = frobenius(&(plan.rebuilt_w() - numerics::to_complex(&plan.wj)));
    let scale = plan.wj.norm();
    plan.round_trip_residual = if scale > 0.0 { err / scale } else { err };
    if plan.round_trip_residual > ROUND_TRIP_TOL {
        return Err(Error::Validation {
            what: "synthesis round trip W^δ + Ḡ†DḠ = W^J",
            residual: plan.round_trip_residual,
            tol: ROUND_TRIP_TOL,
        });
    }
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveField {
    /// Intracavity amplitude `α_j`.
    #[serde(skip)]
    pub alpha: Complex64,
    /// Drive strength `E_j` (units of `ω0`).
    pub amplitude: f64,
    /// Drive phase `φ_Lj`.
    pub phase: f64,
}

/// Inverts `G_jk = g⁰_jk α_j` and `α_j = -i E_j e^{iφ_Lj} / (κ_j + iΔ_j)` row by row.
/// `bare` is `(M+1) × N` with the reservoir mode first, as are `kappa` and `delta`.
pub fn drive_parameters(plan: &CouplingPlan, bare: &RMatrix, kappa: &[f64], delta: &[f64]) -> Result<Vec<DriveField>> {
    let g = plan.coupling_matrix();
    if bare.shape() != g.shape() || kappa.len() != g.nrows() || delta.len() != g.nrows() {
        return Err(Error::Dimension(format!(
            "bare couplings {:?}, κ {} and Δ {} do not match G {:?}",
            bare.shape(),
            kappa.len(),
            delta.len(),
            g.shape()
        )));
    }
    let mut out = Vec::with_capacity(g.nrows());
    let mut worst = (0usize, 0.0f64);
    for j in 0..g.nrows() {
        let row_norm = g.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let bare_sq: f64 = bare.row(j).iter().map(|b| b * b).sum();
        let alpha = if bare_sq > 0.0 {
            (0..g.ncols()).map(|k| g[(j, k)] * bare[(j, k)]).sum::<Complex64>() / bare_sq
        } else {
            c(0.0, 0.0)
        };
        let miss = (0..g.ncols())
            .map(|k| (g[(j, k)] - alpha * bare[(j, k)]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let residual = if row_norm > 0.0 { miss / row_norm } else { 0.0 };
        if residual > worst.1 {
            worst = (j, residual);
        }
        let field = alpha * c(kappa[j], delta[j]) * c(0.0, 1.0);
        out.push(DriveField {
            alpha,
            amplitude: field.norm(),
            phase: field.arg(),
        });
    }
    if worst.1 > BARE_COUPLING_TOL {
        return Err(Error::BareCouplingInfeasible {
            row: worst.0,
            residual: worst.1,
        });
    }
    Ok(out)
}
