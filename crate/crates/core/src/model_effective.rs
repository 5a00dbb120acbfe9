//! Effective model with the auxiliary cavity modes adiabatically eliminated:
//! the reservoir mode `a_0` plus `N` mechanical modes with photon-mediated
//! coupling `W`, damping `Y` and noise, in the frame rotating at `ω0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_full::{
    margin_of, mechanical_covariance, squeezed_bath_moments, thermal_occupation, PhysicalParams, STABILITY_GUARD,
};
use crate::numerics::{self, c, CMatrix, LyapunovSolver, RMatrix};
use crate::synthesis::{response_d, CouplingPlan};

/// Which physical contributions enter the effective model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EffectiveFlags {
    /// Use the engineered `W^J` instead of the mediated `W^δ + Ḡ†DḠ`.
    pub engineered_hamiltonian: bool,
    /// Photon-mediated damping `Y_opt`.
    pub optical_dissipation: bool,
    /// Photon-mediated noise on the mechanics.
    pub optical_noise: bool,
    /// Intrinsic damping `γ_k` with its thermal noise.
    pub mechanical_damping: bool,
}

impl EffectiveFlags {
    /// Engineered Hamiltonian and the squeezed reservoir only.
    pub fn ideal() -> Self {
        Self {
            engineered_hamiltonian: true,
            optical_dissipation: false,
            optical_noise: false,
            mechanical_damping: false,
        }
    }

    pub fn realistic() -> Self {
        Self {
            engineered_hamiltonian: false,
            optical_dissipation: true,
            optical_noise: true,
            mechanical_damping: true,
        }
    }
}

fn denominator(kappa: f64, delta: f64) -> f64 {
    let a = kappa * kappa + delta * delta - 1.0;
    a * a + 4.0 * kappa * kappa
}

/// `Σ_j w_j G*_{jk} G_{jk'}`, real part.
fn weighted_gram(plan: &CouplingPlan, weight: impl Fn(usize) -> f64) -> RMatrix {
    let n = plan.n();
    let g = &plan.gbar;
    let mut out = CMatrix::zeros(n, n);
    for j in 0..plan.m() {
        let w = weight(j);
        for k in 0..n {
            for kp in 0..n {
                out[(k, kp)] += g[(j, k)].conj() * g[(j, kp)] * w;
            }
        }
    }
    numerics::real_part(&out)
}

/// `W = W^δ + Ḡ†DḠ`.
pub fn w_matrix(plan: &CouplingPlan) -> RMatrix {
    let mut w = weighted_gram(plan, |j| response_d(plan.kappa[j], plan.detunings[j], 1.0));
    for k in 0..plan.n() {
        w[(k, k)] += plan.delta_omega[k];
    }
    w
}

/// Photon-mediated part of `Y`: `Σ_j 4 G*_{jk} G_{jk'} Δ_j κ_j ω0 / [(κ_j² + Δ_j² - ω0²)² + 4κ_j²ω0²]`.
pub fn optical_damping(plan: &CouplingPlan) -> RMatrix {
    weighted_gram(plan, |j| {
        let (k, d) = (plan.kappa[j], plan.detunings[j]);
        4.0 * d * k / denominator(k, d)
    })
}

/// `Y = diag(γ_k) + Y_opt`.
pub fn y_matrix(plan: &CouplingPlan, params: &PhysicalParams) -> RMatrix {
    let mut y = optical_damping(plan);
    for k in 0..plan.n() {
        y[(k, k)] += params.gamma[k];
    }
    y
}

/// Photon-mediated noise blocks `(⟨y y†⟩, ⟨y† y⟩)`, Lorentzian-weighted at the
/// `-ω0` and `+ω0` responses respectively.
pub fn optical_noise(plan: &CouplingPlan) -> (RMatrix, RMatrix) {
    let lorentz = |j: usize, shift: f64| {
        let (k, d) = (plan.kappa[j], plan.detunings[j]);
        2.0 * k / (k * k + (d + shift) * (d + shift))
    };
    let plus = weighted_gram(plan, |j| lorentz(j, -1.0));
    let minus = weighted_gram(plan, |j| lorentz(j, 1.0)).transpose();
    (plus, minus)
}

#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub w: RMatrix,
    pub y: RMatrix,
    pub noise_plus: RMatrix,
    pub noise_minus: RMatrix,
    pub flags: EffectiveFlags,
    pub drift: CMatrix,
    pub diffusion: CMatrix,
}

pub fn build(plan: &CouplingPlan, params: &PhysicalParams, flags: EffectiveFlags) -> Result<EffectiveModel> {
    let n = plan.n();
    params.validate(n)?;
    let w = if flags.engineered_hamiltonian {
        plan.wj.clone()
    } else {
        w_matrix(plan)
    };
    let mut y = RMatrix::zeros(n, n);
    if flags.optical_dissipation {
        y += optical_damping(plan);
    }
    if flags.mechanical_damping {
        for k in 0..n {
            y[(k, k)] += params.gamma[k];
        }
    }
    let (mut noise_plus, mut noise_minus) = (RMatrix::zeros(n, n), RMatrix::zeros(n, n));
    if flags.optical_noise {
        (noise_plus, noise_minus) = optical_noise(plan);
    }

    let m = n + 1;
    let i = c(0.0, 1.0);
    let mut a = CMatrix::zeros(m, m);
    a[(0, 0)] = -c(params.kappa0, params.delta0 - params.eps_l0);
    for k in 0..n {
        a[(0, 1 + k)] = -i * plan.g0[k];
        a[(1 + k, 0)] = -i * plan.g0[k].conj();
        for kp in 0..n {
            a[(1 + k, 1 + kp)] = -c(y[(k, kp)], w[(k, kp)]);
        }
    }
    let mut drift = CMatrix::zeros(2 * m, 2 * m);
    drift.view_mut((0, 0), (m, m)).copy_from(&a);
    drift.view_mut((m, m), (m, m)).copy_from(&a.conjugate());

    let (ns, ms) = squeezed_bath_moments(params.r, params.phi0);
    let k0 = 2.0 * params.kappa0;
    let mut diff = CMatrix::zeros(2 * m, 2 * m);
    diff[(0, m)] = c(k0 * (1.0 + ns), 0.0);
    diff[(m, 0)] = c(k0 * ns, 0.0);
    diff[(0, 0)] = ms * k0;
    diff[(m, m)] = ms.conj() * k0;
    for k in 0..n {
        for kp in 0..n {
            diff[(1 + k, m + 1 + kp)] = c(noise_plus[(k, kp)], 0.0);
            diff[(m + 1 + k, 1 + kp)] = c(noise_minus[(k, kp)], 0.0);
        }
        if flags.mechanical_damping {
            let nbar = thermal_occupation(params.omega0 * (1.0 + plan.delta_omega[k]), params.temperature);
            diff[(1 + k, m + 1 + k)] += c(2.0 * params.gamma[k] * (1.0 + nbar), 0.0);
            diff[(m + 1 + k, 1 + k)] += c(2.0 * params.gamma[k] * nbar, 0.0);
        }
    }
    Ok(EffectiveModel {
        w,
        y,
        noise_plus,
        noise_minus,
        flags,
        drift,
        diffusion: diff,
    })
}

#[derive(Debug, Clone)]
pub struct EffectiveSteady {
    pub covariance: RMatrix,
    pub stability_margin: f64,
    pub lyapunov_residual: f64,
}

pub fn effective_steady(
    plan: &CouplingPlan,
    params: &PhysicalParams,
    flags: EffectiveFlags,
) -> Result<EffectiveSteady> {
    let model = build(plan, params, flags)?;
    let solver = LyapunovSolver::new(&model.drift)?;
    let margin = margin_of(&solver.eigenvalues());
    if !(margin > STABILITY_GUARD) {
        return Err(Error::Unstable { margin });
    }
    let corr = solver.solve(&model.diffusion, c(0.0, 0.0))?;
    let residual = numerics::lyapunov_residual(&model.drift, &model.diffusion, c(0.0, 0.0), &corr);
    let n = plan.n();
    let m = n + 1;
    let idx: Vec<usize> = (1..m).chain(m + 1..2 * m).collect();
    let cb = CMatrix::from_fn(2 * n, 2 * n, |r, s| corr[(idx[r], idx[s])]);
    Ok(EffectiveSteady {
        covariance: mechanical_covariance(&cb).0,
        stability_margin: margin,
        lyapunov_residual: residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticThresholds {
    pub coupling: f64,
    pub dissipation: f64,
    pub y_over_w: f64,
}

impl Default for AdiabaticThresholds {
    fn default() -> Self {
        Self {
            coupling: 0.05,
            dissipation: 0.05,
            y_over_w: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticReport {
    /// `max_{j,k} |G_jk| / |κ_j + iΔ_j|` over the eliminated modes.
    pub coupling_ratio: f64,
    /// `max_j 2κ_jω0 / |κ_j² + Δ_j² - ω0²|`.
    pub dissipation_ratio: f64,
    /// `max|Y_opt| / max|W|`; zero when `W` vanishes.
    pub y_over_w: f64,
    pub valid: bool,
}

pub fn adiabatic_report(plan: &CouplingPlan, thresholds: &AdiabaticThresholds) -> AdiabaticReport {
    let mut coupling_ratio: f64 = 0.0;
    let mut dissipation_ratio: f64 = 0.0;
    for j in 0..plan.m() {
        let (k, d) = (plan.kappa[j], plan.detunings[j]);
        let scale = c(k, d).norm();
        for kk in 0..plan.n() {
            coupling_ratio = coupling_ratio.max(plan.gbar[(j, kk)].norm() / scale);
        }
        dissipation_ratio = dissipation_ratio.max(2.0 * k / (k * k + d * d - 1.0).abs());
    }
    let w_max = w_matrix(plan).amax();
    let y_over_w = if w_max > 0.0 {
        optical_damping(plan).amax() / w_max
    } else {
        0.0
    };
    let valid = coupling_ratio <= thresholds.coupling
        && dissipation_ratio <= thresholds.dissipation
        && y_over_w <= thresholds.y_over_w;
    AdiabaticReport {
        coupling_ratio,
        dissipation_ratio,
        y_over_w,
        valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::grid_graph;
    use crate::metrics::fidelity;
    use crate::synthesis::{synthesize, DetuningPolicy, SynthesisOptions};
    use crate::target::{rect_target, target_covariance};

    fn params(n: usize, r: f64) -> PhysicalParams {
        PhysicalParams {
            omega0: 2.0 * std::f64::consts::PI * 1e9,
            kappa0: 0.01,
            delta0: 1.0,
            eps_l0: 1.0,
            gamma: vec![0.0; n],
            temperature: 0.0,
            r,
            phi0: -std::f64::consts::FRAC_PI_2,
        }
    }

    #[test]
    fn ideal_model_reaches_the_target() {
        for (rows, cols) in [(1, 3), (2, 3)] {
            for r in [0.5, 1.0] {
                let spec = rect_target(&grid_graph(rows, cols).unwrap(), 3.4e-3, 0.6e-3, r).unwrap();
                let plan = synthesize(&spec, &SynthesisOptions::new(DetuningPolicy::MixedSign, 30.0, 0.01)).unwrap();
                let st = effective_steady(&plan, &params(spec.n(), r), EffectiveFlags::ideal()).unwrap();
                let f = fidelity(&st.covariance, &target_covariance(&spec)).unwrap();
                assert!(f > 1.0 - 1e-9, "{rows}x{cols} r={r}: {f}");
            }
        }
    }

    #[test]
    fn unsqueezed_ideal_model_is_vacuum() {
        let spec = rect_target(&grid_graph(1, 3).unwrap(), 3.4e-3, 0.6e-3, 0.0).unwrap();
        let plan = synthesize(&spec, &SynthesisOptions::new(DetuningPolicy::MixedSign, 30.0, 0.01)).unwrap();
        let st = effective_steady(&plan, &params(3, 0.0), EffectiveFlags::ideal()).unwrap();
        assert!((st.covariance - RMatrix::identity(6, 6)).amax() < 1e-9);
    }

    #[test]
    fn mediated_w_matches_engineered() {
        let spec = rect_target(&grid_graph(1, 3).unwrap(), 3.4e-3, 0.6e-3, 1.0).unwrap();
        let plan = synthesize(&spec, &SynthesisOptions::new(DetuningPolicy::MixedSign, 30.0, 0.01)).unwrap();
        let w = w_matrix(&plan);
        assert!((&w - &plan.wj).norm() / plan.wj.norm() < 1e-9);
        assert!((&w - w.transpose()).amax() < 1e-10 * w.amax());
        let mut y = y_matrix(&plan, &params(3, 1.0));
        y = (&y + y.transpose()) * 0.5;
        assert!((&y - y_matrix(&plan, &params(3, 1.0))).amax() < 1e-18);

        // Large-detuning asymptote of W.
        let mut asym = RMatrix::zeros(3, 3);
        for j in 0..plan.m() {
            for k in 0..3 {
                for kp in 0..3 {
                    asym[(k, kp)] -= 2.0 * plan.gbar[(j, k)].re * plan.gbar[(j, kp)].re / plan.detunings[j];
                }
            }
        }
        assert!((&asym - &w).norm() / w.norm() < 0.01);
    }

    #[test]
    fn empty_plan_reduces_to_offsets() {
        let spec = rect_target(&grid_graph(1, 2).unwrap(), 1e-3, 0.0, 1.0).unwrap();
        let mut opts = SynthesisOptions::new(DetuningPolicy::MixedSign, 30.0, 0.01);
        opts.delta_omega = Some(vec![0.0, 0.0]);
        let plan = synthesize(&spec, &opts).unwrap();
        assert_eq!(plan.m(), 0);
        assert_eq!(w_matrix(&plan), RMatrix::zeros(2, 2));
        let mut p = params(2, 0.0);
        p.gamma = vec![1e-6, 2e-6];
        assert_eq!(
            y_matrix(&plan, &p),
            RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1e-6, 2e-6]))
        );
        let rep = adiabatic_report(&plan, &AdiabaticThresholds::default());
        assert_eq!((rep.coupling_ratio, rep.y_over_w), (0.0, 0.0));
    }

    #[test]
    fn adiabatic_flags() {
        let spec = rect_target(&grid_graph(1, 3).unwrap(), 3.4e-3, 0.6e-3, 1.0).unwrap();
        let plan = synthesize(&spec, &SynthesisOptions::new(DetuningPolicy::MixedSign, 30.0, 0.01)).unwrap();
        let rep = adiabatic_report(&plan, &AdiabaticThresholds::default());
        assert!(rep.valid, "{rep:?}");
        let plan = synthesize(&spec, &SynthesisOptions::new(DetuningPolicy::MixedSign, 1.0, 1.0)).unwrap();
        let rep = adiabatic_report(&plan, &AdiabaticThresholds::default());
        assert!((rep.dissipation_ratio - 2.0).abs() < 1e-12);
        assert!(!rep.valid);
    }
}
