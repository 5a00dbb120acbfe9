//! Single-point evaluation: synthesize, assemble, stability-gate, solve and score.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{fidelity, nullifier_matrix, nullifier_variances};
use crate::model_effective::{adiabatic_report, AdiabaticReport, AdiabaticThresholds};
use crate::model_full::{
    assemble, stability_margin, steady_covariance, PhysicalParams, SteadyStateResult, STABILITY_GUARD,
};
use crate::numerics::RMatrix;
use crate::synthesis::{synthesize, CouplingPlan, SynthesisOptions};
use crate::target::{target_covariance, TargetSpec};

/// Squeezing phase of the reservoir bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathPhase {
    /// Follow the reservoir-coupling rotation chosen by synthesis.
    Matched,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: TargetSpec,
    pub synthesis: SynthesisOptions,
    /// Physical parameters; `phi0` is overwritten when `bath_phase` is matched.
    pub params: PhysicalParams,
    pub bath_phase: BathPhase,
    pub thresholds: AdiabaticThresholds,
    /// Evaluation time in units of `1/ω0`.
    pub time: f64,
}

impl Scenario {
    /// Synthesizes the coupling plan and resolves the bath phase.
    pub fn prepare(&self) -> Result<(CouplingPlan, PhysicalParams)> {
        let plan = synthesize(&self.spec, &self.synthesis)?;
        let mut params = self.params.clone();
        if let BathPhase::Matched = self.bath_phase {
            params.phi0 = self.spec.phi_zero + plan.g0_rotation;
        } else if let BathPhase::Fixed(p) = self.bath_phase {
            params.phi0 = p;
        }
        Ok((plan, params))
    }

    /// Same scenario with the reservoir coupling `J0` and every chain coupling set to `j`.
    pub fn with_couplings(&self, j0: f64, j: f64) -> Self {
        let mut out = self.clone();
        out.spec.j0 = j0;
        out.spec.chain.iter_mut().for_each(|c| *c = j);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Stable,
    Unstable,
}

#[derive(Debug, Clone)]
pub struct PointMetrics {
    pub fidelity: f64,
    pub nullifier_variances: Vec<f64>,
    pub steady: SteadyStateResult,
}

impl PointMetrics {
    pub fn max_nullifier(&self) -> f64 {
        self.nullifier_variances
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_nullifier(&self) -> f64 {
        self.nullifier_variances.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub plan: CouplingPlan,
    pub params: PhysicalParams,
    pub status: PointStatus,
    pub stability_margin: f64,
    pub adiabatic: AdiabaticReport,
    /// `None` for unstable points.
    pub metrics: Option<PointMetrics>,
}

pub fn evaluate_point(scenario: &Scenario) -> Result<PointOutcome> {
    let (plan, params) = scenario.prepare()?;
    let model = assemble(&params, &plan)?;
    let adiabatic = adiabatic_report(&plan, &scenario.thresholds);
    let margin = stability_margin(&model)?;
    if !(margin > STABILITY_GUARD) {
        return Ok(PointOutcome {
            plan,
            params,
            status: PointStatus::Unstable,
            stability_margin: margin,
            adiabatic,
            metrics: None,
        });
    }
    let steady = match steady_covariance(&model, scenario.time) {
        Ok(s) => s,
        Err(Error::Unstable { margin }) => {
            return Ok(PointOutcome {
                plan,
                params,
                status: PointStatus::Unstable,
                stability_margin: margin,
                adiabatic,
                metrics: None,
            })
        }
        Err(e) => return Err(e),
    };
    let metrics = score(&scenario.spec, steady)?;
    Ok(PointOutcome {
        plan,
        params,
        status: PointStatus::Stable,
        stability_margin: metrics.steady.stability_margin,
        adiabatic,
        metrics: Some(metrics),
    })
}

/// Fidelity to the target and nullifier variances of a mechanical covariance.
pub fn score(spec: &TargetSpec, steady: SteadyStateResult) -> Result<PointMetrics> {
    let target: RMatrix = target_covariance(spec);
    let f = fidelity(&steady.covariance, &target)?;
    let q = nullifier_matrix(&spec.graph, &spec.theta)?;
    let nullifier_variances = nullifier_variances(&steady.covariance, &q)?;
    Ok(PointMetrics {
        fidelity: f,
        nullifier_variances,
        steady,
    })
}
