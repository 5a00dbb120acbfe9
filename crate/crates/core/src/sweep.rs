//! Parameter sweeps over `(κ, Δ)` or `(γ, T)` and the `(J0, J)` optimizer.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{evaluate_point, PointStatus, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxes {
    /// Optical decay rate (all modes) and auxiliary detuning magnitude.
    KappaDelta,
    /// Mechanical damping (all modes) and temperature.
    GammaTemperature,
}

impl SweepAxes {
    pub fn names(self) -> (&'static str, &'static str) {
        match self {
            SweepAxes::KappaDelta => ("kappa", "delta"),
            SweepAxes::GammaTemperature => ("gamma", "temperature"),
        }
    }

    /// Scenario at one grid point.
    pub fn apply(self, base: &Scenario, a: f64, b: f64) -> Scenario {
        let mut s = base.clone();
        match self {
            SweepAxes::KappaDelta => {
                s.params.kappa0 = a;
                s.synthesis.kappa = vec![a];
                s.synthesis.delta_magnitude = vec![b];
            }
            SweepAxes::GammaTemperature => {
                s.params.gamma = vec![a; s.spec.n()];
                s.params.temperature = b;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `points` values from `min` to `max` inclusive.
pub fn axis_values(min: f64, max: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if points == 0 || !min.is_finite() || !max.is_finite() || min > max {
        return Err(Error::Config(format!(
            "invalid axis [{min}, {max}] with {points} points"
        )));
    }
    if spacing == Spacing::Log && !(min > 0.0) {
        return Err(Error::Config("log-spaced axes need a positive minimum".into()));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    Ok((0..points)
        .map(|i| match (i, spacing) {
            // Endpoints exactly as configured.
            (0, _) => min,
            (i, _) if i == points - 1 => max,
            (_, Spacing::Linear) => min + (max - min) * step(i),
            (_, Spacing::Log) => (min.ln() + (max.ln() - min.ln()) * step(i)).exp().clamp(min, max),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Stable,
    Unstable,
    /// Synthesis has no solution at this point (for example the all-positive
    /// policy below `κ² + Δ² = ω0²`).
    Infeasible,
}

impl RecordStatus {
    fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Stable => "stable",
            RecordStatus::Unstable => "unstable",
            RecordStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub a: f64,
    pub b: f64,
    pub status: RecordStatus,
    pub stability_margin: Option<f64>,
    pub fidelity: Option<f64>,
    pub max_nullifier_var: Option<f64>,
    pub min_nullifier_var: Option<f64>,
    pub coupling_ratio: Option<f64>,
    pub dissipation_ratio: Option<f64>,
    pub y_over_w: Option<f64>,
}

pub fn evaluate_record(base: &Scenario, axes: SweepAxes, a: f64, b: f64) -> Result<SweepRecord> {
    let scenario = axes.apply(base, a, b);
    let outcome = match evaluate_point(&scenario) {
        Ok(o) => o,
        Err(Error::Synthesis(msg)) => {
            log::debug!("({a}, {b}) infeasible: {msg}");
            return Ok(SweepRecord {
                a,
                b,
                status: RecordStatus::Infeasible,
                stability_margin: None,
                fidelity: None,
                max_nullifier_var: None,
                min_nullifier_var: None,
                coupling_ratio: None,
                dissipation_ratio: None,
                y_over_w: None,
            });
        }
        Err(e) => return Err(e),
    };
    let m = outcome.metrics.as_ref();
    Ok(SweepRecord {
        a,
        b,
        status: match outcome.status {
            PointStatus::Stable => RecordStatus::Stable,
            PointStatus::Unstable => RecordStatus::Unstable,
        },
        stability_margin: Some(outcome.stability_margin),
        fidelity: m.map(|m| m.fidelity),
        max_nullifier_var: m.map(|m| m.max_nullifier()),
        min_nullifier_var: m.map(|m| m.min_nullifier()),
        coupling_ratio: Some(outcome.adiabatic.coupling_ratio),
        dissipation_ratio: Some(outcome.adiabatic.dissipation_ratio),
        y_over_w: Some(outcome.adiabatic.y_over_w),
    })
}

/// Evaluates every `(a, b)` pair, `a` varying slowest. Points run in parallel;
/// the output order is fixed.
pub fn run_sweep(base: &Scenario, axes: SweepAxes, a_values: &[f64], b_values: &[f64]) -> Result<Vec<SweepRecord>> {
    let points: Vec<(f64, f64)> = a_values
        .iter()
        .flat_map(|&a| b_values.iter().map(move |&b| (a, b)))
        .collect();
    points
        .par_iter()
        .map(|&(a, b)| evaluate_record(base, axes, a, b))
        .collect()
}

pub fn write_csv<W: Write>(out: W, axes: SweepAxes, records: &[SweepRecord]) -> Result<()> {
    let (a, b) = axes.names();
    let mut w = csv::Writer::from_writer(out);
    let map_csv = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        a,
        b,
        "status",
        "stability_margin",
        "fidelity",
        "max_nullifier_var",
        "min_nullifier_var",
        "coupling_ratio",
        "dissipation_ratio",
        "y_over_w",
    ])
    .map_err(map_csv)?;
    // Shortest representation that round-trips exactly.
    let fmt = |v: f64| format!("{v:e}");
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    for r in records {
        w.write_record([
            fmt(r.a),
            fmt(r.b),
            r.status.as_str().to_string(),
            opt(r.stability_margin),
            opt(r.fidelity),
            opt(r.max_nullifier_var),
            opt(r.min_nullifier_var),
            opt(r.coupling_ratio),
            opt(r.dissipation_ratio),
            opt(r.y_over_w),
        ])
        .map_err(map_csv)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainBounds {
    pub j0: (f64, f64),
    pub j: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub grid: usize,
    pub max_evals: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            grid: 12,
            max_evals: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainOptimum {
    pub j0: f64,
    pub j: f64,
    pub fidelity: f64,
    /// Best fidelity seen on the coarse grid.
    pub grid_fidelity: f64,
    pub evaluations: usize,
}

/// Full-model fidelity at `(J0, J)`, or `None` when the point is unstable or infeasible.
pub fn chain_objective(base: &Scenario, j0: f64, j: f64) -> Result<Option<f64>> {
    match evaluate_point(&base.with_couplings(j0, j)) {
        Ok(o) => Ok(o.metrics.map(|m| m.fidelity)),
        Err(Error::Synthesis(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Maximizes the full-model fidelity over `(J0, J)`: a log-spaced grid followed
/// by a Nelder–Mead simplex in log space started at the best grid point.
pub fn optimize_chain(base: &Scenario, bounds: ChainBounds, opts: OptimizerOptions) -> Result<ChainOptimum> {
    for (lo, hi) in [bounds.j0, bounds.j] {
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::Config(format!(
                "optimizer bounds [{lo}, {hi}] must be positive and ordered"
            )));
        }
    }
    let lo = [bounds.j0.0.log10(), bounds.j.0.log10()];
    let hi = [bounds.j0.1.log10(), bounds.j.1.log10()];
    let grid = opts.grid.max(1);
    let count = |(lo, hi): (f64, f64)| if lo == hi { 1 } else { grid };
    let axis0 = axis_values(bounds.j0.0, bounds.j0.1, count(bounds.j0), Spacing::Log)?;
    let axis1 = axis_values(bounds.j.0, bounds.j.1, count(bounds.j), Spacing::Log)?;
    let points: Vec<(f64, f64)> = axis0.iter().flat_map(|&a| axis1.iter().map(move |&b| (a, b))).collect();
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|&(a, b)| chain_objective(base, a, b))
        .collect::<Result<_>>()?;
    let mut evaluations = points.len();
    let (best_idx, grid_fidelity) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|f| (i, f)))
        .fold(None, |acc: Option<(usize, f64)>, (i, f)| match acc {
            Some((_, bf)) if bf >= f => acc,
            _ => Some((i, f)),
        })
        .ok_or_else(|| Error::Optimization("every grid point is unstable".into()))?;
    let start = [points[best_idx].0.log10(), points[best_idx].1.log10()];

    let clamp = |x: [f64; 2]| [x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])];
    let mut cost = |x: [f64; 2]| -> Result<f64> {
        evaluations += 1;
        let x = clamp(x);
        Ok(chain_objective(base, 10f64.powf(x[0]), 10f64.powf(x[1]))?.map_or(f64::INFINITY, |f| -f))
    };

    let budget = opts.max_evals;
    let mut best = (points[best_idx], grid_fidelity);
    if budget > 0 && (hi[0] > lo[0] || hi[1] > lo[1]) {
        let step = |i: usize| {
            if grid > 1 {
                (hi[i] - lo[i]) / (grid - 1) as f64
            } else {
                hi[i] - lo[i]
            }
        };
        let mut simplex = [
            (start, -grid_fidelity),
            (clamp([start[0] + step(0), start[1]]), 0.0),
            (clamp([start[0], start[1] + step(1)]), 0.0),
        ];
        for vertex in simplex.iter_mut().skip(1) {
            if vertex.0 == start {
                vertex.0 = clamp([start[0] - step(0), start[1] - step(1)]);
            }
            vertex.1 = cost(vertex.0)?;
        }
        let mut used = 2;
        while used + 4 <= budget {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = (simplex[2].1 - simplex[0].1).abs();
            let size = simplex
                .iter()
                .map(|p| (p.0[0] - simplex[0].0[0]).abs().max((p.0[1] - simplex[0].0[1]).abs()))
                .fold(0.0, f64::max);
            if size < 1e-7 || (spread < 1e-13 && size < 1e-4) {
                break;
            }
            let centroid = [
                (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
                (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
            ];
            let along = |t: f64| {
                clamp([
                    centroid[0] + t * (simplex[2].0[0] - centroid[0]),
                    centroid[1] + t * (simplex[2].0[1] - centroid[1]),
                ])
            };
            let xr = along(-1.0);
            let fr = cost(xr)?;
            used += 1;
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = cost(xe)?;
                used += 1;
                simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[1].1 {
                simplex[2] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[2].1 {
                    let xc = along(-0.5);
                    (xc, cost(xc)?)
                } else {
                    let xc = along(0.5);
                    (xc, cost(xc)?)
                };
                used += 1;
                if fc < simplex[2].1.min(fr) {
                    simplex[2] = (xc, fc);
                } else {
                    for i in 1..3 {
                        let x = [
                            simplex[0].0[0] + 0.5 * (simplex[i].0[0] - simplex[0].0[0]),
                            simplex[0].0[1] + 0.5 * (simplex[i].0[1] - simplex[0].0[1]),
                        ];
                        simplex[i] = (x, cost(x)?);
                        used += 1;
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if -simplex[0].1 > best.1 {
            let x = clamp(simplex[0].0);
            best = ((10f64.powf(x[0]), 10f64.powf(x[1])), -simplex[0].1);
        }
    }
    Ok(ChainOptimum {
        j0: best.0 .0,
        j: best.0 .1,
        fidelity: best.1,
        grid_fidelity,
        evaluations,
    })
}
