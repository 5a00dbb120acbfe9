//! TOML run configuration. Rates are in units of `ω0`, temperatures in kelvin.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::grid_graph;
use crate::model_effective::AdiabaticThresholds;
use crate::model_full::PhysicalParams;
use crate::pipeline::{BathPhase, Scenario};
use crate::sweep::{axis_values, ChainBounds, OptimizerOptions, Spacing, SweepAxes};
use crate::synthesis::{DetuningPolicy, SynthesisOptions};
use crate::target::{rect_target, TargetSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphConfig,
    pub target: TargetConfig,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub adiabatic: AdiabaticConfig,
    pub sweep: Option<SweepConfig>,
    pub optimize: Option<OptimizeConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub rows: usize,
    pub cols: usize,
}

/// A number, or the string `"r"` meaning "equal to the bath squeezing".
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Squeezing {
    Value(f64),
    Keyword(SqueezingKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub enum SqueezingKeyword {
    #[serde(rename = "r")]
    R,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub j0: f64,
    pub j: f64,
    #[serde(default = "default_z")]
    pub z: Squeezing,
}

fn default_z() -> Squeezing {
    Squeezing::Keyword(SqueezingKeyword::R)
}

/// A number or a list with one entry per mode.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PerMode {
    One(f64),
    Each(Vec<f64>),
}

impl PerMode {
    fn values(&self) -> Vec<f64> {
        match self {
            PerMode::One(v) => vec![*v],
            PerMode::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PhaseSetting {
    Value(f64),
    Keyword(PhaseKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub enum PhaseKeyword {
    #[serde(rename = "matched")]
    Matched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyConvention {
    /// `omega0_ghz` is a cycle frequency: `ω0 = 2π · f`.
    Cycle,
    /// `omega0_ghz` is an angular frequency in units of 1e9 rad/s.
    Angular,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "default_omega0")]
    pub omega0_ghz: f64,
    #[serde(default = "default_convention")]
    pub frequency_convention: FrequencyConvention,
    pub kappa0: f64,
    /// Auxiliary-mode decay rates; defaults to `kappa0`.
    pub kappa: Option<PerMode>,
    /// Auxiliary detuning magnitudes `|Δ_j|`.
    pub delta: PerMode,
    #[serde(default = "one")]
    pub delta0: f64,
    #[serde(default = "one")]
    pub eps_l0: f64,
    pub gamma: PerMode,
    pub temperature: f64,
    pub r: f64,
    #[serde(default = "default_phase")]
    pub phi0: PhaseSetting,
    #[serde(default = "default_drive_phase")]
    pub drive_phase: f64,
    #[serde(default)]
    pub time: f64,
}

fn default_omega0() -> f64 {
    1.0
}
fn default_convention() -> FrequencyConvention {
    FrequencyConvention::Cycle
}
fn one() -> f64 {
    1.0
}
fn default_phase() -> PhaseSetting {
    PhaseSetting::Keyword(PhaseKeyword::Matched)
}
fn default_drive_phase() -> f64 {
    -std::f64::consts::FRAC_PI_2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    #[serde(default = "default_policy")]
    pub policy: DetuningPolicy,
    pub delta_omega: Option<Vec<f64>>,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn default_policy() -> DetuningPolicy {
    DetuningPolicy::MixedSign
}
fn default_rank_tol() -> f64 {
    1e-10
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            policy: default_policy(),
            delta_omega: None,
            rank_tol: default_rank_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticConfig {
    pub coupling: f64,
    pub dissipation: f64,
    pub y_over_w: f64,
}

impl Default for AdiabaticConfig {
    fn default() -> Self {
        let t = AdiabaticThresholds::default();
        Self {
            coupling: t.coupling,
            dissipation: t.dissipation,
            y_over_w: t.y_over_w,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

impl AxisConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        axis_values(self.min, self.max, self.points, self.spacing)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: SweepAxes,
    pub a: AxisConfig,
    pub b: AxisConfig,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub j0: [f64; 2],
    pub j: [f64; 2],
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
}

fn default_grid() -> usize {
    OptimizerOptions::default().grid
}
fn default_max_evals() -> usize {
    OptimizerOptions::default().max_evals
}

impl OptimizeConfig {
    pub fn bounds(&self) -> ChainBounds {
        ChainBounds {
            j0: (self.j0[0], self.j0[1]),
            j: (self.j[0], self.j[1]),
        }
    }

    pub fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            grid: self.grid,
            max_evals: self.max_evals,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn check(&self) -> Result<()> {
        let p = &self.physics;
        let positive = [
            ("physics.omega0_ghz", p.omega0_ghz),
            ("physics.kappa0", p.kappa0),
            ("synthesis.rank_tol", self.synthesis.rank_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("target.j0", self.target.j0),
            ("target.j", self.target.j),
            ("physics.temperature", p.temperature),
            ("physics.r", p.r),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if let Squeezing::Value(z) = self.target.z {
            if !z.is_finite() {
                return Err(Error::Config("target.z must be finite".into()));
            }
        }
        for (name, list, strict) in [
            ("physics.delta", p.delta.values(), true),
            (
                "physics.kappa",
                p.kappa.as_ref().map(|k| k.values()).unwrap_or_else(|| vec![p.kappa0]),
                true,
            ),
            ("physics.gamma", p.gamma.values(), false),
        ] {
            if list.is_empty() || list.iter().any(|&v| !v.is_finite() || v < 0.0 || (strict && v == 0.0)) {
                return Err(Error::Config(format!("{name} has an invalid entry")));
            }
        }
        let n = self.graph.rows * self.graph.cols;
        if self.graph.rows == 0 || self.graph.cols == 0 {
            return Err(Error::Config("graph.rows and graph.cols must be positive".into()));
        }
        if let PerMode::Each(g) = &p.gamma {
            if g.len() != n {
                return Err(Error::Config(format!(
                    "physics.gamma has {} entries for {n} mechanical modes",
                    g.len()
                )));
            }
        }
        if let Some(d) = &self.synthesis.delta_omega {
            if d.len() != n {
                return Err(Error::Config(format!(
                    "synthesis.delta_omega has {} entries for {n} modes",
                    d.len()
                )));
            }
        }
        if let Some(s) = &self.sweep {
            s.a.values()?;
            s.b.values()?;
        }
        if let Some(o) = &self.optimize {
            for (lo, hi) in [o.j0, o.j].map(|b| (b[0], b[1])) {
                if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
                    return Err(Error::Config(format!(
                        "optimizer bounds [{lo}, {hi}] must be positive and ordered"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn omega0_rad_per_s(&self) -> f64 {
        let f = self.physics.omega0_ghz * 1e9;
        match self.physics.frequency_convention {
            FrequencyConvention::Cycle => 2.0 * std::f64::consts::PI * f,
            FrequencyConvention::Angular => f,
        }
    }

    pub fn target_spec(&self) -> Result<TargetSpec> {
        let graph = grid_graph(self.graph.rows, self.graph.cols)?;
        let z = match self.target.z {
            Squeezing::Value(z) => z,
            Squeezing::Keyword(SqueezingKeyword::R) => self.physics.r,
        };
        rect_target(&graph, self.target.j0, self.target.j, z)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let spec = self.target_spec()?;
        let n = spec.n();
        let p = &self.physics;
        let gamma = match &p.gamma {
            PerMode::One(g) => vec![*g; n],
            PerMode::Each(g) => g.clone(),
        };
        let synthesis = SynthesisOptions {
            policy: self.synthesis.policy,
            delta_magnitude: p.delta.values(),
            kappa: p.kappa.as_ref().map(|k| k.values()).unwrap_or_else(|| vec![p.kappa0]),
            delta_omega: self.synthesis.delta_omega.clone(),
            drive_phase: p.drive_phase,
            rank_tol: self.synthesis.rank_tol,
        };
        let params = PhysicalParams {
            omega0: self.omega0_rad_per_s(),
            kappa0: p.kappa0,
            delta0: p.delta0,
            eps_l0: p.eps_l0,
            gamma,
            temperature: p.temperature,
            r: p.r,
            phi0: 0.0,
        };
        let bath_phase = match p.phi0 {
            PhaseSetting::Value(v) => BathPhase::Fixed(v),
            PhaseSetting::Keyword(PhaseKeyword::Matched) => BathPhase::Matched,
        };
        let a = &self.adiabatic;
        Ok(Scenario {
            spec,
            synthesis,
            params,
            bath_phase,
            thresholds: AdiabaticThresholds {
                coupling: a.coupling,
                dissipation: a.dissipation,
                y_over_w: a.y_over_w,
            },
            time: p.time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[graph]
rows = 1
cols = 3

[target]
j0 = 3.4e-3
j = 0.6e-3

[physics]
kappa0 = 0.01
delta = 30.0
gamma = 1e-8
temperature = 0.01
r = 1.0
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.spec.z, 1.0);
        assert_eq!(s.bath_phase, BathPhase::Matched);
        assert_eq!(s.synthesis.kappa, vec![0.01]);
        assert_eq!(s.params.gamma, vec![1e-8; 3]);
        assert!((s.params.omega0 - 2.0 * std::f64::consts::PI * 1e9).abs() < 1e-3);
        assert_eq!(s.synthesis.policy, DetuningPolicy::MixedSign);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("r = 1.0", "r = 1.0\nsqueeze = 2");
        assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn keywords_and_numbers() {
        let text = MINIMAL
            .replace("j = 0.6e-3", "j = 0.6e-3\nz = 0.25")
            .replace("r = 1.0", "r = 1.0\nphi0 = 0.5\nfrequency_convention = \"angular\"");
        let cfg = RunConfig::from_toml(&text).unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.spec.z, 0.25);
        assert_eq!(s.bath_phase, BathPhase::Fixed(0.5));
        assert_eq!(s.params.omega0, 1e9);
        let bad = MINIMAL.replace("j = 0.6e-3", "j = 0.6e-3\nz = \"s\"");
        assert!(RunConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [
            ("kappa0 = 0.01", "kappa0 = -0.01"),
            ("gamma = 1e-8", "gamma = [1e-8, 1e-8]"),
            ("r = 1.0", "r = -1.0"),
        ] {
            assert!(RunConfig::from_toml(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn sweep_and_optimizer_sections() {
        let text = format!(
            "{MINIMAL}\n[sweep]\naxes = \"gamma-temperature\"\na = {{ min = 1e-9, max = 1e-6, points = 4 }}\nb = {{ min = 0.001, max = 0.1, points = 3, spacing = \"linear\" }}\n\n[optimize]\nj0 = [1e-4, 1e-2]\nj = [1e-4, 1e-2]\n"
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.axes, SweepAxes::GammaTemperature);
        assert_eq!(sweep.b.values().unwrap(), vec![0.001, 0.0505, 0.1]);
        assert_eq!(cfg.optimize.unwrap().options(), OptimizerOptions::default());
    }
}
