//! Experiment configuration: JSON schema, validation, and the conversions
//! from presentation units (temperature in units of the bath coupling,
//! times as lambda*t) into library inputs.

use anyhow::{bail, Context, Result};
use leeyang::bath::RawBathConfig;
use leeyang::probe::{ProbeParams, ProbeState};
use leeyang::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// One temperature point: the literal string "inf" or a positive ratio
/// T / J_bath. Zero is rejected because beta = 1/T would be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TempSpec {
    Named(String),
    Ratio(f64),
}

impl TempSpec {
    pub fn beta(&self) -> Result<f64> {
        match self {
            TempSpec::Named(s) if s == "inf" => Ok(0.0),
            TempSpec::Named(s) => {
                bail!("unknown temperature spelling {s:?}; use \"inf\" or a positive number")
            }
            TempSpec::Ratio(t) if *t > 0.0 && t.is_finite() => Ok(1.0 / t),
            TempSpec::Ratio(t) => {
                bail!(
                    "temperature {t} rejected: it must be positive and finite \
                     (T = 0 means beta = infinity, which is unsupported)"
                )
            }
        }
    }

    /// Short label used in file and directory names: "inf", "1", "0.25", ...
    pub fn label(&self) -> String {
        match self {
            TempSpec::Named(s) => s.clone(),
            TempSpec::Ratio(t) => format!("{t}"),
        }
    }
}

/// Uniform grid of lambda*t values, with `samples` points including both
/// endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.stop > self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            bail!("time grid needs finite stop > start, got [{}, {}]", self.start, self.stop);
        }
        if self.samples < 2 {
            bail!("time grid needs at least 2 samples, got {}", self.samples);
        }
        let dt = (self.stop - self.start) / (self.samples - 1) as f64;
        Ok((0..self.samples).map(|k| self.start + dt * k as f64).collect())
    }
}

fn default_circle_tol() -> f64 {
    1e-8
}
fn default_refine_tol() -> f64 {
    1e-6
}
fn default_cluster_tol() -> f64 {
    1e-6
}
fn default_detect_threshold() -> f64 {
    5e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_circle_tol")]
    pub circle_tol: f64,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
    /// Grid minima of |signal| must fall below this to count as zeros.
    #[serde(default = "default_detect_threshold")]
    pub detect_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            circle_tol: default_circle_tol(),
            refine_tol: default_refine_tol(),
            cluster_tol: default_cluster_tol(),
            detect_threshold: default_detect_threshold(),
        }
    }
}

fn default_draws() -> usize {
    100
}
fn default_fields() -> usize {
    20
}

/// Scale knobs for the `verify` subcommand's randomized suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Random (state, params) draws per temperature in the oracle suite.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Random complex fields per temperature in the transfer-matrix suite.
    #[serde(default = "default_fields")]
    pub fields: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { draws: default_draws(), fields: default_fields() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

/// Top-level experiment description. Everything beyond the bath defaults
/// to the standard demonstration setup: isotropic probe coupling
/// J = lambda / 2pi with no local field, the x-projected initial state,
/// the four standard temperatures, and a [0, 2pi] grid of lambda*t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bath: RawBathConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeParams>,
    /// Four complex amplitudes as eight reals, re/im interleaved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_amplitudes: Option<[f64; 8]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures: Option<Vec<TempSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).context("config JSON does not match the schema")?;
        cfg.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.bath.beta.is_some() {
            bail!(
                "bath.beta is not a config field here: inverse temperatures come from the \
                 temperatures list (beta = 1/T)"
            );
        }
        for t in self.temperatures() {
            let beta = t.beta()?;
            self.bath
                .build(beta)
                .with_context(|| format!("bath spec invalid at temperature {}", t.label()))?;
        }
        if let Some(p) = &self.probe {
            p.validate().context("probe params invalid")?;
            if p.lambda_a == 0.0 {
                bail!("probe lambda_a must be nonzero: the time grid is expressed as lambda*t");
            }
        }
        if let Some(grid) = &self.time_grid {
            grid.points()?;
        }
        self.initial_state()?;
        Ok(self)
    }

    pub fn temperatures(&self) -> Vec<TempSpec> {
        self.temperatures.clone().unwrap_or_else(|| {
            vec![
                TempSpec::Named("inf".into()),
                TempSpec::Ratio(1.0),
                TempSpec::Ratio(0.25),
                TempSpec::Ratio(0.125),
            ]
        })
    }

    pub fn probe_params(&self) -> ProbeParams {
        self.probe.unwrap_or_else(|| {
            let j = 1.0 / TAU;
            ProbeParams::symmetric(j, j, 0.0, 1.0)
        })
    }

    pub fn initial_state(&self) -> Result<ProbeState> {
        match &self.initial_amplitudes {
            None => Ok(ProbeState::x_projected()),
            Some(v) => {
                let amps = [
                    Complex64::new(v[0], v[1]),
                    Complex64::new(v[2], v[3]),
                    Complex64::new(v[4], v[5]),
                    Complex64::new(v[6], v[7]),
                ];
                Ok(ProbeState::from_unnormalized(amps)
                    .context("initial_amplitudes do not form a valid state")?)
            }
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        self.time_grid.clone().unwrap_or(TimeGrid { start: 0.0, stop: TAU, samples: 1257 })
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.clone().unwrap_or_default()
    }

    pub fn verify_section(&self) -> VerifySection {
        self.verify.clone().unwrap_or_default()
    }

    pub fn output_dir(&self) -> String {
        self.output.as_ref().map(|o| o.dir.clone()).unwrap_or_else(|| "out".into())
    }

    pub fn is_ring(&self) -> bool {
        self.bath.topology.as_deref() == Some("ring")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"{
        "bath": {"n_sites": 10, "topology": "ring", "coupling": 1.0},
        "probe": {"j_xx": 0.159154943091895, "j_zz": 0.159154943091895, "h0": 0.0,
                  "lambda_a": 1.0, "lambda_b": 1.0},
        "initial_amplitudes": [0.5, 0.0, -0.5, 0.0, 0.5, 0.0, -0.5, 0.0],
        "temperatures": ["inf", 1.0, 0.25, 0.125],
        "time_grid": {"start": 0.0, "stop": 6.283185307179586, "samples": 1257},
        "output": {"dir": "out"},
        "tolerances": {"circle_tol": 1e-8, "refine_tol": 1e-6,
                       "cluster_tol": 1e-6, "detect_threshold": 5e-3},
        "verify": {"draws": 100, "fields": 20}
    }"#;

    #[test]
    fn parse_serialize_parse_is_identity() {
        let parsed = ExperimentConfig::parse(FULL).unwrap();
        let text = serde_json::to_string_pretty(&parsed).unwrap();
        let reparsed = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(parsed, reparsed);
    }

    #[test]
    fn minimal_config_fills_standard_defaults() {
        let cfg = ExperimentConfig::parse(
            r#"{"bath": {"n_sites": 10, "topology": "ring", "coupling": 1.0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.temperatures().len(), 4);
        assert_eq!(cfg.temperatures()[0].beta().unwrap(), 0.0);
        assert_eq!(cfg.temperatures()[3].beta().unwrap(), 8.0);
        let p = cfg.probe_params();
        assert!(p.is_symmetric());
        assert!((p.j_xx - 1.0 / TAU).abs() < 1e-15);
        assert_eq!(p.lambda_a, 1.0);
        let state = cfg.initial_state().unwrap();
        assert_eq!(state.amplitudes[0].re, 0.5);
        assert!(cfg.is_ring());
    }

    #[test]
    fn zero_temperature_is_rejected() {
        let err =
            ExperimentConfig::parse(r#"{"bath": {"n_sites": 4}, "temperatures": [0.0]}"#)
                .unwrap_err();
        assert!(err.to_string().contains("rejected"), "unexpected message: {err}");
    }

    #[test]
    fn infinite_temperature_maps_to_beta_zero() {
        assert_eq!(TempSpec::Named("inf".into()).beta().unwrap(), 0.0);
        assert_eq!(TempSpec::Ratio(0.125).beta().unwrap(), 8.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err =
            ExperimentConfig::parse(r#"{"bath": {"n_sites": 4}, "nonsense": 1}"#).unwrap_err();
        assert!(err.to_string().contains("schema"), "unexpected message: {err}");
    }

    #[test]
    fn malformed_bond_is_rejected_with_a_diagnostic() {
        let err = ExperimentConfig::parse(
            r#"{"bath": {"n_sites": 4, "bonds": [[0, 9, 1.0]]}}"#,
        )
        .unwrap_err();
        let chain = format!("{err:#}");
        assert!(chain.contains("bath spec invalid"), "unexpected message: {chain}");
    }

    #[test]
    fn temperature_labels_match_directory_convention() {
        assert_eq!(TempSpec::Named("inf".into()).label(), "inf");
        assert_eq!(TempSpec::Ratio(1.0).label(), "1");
        assert_eq!(TempSpec::Ratio(0.25).label(), "0.25");
        assert_eq!(TempSpec::Ratio(0.125).label(), "0.125");
    }
}
