//! Scenario configuration: file contents merged with command-line flags.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_threshold: Option<f64>,
    /// Largest accepted residual for hard invariants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<String>,
    /// Oscillator amplitude `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records_out: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl ScenarioConfig {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: ScenarioConfig) -> ScenarioConfig {
        overlay!(
            self, top, state, n_max, seed, shots, t2, strict, truncation_threshold, tolerance, plan, mode, k,
            sign, m, omega0, rabi, spin, alpha, alphas, records, metadata, output, records_out
        );
        self
    }

    /// Copy without output destinations, for echoing in reports.
    pub fn echo(&self) -> ScenarioConfig {
        ScenarioConfig {
            output: None,
            records_out: None,
            ..self.clone()
        }
    }
}

/// Load a TOML or JSON config. A JSON report is accepted too; its `config`
/// object is used.
pub fn load(path: &str) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{path}: {e}")))?;
    parse(&text).map_err(|e| Failure::Config(format!("{path}: {e}")))
}

pub fn parse(text: &str) -> Result<ScenarioConfig, String> {
    if text.trim_start().starts_with('{') {
        let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let inner = match value.get("config") {
            Some(c) if value.get("command").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_toml_json_and_reports() {
        let t = parse("state = \"num:1,0\"\nn_max = 4\nalpha = [2.0, 0.0]\n").unwrap();
        assert_eq!(t.state.as_deref(), Some("num:1,0"));
        assert_eq!(t.alpha, Some([2.0, 0.0]));
        let j = parse(r#"{"seed": 7, "t2": 0.5}"#).unwrap();
        assert_eq!((j.seed, j.t2), (Some(7), Some(0.5)));
        let r = parse(r#"{"command": "covariance", "config": {"n_max": 3}, "results": {}}"#).unwrap();
        assert_eq!(r.n_max, Some(3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("nmax = 4\n").is_err());
        assert!(parse(r#"{"seeds": 1}"#).is_err());
    }

    #[test]
    fn flags_override_file_and_echo_drops_outputs() {
        let file = ScenarioConfig {
            seed: Some(1),
            shots: Some(10),
            output: Some("a.json".into()),
            ..Default::default()
        };
        let flags = ScenarioConfig {
            seed: Some(2),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!((merged.seed, merged.shots), (Some(2), Some(10)));
        assert_eq!(merged.echo().output, None);
    }
}
