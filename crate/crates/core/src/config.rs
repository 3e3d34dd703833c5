//! Serializable descriptions of chains, displacement functions and skew
//! systems: the JSON schema shared by experiment config files, manifests
//! and the command-line front end.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::parse_rational;
use crate::skew::{
    Chart, DisplacementKind, DisplacementSpec, Monotonicity, PerturbationKind, PerturbationSpec,
    SkewSystem,
};
use crate::subshift::SubshiftSpec;
use crate::Result;

/// A probability entry: JSON number or exact "p/q" string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbabilityEntry {
    Number(f64),
    Exact(String),
}

impl ProbabilityEntry {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            ProbabilityEntry::Number(x) => BigRational::from_float(*x)
                .ok_or_else(|| Error::Validation(format!("non-finite probability {x}"))),
            ProbabilityEntry::Exact(s) => parse_rational(s)
                .ok_or_else(|| Error::Validation(format!("cannot parse rational '{s}'"))),
        }
    }
}

/// Chain description: canonical (m, N) partition chain or explicit matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubshiftConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    pub mode: SubshiftMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubshiftMode {
    /// The literal string "canonical".
    Named(String),
    Explicit {
        rows: Vec<Vec<ProbabilityEntry>>,
    },
}

impl SubshiftConfig {
    pub fn canonical(m: u32, level: u32) -> Self {
        Self { m: Some(m), level: Some(level), mode: SubshiftMode::Named("canonical".into()) }
    }

    pub fn build(&self) -> Result<SubshiftSpec> {
        match &self.mode {
            SubshiftMode::Named(name) if name == "canonical" => {
                let m = self.m.ok_or_else(|| {
                    Error::Validation("canonical chain needs field 'm'".into())
                })?;
                let level = self.level.ok_or_else(|| {
                    Error::Validation("canonical chain needs field 'N'".into())
                })?;
                SubshiftSpec::canonical(m, level)
            }
            SubshiftMode::Named(other) => {
                Err(Error::Validation(format!("unknown chain mode '{other}'")))
            }
            SubshiftMode::Explicit { rows } => {
                let rows: Result<Vec<Vec<BigRational>>> = rows
                    .iter()
                    .map(|r| r.iter().map(|e| e.to_rational()).collect())
                    .collect();
                SubshiftSpec::from_matrix(rows?)
            }
        }
    }
}

/// Displacement function description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum XiKind {
    Affine {
        a: f64,
        b: f64,
    },
    Sign,
    Table {
        nodes: Vec<(f64, f64)>,
    },
    #[serde(rename = "cos2pi")]
    CosTwoPi {
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XiConfig {
    #[serde(flatten)]
    pub kind: XiKind,
    /// Declared monotonicity; inferred from the family when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone: Option<Monotonicity>,
    /// Skip the zero-mean check (drifted control experiments only).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_unbalanced: bool,
}

impl XiConfig {
    pub fn affine(a: f64, b: f64) -> Self {
        Self { kind: XiKind::Affine { a, b }, monotone: None, allow_unbalanced: false }
    }

    fn domain_kind(&self) -> DisplacementKind {
        match &self.kind {
            XiKind::Affine { a, b } => DisplacementKind::Affine { a: *a, b: *b },
            XiKind::Sign => DisplacementKind::SignAboutHalf,
            XiKind::Table { nodes } => DisplacementKind::Table { nodes: nodes.clone() },
            XiKind::CosTwoPi { amplitude } => DisplacementKind::CosTwoPi { amplitude: *amplitude },
        }
    }

    fn inferred_monotonicity(&self) -> Monotonicity {
        match &self.kind {
            XiKind::Affine { b, .. } => {
                if *b > 0.0 {
                    Monotonicity::Increasing
                } else if *b < 0.0 {
                    Monotonicity::Decreasing
                } else {
                    Monotonicity::Unknown
                }
            }
            XiKind::Sign => Monotonicity::Increasing,
            XiKind::Table { nodes } => {
                if nodes.windows(2).all(|w| w[1].1 >= w[0].1) {
                    Monotonicity::Increasing
                } else if nodes.windows(2).all(|w| w[1].1 <= w[0].1) {
                    Monotonicity::Decreasing
                } else {
                    Monotonicity::Unknown
                }
            }
            XiKind::CosTwoPi { .. } => Monotonicity::Unknown,
        }
    }

    pub fn build(&self) -> Result<DisplacementSpec> {
        let mono = self.monotone.unwrap_or_else(|| self.inferred_monotonicity());
        if self.allow_unbalanced {
            DisplacementSpec::unbalanced(self.domain_kind(), mono)
        } else {
            DisplacementSpec::new(self.domain_kind(), mono)
        }
    }
}

/// Perturbation description.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RKind {
    #[default]
    Zero,
    Cubic {
        rho: f64,
        /// Budget r₀; defaults to |ρ| (the sharp bound for this family).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r0: Option<f64>,
    },
}

impl RKind {
    pub fn build(&self) -> Result<PerturbationSpec> {
        match self {
            RKind::Zero => Ok(PerturbationSpec::zero()),
            RKind::Cubic { rho, r0 } => {
                PerturbationSpec::new(PerturbationKind::Cubic { rho: *rho }, r0.unwrap_or(rho.abs()))
            }
        }
    }
}

fn default_chart() -> Chart {
    Chart::Interval
}

/// Skew-product system description: the shared JSON schema with keys
/// m, N, xi{kind, …}, r{kind, rho}, chart, seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemConfig {
    pub m: u32,
    #[serde(rename = "N")]
    pub level: u32,
    pub xi: XiConfig,
    #[serde(default)]
    pub r: RKind,
    #[serde(default = "default_chart")]
    pub chart: Chart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SystemConfig {
    pub fn build(&self) -> Result<SkewSystem> {
        SkewSystem::new(self.m, self.level, self.xi.build()?, self.r.build()?, self.chart)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_chain_round_trip() {
        let json = r#"{"m": 2, "N": 3, "mode": "canonical"}"#;
        let cfg: SubshiftConfig = serde_json::from_str(json).unwrap();
        let spec = cfg.build().unwrap();
        assert_eq!(spec.k(), 8);
        let back = serde_json::to_string(&cfg).unwrap();
        let cfg2: SubshiftConfig = serde_json::from_str(&back).unwrap();
        assert_eq!(cfg2.build().unwrap().k(), 8);
    }

    #[test]
    fn explicit_chain_with_rational_strings() {
        let json = r#"{"mode": {"rows": [["1/2", "1/2"], ["1", "0"]]}}"#;
        let cfg: SubshiftConfig = serde_json::from_str(json).unwrap();
        let spec = cfg.build().unwrap();
        assert_eq!(spec.k(), 2);
        let p = spec.stationary();
        assert_eq!(p[0], BigRational::new(2.into(), 3.into()));
    }

    #[test]
    fn explicit_chain_with_numbers() {
        let json = r#"{"mode": {"rows": [[0.5, 0.5], [1.0, 0.0]]}}"#;
        let cfg: SubshiftConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.build().unwrap().k(), 2);
    }

    #[test]
    fn bad_mode_rejected() {
        let json = r#"{"m": 2, "N": 1, "mode": "fancy"}"#;
        let cfg: SubshiftConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.build().is_err());
    }

    #[test]
    fn system_config_affine_over_e3() {
        let json = r#"{
            "m": 3, "N": 1,
            "xi": {"kind": "affine", "a": -1.0, "b": 2.0},
            "r": {"kind": "zero"},
            "chart": "interval"
        }"#;
        let cfg: SystemConfig = serde_json::from_str(json).unwrap();
        let sys = cfg.build().unwrap();
        assert_eq!(sys.m, 3);
        assert_eq!(sys.xi.monotonicity(), Monotonicity::Increasing);
    }

    #[test]
    fn system_config_defaults() {
        let json = r#"{"m": 2, "N": 1, "xi": {"kind": "sign"}}"#;
        let cfg: SystemConfig = serde_json::from_str(json).unwrap();
        let sys = cfg.build().unwrap();
        assert!(sys.r.is_zero());
        assert_eq!(sys.chart, Chart::Interval);
    }

    #[test]
    fn cubic_r_with_default_budget() {
        let json = r#"{
            "m": 3, "N": 1,
            "xi": {"kind": "affine", "a": -1.0, "b": 2.0},
            "r": {"kind": "cubic", "rho": 0.2}
        }"#;
        let cfg: SystemConfig = serde_json::from_str(json).unwrap();
        let sys = cfg.build().unwrap();
        assert_eq!(sys.r.budget(), 0.2);
    }

    #[test]
    fn unbalanced_control_flag() {
        let json = r#"{"kind": "affine", "a": -0.8, "b": 2.0, "allow_unbalanced": true}"#;
        let cfg: XiConfig = serde_json::from_str(json).unwrap();
        let xi = cfg.build().unwrap();
        assert!((xi.mean() - 0.2).abs() < 1e-15);
        // Without the flag the same function is rejected.
        let json = r#"{"kind": "affine", "a": -0.8, "b": 2.0}"#;
        let cfg: XiConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.build().is_err());
    }
}
