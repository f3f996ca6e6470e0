//! Experiment configuration: a TOML file with a top level, a `[gate]` table
//! and a `[run]` table. Every table rejects unknown keys, and each
//! subcommand additionally rejects `[run]` keys it does not read.
//!
//! ```toml
//! seed = 7              # root seed, default 0
//! threads = 4           # typicality workers, default 1
//! out_dir = "out"
//!
//! [gate]                # exactly one of the three
//! hamiltonian = { tau = 1.0471975512, delta = 1.0, B = 0.5, D = 0.5 }
//! # haar = { delta = 0.3, alpha = 1.1, phi = 0.7, chi = 2.0, theta = 0.4 }
//! # haar_seed = 42
//!
//! [run]
//! L = 12
//! boundary = "open"
//! steps = 200
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{gate_from_haar, gate_from_hamiltonian, sample_haar, HaarGateParams, HamiltonianGateParams, TwoQubitGate};
use crate::integrability::Sign;
use crate::operators::Boundary;
use crate::spectral::Resolution;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub gate: Option<GateSpec>,
    #[serde(default)]
    pub run: RunParams,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Where the gate comes from. Exactly one field may be set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianGateParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub haar: Option<HaarGateParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub haar_seed: Option<u64>,
}

impl GateSpec {
    pub fn validate(&self) -> Result<()> {
        let set = self.hamiltonian.is_some() as u8 + self.haar.is_some() as u8 + self.haar_seed.is_some() as u8;
        if set != 1 {
            return Err(Error::Config(format!("[gate] needs exactly one of hamiltonian, haar, haar_seed (found {set})")));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<TwoQubitGate> {
        self.validate()?;
        if let Some(h) = &self.hamiltonian {
            gate_from_hamiltonian(h)
        } else if let Some(p) = &self.haar {
            p.validate()?;
            Ok(gate_from_haar(p))
        } else {
            Ok(gate_from_haar(&sample_haar(self.haar_seed.unwrap_or_default())))
        }
    }

    /// Haar angles of the gate when it was given in that form.
    pub fn haar_params(&self) -> Option<HaarGateParams> {
        self.haar.or(self.haar_seed.map(sample_haar))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Exact,
    Typicality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SignChoice {
    Plus,
    Minus,
    Both,
}

impl SignChoice {
    pub fn signs(self) -> Vec<Sign> {
        match self {
            SignChoice::Plus => vec![Sign::Plus],
            SignChoice::Minus => vec![Sign::Minus],
            SignChoice::Both => vec![Sign::Plus, Sign::Minus],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ResolutionKind {
    Magnetization,
    Momentum,
    Full,
}

impl From<ResolutionKind> for Resolution {
    fn from(r: ResolutionKind) -> Self {
        match r {
            ResolutionKind::Magnetization => Resolution::Magnetization,
            ResolutionKind::Momentum => Resolution::Momentum,
            ResolutionKind::Full => Resolution::Full,
        }
    }
}

/// The `[run]` table. Command-line flags land here too, on top of the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<ResolutionKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_gate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_m: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        RunParams { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunParams {
    /// Field-wise `top` over `self`.
    pub fn overlay(self, top: RunParams) -> RunParams {
        overlay!(self, top, l, boundary, r, k, steps, method, samples, trials, realizations, ell, sign, resolution, two_gate, max_abs_m, bins)
    }

    /// Names of the keys that are set, as spelled in the config file.
    pub fn set_keys(&self) -> Vec<String> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    /// Rejects any key outside `allowed`.
    pub fn check_allowed(&self, subcommand: &str, allowed: &[&str]) -> Result<()> {
        let bad: Vec<String> = self.set_keys().into_iter().filter(|k| !allowed.contains(&k.as_str())).collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("{subcommand} does not take: {}", bad.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_example() {
        let c = Config::parse(
            r#"
            seed = 7
            [gate]
            hamiltonian = { tau = 1.0, delta = 1.0, B = 0.5, D = 0.5 }
            [run]
            L = 12
            boundary = "open"
            r = [3, 5]
            method = "typicality"
            "#,
        )
        .unwrap();
        assert_eq!(c.run.l, Some(12));
        assert_eq!(c.run.set_keys(), vec!["L", "boundary", "method", "r"]);
        assert!(c.gate.unwrap().build().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("sede = 1").is_err());
        assert!(Config::parse("[run]\nsteps = 1\nstep = 2").is_err());
        assert!(Config::parse("[gate]\nhamiltonian = { tau = 1.0, delta = 1.0, E = 0.1 }").is_err());
    }

    #[test]
    fn overlay_prefers_the_top_layer() {
        let base = RunParams { l: Some(8), steps: Some(10), ..Default::default() };
        let top = RunParams { steps: Some(20), ..Default::default() };
        let m = base.overlay(top);
        assert_eq!((m.l, m.steps), (Some(8), Some(20)));
    }
}
