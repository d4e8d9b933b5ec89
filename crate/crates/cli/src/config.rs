use std::path::Path;

use nv_detect::{Interrogation, Protocol, Scenario};
use serde::Deserialize;

use crate::failure::Failure;

/// The quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Variable {
    /// Total interrogation time, µs.
    T,
    /// CPMG pulse count.
    N,
    /// Number of copies.
    M,
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "sigma_b")]
    SigmaB,
}

impl Variable {
    pub fn column(self) -> &'static str {
        match self {
            Variable::T => "T",
            Variable::N => "N",
            Variable::M => "M",
            Variable::Eta => "eta",
            Variable::SigmaB => "sigma_b",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Variable::N | Variable::M)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    /// Spacing between points. Mutually exclusive with `count`.
    #[serde(default)]
    pub step: Option<f64>,
    /// Number of evenly spaced points including both ends.
    #[serde(default)]
    pub count: Option<usize>,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>, Failure> {
        let bad = |m: String| Err(Failure::Config(format!("sweep over {}: {m}", self.variable.column())));
        if !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return bad(format!("empty range [{}, {}]", self.start, self.stop));
        }
        let span = self.stop - self.start;
        let values: Vec<f64> = match (self.step, self.count) {
            (Some(_), Some(_)) => return bad("give either step or count, not both".into()),
            (None, Some(0)) => return bad("count must be at least 1".into()),
            (None, Some(1)) => vec![self.start],
            (None, Some(n)) => (0..n).map(|k| self.start + span * k as f64 / (n - 1) as f64).collect(),
            (step, None) => {
                let step = match (step, self.variable) {
                    (Some(step), _) => step,
                    (None, Variable::N) => 2.0,
                    (None, Variable::M) => 1.0,
                    (None, _) => return bad("step or count is required".into()),
                };
                if !(step > 0.0) {
                    return bad(format!("step must be positive, got {step}"));
                }
                let n = (span / step * (1.0 + 1e-12)).floor() as usize + 1;
                (0..n).map(|k| self.start + step * k as f64).collect()
            }
        };
        if self.variable.is_integer() {
            for &v in &values {
                if v.fract() != 0.0 || v < 1.0 {
                    return bad(format!("{v} is not a positive integer"));
                }
                if self.variable == Variable::N && v % 2.0 != 0.0 {
                    return bad(format!("pulse counts must be even, got {v}"));
                }
            }
        }
        Ok(values)
    }
}

/// Where the optimizer looks when no interrogation point is given.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// Fixed interrogation point for `multicopy`, `efficiency` and
    /// `simulate`; the optimum is used when absent.
    #[serde(default)]
    pub at: Option<Interrogation>,
    #[serde(default)]
    pub search: Option<SearchRange>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub copies: Option<u32>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let config: Config = serde_json::from_str(text).map_err(|e| Failure::Config(format!("invalid config: {e}")))?;
        config.scenario.validate().map_err(|e| Failure::Config(e.to_string()))?;
        Ok(config)
    }

    /// Search bounds: configured, else [0, 3] µs for time searches and
    /// N ∈ [2, 200] for CPMG.
    pub fn search_range(&self) -> SearchRange {
        self.search.unwrap_or(match self.scenario.protocol {
            Protocol::Cpmg { .. } => SearchRange { min: 2.0, max: 200.0 },
            _ => SearchRange { min: 0.0, max: 3.0 },
        })
    }
}
