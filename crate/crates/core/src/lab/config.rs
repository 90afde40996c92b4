use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::domain::{DomainEntry, DomainSpec};
use super::function::{FunctionEntry, FunctionSpec};
use super::LabError;
use crate::jnp::{DEFAULT_LAMBDA, DEFAULT_OVERLAP_BOUND};

/// Largest grid (in cells, `2^(nJ)`) a configuration may request.
const MAX_GRID_CELLS: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Whitney,
    Chains,
    Jn,
    Weak,
    L2g,
    Poincare,
    Fractional,
    NecessitySweep,
}

impl Pipeline {
    pub const ALL: [Pipeline; 8] = [
        Pipeline::Whitney,
        Pipeline::Chains,
        Pipeline::Jn,
        Pipeline::Weak,
        Pipeline::L2g,
        Pipeline::Poincare,
        Pipeline::Fractional,
        Pipeline::NecessitySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Whitney => "whitney",
            Pipeline::Chains => "chains",
            Pipeline::Jn => "jn",
            Pipeline::Weak => "weak",
            Pipeline::L2g => "l2g",
            Pipeline::Poincare => "poincare",
            Pipeline::Fractional => "fractional",
            Pipeline::NecessitySweep => "necessity-sweep",
        }
    }

    fn uses_functions(self) -> bool {
        !matches!(self, Pipeline::Whitney | Pipeline::Chains)
    }

    fn uses_p(self) -> bool {
        matches!(
            self,
            Pipeline::Chains | Pipeline::Jn | Pipeline::Weak | Pipeline::L2g | Pipeline::NecessitySweep
        )
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| LabError::config("pipeline", format!("unknown pipeline {s:?}")))
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    pub domains: Vec<DomainSpec>,
    pub functions: Vec<FunctionSpec>,
    #[serde(rename = "J")]
    pub resolutions: Vec<i32>,
    pub p: Vec<f64>,
    pub q: f64,
    pub delta: f64,
    pub lambda: f64,
    pub overlap_bound: usize,
    pub shifts: Vec<Vec<i64>>,
    pub seed: u64,
    /// Cells sampled by the John probe; all cells when this reaches the
    /// cell count.
    pub john_samples: usize,
    /// Pair budget of the fractional double sum.
    pub pair_budget: u64,
}

impl ExperimentConfig {
    /// Defaults for `pipeline`.
    pub fn new(pipeline: Pipeline) -> Self {
        let (domains, functions, resolutions) = match pipeline {
            Pipeline::NecessitySweep => (
                (2..=5).map(|k| DomainSpec::Cusp { k: k as f64 }).collect(),
                vec![tip_function()],
                vec![8],
            ),
            Pipeline::Poincare | Pipeline::Fractional => {
                (vec![DomainSpec::Square], vec![FunctionSpec::Linear { axis: 0 }], vec![6])
            }
            _ => (vec![DomainSpec::Square], vec![FunctionSpec::Quadrant], vec![6]),
        };
        Self {
            pipeline,
            domains,
            functions,
            resolutions,
            p: vec![2.0],
            q: if pipeline == Pipeline::Fractional { 2.0 } else { 1.0 },
            delta: 0.5,
            lambda: DEFAULT_LAMBDA,
            overlap_bound: DEFAULT_OVERLAP_BOUND,
            shifts: Vec::new(),
            seed: 0,
            // the sweep compares estimates across k, so it probes every cell
            john_samples: if pipeline == Pipeline::NecessitySweep { 1 << 20 } else { 256 },
            pair_budget: 1 << 16,
        }
    }

    /// Read a TOML document, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        ConfigDocument::from_path(path)?.resolve()
    }

    pub fn from_toml_str(s: &str) -> Result<Self, LabError> {
        ConfigDocument::from_toml_str(s)?.resolve()
    }

    pub fn from_json_str(s: &str) -> Result<Self, LabError> {
        ConfigDocument::from_json_str(s)?.resolve()
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let cfg = LabError::config;
        if self.domains.is_empty() {
            return Err(cfg("domains", "at least one domain is required".into()));
        }
        for (i, d) in self.domains.iter().enumerate() {
            d.validate().map_err(|e| cfg(&format!("domains[{i}]"), e.to_string()))?;
            if self.pipeline == Pipeline::NecessitySweep && !matches!(d, DomainSpec::Cusp { .. }) {
                return Err(cfg(
                    &format!("domains[{i}]"),
                    format!("necessity-sweep runs over cusps only, got {d}"),
                ));
            }
        }
        if self.pipeline.uses_functions() && self.functions.is_empty() {
            return Err(cfg("functions", "at least one function is required".into()));
        }
        for (i, f) in self.functions.iter().enumerate() {
            f.validate().map_err(|e| cfg(&format!("functions[{i}]"), e.to_string()))?;
        }
        if self.resolutions.is_empty() {
            return Err(cfg("J", "at least one resolution is required".into()));
        }
        for (i, &j) in self.resolutions.iter().enumerate() {
            for d in &self.domains {
                let bits = j as i64 * d.dim() as i64;
                if j < 1 || bits > MAX_GRID_CELLS.trailing_zeros() as i64 {
                    return Err(cfg(
                        &format!("J[{i}]"),
                        format!("resolution {j} out of range for {d} (need 1 <= J, 2^(nJ) <= 2^24)"),
                    ));
                }
            }
        }
        if self.pipeline.uses_p() {
            if self.p.is_empty() {
                return Err(cfg("p", "at least one exponent is required".into()));
            }
            for (i, &p) in self.p.iter().enumerate() {
                if !(p > 1.0 && p.is_finite()) {
                    return Err(cfg(&format!("p[{i}]"), format!("p must satisfy 1 < p < inf, got {p}")));
                }
            }
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(cfg("q", format!("q must be finite and >= 1, got {}", self.q)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(cfg("delta", format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(cfg("lambda", format!("lambda must be > 1, got {}", self.lambda)));
        }
        if self.overlap_bound == 0 {
            return Err(cfg("overlap_bound", "must be at least 1".into()));
        }
        if self.john_samples == 0 {
            return Err(cfg("john_samples", "must be at least 1".into()));
        }
        if self.pair_budget == 0 {
            return Err(cfg("pair_budget", "must be at least 1".into()));
        }
        for (i, s) in self.shifts.iter().enumerate() {
            if self.domains.iter().any(|d| d.dim() != s.len()) {
                return Err(cfg(&format!("shifts[{i}]"), "shift length must match every domain's dimension".into()));
            }
        }
        Ok(())
    }
}

/// Default function of the necessity sweep. On a cusp the superlevel sets
/// of `log(1/dist)` fill the whole cross-section near the tip, so its large
/// values concentrate there as `k` grows.
pub fn tip_function() -> FunctionSpec {
    FunctionSpec::LogDist
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(t) => vec![t],
            OneOrMany::Many(v) => v,
        }
    }
}

/// A configuration document as written by hand; every key is optional and
/// missing keys take the pipeline defaults. The CLI fills the same fields
/// from its flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub pipeline: Option<String>,
    #[serde(alias = "domain")]
    pub domains: Option<OneOrMany<DomainEntry>>,
    #[serde(alias = "function")]
    pub functions: Option<OneOrMany<FunctionEntry>>,
    #[serde(rename = "J", alias = "resolutions")]
    pub resolutions: Option<OneOrMany<i32>>,
    pub p: Option<OneOrMany<f64>>,
    pub q: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub overlap_bound: Option<usize>,
    pub shifts: Option<Vec<Vec<i64>>>,
    pub seed: Option<u64>,
    pub john_samples: Option<usize>,
    pub pair_budget: Option<u64>,
}

impl ConfigDocument {
    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, LabError> {
        toml::from_str(s).map_err(|e| LabError::config("config", e.message().to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, LabError> {
        serde_json::from_str(s).map_err(|e| LabError::config("config", e.to_string()))
    }

    pub fn resolve(self) -> Result<ExperimentConfig, LabError> {
        let pipeline: Pipeline = self
            .pipeline
            .as_deref()
            .ok_or_else(|| LabError::config("pipeline", "missing pipeline".into()))?
            .parse()?;
        let mut c = ExperimentConfig::new(pipeline);
        if let Some(d) = self.domains {
            c.domains = d
                .into_vec()
                .into_iter()
                .enumerate()
                .map(|(i, e)| e.resolve().map_err(|e| LabError::config(&format!("domains[{i}]"), e.to_string())))
                .collect::<Result<_, _>>()?;
        }
        if let Some(f) = self.functions {
            c.functions = f
                .into_vec()
                .into_iter()
                .enumerate()
                .map(|(i, e)| e.resolve().map_err(|e| LabError::config(&format!("functions[{i}]"), e.to_string())))
                .collect::<Result<_, _>>()?;
        }
        if let Some(j) = self.resolutions {
            c.resolutions = j.into_vec();
        }
        if let Some(p) = self.p {
            c.p = p.into_vec();
        }
        c.q = self.q.unwrap_or(c.q);
        c.delta = self.delta.unwrap_or(c.delta);
        c.lambda = self.lambda.unwrap_or(c.lambda);
        c.overlap_bound = self.overlap_bound.unwrap_or(c.overlap_bound);
        c.shifts = self.shifts.unwrap_or(c.shifts);
        c.seed = self.seed.unwrap_or(c.seed);
        c.john_samples = self.john_samples.unwrap_or(c.john_samples);
        c.pair_budget = self.pair_budget.unwrap_or(c.pair_budget);
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_document_with_mixed_forms() {
        let c = ExperimentConfig::from_toml_str(
            r#"
pipeline = "l2g"
domains = ["square", { kind = "cusp", k = 3 }]
function = "logDist"
J = [5, 6]
p = 2
seed = 9
"#,
        )
        .unwrap();
        assert_eq!(c.pipeline, Pipeline::L2g);
        assert_eq!(c.domains[1], DomainSpec::Cusp { k: 3.0 });
        assert_eq!(c.functions, vec![FunctionSpec::LogDist]);
        assert_eq!(c.resolutions, vec![5, 6]);
        assert_eq!(c.p, vec![2.0]);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn json_document() {
        let c = ExperimentConfig::from_json_str(
            r#"{"pipeline":"weak","domains":[{"kind":"ball","dim":2}],"functions":[{"kind":"haarSum","depth":3,"seed":4}],"J":5}"#,
        )
        .unwrap();
        assert_eq!(c.domains, vec![DomainSpec::Ball { dim: 2 }]);
        assert_eq!(c.functions, vec![FunctionSpec::HaarSum { depth: 3, seed: 4 }]);
    }

    #[test]
    fn errors_carry_the_offending_path() {
        let path = |s: &str| match ExperimentConfig::from_toml_str(s).unwrap_err() {
            LabError::Config { path, .. } => path,
            e => panic!("{e}"),
        };
        assert_eq!(path("pipeline = \"nope\""), "pipeline");
        assert_eq!(path("pipeline = \"jn\"\ndomains = [\"square\", \"blob\"]"), "domains[1]");
        assert_eq!(path("pipeline = \"jn\"\np = [2, 0.5]"), "p[1]");
        assert_eq!(path("pipeline = \"jn\"\nJ = 0"), "J[0]");
        assert_eq!(path("pipeline = \"jn\"\nlambda = 1"), "lambda");
        assert_eq!(path("pipeline = \"necessity-sweep\"\ndomains = [\"square\"]"), "domains[0]");
        assert_eq!(path("pipeline = \"jn\"\nbogus = 1"), "config");
        assert_eq!(path("J = 3"), "pipeline");
    }
}
