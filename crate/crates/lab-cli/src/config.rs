//! Experiment configs.
//!
//! ```json
//! {
//!   "kind": "spectrum",
//!   "system": {"full": 2},
//!   "params": {"observable": {"indicator": 1}, "grid": {"start": 0, "stop": 1, "points": 41}},
//!   "threads": 2,
//!   "output_dir": "out",
//!   "plot": true
//! }
//! ```
//!
//! `system` is `{"full": n}`, `"golden_mean"`, `{"table": [[0|1]]}` or
//! `{"file": "path"}` (resolved relative to the config file before hashing).

use std::path::Path;

use ergolab::ldp::Ball;
use ergolab::lorenz::LorenzParams;
use ergolab::symbolic::{FunctionRole, LocallyConstantFunction, MarkovMeasure, SftGraph};
use ergolab::thermo::equilibrium_state;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Entropy,
    Pressure,
    Spectrum,
    FlowSpectrum,
    Lorenz,
    LdpLevel1,
    LdpLevel2,
    GibbsAudit,
    Approx,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Entropy => "entropy",
            Kind::Pressure => "pressure",
            Kind::Spectrum => "spectrum",
            Kind::FlowSpectrum => "flow-spectrum",
            Kind::Lorenz => "lorenz",
            Kind::LdpLevel1 => "ldp-level1",
            Kind::LdpLevel2 => "ldp-level2",
            Kind::GibbsAudit => "gibbs-audit",
            Kind::Approx => "approx",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemSpec {
    Full(usize),
    GoldenMean,
    Table(Vec<Vec<u8>>),
    File(String),
}

impl SystemSpec {
    pub fn build(&self) -> LabResult<SftGraph> {
        match self {
            SystemSpec::Full(n) if *n >= 1 => Ok(SftGraph::full_shift(*n)),
            SystemSpec::Full(_) => Err(LabError::invalid("/system/full", "need at least one symbol")),
            SystemSpec::GoldenMean => Ok(SftGraph::golden_mean()),
            SystemSpec::Table(t) => {
                let table: Vec<Vec<bool>> = t.iter().map(|r| r.iter().map(|&x| x != 0).collect()).collect();
                SftGraph::validate(&table).map_err(|e| LabError::invalid("/system/table", e.to_string()))
            }
            SystemSpec::File(_) => Err(LabError::invalid("/system/file", "file reference was not resolved")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSpec {
    Indicator(usize),
    Word(Vec<usize>),
    Constant(f64),
    Table { order: usize, values: Vec<f64> },
    /// Order-1 potential `ψ(i) = ln p_i`.
    LogBernoulli(Vec<f64>),
}

impl FunctionSpec {
    pub fn build(&self, sft: &SftGraph, role: FunctionRole) -> ergolab::Result<LocallyConstantFunction> {
        let f = match self {
            FunctionSpec::Indicator(s) => LocallyConstantFunction::indicator(sft, *s)?,
            FunctionSpec::Word(w) => LocallyConstantFunction::word_indicator(sft, w)?,
            FunctionSpec::Constant(c) => LocallyConstantFunction::constant(sft, *c, role)?,
            FunctionSpec::Table { order, values } => LocallyConstantFunction::new(sft, *order, role, values.clone())?,
            FunctionSpec::LogBernoulli(p) => {
                LocallyConstantFunction::new(sft, 1, role, p.iter().map(|x| x.ln()).collect())?
            }
        };
        Ok(f.with_role(role))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureSpec {
    Parry,
    Bernoulli(Vec<f64>),
    Equilibrium(FunctionSpec),
    Markov(Value),
}

impl MeasureSpec {
    pub fn build(&self, sft: &SftGraph) -> ergolab::Result<MarkovMeasure> {
        match self {
            MeasureSpec::Parry => MarkovMeasure::parry(sft),
            MeasureSpec::Bernoulli(p) => MarkovMeasure::bernoulli(p),
            MeasureSpec::Equilibrium(psi) => Ok(equilibrium_state(sft, &psi.build(sft, FunctionRole::Potential)?)?.measure),
            MeasureSpec::Markov(v) => {
                serde_json::from_value(v.clone()).map_err(|e| ergolab::Error::InvalidInput(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }

    /// Non-empty, finite and strictly increasing.
    pub fn check(&self, pointer: &str) -> LabResult<Vec<f64>> {
        let v = self.values();
        if v.is_empty() {
            return Err(LabError::invalid(pointer, "grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(LabError::invalid(pointer, "grid has a non-finite entry"));
        }
        if let Some(i) = v.windows(2).position(|w| w[1] <= w[0]) {
            return Err(LabError::invalid(format!("{pointer}/{}", i + 1), "grid is not strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrregularParams {
    pub ratio: f64,
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyParams {
    /// Largest word length in the growth-rate table.
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
    pub irregular: Option<IrregularParams>,
}

fn default_word_len() -> usize {
    12
}

/// `q ↦ P(potential + q·observable)`, or `P(q·potential)` without an observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureParams {
    pub potential: FunctionSpec,
    pub observable: Option<FunctionSpec>,
    pub q_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub observable: FunctionSpec,
    pub grid: Grid,
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpectrumParams {
    pub roof: FunctionSpec,
    pub observable: FunctionSpec,
    pub grid: Grid,
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparatedParams {
    pub t: usize,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzRunParams {
    #[serde(default)]
    pub model: LorenzParams,
    pub seed: u64,
    pub returns: usize,
    pub starts: usize,
    /// Depth of the acim proxy for the symbolic prediction.
    pub depth: usize,
    pub round_trips: usize,
    pub cylinder_depth: usize,
    pub separated: Option<SeparatedParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationParams {
    pub horizon: usize,
    pub threshold: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level1Params {
    pub measure: MeasureSpec,
    pub observable: FunctionSpec,
    pub grid: Grid,
    #[serde(default)]
    pub deviations: Vec<DeviationParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level2Params {
    pub measure: MeasureSpec,
    pub ball: Ball,
    pub horizon: usize,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsParams {
    pub measure: MeasureSpec,
    pub potential: FunctionSpec,
    pub n_max: usize,
    pub delta_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Measure(MeasureSpec),
    Periodic(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedComponent {
    pub weight: f64,
    pub component: Component,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxParams {
    pub target: Vec<WeightedComponent>,
    pub depth: usize,
    pub epsilon: f64,
    pub reference_entropy: Option<f64>,
    pub horseshoe_n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Entropy(EntropyParams),
    Pressure(PressureParams),
    Spectrum(SpectrumParams),
    FlowSpectrum(FlowSpectrumParams),
    Lorenz(LorenzRunParams),
    LdpLevel1(Level1Params),
    LdpLevel2(Level2Params),
    GibbsAudit(GibbsParams),
    Approx(ApproxParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Kind,
    system: Option<SystemSpec>,
    #[serde(default)]
    params: Value,
    #[serde(default = "one")]
    threads: usize,
    output_dir: Option<String>,
    #[serde(default)]
    plot: bool,
}

fn one() -> usize {
    1
}

/// A validated experiment config together with its canonical JSON form.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub system: Option<SystemSpec>,
    pub params: Params,
    pub threads: usize,
    pub output_dir: Option<String>,
    pub plot: bool,
    /// Resolved config with sorted keys; the cache key is its hash.
    pub canonical: Value,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

fn decode<T: DeserializeOwned>(value: &Value, prefix: &str) -> LabResult<T> {
    serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        let pointer = format!("{prefix}{}", pointer_of(e.path()));
        LabError::invalid(if pointer.is_empty() { "/".to_string() } else { pointer }, e.inner().to_string())
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    /// Parses and validates; `base` resolves `{"file": …}` system references.
    pub fn parse(text: &str, base: Option<&Path>) -> LabResult<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| LabError::invalid("/", e.to_string()))?;
        if let Some(file) = value.pointer("/system/file").and_then(Value::as_str) {
            let path = base.map_or_else(|| Path::new(file).to_path_buf(), |b| b.join(file));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| LabError::invalid("/system/file", format!("{}: {e}", path.display())))?;
            let sys: Value =
                serde_json::from_str(&text).map_err(|e| LabError::invalid("/system/file", e.to_string()))?;
            let spec: SystemSpec = decode(&sys, "/system")?;
            if matches!(spec, SystemSpec::File(_)) {
                return Err(LabError::invalid("/system/file", "nested file references are not followed"));
            }
            value["system"] = sys;
        }
        let raw: RawConfig = decode(&value, "")?;
        if raw.threads == 0 {
            return Err(LabError::invalid("/threads", "need at least one thread"));
        }
        let p = &raw.params;
        let params = match raw.kind {
            Kind::Entropy if p.is_null() => Params::Entropy(EntropyParams {
                max_word_len: default_word_len(),
                irregular: None,
            }),
            Kind::Entropy => Params::Entropy(decode(p, "/params")?),
            Kind::Pressure => Params::Pressure(decode(p, "/params")?),
            Kind::Spectrum => Params::Spectrum(decode(p, "/params")?),
            Kind::FlowSpectrum => Params::FlowSpectrum(decode(p, "/params")?),
            Kind::Lorenz => Params::Lorenz(decode(p, "/params")?),
            Kind::LdpLevel1 => Params::LdpLevel1(decode(p, "/params")?),
            Kind::LdpLevel2 => Params::LdpLevel2(decode(p, "/params")?),
            Kind::GibbsAudit => Params::GibbsAudit(decode(p, "/params")?),
            Kind::Approx => Params::Approx(decode(p, "/params")?),
        };
        let needs_system = raw.kind != Kind::Lorenz;
        match (&raw.system, needs_system) {
            (None, true) => return Err(LabError::invalid("/system", "this experiment needs a system")),
            (Some(s), _) => {
                s.build()?;
            }
            _ => {}
        }
        let cfg = Self {
            kind: raw.kind,
            system: raw.system.clone(),
            params,
            threads: raw.threads,
            output_dir: raw.output_dir.clone(),
            plot: raw.plot,
            canonical: serde_json::to_value(&raw)?,
        };
        cfg.check_grids()?;
        Ok(cfg)
    }

    fn check_grids(&self) -> LabResult<()> {
        match &self.params {
            Params::Pressure(p) => p.q_grid.check("/params/q_grid").map(drop),
            Params::Spectrum(p) => p.grid.check("/params/grid").map(drop),
            Params::FlowSpectrum(p) => p.grid.check("/params/grid").map(drop),
            Params::LdpLevel1(p) => p.grid.check("/params/grid").map(drop),
            Params::GibbsAudit(p) => {
                let d = p.delta_grid.check("/params/delta_grid")?;
                if d[0] <= 0.0 {
                    return Err(LabError::invalid("/params/delta_grid/0", "δ must be positive"));
                }
                Ok(())
            }
            Params::Approx(p) => {
                if p.target.is_empty() {
                    return Err(LabError::invalid("/params/target", "target has no components"));
                }
                if !(p.epsilon > 0.0) {
                    return Err(LabError::invalid("/params/epsilon", "ε must be positive"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn sft(&self) -> LabResult<SftGraph> {
        match &self.system {
            Some(s) => s.build(),
            None => Err(LabError::invalid("/system", "this experiment needs a system")),
        }
    }

    /// Hash of the canonical config with the output location removed, so
    /// the same experiment written elsewhere shares one cache entry.
    pub fn hash(&self) -> String {
        let mut v = self.canonical.clone();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
        }
        sha256_hex(&serde_json::to_vec(&v).expect("config serializes"))
    }
}
