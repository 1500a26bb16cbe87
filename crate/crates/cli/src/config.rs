//! Run configuration: a TOML file with every field defaulted, plus
//! `--set key=value` dot-path overrides applied before deserialization.

use std::path::{Path, PathBuf};

use rome_core::em::EmConfig;
use rome_core::eval::{BinRule, SubgroupScheme};
use rome_core::moe::{ExpertFeatures, GateFeatures, MoeConfig, Optimizer};
use rome_core::{FeatureSpec, Result, RomeError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub io: IoSection,
    pub features: FeatureSection,
    pub split: SplitSection,
    /// Replication seeds shared by every subcommand.
    pub seeds: Vec<u64>,
    pub sim: SimSection,
    pub em: EmSection,
    pub dro: DroSection,
    pub moe: MoeSection,
    pub eval: EvalSection,
    pub ablate: AblateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            io: IoSection::default(),
            features: FeatureSection::default(),
            split: SplitSection::default(),
            seeds: (0..10).collect(),
            sim: SimSection::default(),
            em: EmSection::default(),
            dro: DroSection::default(),
            moe: MoeSection::default(),
            eval: EvalSection::default(),
            ablate: AblateSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: PathBuf,
    /// Input dataset; required by every subcommand except `simulate`.
    pub data: Option<PathBuf>,
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection { out_dir: PathBuf::from("out"), data: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub a: Vec<String>,
    pub s: Vec<String>,
    pub y: String,
    /// Indices into `s` used for group membership; empty means all.
    pub mem: Vec<usize>,
    /// Indices into `s` appearing in the linear outcome design; empty
    /// means all.
    pub out: Vec<usize>,
}

impl Default for FeatureSection {
    fn default() -> Self {
        // the synthetic benchmark's column names
        FeatureSection {
            a: (1..=15).map(|k| format!("a{k}")).collect(),
            s: (1..=5).map(|k| format!("s{k}")).collect(),
            y: "y".into(),
            mem: vec![],
            out: vec![],
        }
    }
}

impl FeatureSection {
    pub fn to_spec(&self) -> Result<FeatureSpec> {
        let all: Vec<usize> = (0..self.s.len()).collect();
        let spec = FeatureSpec {
            a_names: self.a.clone(),
            s_names: self.s.clone(),
            y_name: self.y.clone(),
            mem_indices: if self.mem.is_empty() { all.clone() } else { self.mem.clone() },
            out_indices: if self.out.is_empty() { all } else { self.out.clone() },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { train: 0.6, val: 0.2, test: 0.2 }
    }
}

impl SplitSection {
    pub fn validate(&self) -> Result<()> {
        let sum = self.train + self.val + self.test;
        if self.train <= 0.0 || self.val < 0.0 || self.test <= 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(RomeError::InvalidConfig(format!(
                "split fractions {}/{}/{} must be positive and sum to 1",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Rows per generated split (train and test are drawn independently
    /// at this size).
    pub n: usize,
    pub g: usize,
    pub misspec_rate: f64,
    pub noise_sd: f64,
    /// Also write each replication's training rows as CSV.
    pub emit_data: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection { n: 2000, g: 4, misspec_rate: 0.5, noise_sd: 1.0, emit_data: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmSection {
    pub g: usize,
    pub max_iter: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub ridge: f64,
    pub min_group_n: Option<usize>,
}

impl Default for EmSection {
    fn default() -> Self {
        let c = EmConfig::new(4);
        EmSection {
            g: 4,
            max_iter: c.max_iter,
            tau1: c.tau1,
            tau2: c.tau2,
            ridge: c.ridge,
            min_group_n: None,
        }
    }
}

impl EmSection {
    pub fn to_core(&self, seed: u64) -> EmConfig {
        let mut c = EmConfig::new(self.g);
        c.max_iter = self.max_iter;
        c.tau1 = self.tau1;
        c.tau2 = self.tau2;
        c.ridge = self.ridge;
        c.min_group_n = self.min_group_n;
        c.seed = seed;
        c
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DroSection {
    /// Constraint radius sweep; empty selects the built-in 27-value grid.
    pub c_grid: Vec<f64>,
}

impl DroSection {
    pub fn grid(&self) -> Vec<f64> {
        if self.c_grid.is_empty() {
            rome_core::simgen::constraint_grid()
        } else {
            self.c_grid.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeSection {
    pub g: usize,
    pub alpha: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub hidden_expert: usize,
    pub hidden_gate: usize,
    /// "adam" or "sgd".
    pub optimizer: String,
    /// Model roles trained by `fit-moe`.
    pub roles: Vec<String>,
}

impl Default for MoeSection {
    fn default() -> Self {
        let c = MoeConfig::new(4);
        MoeSection {
            g: 4,
            alpha: c.alpha,
            lr: c.lr,
            batch: c.batch,
            epochs: c.epochs,
            hidden_expert: c.hidden_expert,
            hidden_gate: c.hidden_gate,
            optimizer: "adam".into(),
            roles: ModelRole::ALL.iter().map(|r| r.name().to_string()).collect(),
        }
    }
}

impl MoeSection {
    pub fn optimizer(&self) -> Result<Optimizer> {
        match self.optimizer.as_str() {
            "adam" => Ok(Optimizer::Adam),
            "sgd" => Ok(Optimizer::Sgd),
            other => Err(RomeError::InvalidConfig(format!(
                "unknown optimizer '{other}' (use 'adam' or 'sgd')"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub min_n: usize,
    pub schemes: Vec<SchemeSection>,
    /// Role the paired t-tests compare against.
    pub baseline: String,
    /// Models to evaluate; empty means every checkpointed role found.
    pub models: Vec<String>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            min_n: 30,
            schemes: vec![SchemeSection {
                name: "quartiles-s1".into(),
                attributes: vec![AttributeSection { name: "s1".into(), rule: "quartile".into() }],
            }],
            baseline: "baseline-mlp-fair".into(),
            models: vec![],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub name: String,
    pub attributes: Vec<AttributeSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSection {
    /// Sensitive column name (must appear in `features.s`).
    pub name: String,
    /// "categorical", "median" or "quartile".
    pub rule: String,
}

impl SchemeSection {
    pub fn to_core(&self, s_names: &[String]) -> Result<SubgroupScheme> {
        let mut attributes = Vec::with_capacity(self.attributes.len());
        for attr in &self.attributes {
            let col = s_names.iter().position(|n| n == &attr.name).ok_or_else(|| {
                RomeError::InvalidConfig(format!(
                    "scheme '{}' references unknown sensitive attribute '{}'",
                    self.name, attr.name
                ))
            })?;
            let rule = match attr.rule.as_str() {
                "categorical" => BinRule::Categorical,
                "median" => BinRule::Median,
                "quartile" => BinRule::Quartile,
                other => {
                    return Err(RomeError::InvalidConfig(format!(
                        "scheme '{}': unknown rule '{other}'",
                        self.name
                    )))
                }
            };
            attributes.push((col, rule));
        }
        Ok(SubgroupScheme { attributes })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateSection {
    pub alphas: Vec<f64>,
}

impl Default for AblateSection {
    fn default() -> Self {
        AblateSection { alphas: vec![0.0, 0.05, 0.1, 0.2, 0.5, 1.0] }
    }
}

/// The five model roles of the benchmark protocol. The two baselines are
/// the degenerate single-expert configurations; "vanilla" is the
/// unconstrained mixture trained without the worst-group term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelRole {
    BaselineMlp,
    BaselineMlpFair,
    VanillaMoe,
    RomeMoeS,
    RomeMoeAs,
}

impl ModelRole {
    pub const ALL: [ModelRole; 5] = [
        ModelRole::BaselineMlp,
        ModelRole::BaselineMlpFair,
        ModelRole::VanillaMoe,
        ModelRole::RomeMoeS,
        ModelRole::RomeMoeAs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelRole::BaselineMlp => "baseline-mlp",
            ModelRole::BaselineMlpFair => "baseline-mlp-fair",
            ModelRole::VanillaMoe => "vanilla-moe",
            ModelRole::RomeMoeS => "rome-moe-s",
            ModelRole::RomeMoeAs => "rome-moe-as",
        }
    }

    pub fn parse(name: &str) -> Result<ModelRole> {
        ModelRole::ALL
            .iter()
            .copied()
            .find(|r| r.name() == name)
            .ok_or_else(|| RomeError::InvalidConfig(format!("unknown model role '{name}'")))
    }

    /// Mixture configuration realizing this role.
    pub fn moe_config(&self, base: &MoeSection, seed: u64) -> Result<MoeConfig> {
        let mut cfg = MoeConfig::new(base.g);
        cfg.lr = base.lr;
        cfg.batch = base.batch;
        cfg.epochs = base.epochs;
        cfg.hidden_expert = base.hidden_expert;
        cfg.hidden_gate = base.hidden_gate;
        cfg.optimizer = base.optimizer()?;
        cfg.seed = seed;
        match self {
            ModelRole::BaselineMlp => {
                cfg.g = 1;
                cfg.alpha = 0.0;
                cfg.expert_features = ExpertFeatures::All;
            }
            ModelRole::BaselineMlpFair => {
                cfg.g = 1;
                cfg.alpha = 0.0;
                cfg.expert_features = ExpertFeatures::NonSensitive;
            }
            ModelRole::VanillaMoe => {
                cfg.alpha = 0.0;
                cfg.gate_features = GateFeatures::All;
                cfg.expert_features = ExpertFeatures::All;
            }
            ModelRole::RomeMoeS => {
                cfg.alpha = base.alpha;
                cfg.gate_features = GateFeatures::Sensitive;
                cfg.expert_features = ExpertFeatures::NonSensitive;
            }
            ModelRole::RomeMoeAs => {
                cfg.alpha = base.alpha;
                cfg.gate_features = GateFeatures::All;
                cfg.expert_features = ExpertFeatures::NonSensitive;
            }
        }
        Ok(cfg)
    }
}

/// Loads the TOML file (or starts from defaults when no path is given),
/// applies `--set key.path=value` overrides, validates and returns the
/// resolved configuration.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<RunConfig> {
    let mut value: toml::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| RomeError::InvalidConfig(format!("config {}: {e}", p.display())))?;
            text.parse()
                .map_err(|e| RomeError::InvalidConfig(format!("config {}: {e}", p.display())))?
        }
        None => toml::Value::Table(Default::default()),
    };
    for set in sets {
        apply_set(&mut value, set)?;
    }
    let cfg: RunConfig = value
        .try_into()
        .map_err(|e| RomeError::InvalidConfig(format!("config: {e}")))?;
    cfg.split.validate()?;
    if let Some(data) = &cfg.io.data {
        if !data.exists() {
            return Err(RomeError::InvalidConfig(format!(
                "io.data file {} does not exist",
                data.display()
            )));
        }
    }
    Ok(cfg)
}

fn apply_set(root: &mut toml::Value, set: &str) -> Result<()> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| RomeError::InvalidConfig(format!("--set '{set}' is not key=value")))?;
    // parse the value as TOML, falling back to a bare string
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Value>() {
        Ok(toml::Value::Table(t)) => t.get("v").cloned().unwrap(),
        _ => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            RomeError::InvalidConfig(format!("--set '{set}': '{part}' is not a table"))
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("empty --set key");
}

/// Writes the fully resolved configuration next to the outputs so every
/// run is self-describing.
pub fn echo_config(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let text = toml::to_string_pretty(cfg)
        .map_err(|e| RomeError::InvalidConfig(format!("config echo: {e}")))?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| RomeError::Data(format!("create {}: {e}", out_dir.display())))?;
    std::fs::write(out_dir.join("config_echo.toml"), text)
        .map_err(|e| RomeError::Data(format!("write config echo: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        cfg.split.validate().unwrap();
        cfg.features.to_spec().unwrap();
        assert_eq!(cfg.seeds.len(), 10);
    }

    #[test]
    fn set_overrides_nested_key() {
        let cfg = load_config(None, &["em.g=7".into(), "io.out_dir=\"x\"".into()]).unwrap();
        assert_eq!(cfg.em.g, 7);
        assert_eq!(cfg.io.out_dir, PathBuf::from("x"));
    }

    #[test]
    fn set_parses_arrays_and_floats() {
        let cfg = load_config(
            None,
            &["ablate.alphas=[0.0, 0.3]".into(), "moe.alpha=0.2".into()],
        )
        .unwrap();
        assert_eq!(cfg.ablate.alphas, vec![0.0, 0.3]);
        assert_eq!(cfg.moe.alpha, 0.2);
    }

    #[test]
    fn bad_split_rejected() {
        let err = load_config(None, &["split.train=0.9".into()]).unwrap_err();
        assert!(err.to_string().contains("sum to 1"));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(load_config(None, &["em.gg=2".into()]).is_err());
    }

    #[test]
    fn roles_round_trip() {
        for role in ModelRole::ALL {
            assert_eq!(ModelRole::parse(role.name()).unwrap(), role);
        }
        assert!(ModelRole::parse("nope").is_err());
    }

    #[test]
    fn baseline_roles_are_single_expert() {
        let base = MoeSection::default();
        let cfg = ModelRole::BaselineMlp.moe_config(&base, 1).unwrap();
        assert_eq!(cfg.g, 1);
        assert_eq!(cfg.expert_features, ExpertFeatures::All);
        let fair = ModelRole::BaselineMlpFair.moe_config(&base, 1).unwrap();
        assert_eq!(fair.expert_features, ExpertFeatures::NonSensitive);
        let vanilla = ModelRole::VanillaMoe.moe_config(&base, 1).unwrap();
        assert_eq!(vanilla.alpha, 0.0);
        assert_eq!(vanilla.gate_features, GateFeatures::All);
        assert_eq!(vanilla.expert_features, ExpertFeatures::All);
    }
}
