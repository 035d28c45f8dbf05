//! Pipeline configuration, read from TOML.
//!
//! ```toml
//! seed = 42
//! self_matching = "auto"
//! model = "inme"
//!
//! [paths]
//! ontology = "ontology.nt"
//! workdir = "work"
//!
//! [autoencoder]
//! dims = [50, 100, 200]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ontoembed_core::{IngestConfig, RfConfig, SplitRatios, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub self_matching: SelfMatching,
    pub model: ModelSpec,
    /// Drop pairs whose two sides have identical label words.
    pub helis_trivial_filter: bool,
    /// Also forbid pairs entailed by chaining training positives as negatives.
    pub forbid_closure: bool,
    pub self_prediction_trials: usize,
    pub paths: Paths,
    pub ingest: IngestSection,
    pub autoencoder: AeSection,
    pub forest: ForestSection,
    pub split: SplitRatios,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            self_matching: SelfMatching::Auto,
            model: ModelSpec::InMe,
            helis_trivial_filter: false,
            forbid_closure: false,
            self_prediction_trials: 100,
            paths: Paths::default(),
            ingest: IngestSection::default(),
            autoencoder: AeSection::default(),
            forest: ForestSection::default(),
            split: SplitRatios::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub ontology: PathBuf,
    pub workdir: PathBuf,
    /// Imported embedding tables that `concat:<name>` models may refer to.
    pub external: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxiomSource {
    Subsumptions,
    Assertions,
    #[default]
    All,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub annotation_properties: IngestConfig,
    pub axioms: AxiomSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeSection {
    pub dims: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for AeSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            dims: vec![50, 100, 200],
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
        }
    }
}

impl AeSection {
    pub fn train_config(&self, dim: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            dim,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestSection {
    fn default() -> Self {
        let d = RfConfig::default();
        Self {
            n_trees: d.n_trees,
            max_depth: d.max_depth,
            min_samples_leaf: d.min_samples_leaf,
            features_per_split: d.features_per_split,
            bootstrap: d.bootstrap,
        }
    }
}

impl ForestSection {
    pub fn rf_config(&self, seed: u64) -> RfConfig {
        RfConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features_per_split,
            bootstrap: self.bootstrap,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SelfMatching {
    On,
    Off,
    /// Train both variants and keep the one with the better validation MRR.
    #[default]
    Auto,
}

impl SelfMatching {
    pub fn variants(self) -> &'static [bool] {
        match self {
            SelfMatching::On => &[true],
            SelfMatching::Off => &[false],
            SelfMatching::Auto => &[false, true],
        }
    }
}

/// Which entity embedding table the classifier sees.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    InMe,
    CoMe,
    /// InME ‖ CoME.
    InMeCoMe,
    /// CoME ‖ imported table.
    Concat(String),
    /// InME ‖ imported table.
    InMeConcat(String),
}

impl ModelSpec {
    pub fn uses_inme(&self) -> bool {
        matches!(self, ModelSpec::InMe | ModelSpec::InMeCoMe | ModelSpec::InMeConcat(_))
    }

    pub fn uses_come(&self) -> bool {
        matches!(self, ModelSpec::CoMe | ModelSpec::InMeCoMe | ModelSpec::Concat(_))
    }

    pub fn external(&self) -> Option<&str> {
        match self {
            ModelSpec::Concat(f) | ModelSpec::InMeConcat(f) => Some(f),
            _ => None,
        }
    }

    /// Name without the file part, safe for report cells and file names.
    pub fn short_name(&self) -> String {
        let stem = |f: &str| {
            Path::new(f)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        };
        match self {
            ModelSpec::InMe => "inme".into(),
            ModelSpec::CoMe => "come".into(),
            ModelSpec::InMeCoMe => "inme_come".into(),
            ModelSpec::Concat(f) => format!("come_{}", stem(f)),
            ModelSpec::InMeConcat(f) => format!("inme_{}", stem(f)),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::InMe => f.write_str("inme"),
            ModelSpec::CoMe => f.write_str("come"),
            ModelSpec::InMeCoMe => f.write_str("inme_come"),
            ModelSpec::Concat(file) => write!(f, "concat:{file}"),
            ModelSpec::InMeConcat(file) => write!(f, "inme_concat:{file}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let file = |f: &str| {
            if f.is_empty() {
                Err(format!("model {s:?} needs a file name after ':'"))
            } else {
                Ok(f.to_string())
            }
        };
        match s {
            "inme" => Ok(ModelSpec::InMe),
            "come" => Ok(ModelSpec::CoMe),
            "inme_come" => Ok(ModelSpec::InMeCoMe),
            _ => {
                if let Some(f) = s.strip_prefix("concat:") {
                    file(f).map(ModelSpec::Concat)
                } else if let Some(f) = s.strip_prefix("inme_concat:") {
                    file(f).map(ModelSpec::InMeConcat)
                } else {
                    Err(format!(
                        "unknown model {s:?}; expected inme, come, inme_come, concat:<file> or inme_concat:<file>"
                    ))
                }
            }
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PipelineConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Config {
            field: "<file>".into(),
            reason: e.message().to_string(),
        })?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            field: "--config".into(),
            reason: format!("{}: {e}", path.display()),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.paths.ontology);
        resolve(&mut self.paths.workdir);
        self.paths.external.iter_mut().for_each(resolve);
    }

    /// Path of the imported table named by the model: an entry of
    /// `paths.external` with that path or file name, or else the name itself.
    pub fn external_path(&self) -> Option<PathBuf> {
        let name = self.model.external()?;
        let found = self.paths.external.iter().find(|p| {
            p.ends_with(name) || p.file_name().is_some_and(|f| f == name)
        });
        Some(found.cloned().unwrap_or_else(|| PathBuf::from(name)))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, reason: String| {
            Err(CliError::Config {
                field: field.into(),
                reason,
            })
        };
        if self.paths.ontology.as_os_str().is_empty() {
            return bad("paths.ontology", "missing".into());
        }
        if !self.paths.ontology.is_file() {
            return bad(
                "paths.ontology",
                format!("{} does not exist", self.paths.ontology.display()),
            );
        }
        if self.paths.workdir.as_os_str().is_empty() {
            return bad("paths.workdir", "missing".into());
        }
        if let Some(p) = self.external_path() {
            if !p.is_file() {
                return bad("model", format!("external table {} does not exist", p.display()));
            }
        }
        if self.autoencoder.dims.is_empty() || self.autoencoder.dims.contains(&0) {
            return bad("autoencoder.dims", "need at least one positive dimension".into());
        }
        if let Err(e) = self.autoencoder.train_config(1, 0).validate() {
            return bad("autoencoder", e.to_string());
        }
        if self.forest.n_trees == 0 || self.forest.min_samples_leaf == 0 || self.forest.max_depth == Some(0) {
            return bad("forest", "n_trees, min_samples_leaf and max_depth must be positive".into());
        }
        let s = self.split;
        if s.train <= 0.0 || s.valid <= 0.0 || s.test <= 0.0 || (s.train + s.valid + s.test - 1.0).abs() > 1e-6 {
            return bad("split", "ratios must be positive and sum to 1".into());
        }
        if self.self_prediction_trials == 0 {
            return bad("self_prediction_trials", "must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_example() {
        let text = r#"
seed = 7
self_matching = "on"
model = "concat:owl2vec.tsv"
helis_trivial_filter = true

[paths]
ontology = "onto.nt"
workdir = "work"
external = ["tables/owl2vec.tsv"]

[ingest]
axioms = "subsumptions"
[ingest.annotation_properties]
allow = ["rdfs:label", "obo:IAO_0000115"]

[autoencoder]
dims = [8]
epochs = 5

[forest]
n_trees = 10

[split]
train = 0.8
valid = 0.1
test = 0.1
"#;
        let cfg = PipelineConfig::from_toml(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.self_matching, SelfMatching::On);
        assert_eq!(cfg.model, ModelSpec::Concat("owl2vec.tsv".into()));
        assert_eq!(cfg.paths.ontology, Path::new("/base/onto.nt"));
        assert_eq!(cfg.ingest.axioms, AxiomSource::Subsumptions);
        assert_eq!(cfg.ingest.annotation_properties.allow.len(), 2);
        assert_eq!(cfg.autoencoder.dims, [8]);
        assert_eq!(cfg.autoencoder.learning_rate, 1e-3);
        assert_eq!(cfg.forest.n_trees, 10);
        assert_eq!(cfg.external_path().unwrap(), Path::new("/base/tables/owl2vec.tsv"));
    }

    #[test]
    fn unknown_fields_and_models_are_rejected() {
        assert!(PipelineConfig::from_toml("sede = 1", Path::new(".")).is_err());
        assert!(PipelineConfig::from_toml("model = \"bert\"", Path::new(".")).is_err());
        assert!(PipelineConfig::from_toml("model = \"concat:\"", Path::new(".")).is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for s in ["inme", "come", "inme_come", "concat:a.tsv", "inme_concat:b/c.tsv"] {
            assert_eq!(s.parse::<ModelSpec>().unwrap().to_string(), s);
        }
        assert_eq!(ModelSpec::Concat("x/owl2vec.tsv".into()).short_name(), "come_owl2vec");
    }
}
