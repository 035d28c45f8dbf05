//! The stages behind the CLI verbs.
//!
//! Each verb requires the outputs of the stages before it and fails with
//! `MissingArtifact` when they are absent; `run_all` runs every stage in
//! order. Stage directories are keyed by the hash of their inputs, so
//! rerunning with unchanged inputs only re-reads what is already there.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ontoembed_core::autoencoder::{self, encode};
use ontoembed_core::classifier::train_forest;
use ontoembed_core::embedding::{concat_tables, entity_embeddings};
use ontoembed_core::evaluator::{
    self, rank_all, restrict, self_prediction, select_model, write_ranks_csv, write_report_csv,
    write_report_text, FilterSet, ReportRow,
};
use ontoembed_core::ingest::ingest_file;
use ontoembed_core::matrix::{build_cooccurrence, build_inverted_index, build_vocabulary};
use ontoembed_core::sampler::{
    self, assemble_features, negative_samples, partition_entities, self_matching_samples,
    split_pairs, transitive_closure,
};
use ontoembed_core::{
    AeParams, DistanceScorer, EmbeddingTable, Forest, Iri, LabeledPairSet, Metrics, ModelKey,
    OntologyStore, Pair, PairSplit, SparseBinaryMatrix, TableSource, Vocabulary,
};
use serde::Serialize;

use crate::config::{AxiomSource, ModelSpec, PipelineConfig};
use crate::workdir::{file_sha256, sha256_hex, stage_key, Workdir};
use crate::derive_seed;

pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_TXT: &str = "metrics.txt";
pub const RANKS_CSV: &str = "ranks.csv";
pub const EMBEDDINGS: &str = "embeddings.tsv";
pub const SELFPRED_CSV: &str = "selfpred.csv";
pub const SELFPRED_TXT: &str = "selfpred.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    InMe,
    CoMe,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::InMe => "inme",
            MatrixKind::CoMe => "come",
        }
    }

    fn source(self) -> TableSource {
        match self {
            MatrixKind::InMe => TableSource::InMe,
            MatrixKind::CoMe => TableSource::CoMe,
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_sha256: String,
    config: &'a PipelineConfig,
    ontology_sha256: &'a str,
    seeds: &'a BTreeMap<String, u64>,
    artifacts: BTreeMap<String, String>,
}

/// Outcome of the `eval` stage.
#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub dir: PathBuf,
    pub selected: ModelKey,
    pub report: String,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    work: Workdir,
    ontology_sha256: String,
    external_sha256: Option<String>,
    seeds: BTreeMap<String, u64>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut out = create(path)?;
    for l in lines {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn load_store(ingest_dir: &Path) -> Result<OntologyStore> {
    Ok(serde_json::from_reader(open(&ingest_dir.join("store.json"))?)?)
}

fn load_matrix(build_dir: &Path, kind: MatrixKind) -> Result<(Vocabulary, SparseBinaryMatrix)> {
    let words = read_lines(&build_dir.join("vocab.txt"))?;
    let cols = match kind {
        MatrixKind::InMe => read_lines(&build_dir.join("entities.txt"))?,
        MatrixKind::CoMe => words.clone(),
    };
    let m = SparseBinaryMatrix::read_dump(
        open(&build_dir.join(format!("{}.tsv", kind.name())))?,
        words.clone(),
        cols,
    )?;
    Ok((Vocabulary::from_words(words), m))
}

fn load_table(path: &Path, name: &str) -> Result<EmbeddingTable> {
    EmbeddingTable::import(open(path)?, name).with_context(|| format!("reading {}", path.display()))
}

fn load_split(sample_dir: &Path) -> Result<(PairSplit, BTreeSet<Pair>)> {
    let split = PairSplit::read_manifest(open(&sample_dir.join("split.txt"))?)?;
    let negatives = PairSplit::read_manifest(open(&sample_dir.join("negatives.txt"))?)?.train;
    Ok((split, negatives))
}

fn load_forest(rf_dir: &Path) -> Result<Forest> {
    Ok(Forest::read_from(open(&rf_dir.join("forest.txt"))?)?)
}

fn positive_pairs(store: &OntologyStore, axioms: AxiomSource) -> Vec<Pair> {
    let mut out = Vec::new();
    if axioms != AxiomSource::Assertions {
        out.extend(store.subsumptions.iter().cloned());
    }
    if axioms != AxiomSource::Subsumptions {
        out.extend(store.assertions.iter().cloned());
    }
    out
}

fn grid_label(model: &ModelSpec, key: ModelKey) -> String {
    let sm = if key.self_matching { "self" } else { "plain" };
    format!("{}/d{}/{}", model.short_name(), key.dim, sm)
}

impl Pipeline {
    pub fn open(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let ontology_sha256 = file_sha256(&cfg.paths.ontology)
            .with_context(|| format!("reading {}", cfg.paths.ontology.display()))?;
        let external_sha256 = cfg
            .external_path()
            .map(|p| file_sha256(&p).with_context(|| format!("reading {}", p.display())))
            .transpose()?;
        let work = Workdir::open(&cfg.paths.workdir)?;
        Ok(Self {
            cfg,
            work,
            ontology_sha256,
            external_sha256,
            seeds: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn workdir(&self) -> &Path {
        self.work.root()
    }

    fn seed(&mut self, tag: &str) -> u64 {
        let s = derive_seed(self.cfg.seed, tag);
        self.seeds.insert(tag.to_string(), s);
        s
    }

    fn kinds(&self) -> Vec<MatrixKind> {
        let mut k = Vec::new();
        if self.cfg.model.uses_inme() {
            k.push(MatrixKind::InMe);
        }
        if self.cfg.model.uses_come() {
            k.push(MatrixKind::CoMe);
        }
        k
    }

    fn dims(&self) -> Vec<usize> {
        self.cfg.autoencoder.dims.clone()
    }

    fn grid(&self) -> Vec<ModelKey> {
        let mut g = Vec::new();
        for &dim in &self.cfg.autoencoder.dims {
            for &self_matching in self.cfg.self_matching.variants() {
                g.push(ModelKey { dim, self_matching });
            }
        }
        g
    }

    fn candidates(store: &OntologyStore) -> Vec<Iri> {
        store.classes.iter().cloned().collect()
    }

    // ---- keys ----

    fn ingest_key(&self) -> String {
        stage_key("ingest", &(&self.ontology_sha256, &self.cfg.ingest.annotation_properties))
    }

    fn build_key(&self) -> String {
        stage_key("build", &self.ingest_key())
    }

    fn ae_key(&mut self, kind: MatrixKind, dim: usize) -> (String, ontoembed_core::TrainConfig) {
        let seed = self.seed(&format!("train-ae:{}:{dim}", kind.name()));
        let tc = self.cfg.autoencoder.train_config(dim, seed);
        (stage_key("train-ae", &(self.build_key(), kind, &tc)), tc)
    }

    fn embed_key(&mut self, kind: MatrixKind, dim: usize) -> String {
        let ae = self.ae_key(kind, dim).0;
        stage_key("embed", &ae)
    }

    fn sample_key(&mut self) -> (String, u64, u64) {
        let split_seed = self.seed("split");
        let neg_seed = self.seed("negatives");
        let key = stage_key(
            "sample",
            &(
                self.ingest_key(),
                self.cfg.ingest.axioms,
                self.cfg.split,
                split_seed,
                neg_seed,
                self.cfg.helis_trivial_filter,
                self.cfg.forbid_closure,
            ),
        );
        (key, split_seed, neg_seed)
    }

    fn rf_key(&mut self, key: ModelKey) -> (String, u64) {
        let tag = format!("train-rf:{}:{}:{}", self.cfg.model, key.dim, key.self_matching);
        let seed = self.seed(&tag);
        let embeds: Vec<String> = self
            .kinds()
            .into_iter()
            .map(|k| self.embed_key(k, key.dim))
            .collect();
        let sample = self.sample_key().0;
        let k = stage_key(
            "train-rf",
            &(
                sample,
                embeds,
                self.cfg.model.to_string(),
                &self.external_sha256,
                &self.cfg.forest,
                key,
                seed,
            ),
        );
        (k, seed)
    }

    fn rf_keys(&mut self) -> Vec<(ModelKey, String)> {
        self.grid()
            .into_iter()
            .map(|k| (k, self.rf_key(k).0))
            .collect()
    }

    // ---- loading upstream outputs ----

    fn table(&mut self, dim: usize) -> Result<EmbeddingTable> {
        let mut parts = Vec::new();
        for kind in self.kinds() {
            let key = self.embed_key(kind, dim);
            let dir = self.work.require("embed", &key)?;
            parts.push(load_table(&dir.join(EMBEDDINGS), kind.name())?);
        }
        if let Some(path) = self.cfg.external_path() {
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            parts.push(load_table(&path, &name)?);
        }
        let mut it = parts.into_iter();
        let first = it.next().context("model uses no embedding table")?;
        it.try_fold(first, |acc, t| concat_tables(&acc, &t).map_err(Into::into))
    }

    // ---- stages ----

    pub fn ingest(&mut self) -> Result<PathBuf> {
        let key = self.ingest_key();
        let cfg = &self.cfg;
        self.work.build("ingest", &key, |dir| {
            let store = ingest_file(&cfg.paths.ontology, &cfg.ingest.annotation_properties)?;
            log::info!("ingested {} classes, {} individuals", store.classes.len(), store.individuals.len());
            let mut out = create(&dir.join("store.json"))?;
            serde_json::to_writer(&mut out, &store)?;
            out.flush()?;
            fs::write(dir.join("report.txt"), store.report.to_string())?;
            Ok(())
        })
    }

    pub fn build(&mut self) -> Result<PathBuf> {
        let ingest = self.work.require("ingest", &self.ingest_key())?;
        let key = self.build_key();
        self.work.build("build", &key, |dir| {
            let store = load_store(&ingest)?;
            let vocab = build_vocabulary(&store)?;
            let inme = build_inverted_index(&store, &vocab)?;
            let come = build_cooccurrence(&store, &vocab)?;
            log::info!("vocabulary of {} words over {} entities", vocab.len(), inme.n_cols());
            write_lines(&dir.join("vocab.txt"), vocab.words().iter().map(String::as_str))?;
            write_lines(&dir.join("entities.txt"), inme.col_labels().iter().map(String::as_str))?;
            for (name, m) in [("inme", &inme), ("come", &come)] {
                let mut out = create(&dir.join(format!("{name}.tsv")))?;
                m.write_dump(&mut out)?;
                out.flush()?;
            }
            Ok(())
        })
    }

    pub fn train_ae(&mut self) -> Result<Vec<PathBuf>> {
        let build = self.work.require("build", &self.build_key())?;
        let mut dirs = Vec::new();
        for kind in self.kinds() {
            for dim in self.dims() {
                let (key, tc) = self.ae_key(kind, dim);
                dirs.push(self.work.build("train-ae", &key, |dir| {
                    let (_, m) = load_matrix(&build, kind)?;
                    let (params, history) = autoencoder::train(&m, &tc)?;
                    log::info!(
                        "{} d={dim}: loss {:.4} -> {:.4}",
                        kind.name(),
                        history[0],
                        history.last().copied().unwrap_or(f64::NAN)
                    );
                    let mut out = create(&dir.join("params.txt"))?;
                    params.write_to(&mut out)?;
                    out.flush()?;
                    let mut out = create(&dir.join("loss.csv"))?;
                    autoencoder::write_loss_csv(&history, &mut out)?;
                    out.flush()?;
                    Ok(())
                })?);
            }
        }
        Ok(dirs)
    }

    pub fn embed(&mut self) -> Result<Vec<PathBuf>> {
        let ingest = self.work.require("ingest", &self.ingest_key())?;
        let build = self.work.require("build", &self.build_key())?;
        let mut dirs = Vec::new();
        for kind in self.kinds() {
            for dim in self.dims() {
                let ae_key = self.ae_key(kind, dim).0;
                let ae = self.work.require("train-ae", &ae_key)?;
                let key = self.embed_key(kind, dim);
                dirs.push(self.work.build("embed", &key, |dir| {
                    let store = load_store(&ingest)?;
                    let (vocab, m) = load_matrix(&build, kind)?;
                    let params = AeParams::read_from(open(&ae.join("params.txt"))?)?;
                    let words = encode(&params, &m)?;
                    let (table, zero) = entity_embeddings(&words, &store, &vocab, kind.source())?;
                    if !zero.is_empty() {
                        log::warn!("{} entities have no label words and get a zero vector", zero.len());
                    }
                    let mut out = create(&dir.join(EMBEDDINGS))?;
                    table.export(&mut out)?;
                    out.flush()?;
                    write_lines(&dir.join("zero_vectors.txt"), zero.iter().map(Iri::as_str))?;
                    Ok(())
                })?);
            }
        }
        Ok(dirs)
    }

    fn sample(&mut self) -> Result<PathBuf> {
        let ingest = self.work.require("ingest", &self.ingest_key())?;
        let (key, split_seed, neg_seed) = self.sample_key();
        let cfg = &self.cfg;
        self.work.build("sample", &key, |dir| {
            let store = load_store(&ingest)?;
            let mut pairs = positive_pairs(&store, cfg.ingest.axioms);
            if cfg.helis_trivial_filter {
                let before = pairs.len();
                pairs = sampler::drop_trivial_pairs(&pairs, &store);
                log::info!("dropped {} trivial pairs", before - pairs.len());
            }
            let split = split_pairs(&pairs, cfg.split, split_seed)?;
            let forbidden = if cfg.forbid_closure {
                transitive_closure(&split.train)
            } else {
                BTreeSet::new()
            };
            let negatives = negative_samples(&split.train, &Self::candidates(&store), &forbidden, neg_seed)?;
            let mut out = create(&dir.join("split.txt"))?;
            split.write_manifest(&mut out)?;
            out.flush()?;
            let neg = PairSplit {
                train: negatives,
                ..PairSplit::default()
            };
            let mut out = create(&dir.join("negatives.txt"))?;
            neg.write_manifest(&mut out)?;
            out.flush()?;
            Ok(())
        })
    }

    pub fn train_rf(&mut self) -> Result<Vec<PathBuf>> {
        let ingest = self.work.require("ingest", &self.ingest_key())?;
        let sample = self.sample()?;
        let mut dirs = Vec::new();
        for key in self.grid() {
            let table = self.table(key.dim)?;
            let (rf_key, seed) = self.rf_key(key);
            let rf = self.cfg.forest.rf_config(seed);
            dirs.push(self.work.build("train-rf", &rf_key, |dir| {
                let store = load_store(&ingest)?;
                let (split, negatives) = load_split(&sample)?;
                let sets = LabeledPairSet {
                    positives: split.train,
                    negatives,
                    self_matching: self_matching_samples(&store),
                };
                let data = assemble_features(&sets, &table, key.self_matching)?;
                log::info!(
                    "forest d={} self_matching={}: {} rows of {} features",
                    key.dim,
                    key.self_matching,
                    data.n_rows(),
                    data.n_features()
                );
                let forest = train_forest(&data, &rf)?;
                let mut out = create(&dir.join("forest.txt"))?;
                forest.write_to(&mut out)?;
                out.flush()?;
                Ok(())
            })?);
        }
        Ok(dirs)
    }

    pub fn eval(&mut self) -> Result<EvalOutcome> {
        let ingest = self.work.require("ingest", &self.ingest_key())?;
        let sample_key = self.sample_key().0;
        let sample = self.work.require("sample", &sample_key)?;
        let rf = self.rf_keys();
        let mut forests = Vec::new();
        for (k, key) in &rf {
            forests.push((*k, self.work.require("train-rf", key)?));
        }
        let mut tables = BTreeMap::new();
        for dim in self.dims() {
            tables.insert(dim, self.table(dim)?);
        }
        let key = stage_key("eval", &(&rf, self.cfg.model.to_string()));
        let model = self.cfg.model.clone();
        let mut selected = None;
        let dir = self.work.build("eval", &key, |dir| {
            let store = load_store(&ingest)?;
            let (split, _) = load_split(&sample)?;
            let candidates = Self::candidates(&store);
            let self_pairs = self_matching_samples(&store);
            let filter_for = |use_self: bool| {
                let mut pairs = split.train.clone();
                if use_self {
                    pairs.extend(self_pairs.iter().cloned());
                }
                FilterSet::new(&pairs)
            };

            let mut rows = Vec::new();
            let mut valid = BTreeMap::new();
            let mut loaded = BTreeMap::new();
            for (k, rf_dir) in &forests {
                let forest = load_forest(rf_dir)?;
                let table = &tables[&k.dim];
                if !split.valid.is_empty() {
                    let m = evaluator::evaluate(&forest, table, &split.valid, &candidates, &filter_for(k.self_matching))?;
                    rows.push(ReportRow {
                        model: grid_label(&model, *k),
                        dataset: "valid".into(),
                        restriction: "all".into(),
                        n_queries: m.n_queries,
                        metrics: Some(m),
                    });
                    valid.insert(*k, m);
                }
                loaded.insert(*k, forest);
            }
            let chosen = select_model(&valid).unwrap_or(forests[0].0);
            log::info!("selected d={} self_matching={}", chosen.dim, chosen.self_matching);

            let partition = partition_entities(
                &split.train,
                split.train.iter().chain(&split.valid).chain(&split.test),
            );
            let table = &tables[&chosen.dim];
            let results = rank_all(&loaded[&chosen], table, &split.test, &candidates, &filter_for(chosen.self_matching))?;
            rows.extend(ReportRow::from_subsets(&grid_label(&model, chosen), "test", &restrict(&results, &partition)));
            // the distance ranker would always put e1 itself first, so self
            // pairs are filtered for it
            let distance = rank_all(&DistanceScorer, table, &split.test, &candidates, &filter_for(true))?;
            rows.extend(ReportRow::from_subsets(
                &format!("distance/d{}", chosen.dim),
                "test",
                &restrict(&distance, &partition),
            ));

            let mut out = create(&dir.join(METRICS_CSV))?;
            write_report_csv(&mut out, &rows)?;
            out.flush()?;
            let mut out = create(&dir.join(METRICS_TXT))?;
            write_report_text(&mut out, &rows)?;
            out.flush()?;
            let mut out = create(&dir.join(RANKS_CSV))?;
            write_ranks_csv(&mut out, &results)?;
            out.flush()?;
            fs::write(
                dir.join("selection.txt"),
                format!("dim={}\nself_matching={}\n", chosen.dim, chosen.self_matching),
            )?;
            selected = Some(chosen);
            Ok(())
        })?;
        let selected = match selected {
            Some(s) => s,
            None => read_selection(&dir)?,
        };
        Ok(EvalOutcome {
            report: fs::read_to_string(dir.join(METRICS_TXT))?,
            dir,
            selected,
        })
    }

    pub fn selfpred(&mut self) -> Result<(PathBuf, String)> {
        let ingest = self.work.require("ingest", &self.ingest_key())?;
        let rf = self.rf_keys();
        let mut forests = Vec::new();
        for (k, key) in &rf {
            forests.push((*k, self.work.require("train-rf", key)?));
        }
        let mut tables = BTreeMap::new();
        for dim in self.dims() {
            tables.insert(dim, self.table(dim)?);
        }
        let trials = self.cfg.self_prediction_trials;
        let seed = self.seed("selfpred");
        let key = stage_key("selfpred", &(&rf, trials, seed));
        let model = self.cfg.model.clone();
        let dir = self.work.build("selfpred", &key, |dir| {
            let store = load_store(&ingest)?;
            let candidates = Self::candidates(&store);
            let row = |name: String, m: Metrics| ReportRow {
                model: name,
                dataset: "self-prediction".into(),
                restriction: "all".into(),
                n_queries: m.n_queries,
                metrics: Some(m),
            };
            let mut rows = Vec::new();
            for (k, rf_dir) in &forests {
                let forest = load_forest(rf_dir)?;
                let m = self_prediction(&forest, &tables[&k.dim], &candidates, trials, seed)?;
                rows.push(row(grid_label(&model, *k), m));
            }
            for (dim, table) in &tables {
                let m = self_prediction(&DistanceScorer, table, &candidates, trials, seed)?;
                rows.push(row(format!("distance/d{dim}"), m));
            }
            let mut out = create(&dir.join(SELFPRED_CSV))?;
            write_report_csv(&mut out, &rows)?;
            out.flush()?;
            let mut out = create(&dir.join(SELFPRED_TXT))?;
            write_report_text(&mut out, &rows)?;
            out.flush()?;
            Ok(())
        })?;
        let report = fs::read_to_string(dir.join(SELFPRED_TXT))?;
        Ok((dir, report))
    }

    /// Every stage in order.
    pub fn run_all(&mut self) -> Result<EvalOutcome> {
        self.ingest()?;
        self.build()?;
        self.train_ae()?;
        self.embed()?;
        self.train_rf()?;
        let outcome = self.eval()?;
        self.selfpred()?;
        Ok(outcome)
    }

    /// Writes `manifest-<command>.json` into the work directory.
    pub fn write_manifest(&self, command: &str) -> Result<PathBuf> {
        let config_json = serde_json::to_string(&self.cfg)?;
        let manifest = RunManifest {
            command,
            config_sha256: sha256_hex(config_json.as_bytes()),
            config: &self.cfg,
            ontology_sha256: &self.ontology_sha256,
            seeds: &self.seeds,
            artifacts: self.work.artifact_hashes()?,
        };
        let path = self.work.root().join(format!("manifest-{command}.json"));
        let mut out = create(&path)?;
        serde_json::to_writer_pretty(&mut out, &manifest)?;
        writeln!(out)?;
        out.flush()?;
        Ok(path)
    }
}

fn read_selection(dir: &Path) -> Result<ModelKey> {
    let text = fs::read_to_string(dir.join("selection.txt"))?;
    let mut dim = None;
    let mut self_matching = None;
    for line in text.lines() {
        match line.split_once('=') {
            Some(("dim", v)) => dim = v.parse().ok(),
            Some(("self_matching", v)) => self_matching = v.parse().ok(),
            _ => {}
        }
    }
    match (dim, self_matching) {
        (Some(dim), Some(self_matching)) => Ok(ModelKey { dim, self_matching }),
        _ => anyhow::bail!("malformed {}", dir.join("selection.txt").display()),
    }
}
