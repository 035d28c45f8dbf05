//! Filtered ranking of candidate superclasses and MRR / Hits@n metrics.
//!
//! For a test pair `(e1, sup)` every candidate class is scored against `e1`.
//! Candidates `x ≠ sup` with `(e1, x)` in the filter set are dropped first.
//! Ties in score go to the lexicographically smaller IRI, so the rank of `sup`
//! is one plus the number of remaining candidates that score higher, or score
//! the same with a smaller IRI.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::distance::neg_distance;
use crate::sampler::{EntityPartition, Restriction};
use crate::{DistanceScorer, EmbeddingTable, Error, Forest, Iri, Pair, Result};

/// IRI given to the synthetic entity of the self-prediction experiment.
pub const SELF_PREDICTION_IRI: &str = "urn:x-self-prediction:random-entity";

/// Scores a candidate superclass given both entity vectors; higher is better.
pub trait PairScorer: Sync {
    fn score(&self, sub: &[f64], sup: &[f64]) -> f64;

    /// Checks that vectors of `dim` components can be scored.
    fn check_dim(&self, _dim: usize) -> Result<()> {
        Ok(())
    }
}

impl PairScorer for Forest {
    fn score(&self, sub: &[f64], sup: &[f64]) -> f64 {
        let mut x = Vec::with_capacity(sub.len() + sup.len());
        x.extend_from_slice(sub);
        x.extend_from_slice(sup);
        self.predict_unchecked(&x)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.n_features() != 2 * dim {
            return Err(Error::DimMismatch {
                expected: self.n_features(),
                found: 2 * dim,
            });
        }
        Ok(())
    }
}

impl PairScorer for DistanceScorer {
    fn score(&self, sub: &[f64], sup: &[f64]) -> f64 {
        neg_distance(sub, sup)
    }
}

/// Known superclasses per subclass, excluded from ranking.
#[derive(Clone, Debug, Default)]
pub struct FilterSet {
    by_sub: HashMap<Iri, HashSet<Iri>>,
}

impl FilterSet {
    pub fn new<'a>(pairs: impl IntoIterator<Item = &'a Pair>) -> Self {
        let mut by_sub: HashMap<Iri, HashSet<Iri>> = HashMap::new();
        for (s, o) in pairs {
            by_sub.entry(s.clone()).or_default().insert(o.clone());
        }
        Self { by_sub }
    }

    pub fn contains(&self, sub: &str, sup: &str) -> bool {
        self.by_sub.get(sub).is_some_and(|s| s.contains(sup))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankingResult {
    pub sub: Iri,
    pub sup: Iri,
    /// 1-based.
    pub rank: usize,
    /// Candidates left after filtering, the true superclass included.
    pub candidate_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits5: f64,
    pub hits10: f64,
    pub n_queries: usize,
}

impl Metrics {
    /// `None` for an empty rank list.
    pub fn from_ranks(ranks: &[usize]) -> Option<Self> {
        if ranks.is_empty() {
            return None;
        }
        let n = ranks.len() as f64;
        let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Some(Self {
            mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
            hits1: hits(1),
            hits5: hits(5),
            hits10: hits(10),
            n_queries: ranks.len(),
        })
    }
}

/// Ranks `true_sup` among `candidates` for subclass `e1`.
pub fn rank_query<S: PairScorer + ?Sized>(
    scorer: &S,
    table: &EmbeddingTable,
    e1: &Iri,
    true_sup: &Iri,
    candidates: &[Iri],
    filter: &FilterSet,
) -> Result<RankingResult> {
    if !candidates.contains(true_sup) {
        return Err(Error::NotACandidate(true_sup.to_string()));
    }
    let sub = table.require(e1.as_str())?;
    let target = scorer.score(sub, table.require(true_sup.as_str())?);
    let mut rank = 1;
    let mut count = 0;
    for x in candidates {
        if x != true_sup && filter.contains(e1.as_str(), x.as_str()) {
            continue;
        }
        count += 1;
        if x == true_sup {
            continue;
        }
        let s = scorer.score(sub, table.require(x.as_str())?);
        if s > target || (s == target && x < true_sup) {
            rank += 1;
        }
    }
    Ok(RankingResult {
        sub: e1.clone(),
        sup: true_sup.clone(),
        rank,
        candidate_count: count,
    })
}

/// Ranks every query in parallel; results keep the query order.
pub fn rank_all<S: PairScorer + ?Sized>(
    scorer: &S,
    table: &EmbeddingTable,
    queries: &[Pair],
    candidates: &[Iri],
    filter: &FilterSet,
) -> Result<Vec<RankingResult>> {
    scorer.check_dim(table.dim())?;
    queries
        .par_iter()
        .map(|(s, o)| rank_query(scorer, table, s, o, candidates, filter))
        .collect()
}

pub fn evaluate<S: PairScorer + ?Sized>(
    scorer: &S,
    table: &EmbeddingTable,
    queries: &[Pair],
    candidates: &[Iri],
    filter: &FilterSet,
) -> Result<Metrics> {
    let ranks: Vec<usize> = rank_all(scorer, table, queries, candidates, filter)?
        .iter()
        .map(|r| r.rank)
        .collect();
    Metrics::from_ranks(&ranks).ok_or(Error::NoQueries)
}

/// Metrics of one group of test queries; `metrics` is `None` when it is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetMetrics {
    /// `None` for the whole test set.
    pub restriction: Option<Restriction>,
    pub n_queries: usize,
    pub metrics: Option<Metrics>,
}

impl SubsetMetrics {
    pub fn label(&self) -> &'static str {
        self.restriction.map_or("all", Restriction::label)
    }
}

/// Groups already computed rankings into the whole set followed by the four
/// restricted subsets.
pub fn restrict(results: &[RankingResult], partition: &EntityPartition) -> Vec<SubsetMetrics> {
    let mut groups: BTreeMap<Restriction, Vec<usize>> = BTreeMap::new();
    for r in results {
        let pair = (r.sub.clone(), r.sup.clone());
        groups.entry(partition.restriction(&pair)).or_default().push(r.rank);
    }
    let all: Vec<usize> = results.iter().map(|r| r.rank).collect();
    let mut out = vec![SubsetMetrics {
        restriction: None,
        n_queries: all.len(),
        metrics: Metrics::from_ranks(&all),
    }];
    for r in Restriction::ALL {
        let ranks = groups.remove(&r).unwrap_or_default();
        out.push(SubsetMetrics {
            restriction: Some(r),
            n_queries: ranks.len(),
            metrics: Metrics::from_ranks(&ranks),
        });
    }
    out
}

/// Evaluates the whole test set and each restricted subset.
pub fn restricted_evaluate<S: PairScorer + ?Sized>(
    scorer: &S,
    table: &EmbeddingTable,
    test: &[Pair],
    candidates: &[Iri],
    filter: &FilterSet,
    partition: &EntityPartition,
) -> Result<Vec<SubsetMetrics>> {
    let results = rank_all(scorer, table, test, candidates, filter)?;
    Ok(restrict(&results, partition))
}

/// Per trial, draws a random entity inside the bounding box of the table and
/// ranks it as its own superclass among `candidates` plus itself.
pub fn self_prediction<S: PairScorer + ?Sized>(
    scorer: &S,
    table: &EmbeddingTable,
    candidates: &[Iri],
    n_trials: usize,
    seed: u64,
) -> Result<Metrics> {
    scorer.check_dim(table.dim())?;
    if table.is_empty() {
        return Err(Error::NoQueries);
    }
    let dim = table.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for (_, v) in table.iter() {
        for k in 0..dim {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let vectors: Vec<&[f64]> = candidates
        .iter()
        .map(|c| table.require(c.as_str()))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<f64>> = (0..n_trials)
        .map(|_| {
            (0..dim)
                .map(|k| lo[k] + (hi[k] - lo[k]) * rng.random::<f64>())
                .collect()
        })
        .collect();
    let ranks: Vec<usize> = draws
        .par_iter()
        .map(|v| {
            let target = scorer.score(v, v);
            1 + candidates
                .iter()
                .zip(&vectors)
                .filter(|(c, x)| {
                    let s = scorer.score(v, x);
                    s > target || (s == target && c.as_str() < SELF_PREDICTION_IRI)
                })
                .count()
        })
        .collect();
    Metrics::from_ranks(&ranks).ok_or(Error::NoQueries)
}

/// One point of the model-selection grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModelKey {
    pub dim: usize,
    pub self_matching: bool,
}

/// Highest validation MRR; ties go to the smaller dimension, then to the
/// configuration with self-matching on.
pub fn select_model(valid: &BTreeMap<ModelKey, Metrics>) -> Option<ModelKey> {
    valid
        .iter()
        .max_by(|(ka, a), (kb, b)| {
            a.mrr
                .total_cmp(&b.mrr)
                .then(kb.dim.cmp(&ka.dim))
                .then(ka.self_matching.cmp(&kb.self_matching))
        })
        .map(|(k, _)| *k)
}

/// One line of a metrics report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub dataset: String,
    pub restriction: String,
    pub n_queries: usize,
    pub metrics: Option<Metrics>,
}

impl ReportRow {
    pub fn from_subsets(model: &str, dataset: &str, subsets: &[SubsetMetrics]) -> Vec<Self> {
        subsets
            .iter()
            .map(|s| ReportRow {
                model: model.to_string(),
                dataset: dataset.to_string(),
                restriction: s.label().to_string(),
                n_queries: s.n_queries,
                metrics: s.metrics,
            })
            .collect()
    }
}

/// Aligned text table; empty subsets show `-`.
pub fn write_report_text<W: Write>(mut out: W, rows: &[ReportRow]) -> io::Result<()> {
    let mw = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let dw = rows.iter().map(|r| r.dataset.len()).max().unwrap_or(0).max(7);
    writeln!(
        out,
        "{:<mw$}  {:<dw$}  {:<11}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}",
        "model", "dataset", "restriction", "n", "MRR", "H@1", "H@5", "H@10"
    )?;
    for r in rows {
        write!(
            out,
            "{:<mw$}  {:<dw$}  {:<11}  {:>6}",
            r.model, r.dataset, r.restriction, r.n_queries
        )?;
        match r.metrics {
            Some(m) => writeln!(
                out,
                "  {:>6.3}  {:>6.3}  {:>6.3}  {:>6.3}",
                m.mrr, m.hits1, m.hits5, m.hits10
            )?,
            None => writeln!(out, "  {:>6}  {:>6}  {:>6}  {:>6}", "-", "-", "-", "-")?,
        }
    }
    Ok(())
}

/// CSV with header `model,dataset,restriction,n,mrr,hits1,hits5,hits10`;
/// metric cells are empty for empty subsets.
pub fn write_report_csv<W: Write>(mut out: W, rows: &[ReportRow]) -> io::Result<()> {
    writeln!(out, "model,dataset,restriction,n,mrr,hits1,hits5,hits10")?;
    for r in rows {
        write!(out, "{},{},{},{}", r.model, r.dataset, r.restriction, r.n_queries)?;
        match r.metrics {
            Some(m) => writeln!(
                out,
                ",{:.6},{:.6},{:.6},{:.6}",
                m.mrr, m.hits1, m.hits5, m.hits10
            )?,
            None => writeln!(out, ",,,,")?,
        }
    }
    Ok(())
}

/// One line per query: `sub,sup,rank,candidates`.
pub fn write_ranks_csv<W: Write>(mut out: W, results: &[RankingResult]) -> io::Result<()> {
    writeln!(out, "sub,sup,rank,candidates")?;
    for r in results {
        writeln!(out, "{},{},{},{}", r.sub, r.sup, r.rank, r.candidate_count)?;
    }
    Ok(())
}
