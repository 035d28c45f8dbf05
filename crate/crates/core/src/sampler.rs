//! Train/valid/test splits, negative sampling, self-matching pairs and
//! feature assembly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Dataset;
use crate::{EmbeddingTable, Error, Iri, OntologyStore, Result};

/// `(sub, sup)`: a concept inclusion `sub ⊑ sup` or an assertion `sup(sub)`.
pub type Pair = (Iri, Iri);

/// Resampling budget per positive before giving up on a negative.
pub const MAX_NEGATIVE_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            valid: 0.1,
            test: 0.2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairSplit {
    pub train: BTreeSet<Pair>,
    pub valid: Vec<Pair>,
    pub test: Vec<Pair>,
}

/// Shuffles the (deduplicated, sorted) pairs with `seed`, then slices.
/// Train and valid sizes are floored; the remainder goes to test.
pub fn split_pairs(pairs: &[Pair], ratios: SplitRatios, seed: u64) -> Result<PairSplit> {
    let mut pairs: Vec<Pair> = pairs.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if pairs.len() < 10 {
        return Err(Error::TooFewPairs { found: pairs.len() });
    }
    let total = ratios.train + ratios.valid + ratios.test;
    if ratios.train <= 0.0 || ratios.valid < 0.0 || ratios.test <= 0.0 || (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidConfig(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let n = pairs.len() as f64;
    // the epsilon absorbs products such as 0.7 * 100 = 69.999...
    let n_train = (ratios.train * n + 1e-9).floor() as usize;
    let n_valid = (ratios.valid * n + 1e-9).floor() as usize;

    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rest = pairs.split_off(n_train);
    let test = rest.split_off(n_valid);
    Ok(PairSplit {
        train: pairs.into_iter().collect(),
        valid: rest,
        test,
    })
}

impl PairSplit {
    /// Manifest with `[train]`, `[valid]`, `[test]` sections of
    /// `sub<TAB>sup` lines.
    pub fn write_manifest<W: Write>(&self, mut out: W) -> io::Result<()> {
        let sections: [(&str, Vec<&Pair>); 3] = [
            ("train", self.train.iter().collect()),
            ("valid", self.valid.iter().collect()),
            ("test", self.test.iter().collect()),
        ];
        for (name, pairs) in sections {
            writeln!(out, "[{name}]")?;
            for (s, o) in pairs {
                writeln!(out, "{s}\t{o}")?;
            }
        }
        Ok(())
    }

    pub fn read_manifest<R: BufRead>(input: R) -> Result<Self> {
        let mut split = PairSplit::default();
        let mut section = None;
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: n + 1,
                msg: msg.to_string(),
            };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(match name {
                    "train" | "valid" | "test" => name.to_string(),
                    _ => return Err(err("unknown section")),
                });
                continue;
            }
            let (s, o) = line.split_once('\t').ok_or_else(|| err("expected sub<TAB>sup"))?;
            let pair = (
                Iri::new(s).ok_or_else(|| err("invalid IRI"))?,
                Iri::new(o).ok_or_else(|| err("invalid IRI"))?,
            );
            match section.as_deref() {
                Some("train") => {
                    split.train.insert(pair);
                }
                Some("valid") => split.valid.push(pair),
                Some("test") => split.test.push(pair),
                _ => return Err(err("pair outside of a section")),
            }
        }
        Ok(split)
    }
}

/// Transitive closure of a subsumption set (pairs implied by chaining).
pub fn transitive_closure(pairs: &BTreeSet<Pair>) -> BTreeSet<Pair> {
    let mut parents: BTreeMap<&Iri, Vec<&Iri>> = BTreeMap::new();
    for (s, o) in pairs {
        parents.entry(s).or_default().push(o);
    }
    let mut closure = BTreeSet::new();
    for &start in parents.keys() {
        let mut stack: Vec<&Iri> = parents[start].clone();
        let mut seen = BTreeSet::new();
        while let Some(next) = stack.pop() {
            if seen.insert(next) {
                closure.insert((start.clone(), next.clone()));
                if let Some(ps) = parents.get(next) {
                    stack.extend(ps.iter().copied());
                }
            }
        }
    }
    closure
}

/// One corrupted pair `(sub, x)` per positive, with `x` drawn uniformly from
/// `pool`, `x != sup`, and `(sub, x)` neither in `forbidden` nor already drawn.
pub fn negative_samples(
    positives: &BTreeSet<Pair>,
    pool: &[Iri],
    forbidden: &BTreeSet<Pair>,
    seed: u64,
) -> Result<BTreeSet<Pair>> {
    if pool.len() < 2 {
        return Err(Error::InvalidConfig(
            "negative sampling needs at least two candidate classes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut negatives = BTreeSet::new();
    for (sub, sup) in positives {
        let mut attempts = 0;
        loop {
            if attempts == MAX_NEGATIVE_ATTEMPTS {
                return Err(Error::ExhaustedPool {
                    subject: sub.to_string(),
                    attempts,
                });
            }
            attempts += 1;
            let x = &pool[rng.random_range(0..pool.len())];
            if x == sup {
                continue;
            }
            let candidate = (sub.clone(), x.clone());
            if positives.contains(&candidate) || forbidden.contains(&candidate) {
                continue;
            }
            if negatives.insert(candidate) {
                break;
            }
        }
    }
    Ok(negatives)
}

/// `(e, e)` for every class and individual.
pub fn self_matching_samples(store: &OntologyStore) -> BTreeSet<Pair> {
    store.entities().map(|e| (e.clone(), e.clone())).collect()
}

/// Drops pairs whose two sides have identical label word sets; such pairs are
/// trivially ranked first since both sides embed to the same vector.
pub fn drop_trivial_pairs(pairs: &[Pair], store: &OntologyStore) -> Vec<Pair> {
    let set = |e: &Iri| store.label_words(e.as_str()).iter().collect::<BTreeSet<_>>();
    pairs
        .iter()
        .filter(|(s, o)| set(s) != set(o))
        .cloned()
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledPairSet {
    pub positives: BTreeSet<Pair>,
    pub negatives: BTreeSet<Pair>,
    pub self_matching: BTreeSet<Pair>,
}

impl LabeledPairSet {
    /// Pairs a ranker must skip for a query: known positives, plus the
    /// self-matching pairs when they were used for training.
    pub fn filter_pairs(&self, use_self: bool) -> BTreeSet<Pair> {
        let mut out = self.positives.clone();
        if use_self {
            out.extend(self.self_matching.iter().cloned());
        }
        out
    }
}

/// Rows `V(sub) ‖ V(sup)`: positives, then self-matching pairs (if used),
/// then negatives, each in sorted order. Labels are 1, 1, 0.
pub fn assemble_features(sets: &LabeledPairSet, table: &EmbeddingTable, use_self: bool) -> Result<Dataset> {
    let dim = table.dim();
    let mut groups: Vec<(&BTreeSet<Pair>, bool)> = vec![(&sets.positives, true)];
    if use_self {
        groups.push((&sets.self_matching, true));
    }
    groups.push((&sets.negatives, false));

    let n_rows: usize = groups.iter().map(|(g, _)| g.len()).sum();
    let mut features = Vec::with_capacity(n_rows * 2 * dim);
    let mut labels = Vec::with_capacity(n_rows);
    for (pairs, label) in groups {
        for (sub, sup) in pairs {
            features.extend_from_slice(table.require(sub.as_str())?);
            features.extend_from_slice(table.require(sup.as_str())?);
            labels.push(label);
        }
    }
    Dataset::new(features, labels, 2 * dim)
}

/// Test-pair restriction by whether each side occurs in a training positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Restriction {
    /// Both sides seen in training positives.
    SeenSeen,
    /// Isolated subclass, seen superclass.
    IsolatedSeen,
    /// Seen subclass, isolated superclass.
    SeenIsolated,
    IsolatedIsolated,
}

impl Restriction {
    pub const ALL: [Restriction; 4] = [
        Restriction::SeenSeen,
        Restriction::IsolatedSeen,
        Restriction::SeenIsolated,
        Restriction::IsolatedIsolated,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Restriction::SeenSeen => "E+xE+",
            Restriction::IsolatedSeen => "EIxE+",
            Restriction::SeenIsolated => "E+xEI",
            Restriction::IsolatedIsolated => "EIxEI",
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntityPartition {
    /// Entities occurring in some training positive.
    pub seen: BTreeSet<Iri>,
    /// All other entities of the considered pairs.
    pub isolated: BTreeSet<Iri>,
}

impl EntityPartition {
    pub fn restriction(&self, (sub, sup): &Pair) -> Restriction {
        match (self.seen.contains(sub), self.seen.contains(sup)) {
            (true, true) => Restriction::SeenSeen,
            (false, true) => Restriction::IsolatedSeen,
            (true, false) => Restriction::SeenIsolated,
            (false, false) => Restriction::IsolatedIsolated,
        }
    }
}

/// Splits the entities of `all_pairs` (and of the positives) into those seen
/// in a training positive and the isolated rest.
pub fn partition_entities<'a>(
    train_positives: &BTreeSet<Pair>,
    all_pairs: impl IntoIterator<Item = &'a Pair>,
) -> EntityPartition {
    let seen: BTreeSet<Iri> = train_positives
        .iter()
        .flat_map(|(s, o)| [s.clone(), o.clone()])
        .collect();
    let isolated = all_pairs
        .into_iter()
        .flat_map(|(s, o)| [s, o])
        .filter(|e| !seen.contains(*e))
        .cloned()
        .collect();
    EntityPartition { seen, isolated }
}
