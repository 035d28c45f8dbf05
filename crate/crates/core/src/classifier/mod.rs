//! Random Forest over concatenated pair embeddings, and the distance ranker.

pub(crate) mod distance;
pub mod tree;

use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};
pub use distance::{distance_score, DistanceScorer};
use tree::{GrowParams, Node, Tree};

/// Dense row-major feature matrix with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<bool>,
    n_features: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<bool>, n_features: usize) -> Result<Self> {
        if n_features == 0 || features.len() != labels.len() * n_features {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} rows of {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        Ok(Self {
            features,
            labels,
            n_features,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    #[inline]
    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.features[i * self.n_features + feature]
    }

    #[inline]
    pub fn label(&self, i: usize) -> bool {
        self.labels[i]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Defaults to ⌈√(feature count)⌉.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl RfConfig {
    pub fn resolved_features_per_split(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be positive");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        let k = self.resolved_features_per_split(n_features);
        if k == 0 || k > n_features {
            return Err(Error::InvalidConfig(format!(
                "features_per_split {k} not in 1..={n_features}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    n_features: usize,
    trees: Vec<Tree>,
}

/// Trains a forest. Each tree gets its own seed drawn from `cfg.seed`, so the
/// result does not depend on the thread count.
pub fn train_forest(data: &Dataset, cfg: &RfConfig) -> Result<Forest> {
    let pos = data.labels().iter().filter(|&&l| l).count();
    if pos == 0 || pos == data.n_rows() {
        return Err(Error::SingleClassData);
    }
    train_unchecked(data, cfg)
}

pub(crate) fn train_unchecked(data: &Dataset, cfg: &RfConfig) -> Result<Forest> {
    cfg.validate(data.n_features())?;
    let params = GrowParams {
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
        features_per_split: cfg.resolved_features_per_split(data.n_features()),
    };
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.n_trees).map(|_| master.random()).collect();
    let n = data.n_rows();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let samples: Vec<u32> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n as u32)).collect()
            } else {
                (0..n as u32).collect()
            };
            tree::grow(data, samples, &params, &mut rng)
        })
        .collect();
    Ok(Forest {
        n_features: data.n_features(),
        trees,
    })
}

const CHECKPOINT_HEADER: &str = "forest v1";

impl Forest {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn from_trees(n_features: usize, trees: Vec<Tree>) -> Self {
        Self { n_features, trees }
    }

    /// Mean leaf positive-fraction over trees.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_value(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CHECKPOINT_HEADER}")?;
        writeln!(out, "features {}", self.n_features)?;
        writeln!(out, "trees {}", self.trees.len())?;
        for t in &self.trees {
            writeln!(out, "tree {}", t.nodes.len())?;
            for node in &t.nodes {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(out, "S {feature} {threshold:?} {left} {right}")?,
                    Node::Leaf { positive_fraction } => writeln!(out, "L {positive_fraction:?}")?,
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let (n, header) = next("header")?;
        if header.trim() != CHECKPOINT_HEADER {
            return Err(perr(n, "not a forest checkpoint"));
        }
        let count = |(n, l): (usize, String), key: &str| -> Result<usize> {
            l.strip_prefix(key)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| perr(n, &format!("expected '{key} <count>'")))
        };
        let n_features = count(next("features")?, "features ")?;
        let n_trees = count(next("trees")?, "trees ")?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes = count(next("tree")?, "tree ")?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let (n, l) = next("node")?;
                let parts: Vec<&str> = l.split_whitespace().collect();
                let node = match parts.as_slice() {
                    ["S", f, t, a, b] => {
                        let parsed = (f.parse(), t.parse(), a.parse(), b.parse());
                        match parsed {
                            (Ok(feature), Ok(threshold), Ok(left), Ok(right))
                                if (feature as usize) < n_features
                                    && (left as usize) < n_nodes
                                    && (right as usize) < n_nodes =>
                            {
                                Node::Split {
                                    feature,
                                    threshold,
                                    left,
                                    right,
                                }
                            }
                            _ => return Err(perr(n, "bad split node")),
                        }
                    }
                    ["L", p] => match p.parse::<f64>() {
                        Ok(p) if (0.0..=1.0).contains(&p) => Node::Leaf {
                            positive_fraction: p,
                        },
                        _ => return Err(perr(n, "bad leaf node")),
                    },
                    _ => return Err(perr(n, "expected 'S ...' or 'L ...'")),
                };
                nodes.push(node);
            }
            if nodes.is_empty() {
                return Err(perr(0, "empty tree"));
            }
            trees.push(Tree { nodes });
        }
        if trees.is_empty() {
            return Err(perr(0, "forest has no trees"));
        }
        Ok(Self { n_features, trees })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Box-Muller standard normal.
    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn blobs(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let pos = i % 2 == 0;
            let centre = if pos { 3.0 } else { -3.0 };
            for _ in 0..4 {
                features.push(centre + 0.5 * normal(&mut rng));
            }
            labels.push(pos);
        }
        Dataset::new(features, labels, 4).unwrap()
    }

    fn cfg(seed: u64) -> RfConfig {
        RfConfig {
            n_trees: 20,
            seed,
            ..RfConfig::default()
        }
    }

    #[test]
    fn separable_blobs() {
        let data = blobs(1);
        let forest = train_forest(&data, &cfg(7)).unwrap();
        let correct = (0..data.n_rows())
            .filter(|&i| (forest.predict_proba(data.row(i)).unwrap() > 0.5) == data.label(i))
            .count();
        assert!(correct as f64 / data.n_rows() as f64 >= 0.99);
        assert!(forest.predict_proba(&[3.0; 4]).unwrap() > 0.9);
    }

    #[test]
    fn stump_cannot_fit_xor() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..25 {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                features.extend([a, b]);
                labels.push((a == 1.0) != (b == 1.0));
            }
        }
        let data = Dataset::new(features, labels, 2).unwrap();
        let c = RfConfig {
            n_trees: 1,
            max_depth: Some(1),
            bootstrap: false,
            features_per_split: Some(2),
            ..RfConfig::default()
        };
        let forest = train_forest(&data, &c).unwrap();
        let correct = (0..data.n_rows())
            .filter(|&i| (forest.predict_proba(data.row(i)).unwrap() > 0.5) == data.label(i))
            .count();
        assert!(correct as f64 / data.n_rows() as f64 <= 0.75);
    }

    #[test]
    fn same_seed_same_predictions() {
        let data = blobs(2);
        let a = train_forest(&data, &cfg(3)).unwrap();
        let b = train_forest(&data, &cfg(3)).unwrap();
        assert_eq!(a, b);
        let probe = blobs(9);
        for i in 0..probe.n_rows() {
            assert_eq!(
                a.predict_proba(probe.row(i)).unwrap(),
                b.predict_proba(probe.row(i)).unwrap()
            );
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let data = Dataset::new(vec![0.0, 1.0], vec![true, true], 1).unwrap();
        assert!(matches!(train_forest(&data, &cfg(0)), Err(Error::SingleClassData)));
        let forest = train_unchecked(&data, &cfg(0)).unwrap();
        assert_eq!(forest.predict_proba(&[0.5]).unwrap(), 1.0);
    }

    #[test]
    fn mean_of_two_trees() {
        let leaf = |p| Tree {
            nodes: vec![Node::Leaf {
                positive_fraction: p,
            }],
        };
        let forest = Forest::from_trees(1, vec![leaf(1.0), leaf(0.0)]);
        assert_eq!(forest.predict_proba(&[0.0]).unwrap(), 0.5);
        assert!(matches!(
            forest.predict_proba(&[0.0, 1.0]),
            Err(Error::DimMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn duplicates_in_pure_regions_keep_the_tree() {
        let base = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], vec![false, false, true, true], 1).unwrap();
        let dup = Dataset::new(
            vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 3.0],
            vec![false, false, false, false, true, true, true],
            1,
        )
        .unwrap();
        let c = RfConfig {
            n_trees: 1,
            bootstrap: false,
            ..cfg(5)
        };
        let a = train_forest(&base, &c).unwrap();
        let b = train_forest(&dup, &c).unwrap();
        assert_eq!(a.trees()[0].nodes, b.trees()[0].nodes);
    }

    #[test]
    fn thresholds_and_leaves_are_well_formed() {
        let data = blobs(4);
        let forest = train_forest(&data, &cfg(11)).unwrap();
        for t in forest.trees() {
            for node in &t.nodes {
                match node {
                    Node::Leaf { positive_fraction } => {
                        assert!((0.0..=1.0).contains(positive_fraction))
                    }
                    Node::Split {
                        feature, threshold, ..
                    } => {
                        let f = *feature as usize;
                        let below = (0..data.n_rows()).any(|i| data.value(i, f) < *threshold);
                        let above = (0..data.n_rows()).any(|i| data.value(i, f) > *threshold);
                        assert!(below && above);
                    }
                }
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let data = blobs(5);
        let forest = train_forest(&data, &cfg(2)).unwrap();
        let mut buf = Vec::new();
        forest.write_to(&mut buf).unwrap();
        let back = Forest::read_from(&buf[..]).unwrap();
        assert_eq!(back, forest);
        assert!(Forest::read_from(&b"forest v2\n"[..]).is_err());
    }

    #[test]
    fn invalid_config() {
        let data = blobs(6);
        let c = RfConfig {
            features_per_split: Some(5),
            ..cfg(0)
        };
        assert!(matches!(train_forest(&data, &c), Err(Error::InvalidConfig(_))));
    }
}
