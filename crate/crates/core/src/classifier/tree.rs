//! CART growth with Gini impurity.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        positive_fraction: f64,
    },
}

/// Nodes in creation order; node 0 is the root. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { positive_fraction } => return *positive_fraction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
}

/// Best split found on one feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Size-weighted mean Gini impurity of the two children.
    pub impurity: f64,
}

/// `n · gini` for a node with `pos` positives out of `n`.
fn weighted_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (p, q) = (pos as f64, (n - pos) as f64);
    n as f64 - (p * p + q * q) / n as f64
}

pub fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        weighted_gini(pos, n) / n as f64
    }
}

/// Midpoint strictly between two distinct sorted values when representable.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid < hi {
        mid
    } else {
        lo
    }
}

/// Scans every midpoint between consecutive distinct values of `feature`
/// over `samples` and returns the lowest-impurity admissible split, ties
/// going to the lowest threshold.
pub fn best_split_on_feature(
    data: &Dataset,
    samples: &[u32],
    feature: usize,
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let mut values: Vec<(f64, bool)> = samples
        .iter()
        .map(|&i| (data.value(i as usize, feature), data.label(i as usize)))
        .collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = values.len();
    let total_pos = values.iter().filter(|v| v.1).count();

    let mut best: Option<SplitCandidate> = None;
    let mut left_pos = 0usize;
    for i in 1..n {
        left_pos += values[i - 1].1 as usize;
        if values[i - 1].0 == values[i].0 {
            continue;
        }
        if i < min_samples_leaf || n - i < min_samples_leaf {
            continue;
        }
        let impurity =
            (weighted_gini(left_pos, i) + weighted_gini(total_pos - left_pos, n - i)) / n as f64;
        if best.is_none_or(|b| impurity < b.impurity) {
            best = Some(SplitCandidate {
                feature,
                threshold: midpoint(values[i - 1].0, values[i].0),
                impurity,
            });
        }
    }
    best
}

fn better(a: &SplitCandidate, b: &SplitCandidate) -> bool {
    (a.impurity, a.feature, a.threshold) < (b.impurity, b.feature, b.threshold)
}

pub(crate) fn grow(data: &Dataset, samples: Vec<u32>, params: &GrowParams, rng: &mut ChaCha8Rng) -> Tree {
    let mut nodes = vec![Node::Leaf {
        positive_fraction: 0.0,
    }];
    let mut stack = vec![(0usize, samples, 0usize)];
    let mut features: Vec<usize> = (0..data.n_features()).collect();

    while let Some((slot, samples, depth)) = stack.pop() {
        let n = samples.len();
        let pos = samples.iter().filter(|&&i| data.label(i as usize)).count();
        let leaf = Node::Leaf {
            positive_fraction: if n == 0 { 0.0 } else { pos as f64 / n as f64 },
        };
        let pure = pos == 0 || pos == n;
        let too_deep = params.max_depth.is_some_and(|d| depth >= d);
        if pure || too_deep || n < 2 * params.min_samples_leaf {
            nodes[slot] = leaf;
            continue;
        }

        // examine a random subset first; keep going through the remaining
        // features only if none of the subset admits a split
        features.shuffle(rng);
        let mut best: Option<SplitCandidate> = None;
        for (k, &f) in features.iter().enumerate() {
            if k >= params.features_per_split && best.is_some() {
                break;
            }
            if let Some(c) = best_split_on_feature(data, &samples, f, params.min_samples_leaf) {
                if best.is_none_or(|b| better(&c, &b)) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            nodes[slot] = leaf;
            continue;
        };

        let (left, right): (Vec<u32>, Vec<u32>) = samples
            .iter()
            .partition(|&&i| data.value(i as usize, split.feature) <= split.threshold);
        let left_slot = nodes.len();
        nodes.push(Node::Leaf {
            positive_fraction: 0.0,
        });
        nodes.push(Node::Leaf {
            positive_fraction: 0.0,
        });
        nodes[slot] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left: left_slot as u32,
            right: left_slot as u32 + 1,
        };
        stack.push((left_slot + 1, right, depth + 1));
        stack.push((left_slot, left, depth + 1));
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Impurity of every admissible threshold, computed by partitioning.
    fn brute_force(data: &Dataset, samples: &[u32], feature: usize, min_leaf: usize) -> Vec<(f64, f64)> {
        let mut distinct: Vec<f64> = samples.iter().map(|&i| data.value(i as usize, feature)).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut out = Vec::new();
        for w in distinct.windows(2) {
            let t = midpoint(w[0], w[1]);
            let (l, r): (Vec<u32>, Vec<u32>) =
                samples.iter().partition(|&&i| data.value(i as usize, feature) <= t);
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let g = |s: &[u32]| gini(s.iter().filter(|&&i| data.label(i as usize)).count(), s.len());
            let n = samples.len() as f64;
            out.push((l.len() as f64 / n * g(&l) + r.len() as f64 / n * g(&r), t));
        }
        out
    }

    proptest! {
        #[test]
        fn split_search_matches_brute_force(
            rows in proptest::collection::vec((0u8..6, 0u8..4, any::<bool>()), 2..50),
            min_leaf in 1usize..4,
        ) {
            let features: Vec<f64> = rows.iter().flat_map(|(a, b, _)| [*a as f64, *b as f64 * 0.5]).collect();
            let labels: Vec<bool> = rows.iter().map(|r| r.2).collect();
            let data = Dataset::new(features, labels, 2).unwrap();
            let samples: Vec<u32> = (0..rows.len() as u32).collect();
            for f in 0..2 {
                let fast = best_split_on_feature(&data, &samples, f, min_leaf);
                let all = brute_force(&data, &samples, f, min_leaf);
                match fast {
                    None => prop_assert!(all.is_empty()),
                    Some(c) => {
                        let min = all.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
                        prop_assert!((c.impurity - min).abs() < 1e-12);
                        let at = all.iter().find(|a| a.1 == c.threshold);
                        prop_assert!(at.is_some_and(|a| (a.0 - min).abs() < 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_threshold() {
        // thresholds 1.5 and 3.5 both isolate one positive sample
        let data = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], vec![true, false, false, true], 1).unwrap();
        let c = best_split_on_feature(&data, &[0, 1, 2, 3], 0, 1).unwrap();
        assert_eq!(c.threshold, 1.5);
    }

    #[test]
    fn thresholds_lie_between_observed_values() {
        let data = Dataset::new(vec![1.0, 2.0, 4.0, 8.0], vec![false, false, true, true], 1).unwrap();
        let c = best_split_on_feature(&data, &[0, 1, 2, 3], 0, 1).unwrap();
        assert_eq!(c.threshold, 3.0);
        assert_eq!(c.impurity, 0.0);
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(0, 4), 0.0);
        assert_eq!(gini(2, 4), 0.5);
        assert_eq!(gini(0, 0), 0.0);
    }
}
