use crate::{EmbeddingTable, Result};

/// Negative Euclidean distance between the two entities' vectors.
pub fn distance_score(table: &EmbeddingTable, e1: &str, x: &str) -> Result<f64> {
    Ok(neg_distance(table.require(e1)?, table.require(x)?))
}

pub(crate) fn neg_distance(a: &[f64], b: &[f64]) -> f64 {
    -a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Ranks candidates by closeness to the subclass; needs no training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DistanceScorer;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::TableSource;
    use crate::Iri;
    use std::collections::BTreeMap;

    fn table() -> EmbeddingTable {
        let mut m = BTreeMap::new();
        m.insert(Iri::new("http://x/a").unwrap(), vec![0.0, 0.0]);
        m.insert(Iri::new("http://x/b").unwrap(), vec![3.0, 4.0]);
        EmbeddingTable::from_map(2, TableSource::InMe, m).unwrap()
    }

    #[test]
    fn hand_arithmetic() {
        let t = table();
        assert_eq!(distance_score(&t, "http://x/a", "http://x/b").unwrap(), -5.0);
        assert_eq!(distance_score(&t, "http://x/b", "http://x/a").unwrap(), -5.0);
        assert_eq!(distance_score(&t, "http://x/a", "http://x/a").unwrap(), 0.0);
        assert!(distance_score(&t, "http://x/a", "http://x/zzz").is_err());
    }
}
