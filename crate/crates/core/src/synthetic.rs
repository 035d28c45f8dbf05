//! Generated ontologies in N-Triples form, for tests and benchmarks.

use std::fmt::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::vocab::{OWL_CLASS, RDFS_LABEL, RDFS_SUBCLASS_OF, RDF_TYPE};

const BASE: &str = "http://example.org/syn#";

/// Alphabetic, at least three letters, distinct for distinct `i`.
pub fn word(i: usize) -> String {
    let mut s = String::from("w");
    let mut i = i;
    for _ in 0..3 {
        s.push((b'a' + (i % 26) as u8) as char);
        i /= 26;
    }
    while i > 0 {
        s.push((b'a' + (i % 26) as u8) as char);
        i /= 26;
    }
    s
}

fn class(out: &mut String, iri: &str, label: &[String]) {
    writeln!(out, "<{iri}> <{RDF_TYPE}> <{OWL_CLASS}> .").unwrap();
    writeln!(out, "<{iri}> <{RDFS_LABEL}> \"{}\" .", label.join(" ")).unwrap();
}

fn subclass(out: &mut String, sub: &str, sup: &str) {
    writeln!(out, "<{sub}> <{RDFS_SUBCLASS_OF}> <{sup}> .").unwrap();
}

/// Families of three-level chains `C ⊑ P ⊑ G` and of two-level pairs
/// `C ⊑ P`. Every class has a three-word label and shares two of those
/// words with its direct superclass. Words are not shared across families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSpec {
    pub chains: usize,
    pub pairs: usize,
}

impl ChainSpec {
    pub fn class_count(&self) -> usize {
        3 * self.chains + 2 * self.pairs
    }
}

pub fn chain_ontology(spec: ChainSpec) -> String {
    let mut out = String::new();
    let mut next_word = 0usize;
    let mut fresh = || {
        next_word += 1;
        word(next_word - 1)
    };
    for f in 0..spec.chains + spec.pairs {
        let (a, b) = (fresh(), fresh());
        let levels = if f < spec.chains { 3 } else { 2 };
        let iris: Vec<String> = (0..levels).map(|l| format!("{BASE}F{f}L{l}")).collect();
        for iri in &iris {
            class(&mut out, iri, &[a.clone(), b.clone(), fresh()]);
        }
        for w in iris.windows(2) {
            subclass(&mut out, &w[1], &w[0]);
        }
    }
    out
}

/// A small random ontology: up to `max_entities` classes with random labels
/// over up to `max_words` words, and random subclass axioms.
pub fn random_ontology(seed: u64, max_entities: usize, max_words: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_entities.max(2));
    let vocab: Vec<String> = (0..rng.random_range(1..=max_words.max(1))).map(word).collect();
    let mut out = String::new();
    for i in 0..n {
        let iri = format!("{BASE}E{i}");
        let k = rng.random_range(0..=4.min(vocab.len()));
        let label: Vec<String> = vocab.choose_multiple(&mut rng, k).cloned().collect();
        class(&mut out, &iri, &label);
        if i > 0 && rng.random_bool(0.5) {
            let sup = rng.random_range(0..i);
            subclass(&mut out, &iri, &format!("{BASE}E{sup}"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ingest_text, IngestConfig};

    #[test]
    fn words_are_distinct_and_tokenizable() {
        let words: Vec<String> = (0..2000).map(word).collect();
        let set: std::collections::HashSet<_> = words.iter().collect();
        assert_eq!(set.len(), words.len());
        for w in &words {
            assert_eq!(crate::ingest::tokenize(w), vec![w.clone()]);
        }
    }

    #[test]
    fn chains_share_two_thirds_of_label_words() {
        let spec = ChainSpec { chains: 5, pairs: 3 };
        let store = ingest_text(&chain_ontology(spec), &IngestConfig::default()).unwrap();
        assert_eq!(store.classes.len(), spec.class_count());
        assert_eq!(store.subsumptions.len(), 2 * 5 + 3);
        for (sub, sup) in &store.subsumptions {
            let a = store.label_words(sub.as_str());
            let b = store.label_words(sup.as_str());
            let shared = a.iter().filter(|w| b.contains(w)).count();
            assert!(shared * 3 >= 2 * a.len());
        }
    }

    #[test]
    fn random_ontologies_ingest() {
        for seed in 0..20 {
            let text = random_ontology(seed, 30, 60);
            let store = ingest_text(&text, &IngestConfig::default()).unwrap();
            assert!(store.classes.len() <= 30);
        }
    }
}
