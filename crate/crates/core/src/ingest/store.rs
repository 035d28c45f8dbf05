use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ntriples::{Object, Triple};
use super::vocab;
use super::words::{iri_fallback_words, tokenize};
use crate::{Error, Interner, Iri, Result};

/// Which literal-valued predicates count as annotation properties.
///
/// An empty `allow` list admits every predicate with a literal object;
/// `deny` is applied afterwards.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub allow: Vec<String>,
    pub deny: Vec<String>,
}

impl IngestConfig {
    fn admits(&self, predicate: &Iri) -> bool {
        let matches = |list: &[String]| list.iter().any(|p| vocab::same(predicate.as_str(), p));
        (self.allow.is_empty() || matches(&self.allow)) && !matches(&self.deny)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OntologyStore {
    pub classes: BTreeSet<Iri>,
    pub individuals: BTreeSet<Iri>,
    /// Admitted annotation axioms per entity, sorted by (property, literal).
    pub annotations: BTreeMap<Iri, Vec<(Iri, String)>>,
    /// Raw `rdfs:label` literals per entity, independent of the allow/deny lists.
    pub labels: BTreeMap<Iri, Vec<String>>,
    pub subsumptions: BTreeSet<(Iri, Iri)>,
    /// `(individual, class)` pairs.
    pub assertions: BTreeSet<(Iri, Iri)>,
    pub label_words: BTreeMap<Iri, Vec<String>>,
    pub ann_words: BTreeMap<Iri, BTreeSet<String>>,
    pub report: IngestReport,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub triples: usize,
    pub skipped_blank: usize,
    pub classes: usize,
    pub individuals: usize,
    pub annotation_axioms: usize,
    pub subsumptions: usize,
    pub assertions: usize,
    /// IRIs typed both as class and individual; they are kept as classes.
    pub punned: Vec<Iri>,
    /// Entities whose annotation word set is empty.
    pub flagged: Vec<Iri>,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triples: {}", self.triples)?;
        writeln!(f, "skipped_blank_node_triples: {}", self.skipped_blank)?;
        writeln!(f, "classes: {}", self.classes)?;
        writeln!(f, "individuals: {}", self.individuals)?;
        writeln!(f, "annotation_axioms: {}", self.annotation_axioms)?;
        writeln!(f, "subsumptions: {}", self.subsumptions)?;
        writeln!(f, "assertions: {}", self.assertions)?;
        writeln!(f, "punned_entities: {}", self.punned.len())?;
        for iri in &self.punned {
            writeln!(f, "  punned: {iri}")?;
        }
        writeln!(f, "entities_without_words: {}", self.flagged.len())?;
        for iri in &self.flagged {
            writeln!(f, "  flagged: {iri}")?;
        }
        Ok(())
    }
}

impl OntologyStore {
    /// Classes and individuals, in ascending IRI order.
    pub fn entities(&self) -> impl Iterator<Item = &Iri> + '_ {
        // the two sets are disjoint, so a sorted merge has no duplicates
        let mut classes = self.classes.iter().peekable();
        let mut individuals = self.individuals.iter().peekable();
        std::iter::from_fn(move || match (classes.peek(), individuals.peek()) {
            (Some(c), Some(i)) if c < i => classes.next(),
            (Some(_), Some(_)) => individuals.next(),
            (Some(_), None) => classes.next(),
            (None, _) => individuals.next(),
        })
    }

    pub fn entity_count(&self) -> usize {
        self.classes.len() + self.individuals.len()
    }

    pub fn is_entity(&self, iri: &str) -> bool {
        self.classes.contains(iri) || self.individuals.contains(iri)
    }

    /// `W_label(e)` as a set, in first-occurrence order.
    pub fn label_words(&self, iri: &str) -> &[String] {
        self.label_words.get(iri).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn ann_words(&self, iri: &str) -> Option<&BTreeSet<String>> {
        self.ann_words.get(iri)
    }
}

/// Sorts triples into classes, individuals, subsumptions, assertions and
/// annotations. Word sets are left empty until [`finalize_words`].
pub fn build_store(triples: &[Triple], cfg: &IngestConfig) -> Result<OntologyStore> {
    let mut interner = Interner::new();
    let mut classes = BTreeSet::new();
    let mut individuals = BTreeSet::new();

    for t in triples {
        if vocab::same(t.predicate.as_str(), vocab::RDF_TYPE) {
            match t.object_iri() {
                Some(o) if vocab::same(o.as_str(), vocab::OWL_CLASS) => {
                    classes.insert(interner.intern(&t.subject));
                }
                Some(o) if vocab::same(o.as_str(), vocab::OWL_NAMED_INDIVIDUAL) => {
                    individuals.insert(interner.intern(&t.subject));
                }
                _ => {}
            }
        }
    }
    let punned: Vec<Iri> = individuals.intersection(&classes).cloned().collect();
    for iri in &punned {
        individuals.remove(iri);
    }
    if classes.is_empty() && individuals.is_empty() {
        return Err(Error::EmptyOntology);
    }

    let mut store = OntologyStore {
        classes,
        individuals,
        ..Default::default()
    };

    for t in triples {
        let predicate = t.predicate.as_str();
        match &t.object {
            Object::Iri(o) => {
                if vocab::same(predicate, vocab::RDFS_SUBCLASS_OF)
                    && store.classes.contains(t.subject.as_str())
                    && store.classes.contains(o.as_str())
                {
                    store
                        .subsumptions
                        .insert((interner.intern(&t.subject), interner.intern(o)));
                } else if vocab::same(predicate, vocab::RDF_TYPE)
                    && store.individuals.contains(t.subject.as_str())
                    && store.classes.contains(o.as_str())
                {
                    store
                        .assertions
                        .insert((interner.intern(&t.subject), interner.intern(o)));
                }
            }
            Object::Literal(lit) => {
                if !store.is_entity(t.subject.as_str()) {
                    continue;
                }
                let subject = interner.intern(&t.subject);
                if vocab::same(predicate, vocab::RDFS_LABEL) {
                    store
                        .labels
                        .entry(subject.clone())
                        .or_default()
                        .push(lit.lexical.clone());
                }
                if cfg.admits(&t.predicate) {
                    store
                        .annotations
                        .entry(subject)
                        .or_default()
                        .push((interner.intern(&t.predicate), lit.lexical.clone()));
                }
            }
        }
    }

    // input order must not leak into the store
    for list in store.annotations.values_mut() {
        list.sort();
        list.dedup();
    }
    for list in store.labels.values_mut() {
        list.sort();
        list.dedup();
    }

    store.report = IngestReport {
        triples: triples.len(),
        skipped_blank: 0,
        classes: store.classes.len(),
        individuals: store.individuals.len(),
        annotation_axioms: store.annotations.values().map(Vec::len).sum(),
        subsumptions: store.subsumptions.len(),
        assertions: store.assertions.len(),
        punned,
        flagged: Vec::new(),
    };
    Ok(store)
}

/// Fills `label_words` and `ann_words` for every entity and records entities
/// left without any word in the report.
pub fn finalize_words(mut store: OntologyStore) -> OntologyStore {
    let entities: Vec<Iri> = store.entities().cloned().collect();
    let mut flagged = Vec::new();
    for e in entities {
        let label_words = match store.labels.get(&e) {
            Some(labels) => dedup_in_order(labels.iter().flat_map(|l| tokenize(l))),
            None => dedup_in_order(iri_fallback_words(&e)),
        };
        let mut ann_words: BTreeSet<String> = store
            .annotations
            .get(&e)
            .into_iter()
            .flatten()
            .flat_map(|(_, lit)| tokenize(lit))
            .collect();
        ann_words.extend(label_words.iter().cloned());
        if ann_words.is_empty() {
            flagged.push(e.clone());
        }
        store.label_words.insert(e.clone(), label_words);
        store.ann_words.insert(e, ann_words);
    }
    store.report.flagged = flagged;
    store
}

fn dedup_in_order(words: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    words
        .into_iter()
        .filter(|w| seen.insert(w.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_ntriples;

    const GO: &str = r#"
<http://purl.obolibrary.org/obo/GO_0021603> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://purl.obolibrary.org/obo/GO_0021611> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://purl.obolibrary.org/obo/GO_0021620> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://purl.obolibrary.org/obo/GO_0021603> <http://www.w3.org/2000/01/rdf-schema#label> "cranial nerve formation" .
<http://purl.obolibrary.org/obo/GO_0021611> <http://www.w3.org/2000/01/rdf-schema#label> "facial nerve formation" .
<http://purl.obolibrary.org/obo/GO_0021611> <http://purl.obolibrary.org/obo/IAO_0000115> "The process that gives rise to the facial nerve." .
<http://purl.obolibrary.org/obo/GO_0021620> <http://www.w3.org/2000/01/rdf-schema#label> "hypoglossal nerve formation"@en .
<http://purl.obolibrary.org/obo/GO_0021611> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://purl.obolibrary.org/obo/GO_0021603> .
<http://purl.obolibrary.org/obo/GO_0021620> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://purl.obolibrary.org/obo/GO_0021603> .
<http://purl.obolibrary.org/obo/GO_0021620> <http://www.w3.org/2000/01/rdf-schema#subClassOf> _:restriction .
"#;

    fn store_from(text: &str, cfg: &IngestConfig) -> OntologyStore {
        let parsed = parse_ntriples(text).unwrap();
        finalize_words(build_store(&parsed.triples, cfg).unwrap())
    }

    #[test]
    fn go_fixture() {
        let store = store_from(GO, &IngestConfig::default());
        assert_eq!(store.classes.len(), 3);
        assert!(store.individuals.is_empty());
        assert_eq!(store.subsumptions.len(), 2);
        let facial = "http://purl.obolibrary.org/obo/GO_0021611";
        assert_eq!(store.label_words(facial), ["facial", "nerve", "formation"]);
        let ann = store.ann_words(facial).unwrap();
        for w in ["facial", "nerve", "formation", "process", "gives", "rise", "the"] {
            assert!(ann.contains(w), "{w}");
        }
        assert!(store.report.flagged.is_empty());
    }

    #[test]
    fn blank_node_superclass_is_excluded() {
        let parsed = parse_ntriples(GO).unwrap();
        assert_eq!(parsed.skipped_blank, 1);
        let store = build_store(&parsed.triples, &IngestConfig::default()).unwrap();
        assert!(store
            .subsumptions
            .iter()
            .all(|(s, o)| store.classes.contains(s) && store.classes.contains(o)));
    }

    #[test]
    fn subclass_of_unknown_class_is_excluded() {
        let text = "<a> <rdf:type> <owl:Class> .\n<a> <rdfs:subClassOf> <b> .";
        let store = store_from(text, &IngestConfig::default());
        assert!(store.subsumptions.is_empty());
    }

    #[test]
    fn helis_style_assertion_and_fallback() {
        let text = r#"
<http://www.fbk.eu/ontologies/virtualcoach#Lysine> <rdf:type> <owl:Class> .
<http://www.fbk.eu/ontologies/virtualcoach#Lysine_100> <rdf:type> <owl:NamedIndividual> .
<http://www.fbk.eu/ontologies/virtualcoach#Lysine_100> <rdf:type> <http://www.fbk.eu/ontologies/virtualcoach#Lysine> .
"#;
        let store = store_from(text, &IngestConfig::default());
        let ind = "http://www.fbk.eu/ontologies/virtualcoach#Lysine_100";
        let cls = "http://www.fbk.eu/ontologies/virtualcoach#Lysine";
        assert!(store
            .assertions
            .iter()
            .any(|(i, c)| i.as_str() == ind && c.as_str() == cls));
        assert_eq!(store.label_words(ind), ["lysine"]);
        assert_eq!(store.label_words(cls), ["lysine"]);
    }

    #[test]
    fn unlabeled_numeric_entity_is_flagged() {
        let text = "<http://x.org/12345> <rdf:type> <owl:Class> .";
        let store = store_from(text, &IngestConfig::default());
        assert!(store.label_words("http://x.org/12345").is_empty());
        assert_eq!(store.report.flagged.len(), 1);
    }

    #[test]
    fn empty_ontology_is_an_error() {
        let parsed = parse_ntriples("<a> <b> \"c\" .").unwrap();
        assert!(matches!(
            build_store(&parsed.triples, &IngestConfig::default()),
            Err(Error::EmptyOntology)
        ));
    }

    #[test]
    fn punned_iri_stays_a_class() {
        let text = "<a> <rdf:type> <owl:Class> .\n<a> <rdf:type> <owl:NamedIndividual> .";
        let store = store_from(text, &IngestConfig::default());
        assert!(store.classes.contains("a"));
        assert!(store.individuals.is_empty());
        assert_eq!(store.report.punned.len(), 1);
    }

    #[test]
    fn deny_list_removes_definitions_but_keeps_labels() {
        let cfg = IngestConfig {
            allow: vec![],
            deny: vec!["obo:IAO_0000115".into()],
        };
        let store = store_from(GO, &cfg);
        let ann = store
            .ann_words("http://purl.obolibrary.org/obo/GO_0021611")
            .unwrap();
        assert!(!ann.contains("process"));
        assert!(ann.contains("facial"));

        let only_labels = IngestConfig {
            allow: vec!["rdfs:label".into()],
            deny: vec![],
        };
        let store = store_from(GO, &only_labels);
        assert_eq!(store.report.annotation_axioms, 3);
    }

    #[test]
    fn label_words_subset_of_ann_words_and_shape() {
        let store = store_from(GO, &IngestConfig::default());
        for e in store.entities() {
            let ann = store.ann_words(e.as_str()).unwrap();
            for w in store.label_words(e.as_str()) {
                assert!(ann.contains(w));
            }
            for w in ann {
                assert!(w.len() >= 2 && w.bytes().all(|b| b.is_ascii_lowercase()));
            }
        }
    }

    #[test]
    fn input_order_does_not_matter() {
        let parsed = parse_ntriples(GO).unwrap();
        let mut reversed = parsed.triples.clone();
        reversed.reverse();
        let a = finalize_words(build_store(&parsed.triples, &IngestConfig::default()).unwrap());
        let b = finalize_words(build_store(&reversed, &IngestConfig::default()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn entities_are_sorted_and_merged() {
        let text = "<b> <rdf:type> <owl:Class> .\n<a> <rdf:type> <owl:NamedIndividual> .\n<c> <rdf:type> <owl:NamedIndividual> .";
        let store = store_from(text, &IngestConfig::default());
        let names: Vec<&str> = store.entities().map(Iri::as_str).collect();
        assert_eq!(names, ["a", "b", "c"]);
    }
}
