//! Shared inputs for the benchmarks.

use ontoembed_core::ingest::ingest_text;
use ontoembed_core::matrix::{build_cooccurrence, build_inverted_index, build_vocabulary};
use ontoembed_core::synthetic::{chain_ontology, ChainSpec};
use ontoembed_core::{IngestConfig, OntologyStore, SparseBinaryMatrix, Vocabulary};

pub struct Fixture {
    pub store: OntologyStore,
    pub vocab: Vocabulary,
    pub inme: SparseBinaryMatrix,
    pub come: SparseBinaryMatrix,
}

/// Chain ontology with `families` families, ingested and turned into matrices.
pub fn fixture(families: usize) -> Fixture {
    let text = chain_ontology(ChainSpec {
        chains: families / 2,
        pairs: families - families / 2,
    });
    let store = ingest_text(&text, &IngestConfig::default()).expect("synthetic ontology ingests");
    let vocab = build_vocabulary(&store).expect("non-empty vocabulary");
    let inme = build_inverted_index(&store, &vocab).expect("inverted index");
    let come = build_cooccurrence(&store, &vocab).expect("co-occurrence");
    Fixture {
        store,
        vocab,
        inme,
        come,
    }
}
