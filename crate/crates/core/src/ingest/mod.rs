//! Turning N-Triples into an [`OntologyStore`] with per-entity word sets.

mod ntriples;
mod store;
pub mod vocab;
mod words;

use std::path::Path;

pub use ntriples::{parse_ntriples, read_ntriples, Literal, Object, ParsedTriples, Triple};
pub use store::{build_store, finalize_words, IngestConfig, IngestReport, OntologyStore};
pub use words::{iri_fallback_words, tokenize};

use crate::Result;

/// Parse, build and finalize in one step.
pub fn ingest_text(text: &str, cfg: &IngestConfig) -> Result<OntologyStore> {
    let parsed = parse_ntriples(text)?;
    let mut store = build_store(&parsed.triples, cfg)?;
    store.report.skipped_blank = parsed.skipped_blank;
    Ok(finalize_words(store))
}

pub fn ingest_file(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<OntologyStore> {
    let text = std::fs::read_to_string(path)?;
    ingest_text(&text, cfg)
}
