//! Ontology embeddings built from annotation axioms, and concept subsumption
//! prediction on top of them.
//!
//! The pipeline runs in this order:
//!
//! 1. [`ingest`] parses N-Triples into an [`OntologyStore`] and preprocesses
//!    annotation literals into per-entity word sets.
//! 2. [`matrix`] builds the word vocabulary plus the binary inverted-index
//!    (word × entity) and co-occurrence (word × word) matrices.
//! 3. [`autoencoder`] compresses matrix rows into dense word embeddings.
//! 4. [`embedding`] averages label-word embeddings into entity embeddings.
//! 5. [`sampler`] splits axioms, draws negatives and self-matching pairs.
//! 6. [`classifier`] trains a random forest over concatenated pair embeddings.
//! 7. [`evaluator`] ranks candidate superclasses and reports MRR / Hits@n.

pub mod autoencoder;
pub mod classifier;
pub mod embedding;
mod error;
pub mod evaluator;
pub mod ingest;
mod iri;
pub mod matrix;
pub mod sampler;
pub mod synthetic;

pub use autoencoder::{AeParams, TrainConfig, WordEmbeddingMatrix};
pub use classifier::{Dataset, DistanceScorer, Forest, RfConfig};
pub use embedding::{EmbeddingTable, TableSource};
pub use error::{Error, Result};
pub use evaluator::{FilterSet, Metrics, ModelKey, PairScorer, RankingResult};
pub use ingest::{IngestConfig, IngestReport, OntologyStore, Triple};
pub use iri::{Interner, Iri};
pub use matrix::{SparseBinaryMatrix, Vocabulary};
pub use sampler::{EntityPartition, LabeledPairSet, Pair, PairSplit, Restriction, SplitRatios};
