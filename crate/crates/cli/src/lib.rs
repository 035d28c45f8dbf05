//! Config-driven pipeline around `ontoembed-core`: ingest, matrix building,
//! autoencoder training, entity embeddings, forest training, evaluation and
//! the self-prediction experiment. Every stage writes into its own
//! content-addressed directory under the work directory.

pub mod config;
pub mod pipeline;
pub mod workdir;

use std::path::PathBuf;

use sha2::{Digest, Sha256};

pub use config::{ModelSpec, PipelineConfig, SelfMatching};
pub use pipeline::Pipeline;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing artifact of stage `{stage}` (expected {}); run `ontoembed {stage}` first", .path.display())]
    MissingArtifact { stage: String, path: PathBuf },

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("work directory {} is locked by another run (delete its .lock file if that run died)", .0.display())]
    Locked(PathBuf),
}

/// Stage seed: the first 8 bytes of SHA-256 over the master seed and a tag.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
