//! Work directory layout: one directory per stage run, named by a hash of
//! everything the stage depends on, so unchanged inputs are never recomputed.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

const DONE_MARKER: &str = ".done";
const LOCK_FILE: &str = ".lock";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    let mut file = fs::File::open(path)?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// 16 hex digits of the SHA-256 of the stage name and its JSON-encoded inputs.
pub fn stage_key<T: Serialize>(stage: &str, inputs: &T) -> String {
    let json = serde_json::to_string(inputs).expect("stage inputs serialize");
    sha256_hex(format!("{stage}\n{json}").as_bytes())[..16].to_string()
}

/// Exclusive handle on a work directory; the lock file goes away on drop.
#[derive(Debug)]
pub struct Workdir {
    root: PathBuf,
    lock: PathBuf,
    touched: BTreeMap<String, PathBuf>,
}

impl Workdir {
    pub fn open(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(CliError::Locked(root.to_path_buf()).into())
            }
            Err(e) => return Err(e).with_context(|| format!("creating {}", lock.display())),
        }
        Ok(Self {
            root: root.to_path_buf(),
            lock,
            touched: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir_name(stage: &str, key: &str) -> String {
        format!("{stage}-{key}")
    }

    /// Finished output directory of a stage run, or `MissingArtifact`.
    pub fn require(&mut self, stage: &str, key: &str) -> Result<PathBuf, CliError> {
        let name = Self::dir_name(stage, key);
        let dir = self.root.join(&name);
        if !dir.join(DONE_MARKER).is_file() {
            return Err(CliError::MissingArtifact {
                stage: stage.to_string(),
                path: dir,
            });
        }
        self.touched.insert(name, dir.clone());
        Ok(dir)
    }

    /// Runs `produce` into a scratch directory unless the stage output already
    /// exists, then publishes it atomically.
    pub fn build<F>(&mut self, stage: &str, key: &str, produce: F) -> anyhow::Result<PathBuf>
    where
        F: FnOnce(&Path) -> anyhow::Result<()>,
    {
        let name = Self::dir_name(stage, key);
        let dir = self.root.join(&name);
        if dir.join(DONE_MARKER).is_file() {
            log::info!("{stage}: up to date ({name})");
            self.touched.insert(name, dir.clone());
            return Ok(dir);
        }
        let scratch = self.root.join(format!(".{name}.tmp"));
        if scratch.exists() {
            fs::remove_dir_all(&scratch)?;
        }
        fs::create_dir_all(&scratch)?;
        log::info!("{stage}: running ({name})");
        produce(&scratch).with_context(|| format!("[{stage}]"))?;
        fs::write(scratch.join(DONE_MARKER), b"")?;
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::rename(&scratch, &dir)?;
        self.touched.insert(name, dir.clone());
        Ok(dir)
    }

    /// SHA-256 of every file in the stage directories used so far, keyed by
    /// path relative to the work directory.
    pub fn artifact_hashes(&self) -> io::Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (name, dir) in &self.touched {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<_>>()?;
            files.sort();
            for f in files {
                let file_name = f.file_name().unwrap_or_default().to_string_lossy().into_owned();
                if f.is_file() && file_name != DONE_MARKER {
                    out.insert(format!("{name}/{file_name}"), file_sha256(&f)?);
                }
            }
        }
        Ok(out)
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let tmp = tempfile::tempdir().unwrap();
        let w = Workdir::open(tmp.path()).unwrap();
        let err = Workdir::open(tmp.path()).unwrap_err();
        assert!(matches!(err.downcast_ref::<CliError>(), Some(CliError::Locked(_))));
        drop(w);
        Workdir::open(tmp.path()).unwrap();
    }

    #[test]
    fn build_runs_once() {
        let tmp = tempfile::tempdir().unwrap();
        let mut w = Workdir::open(tmp.path()).unwrap();
        let mut runs = 0;
        for _ in 0..2 {
            w.build("s", "k", |d| {
                runs += 1;
                Ok(fs::write(d.join("out.txt"), "x")?)
            })
            .unwrap();
        }
        assert_eq!(runs, 1);
        assert!(w.require("s", "k").is_ok());
        assert!(matches!(w.require("s", "other"), Err(CliError::MissingArtifact { .. })));
        let hashes = w.artifact_hashes().unwrap();
        assert_eq!(hashes.len(), 1);
        assert_eq!(hashes["s-k/out.txt"], sha256_hex(b"x"));
    }

    #[test]
    fn failed_stage_leaves_no_output() {
        let tmp = tempfile::tempdir().unwrap();
        let mut w = Workdir::open(tmp.path()).unwrap();
        assert!(w.build("s", "k", |_| anyhow::bail!("boom")).is_err());
        assert!(w.require("s", "k").is_err());
    }

    #[test]
    fn keys_depend_on_inputs() {
        assert_eq!(stage_key("a", &1), stage_key("a", &1));
        assert_ne!(stage_key("a", &1), stage_key("a", &2));
        assert_ne!(stage_key("a", &1), stage_key("b", &1));
        assert_eq!(stage_key("a", &1).len(), 16);
    }
}
