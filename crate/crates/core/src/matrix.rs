//! Vocabulary and binary word matrices.
//!
//! * the inverted index has one row per word and one column per entity, with a
//!   1 wherever the word occurs in the entity's annotations;
//! * the co-occurrence matrix has one row and column per word, with a 1
//!   wherever two words occur together in some entity's annotations.
//!
//! Rows, columns and their labels are sorted so that every artifact built on
//! top of them is reproducible.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use rayon::prelude::*;

use crate::{Error, Iri, OntologyStore, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from any word list; the result is sorted and deduplicated.
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let words: Vec<String> = words
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self { words, index }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Row-major sparse 0/1 matrix: each row lists the columns holding a 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    n_cols: usize,
    rows: Vec<Vec<u32>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl SparseBinaryMatrix {
    /// Each row is sorted and deduplicated; out-of-range columns are rejected.
    pub fn new(
        rows: Vec<Vec<u32>>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != row_labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} row labels",
                rows.len(),
                row_labels.len()
            )));
        }
        let n_cols = col_labels.len();
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                match r.last() {
                    Some(&c) if c as usize >= n_cols => Err(Error::ShapeMismatch(format!(
                        "column {c} out of range for {n_cols} columns"
                    ))),
                    _ => Ok(r),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_cols,
            rows,
            row_labels,
            col_labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for &j in &self.rows[i] {
            out[j as usize] = 1.0;
        }
        out
    }

    /// Writes `row_label<TAB>col_label` per nonzero, in row then column order.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (label, row) in self.row_labels.iter().zip(&self.rows) {
            for &j in row {
                writeln!(out, "{label}\t{}", self.col_labels[j as usize])?;
            }
        }
        Ok(())
    }

    /// Reads a dump back given the full label lists (empty rows and columns
    /// do not appear in the dump itself).
    pub fn read_dump<R: BufRead>(
        input: R,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self> {
        let row_index: HashMap<&str, usize> = row_labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let col_index: HashMap<&str, u32> = col_labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let mut rows = vec![Vec::new(); row_labels.len()];
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: n + 1,
                msg: msg.to_string(),
            };
            let (r, c) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected row<TAB>col"))?;
            let i = *row_index.get(r).ok_or_else(|| parse_err("unknown row label"))?;
            let j = *col_index.get(c).ok_or_else(|| parse_err("unknown column label"))?;
            rows[i].push(j);
        }
        Self::new(rows, row_labels, col_labels)
    }
}

/// All words of every entity's annotation word set, sorted.
pub fn build_vocabulary(store: &OntologyStore) -> Result<Vocabulary> {
    let vocab = Vocabulary::from_words(store.ann_words.values().flatten().cloned());
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(vocab)
}

fn entity_labels(store: &OntologyStore) -> Vec<String> {
    store.entities().map(|e| e.to_string()).collect()
}

/// Word indices of each entity, in the entity column order.
fn entity_word_ids(store: &OntologyStore, vocab: &Vocabulary) -> Vec<Vec<u32>> {
    store
        .entities()
        .map(|e| {
            store
                .ann_words(e.as_str())
                .into_iter()
                .flatten()
                .filter_map(|w| vocab.index_of(w).map(|i| i as u32))
                .collect()
        })
        .collect()
}

/// Word × entity occurrence matrix.
pub fn build_inverted_index(store: &OntologyStore, vocab: &Vocabulary) -> Result<SparseBinaryMatrix> {
    let mut rows = vec![Vec::new(); vocab.len()];
    for (j, words) in entity_word_ids(store, vocab).iter().enumerate() {
        for &w in words {
            rows[w as usize].push(j as u32);
        }
    }
    SparseBinaryMatrix::new(rows, vocab.words().to_vec(), entity_labels(store))
}

/// Word × word co-occurrence matrix. Symmetric, with a full diagonal.
pub fn build_cooccurrence(store: &OntologyStore, vocab: &Vocabulary) -> Result<SparseBinaryMatrix> {
    let by_entity = entity_word_ids(store, vocab);
    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); vocab.len()];
    for (j, words) in by_entity.iter().enumerate() {
        for &w in words {
            postings[w as usize].push(j as u32);
        }
    }
    let rows: Vec<Vec<u32>> = postings
        .par_iter()
        .map(|entities| {
            let mut row: Vec<u32> = entities
                .iter()
                .flat_map(|&j| by_entity[j as usize].iter().copied())
                .collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();
    SparseBinaryMatrix::new(rows, vocab.words().to_vec(), vocab.words().to_vec())
}

/// Column labels of the inverted index, as IRIs.
pub fn entity_columns(store: &OntologyStore) -> Vec<Iri> {
    store.entities().cloned().collect()
}
