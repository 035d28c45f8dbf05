//! Entity embedding tables.
//!
//! An entity's vector is the mean of the word embeddings of its label words.
//! Tables can be concatenated entity-wise and exchanged as text files:
//!
//! ```text
//! dim=<d>
//! <iri>\t<v1> <v2> ... <vd>
//! ```
//!
//! with one line per entity, sorted by IRI.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::autoencoder::WordEmbeddingMatrix;
use crate::matrix::Vocabulary;
use crate::{Error, Iri, OntologyStore, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableSource {
    InMe,
    CoMe,
    Imported(String),
    Concat,
}

impl fmt::Display for TableSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableSource::InMe => f.write_str("inme"),
            TableSource::CoMe => f.write_str("come"),
            TableSource::Imported(name) => write!(f, "imported:{name}"),
            TableSource::Concat => f.write_str("concat"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    source: TableSource,
    entities: Vec<Iri>,
    data: Vec<f64>,
    index: HashMap<Iri, usize>,
}

impl EmbeddingTable {
    pub fn from_map(dim: usize, source: TableSource, vectors: BTreeMap<Iri, Vec<f64>>) -> Result<Self> {
        let mut entities = Vec::with_capacity(vectors.len());
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for (iri, v) in vectors {
            if v.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "vector for {iri} has length {}, table dim is {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::ShapeMismatch(format!("vector for {iri} is not finite")));
            }
            entities.push(iri);
            data.extend(v);
        }
        let index = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Ok(Self {
            dim,
            source,
            entities,
            data,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &TableSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Entities in ascending IRI order.
    pub fn entities(&self) -> &[Iri] {
        &self.entities
    }

    pub fn get(&self, iri: &str) -> Option<&[f64]> {
        self.index.get(iri).map(|&i| self.vector(i))
    }

    pub fn require(&self, iri: &str) -> Result<&[f64]> {
        self.get(iri)
            .ok_or_else(|| Error::MissingEmbedding(iri.to_string()))
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Iri, &[f64])> + '_ {
        self.entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e, self.vector(i)))
    }

    /// Writes the table in the text exchange format.
    pub fn export<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "dim={}", self.dim)?;
        for (iri, v) in self.iter() {
            let values: Vec<String> = v.iter().map(f64::to_string).collect();
            writeln!(out, "{iri}\t{}", values.join(" "))?;
        }
        Ok(())
    }

    pub fn import<R: BufRead>(input: R, name: &str) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .ok_or(Error::Parse {
                line: 1,
                msg: "expected header `dim=<d>`".into(),
            })?;
        let mut vectors = BTreeMap::new();
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (iri, values) = line.split_once('\t').ok_or(Error::Parse {
                line: line_no,
                msg: "expected <iri><TAB><values>".into(),
            })?;
            let iri = Iri::new(iri).ok_or(Error::Parse {
                line: line_no,
                msg: format!("invalid IRI {iri:?}"),
            })?;
            let v: Vec<f64> = values
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("{e}"),
                })?;
            if v.len() != dim {
                return Err(Error::DimInconsistent {
                    line: line_no,
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "non-finite component".into(),
                });
            }
            if vectors.insert(iri.clone(), v).is_some() {
                return Err(Error::DuplicateEntity(iri.to_string()));
            }
        }
        Self::from_map(dim, TableSource::Imported(name.to_string()), vectors)
    }
}

/// Mean of the label-word embeddings of every entity. Entities with no label
/// word get the zero vector and are returned in the second element.
pub fn entity_embeddings(
    words: &WordEmbeddingMatrix,
    store: &OntologyStore,
    vocab: &Vocabulary,
    source: TableSource,
) -> Result<(EmbeddingTable, Vec<Iri>)> {
    if words.len() != vocab.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} word embeddings for a vocabulary of {}",
            words.len(),
            vocab.len()
        )));
    }
    let mut zero = Vec::new();
    let mut vectors = BTreeMap::new();
    for e in store.entities() {
        let mut v = vec![0.0; words.dim];
        let label = store.label_words(e.as_str());
        let mut count = 0usize;
        for w in label {
            let i = vocab
                .index_of(w)
                .ok_or_else(|| Error::MissingEmbedding(format!("word {w:?} of {e}")))?;
            v.iter_mut().zip(words.row(i)).for_each(|(a, b)| *a += b);
            count += 1;
        }
        if count == 0 {
            zero.push(e.clone());
        } else {
            v.iter_mut().for_each(|a| *a /= count as f64);
        }
        vectors.insert(e.clone(), v);
    }
    Ok((EmbeddingTable::from_map(words.dim, source, vectors)?, zero))
}

/// Entity-wise `a(e) ‖ b(e)`. Both tables must cover the same entities.
pub fn concat_tables(a: &EmbeddingTable, b: &EmbeddingTable) -> Result<EmbeddingTable> {
    let mut missing: Vec<String> = a
        .entities()
        .iter()
        .filter(|e| b.get(e.as_str()).is_none())
        .chain(b.entities().iter().filter(|e| a.get(e.as_str()).is_none()))
        .map(|e| e.to_string())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::EntityMismatch { missing });
    }
    let vectors = a
        .iter()
        .map(|(e, va)| {
            let mut v = va.to_vec();
            v.extend_from_slice(b.get(e.as_str()).expect("checked above"));
            (e.clone(), v)
        })
        .collect();
    EmbeddingTable::from_map(a.dim() + b.dim(), TableSource::Concat, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ingest_text, IngestConfig};
    use crate::matrix::build_vocabulary;
    use proptest::prelude::*;

    fn table(dim: usize, rows: &[(&str, Vec<f64>)]) -> EmbeddingTable {
        let map = rows
            .iter()
            .map(|(iri, v)| (Iri::new(iri).unwrap(), v.clone()))
            .collect();
        EmbeddingTable::from_map(dim, TableSource::InMe, map).unwrap()
    }

    fn fixture() -> (OntologyStore, Vocabulary, WordEmbeddingMatrix) {
        let store = ingest_text(
            r#"<http://x/a> <rdf:type> <owl:Class> .
<http://x/a> <rdfs:label> "nerve" .
<http://x/b> <rdf:type> <owl:Class> .
<http://x/b> <rdfs:label> "cranial nerve formation" .
<http://x/c> <rdf:type> <owl:Class> .
<http://x/c> <rdfs:label> "formation nerve cranial" .
<http://x/d> <rdf:type> <owl:Class> .
<http://x/d> <rdfs:comment> "only a comment" .
<http://x/42> <rdf:type> <owl:Class> .
"#,
            &IngestConfig::default(),
        )
        .unwrap();
        let vocab = build_vocabulary(&store).unwrap();
        let dim = 3;
        let data = (0..vocab.len() * dim).map(|i| (i % 7) as f64 * 0.5).collect();
        let words = WordEmbeddingMatrix {
            words: vocab.words().to_vec(),
            dim,
            data,
        };
        (store, vocab, words)
    }

    #[test]
    fn averaging_label_words() {
        let (store, vocab, words) = fixture();
        let (t, zero) = entity_embeddings(&words, &store, &vocab, TableSource::InMe).unwrap();
        assert_eq!(t.len(), store.entity_count());
        let nerve = words.row(vocab.index_of("nerve").unwrap());
        assert_eq!(t.get("http://x/a").unwrap(), nerve);

        let expected: Vec<f64> = (0..3)
            .map(|k| {
                ["cranial", "nerve", "formation"]
                    .iter()
                    .map(|w| words.row(vocab.index_of(w).unwrap())[k])
                    .sum::<f64>()
                    / 3.0
            })
            .collect();
        for (x, y) in t.get("http://x/b").unwrap().iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
        // same label word set, different order
        assert_eq!(t.get("http://x/b"), t.get("http://x/c"));
        assert_eq!(zero.iter().map(Iri::as_str).collect::<Vec<_>>(), ["http://x/42", "http://x/d"]);
        assert!(t.get("http://x/42").unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn concat_dims_and_order() {
        let a = table(2, &[("x", vec![1.0, 2.0]), ("y", vec![3.0, 4.0])]);
        let b = table(1, &[("x", vec![5.0]), ("y", vec![6.0])]);
        let ab = concat_tables(&a, &b).unwrap();
        assert_eq!(ab.dim(), 3);
        assert_eq!(ab.get("x").unwrap(), &[1.0, 2.0, 5.0]);
        let ba = concat_tables(&b, &a).unwrap();
        assert_eq!(ba.get("x").unwrap(), &[5.0, 1.0, 2.0]);
        assert_eq!(ab.source(), &TableSource::Concat);

        let zeros = table(2, &[("x", vec![0.0, 0.0]), ("y", vec![0.0, 0.0])]);
        let padded = concat_tables(&a, &zeros).unwrap();
        assert_eq!(padded.get("y").unwrap(), &[3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn concat_requires_same_entities() {
        let a = table(1, &[("x", vec![1.0]), ("y", vec![1.0])]);
        let b = table(1, &[("x", vec![1.0]), ("z", vec![1.0])]);
        match concat_tables(&a, &b) {
            Err(Error::EntityMismatch { missing }) => assert_eq!(missing, ["y", "z"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn import_examples() {
        let text = "dim=4\nhttp://x/a\t1 2 3 4\nhttp://x/b\t0 0 0 0.5\nhttp://x/c\t-1 1e-3 2 3\n";
        let t = EmbeddingTable::import(text.as_bytes(), "ext").unwrap();
        assert_eq!((t.dim(), t.len()), (4, 3));
        assert_eq!(t.source().to_string(), "imported:ext");

        let dup = "dim=1\nhttp://x/a\t1\nhttp://x/a\t2\n";
        assert!(matches!(EmbeddingTable::import(dup.as_bytes(), "d"), Err(Error::DuplicateEntity(_))));
        let short = "dim=2\nhttp://x/a\t1\n";
        assert!(matches!(
            EmbeddingTable::import(short.as_bytes(), "d"),
            Err(Error::DimInconsistent { line: 2, .. })
        ));
        let junk = "dim=1\nhttp://x/a\tabc\n";
        assert!(matches!(EmbeddingTable::import(junk.as_bytes(), "d"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(EmbeddingTable::import("".as_bytes(), "d"), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn export_import_round_trip(
            dim in 1usize..6,
            seed in proptest::collection::vec(-1e6f64..1e6, 1..60),
        ) {
            let rows: Vec<(String, Vec<f64>)> = seed
                .chunks(dim)
                .filter(|c| c.len() == dim)
                .enumerate()
                .map(|(i, c)| (format!("http://x/e{i}"), c.to_vec()))
                .collect();
            prop_assume!(!rows.is_empty());
            let map = rows.iter().map(|(k, v)| (Iri::new(k).unwrap(), v.clone())).collect();
            let t = EmbeddingTable::from_map(dim, TableSource::Imported("t".into()), map).unwrap();
            let mut buf = Vec::new();
            t.export(&mut buf).unwrap();
            let back = EmbeddingTable::import(&buf[..], "t").unwrap();
            prop_assert_eq!(back.entities(), t.entities());
            for ((_, a), (_, b)) in t.iter().zip(back.iter()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() < 1e-6);
                }
            }
        }
    }
}
