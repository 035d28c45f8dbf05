use std::borrow::Borrow;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An interned IRI. Cloning is a reference-count bump.
///
/// Ordering, equality and hashing follow the underlying string, so a
/// `HashMap<Iri, _>` can be queried with a `&str`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(Arc<str>);

impl Iri {
    /// Validates and wraps an IRI. Returns `None` for empty strings or
    /// strings containing whitespace or characters excluded from IRIs.
    pub fn new(value: &str) -> Option<Self> {
        Self::is_valid(value).then(|| Iri(Arc::from(value)))
    }

    pub fn is_valid(value: &str) -> bool {
        !value.is_empty()
            && !value.chars().any(|c| {
                c.is_whitespace()
                    || c.is_control()
                    || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
            })
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The local name: everything after the last `#`, `/` or `:`.
    pub fn fragment(&self) -> &str {
        match self.0.rfind(['#', '/', ':']) {
            Some(pos) => &self.0[pos + 1..],
            None => &self.0,
        }
    }
}

impl Borrow<str> for Iri {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl Serialize for Iri {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Iri {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Iri::new(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid IRI {s:?}")))
    }
}

/// Hands out one shared allocation per distinct IRI string.
#[derive(Default)]
pub struct Interner {
    seen: HashSet<Iri>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, iri: &Iri) -> Iri {
        if let Some(existing) = self.seen.get(iri.as_str()) {
            return existing.clone();
        }
        self.seen.insert(iri.clone());
        iri.clone()
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_whitespace_and_empty() {
        assert!(Iri::new("").is_none());
        assert!(Iri::new("http://a b").is_none());
        assert!(Iri::new("http://example.org/a").is_some());
    }

    #[test]
    fn interning_shares_allocation() {
        let mut interner = Interner::new();
        let a = interner.intern(&Iri::new("http://x/a").unwrap());
        let b = interner.intern(&Iri::new("http://x/a").unwrap());
        assert!(Arc::ptr_eq(&a.0, &b.0));
        assert_eq!(interner.len(), 1);
    }

    #[test]
    fn fragment_after_last_separator() {
        let iri = Iri::new("http://www.fbk.eu/ontologies/virtualcoach#Lysine_100").unwrap();
        assert_eq!(iri.fragment(), "Lysine_100");
        assert_eq!(Iri::new("http://purl.obolibrary.org/obo/GO_0021611").unwrap().fragment(), "GO_0021611");
        assert_eq!(Iri::new("obo:GO_1").unwrap().fragment(), "GO_1");
        assert_eq!(Iri::new("plain").unwrap().fragment(), "plain");
    }
}
