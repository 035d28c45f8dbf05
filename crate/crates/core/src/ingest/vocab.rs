//! Well-known RDF/RDFS/OWL terms. Prefixed spellings such as `rdfs:label`
//! are accepted wherever the full IRI is.

use std::borrow::Cow;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const OWL_NAMED_INDIVIDUAL: &str = "http://www.w3.org/2002/07/owl#NamedIndividual";

const PREFIXES: &[(&str, &str)] = &[
    ("rdf:", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
    ("rdfs:", "http://www.w3.org/2000/01/rdf-schema#"),
    ("owl:", "http://www.w3.org/2002/07/owl#"),
    ("xsd:", "http://www.w3.org/2001/XMLSchema#"),
    ("obo:", "http://purl.obolibrary.org/obo/"),
];

pub fn expand(iri: &str) -> Cow<'_, str> {
    for (prefix, namespace) in PREFIXES {
        if let Some(local) = iri.strip_prefix(prefix) {
            return Cow::Owned(format!("{namespace}{local}"));
        }
    }
    Cow::Borrowed(iri)
}

pub fn same(a: &str, b: &str) -> bool {
    a == b || expand(a) == expand(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixed_and_full_forms_match() {
        assert!(same("rdfs:label", RDFS_LABEL));
        assert!(same(RDF_TYPE, "rdf:type"));
        assert!(same("obo:IAO_0000115", "http://purl.obolibrary.org/obo/IAO_0000115"));
        assert!(!same("rdfs:comment", RDFS_LABEL));
    }
}
