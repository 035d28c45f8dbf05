//! Annotation text preprocessing.

use crate::Iri;

/// Lowercases, replaces everything that is not an ASCII letter with a space,
/// and keeps tokens of two or more letters in order (duplicates included).
pub fn tokenize(literal: &str) -> Vec<String> {
    let cleaned: String = literal
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_ascii_lowercase() { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| t.len() >= 2)
        .map(str::to_string)
        .collect()
}

/// Words recovered from an IRI local name, for entities without `rdfs:label`.
///
/// `Lysine_100` gives `[lysine]`, `WholeGrainBread` gives `[whole, grain, bread]`.
pub fn iri_fallback_words(iri: &Iri) -> Vec<String> {
    let pieces: Vec<String> = iri
        .fragment()
        .split(['_', '-'])
        .flat_map(split_camel_case)
        .filter(|p| !p.chars().all(|c| c.is_ascii_digit()))
        .collect();
    tokenize(&pieces.join(" "))
}

/// Splits at lower→upper transitions and before the last capital of an
/// acronym run (`HTMLParser` → `HTML`, `Parser`).
fn split_camel_case(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (prev, cur) = (chars[i - 1], chars[i]);
        let lower_to_upper = prev.is_lowercase() && cur.is_uppercase();
        let acronym_end = prev.is_uppercase()
            && cur.is_uppercase()
            && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
        if lower_to_upper || acronym_end {
            parts.push(chars[start..i].iter().collect());
            start = i;
        }
    }
    if start < chars.len() {
        parts.push(chars[start..].iter().collect());
    }
    parts
}
