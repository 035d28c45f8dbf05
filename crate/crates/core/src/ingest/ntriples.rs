//! Line-oriented N-Triples reader.
//!
//! Only named IRIs and literals survive; statements touching a blank node are
//! counted and dropped. Literal datatypes are discarded, language tags kept.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::{Error, Iri, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub lang: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Iri(Iri),
    Literal(Literal),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Object,
}

impl Triple {
    pub fn literal(&self) -> Option<&str> {
        match &self.object {
            Object::Literal(lit) => Some(&lit.lexical),
            Object::Iri(_) => None,
        }
    }

    pub fn object_iri(&self) -> Option<&Iri> {
        match &self.object {
            Object::Iri(iri) => Some(iri),
            Object::Literal(_) => None,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> ", self.subject, self.predicate)?;
        match &self.object {
            Object::Iri(iri) => write!(f, "<{iri}>")?,
            Object::Literal(lit) => {
                f.write_str("\"")?;
                for c in lit.lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(lang) = &lit.lang {
                    write!(f, "@{lang}")?;
                }
            }
        }
        f.write_str(" .")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParsedTriples {
    pub triples: Vec<Triple>,
    /// Statements dropped because the subject or object was a blank node.
    pub skipped_blank: usize,
}

enum Term {
    Iri(Iri),
    Blank,
    Literal(Literal),
}

enum Line {
    Empty,
    Blank,
    Triple(Triple),
}

/// Parses a whole N-Triples document. Lines are parsed in parallel; output
/// keeps file order and the first malformed line (by number) is reported.
pub fn parse_ntriples(text: &str) -> Result<ParsedTriples> {
    let lines: Vec<&str> = text.lines().collect();
    let parsed: Vec<Result<Line>> = lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| parse_line(line, i + 1))
        .collect();

    let mut out = ParsedTriples::default();
    for line in parsed {
        match line? {
            Line::Empty => {}
            Line::Blank => out.skipped_blank += 1,
            Line::Triple(t) => out.triples.push(t),
        }
    }
    Ok(out)
}

pub fn read_ntriples(path: impl AsRef<Path>) -> Result<ParsedTriples> {
    let text = std::fs::read_to_string(path)?;
    parse_ntriples(&text)
}

fn parse_line(line: &str, number: usize) -> Result<Line> {
    let mut cur = Cursor {
        rest: line,
        line: number,
    };
    cur.skip_ws();
    if cur.rest.is_empty() || cur.rest.starts_with('#') {
        return Ok(Line::Empty);
    }

    let subject = cur.term()?;
    if matches!(subject, Term::Literal(_)) {
        return Err(cur.error("literal in subject position"));
    }
    cur.skip_ws();
    let predicate = match cur.term()? {
        Term::Iri(iri) => iri,
        _ => return Err(cur.error("predicate must be an IRI")),
    };
    cur.skip_ws();
    let object = cur.term()?;
    cur.skip_ws();
    if !cur.eat('.') {
        return Err(cur.error("expected '.' terminating the statement"));
    }
    cur.skip_ws();
    if !(cur.rest.is_empty() || cur.rest.starts_with('#')) {
        return Err(cur.error("trailing characters after '.'"));
    }

    let subject = match subject {
        Term::Iri(iri) => iri,
        _ => return Ok(Line::Blank),
    };
    let object = match object {
        Term::Iri(iri) => Object::Iri(iri),
        Term::Literal(lit) => Object::Literal(lit),
        Term::Blank => return Ok(Line::Blank),
    };
    Ok(Line::Triple(Triple {
        subject,
        predicate,
        object,
    }))
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, reason: &str) -> Error {
        Error::MalformedLine {
            line: self.line,
            reason: reason.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t', '\r']);
    }

    fn eat(&mut self, c: char) -> bool {
        match self.rest.strip_prefix(c) {
            Some(rest) => {
                self.rest = rest;
                true
            }
            None => false,
        }
    }

    fn next_char(&mut self) -> Option<char> {
        let c = self.rest.chars().next()?;
        self.rest = &self.rest[c.len_utf8()..];
        Some(c)
    }

    fn term(&mut self) -> Result<Term> {
        if self.eat('<') {
            return self.iri().map(Term::Iri);
        }
        if let Some(rest) = self.rest.strip_prefix("_:") {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            // labels cannot end with '.', so a trailing one terminates the statement
            let label = rest[..end].trim_end_matches('.');
            if label.is_empty() {
                return Err(self.error("empty blank node label"));
            }
            self.rest = &rest[label.len()..];
            return Ok(Term::Blank);
        }
        if self.eat('"') {
            return self.literal().map(Term::Literal);
        }
        Err(self.error("expected '<', '_:' or '\"'"))
    }

    /// Reads an IRI body after the opening '<'.
    fn iri(&mut self) -> Result<Iri> {
        let mut value = String::new();
        loop {
            match self.next_char() {
                None => return Err(self.error("unterminated IRI")),
                Some('>') => break,
                Some('\\') => value.push(self.unicode_escape()?),
                Some(c) => value.push(c),
            }
        }
        Iri::new(&value).ok_or_else(|| self.error("invalid IRI"))
    }

    fn literal(&mut self) -> Result<Literal> {
        let mut lexical = String::new();
        loop {
            match self.next_char() {
                None => return Err(self.error("unterminated literal")),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.rest.chars().next() {
                        Some('t') => '\t',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('b') => '\u{8}',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') | Some('U') => {
                            lexical.push(self.unicode_escape()?);
                            continue;
                        }
                        _ => return Err(self.error("invalid escape in literal")),
                    };
                    self.next_char();
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }

        let mut lang = None;
        if self.eat('@') {
            let end = self
                .rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(self.rest.len());
            let tag = &self.rest[..end];
            if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
                return Err(self.error("invalid language tag"));
            }
            lang = Some(tag.to_string());
            self.rest = &self.rest[end..];
        } else if let Some(rest) = self.rest.strip_prefix("^^") {
            self.rest = rest;
            if !self.eat('<') {
                return Err(self.error("datatype must be an IRI"));
            }
            self.iri()?;
        }
        Ok(Literal { lexical, lang })
    }

    /// Decodes `uXXXX` / `UXXXXXXXX` after a backslash.
    fn unicode_escape(&mut self) -> Result<char> {
        let width = match self.next_char() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("invalid escape")),
        };
        let hex = self
            .rest
            .get(..width)
            .ok_or_else(|| self.error("truncated unicode escape"))?;
        let code = u32::from_str_radix(hex, 16).map_err(|_| self.error("bad unicode escape"))?;
        self.rest = &self.rest[width..];
        char::from_u32(code).ok_or_else(|| self.error("escape is not a scalar value"))
    }
}
