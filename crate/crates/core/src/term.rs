use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::xsd;

/// An absolute IRI. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(value: impl AsRef<str>) -> Result<Self> {
        let value = value.as_ref();
        let valid = match value.find(':') {
            Some(idx) => {
                idx > 0
                    && value[..idx]
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
                    && value.as_bytes()[0].is_ascii_alphabetic()
            }
            None => false,
        };
        if !valid || value.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"')) {
            return Err(Error::MalformedIri { iri: value.to_string() });
        }
        Ok(Iri(Arc::from(value)))
    }

    /// For compile-time constants known to be well formed.
    pub(crate) fn from_static(value: &'static str) -> Self {
        Iri(Arc::from(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The fragment or last path segment, used as a fallback label.
    pub fn local_name(&self) -> &str {
        let s = self.as_str();
        let cut = s.rfind(['#', '/']).or_else(|| s.rfind(':')).map(|i| i + 1).unwrap_or(0);
        if cut >= s.len() {
            s
        } else {
            &s[cut..]
        }
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Iri {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Iri::new(s)
    }
}

impl Serialize for Iri {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Iri {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Iri::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Decimal,
    Integer,
    Boolean,
}

impl Datatype {
    pub const ALL: [Datatype; 4] = [
        Datatype::String,
        Datatype::Decimal,
        Datatype::Integer,
        Datatype::Boolean,
    ];

    pub fn iri_str(self) -> &'static str {
        match self {
            Datatype::String => xsd::STRING,
            Datatype::Decimal => xsd::DECIMAL,
            Datatype::Integer => xsd::INTEGER,
            Datatype::Boolean => xsd::BOOLEAN,
        }
    }

    pub fn iri(self) -> Iri {
        Iri::from_static(self.iri_str())
    }

    pub fn from_iri(iri: &str) -> Option<Datatype> {
        Datatype::ALL.into_iter().find(|d| d.iri_str() == iri)
    }

    pub fn name(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Decimal => "decimal",
            Datatype::Integer => "integer",
            Datatype::Boolean => "boolean",
        }
    }

    pub fn from_name(name: &str) -> Option<Datatype> {
        Datatype::ALL.into_iter().find(|d| d.name() == name)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Datatype::Decimal | Datatype::Integer)
    }

    /// Whether a value of `value` datatype may bind a node declared as `self`.
    /// Integers are admitted where decimals are expected.
    pub fn admits(self, value: Datatype) -> bool {
        self == value || (self == Datatype::Decimal && value == Datatype::Integer)
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: Arc<str>,
    datatype: Datatype,
    numeric: Option<Decimal>,
}

impl Literal {
    pub fn string(lexical: impl AsRef<str>) -> Self {
        Literal {
            lexical: Arc::from(lexical.as_ref()),
            datatype: Datatype::String,
            numeric: None,
        }
    }

    pub fn boolean(value: bool) -> Self {
        Literal {
            lexical: Arc::from(if value { "true" } else { "false" }),
            datatype: Datatype::Boolean,
            numeric: None,
        }
    }

    /// Builds a typed literal, checking that the lexical form is valid for the datatype.
    pub fn typed(lexical: impl AsRef<str>, datatype: Datatype) -> Result<Self> {
        let lexical = lexical.as_ref();
        let numeric = match datatype {
            Datatype::String => None,
            Datatype::Boolean => {
                if lexical != "true" && lexical != "false" {
                    return Err(Error::DatatypeMismatch(format!("`{lexical}` is not a boolean")));
                }
                None
            }
            Datatype::Integer => {
                let digits = lexical.strip_prefix(['+', '-']).unwrap_or(lexical);
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(Error::DatatypeMismatch(format!("`{lexical}` is not an integer")));
                }
                Some(parse_decimal(lexical)?)
            }
            Datatype::Decimal => {
                let body = lexical.strip_prefix(['+', '-']).unwrap_or(lexical);
                let (int, frac) = body.split_once('.').unwrap_or((body, ""));
                let valid = !(int.is_empty() && frac.is_empty())
                    && int.bytes().all(|b| b.is_ascii_digit())
                    && frac.bytes().all(|b| b.is_ascii_digit())
                    && !(body.contains('.') && frac.is_empty());
                if !valid {
                    return Err(Error::DatatypeMismatch(format!("`{lexical}` is not a decimal")));
                }
                Some(parse_decimal(lexical)?)
            }
        };
        Ok(Literal {
            lexical: Arc::from(lexical),
            datatype,
            numeric,
        })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }

    pub fn numeric_value(&self) -> Option<Decimal> {
        self.numeric
    }
}

fn parse_decimal(lexical: &str) -> Result<Decimal> {
    let trimmed = lexical.strip_prefix('+').unwrap_or(lexical);
    Decimal::from_str_exact(trimmed)
        .map_err(|e| Error::DatatypeMismatch(format!("`{lexical}` out of decimal range: {e}")))
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        write_escaped(f, &self.lexical)?;
        write!(f, "\"^^<{}>", self.datatype.iri_str())
    }
}

pub(crate) fn write_escaped(out: &mut impl fmt::Write, s: &str) -> fmt::Result {
    for c in s.chars() {
        match c {
            '"' => out.write_str("\\\"")?,
            '\\' => out.write_str("\\\\")?,
            '\n' => out.write_str("\\n")?,
            '\r' => out.write_str("\\r")?,
            '\t' => out.write_str("\\t")?,
            c => out.write_char(c)?,
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    Blank(Arc<str>),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: &str) -> Result<Self> {
        Ok(Term::Iri(Iri::new(value)?))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// The plain text of the term: IRI string, blank label, or literal lexical form.
    pub fn text(&self) -> &str {
        match self {
            Term::Iri(i) => i.as_str(),
            Term::Blank(b) => b,
            Term::Literal(l) => l.lexical(),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

/// N-Triples style rendering; row ordering and cache payloads rely on it being stable.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "<{i}>"),
            Term::Blank(b) => write!(f, "_:{b}"),
            Term::Literal(l) => l.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    /// Returns `None` when the subject is a literal.
    pub fn new(subject: Term, predicate: Iri, object: Term) -> Option<Self> {
        if subject.is_literal() {
            return None;
        }
        Some(Triple {
            subject,
            predicate,
            object,
        })
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}> {} .", self.subject, self.predicate, self.object)
    }
}
