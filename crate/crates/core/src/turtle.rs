//! Reader and writer for the Turtle subset used by ontology and dataset files.
//!
//! Supported: `@prefix`/`PREFIX` directives, absolute IRIs, prefixed names,
//! the `a` keyword, predicate and object lists, `_:label` blank nodes,
//! blank-node property lists (`[ ... ]`), single-line string literals with
//! optional `^^datatype`, integers, decimals and booleans.
//!
//! Rejected with a positioned error: collections, language tags, long
//! (triple-quoted) strings, exponent numbers and `@base`.

use std::collections::HashMap;
use std::fmt::Write as _;

use tracing::warn;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::term::{write_escaped, Datatype, Iri, Literal, Term, Triple};
use crate::vocab::rdf;

/// Parses `document` into a graph named `graph_id`. Blank nodes are relabelled
/// `<graph>_b<n>` in order of first appearance, so labels are unique across
/// graphs and the same input always yields the same labels.
pub fn load_turtle(document: &str, graph_id: &str) -> Result<Graph> {
    let triples = parse_turtle(document, graph_id)?;
    Ok(Graph::new(graph_id, triples))
}

pub fn parse_turtle(document: &str, graph_id: &str) -> Result<Vec<Triple>> {
    let mut parser = Parser::new(document, graph_id);
    parser.document()?;
    Ok(parser.triples)
}

/// Writes the graph with one subject block per subject, triples sorted by
/// their N-Triples rendering of (subject, predicate, object).
pub fn to_turtle(graph: &Graph) -> String {
    let mut rows: Vec<(String, String, String)> = graph
        .triples()
        .iter()
        .map(|t| {
            (
                t.subject.to_string(),
                format!("<{}>", t.predicate),
                render_object(&t.object),
            )
        })
        .collect();
    rows.sort();
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for (s, p, o) in &rows {
        if current == Some(s.as_str()) {
            let _ = write!(out, " ;\n    {p} {o}");
        } else {
            if current.is_some() {
                out.push_str(" .\n");
            }
            let _ = write!(out, "{s} {p} {o}");
            current = Some(s);
        }
    }
    if current.is_some() {
        out.push_str(" .\n");
    }
    out
}

fn render_object(term: &Term) -> String {
    match term {
        Term::Literal(l) if l.datatype() == Datatype::String => {
            let mut s = String::from("\"");
            let _ = write_escaped(&mut s, l.lexical());
            s.push('"');
            s
        }
        other => other.to_string(),
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    prefixes: HashMap<String, String>,
    blank_labels: HashMap<String, String>,
    blank_prefix: String,
    next_blank: usize,
    triples: Vec<Triple>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, graph_id: &str) -> Self {
        let mut blank_prefix: String = graph_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        if blank_prefix.is_empty() || !blank_prefix.as_bytes()[0].is_ascii_alphabetic() {
            blank_prefix.insert(0, 'g');
        }
        Parser {
            src,
            pos: 0,
            line: 1,
            col: 1,
            prefixes: HashMap::new(),
            blank_labels: HashMap::new(),
            blank_prefix,
            next_blank: 0,
            triples: Vec::new(),
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: self.line,
            column: self.col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(found) if found == c => {
                self.bump();
                Ok(())
            }
            Some(found) => self.err(format!("expected `{c}`, found `{found}`")),
            None => self.err(format!("expected `{c}`, found end of input")),
        }
    }

    fn keyword_ci(&self, kw: &str) -> bool {
        let rest = self.rest();
        rest.len() >= kw.len()
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && rest[kw.len()..]
                .chars()
                .next()
                .is_none_or(|c| c.is_whitespace() || c == '<')
    }

    fn document(&mut self) -> Result<()> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            self.statement()?;
        }
    }

    fn statement(&mut self) -> Result<()> {
        if self.rest().starts_with("@prefix") {
            for _ in 0.."@prefix".len() {
                self.bump();
            }
            self.prefix_decl()?;
            return self.expect('.');
        }
        if self.rest().starts_with("@base") || self.keyword_ci("BASE") {
            return self.err("base IRIs are not supported");
        }
        if self.keyword_ci("PREFIX") {
            for _ in 0.."PREFIX".len() {
                self.bump();
            }
            return self.prefix_decl();
        }
        self.triples_statement()?;
        self.expect('.')
    }

    fn prefix_decl(&mut self) -> Result<()> {
        self.skip_ws();
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
                return self.err(format!("invalid character `{c}` in prefix name"));
            }
            name.push(c);
            self.bump();
        }
        self.expect(':')?;
        self.skip_ws();
        if self.peek() != Some('<') {
            return self.err("expected IRI after prefix name");
        }
        let iri = self.iri_ref()?;
        self.prefixes.insert(name, iri.as_str().to_string());
        Ok(())
    }

    fn triples_statement(&mut self) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some('[') {
            let subject = self.blank_property_list()?;
            self.skip_ws();
            if self.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
            return Ok(());
        }
        let subject = self.subject()?;
        self.predicate_object_list(&subject)
    }

    fn subject(&mut self) -> Result<Term> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref()?)),
            Some('_') => self.blank_label(),
            Some('"') | Some('\'') => self.err("literal cannot be a subject"),
            Some('(') => self.err("collections are not supported"),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' => self.err("literal cannot be a subject"),
            Some(_) => Ok(Term::Iri(self.prefixed_name()?)),
            None => self.err("unexpected end of input"),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<()> {
        loop {
            let predicate = self.verb()?;
            self.object_list(subject, &predicate)?;
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.bump();
                self.skip_ws();
            }
            if matches!(self.peek(), Some('.') | Some(']')) {
                return Ok(());
            }
        }
    }

    fn object_list(&mut self, subject: &Term, predicate: &Iri) -> Result<()> {
        loop {
            let object = self.object()?;
            self.triples.push(Triple {
                subject: subject.clone(),
                predicate: predicate.clone(),
                object,
            });
            self.skip_ws();
            if self.peek() != Some(',') {
                return Ok(());
            }
            self.bump();
        }
    }

    fn verb(&mut self) -> Result<Iri> {
        self.skip_ws();
        if self.peek() == Some('a')
            && self
                .peek_at(1)
                .is_none_or(|c| c.is_whitespace() || matches!(c, '<' | '[' | '"' | '_'))
        {
            self.bump();
            return Ok(Iri::from_static(rdf::TYPE));
        }
        match self.peek() {
            Some('<') => self.iri_ref(),
            Some('_') | Some('[') => self.err("predicate must be an IRI"),
            Some('"') | Some('\'') => self.err("predicate must be an IRI"),
            None => self.err("expected predicate, found end of input"),
            Some(_) => self.prefixed_name(),
        }
    }

    fn object(&mut self) -> Result<Term> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref()?)),
            Some('_') => self.blank_label(),
            Some('[') => self.blank_property_list(),
            Some('(') => self.err("collections are not supported"),
            Some('"') | Some('\'') => self.string_literal(),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' || c == '.' => self.numeric(),
            Some(_) if self.bool_keyword("true") => {
                self.advance(4);
                Ok(Term::Literal(Literal::boolean(true)))
            }
            Some(_) if self.bool_keyword("false") => {
                self.advance(5);
                Ok(Term::Literal(Literal::boolean(false)))
            }
            Some(_) => Ok(Term::Iri(self.prefixed_name()?)),
            None => self.err("expected object, found end of input"),
        }
    }

    fn bool_keyword(&self, kw: &str) -> bool {
        let rest = self.rest();
        rest.starts_with(kw)
            && rest[kw.len()..]
                .chars()
                .next()
                .is_none_or(|c| !(c.is_alphanumeric() || matches!(c, '_' | '-' | ':')))
    }

    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn iri_ref(&mut self) -> Result<Iri> {
        let (line, col) = (self.line, self.col);
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) if c == '\n' || c == ' ' || c == '<' || c == '"' => {
                    return Err(Error::Syntax {
                        line,
                        column: col,
                        message: format!("invalid character {c:?} in IRI"),
                    })
                }
                Some(c) => value.push(c),
                None => {
                    return Err(Error::Syntax {
                        line,
                        column: col,
                        message: "unterminated IRI".into(),
                    })
                }
            }
        }
        Iri::new(&value)
    }

    fn prefixed_name(&mut self) -> Result<Iri> {
        let (line, column) = (self.line, self.col);
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
                return self.err(format!("unexpected character `{c}`"));
            }
            prefix.push(c);
            self.bump();
        }
        if self.peek() != Some(':') {
            return Err(Error::Syntax {
                line,
                column,
                message: format!("expected prefixed name, found `{prefix}`"),
            });
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            let inner_dot = c == '.'
                && self
                    .peek_at(1)
                    .is_some_and(|n| n.is_alphanumeric() || matches!(n, '_' | '-' | ':'));
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '%') || inner_dot {
                local.push(c);
                self.bump();
            } else if c == '\\' {
                self.bump();
                match self.bump() {
                    Some(e) => local.push(e),
                    None => return self.err("dangling escape in local name"),
                }
            } else {
                break;
            }
        }
        let Some(ns) = self.prefixes.get(&prefix) else {
            return Err(Error::UnresolvedPrefix { prefix, line, column });
        };
        Iri::new(format!("{ns}{local}"))
    }

    fn fresh_blank(&mut self) -> Term {
        let label = format!("{}_b{}", self.blank_prefix, self.next_blank);
        self.next_blank += 1;
        Term::Blank(label.into())
    }

    fn blank_label(&mut self) -> Result<Term> {
        if self.peek_at(1) != Some(':') {
            return self.err("expected `_:` blank node label");
        }
        self.advance(2);
        let mut label = String::new();
        while let Some(c) = self.peek() {
            let inner_dot = c == '.' && self.peek_at(1).is_some_and(|n| n.is_alphanumeric());
            if c.is_alphanumeric() || matches!(c, '_' | '-') || inner_dot {
                label.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if label.is_empty() {
            return self.err("empty blank node label");
        }
        if let Some(existing) = self.blank_labels.get(&label) {
            return Ok(Term::Blank(existing.as_str().into()));
        }
        let term = self.fresh_blank();
        self.blank_labels.insert(label, term.text().to_string());
        Ok(term)
    }

    fn blank_property_list(&mut self) -> Result<Term> {
        self.bump();
        let node = self.fresh_blank();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(node);
        }
        self.predicate_object_list(&node)?;
        self.expect(']')?;
        Ok(node)
    }

    fn string_literal(&mut self) -> Result<Term> {
        let quote = self.peek().unwrap_or('"');
        if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
            return self.err("long strings are not supported");
        }
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                Some(c) if c == quote => break,
                Some('\\') => {
                    let escaped = match self.bump() {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        Some('b') => '\u{8}',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.unicode_escape(4)?,
                        Some('U') => self.unicode_escape(8)?,
                        _ => return self.err("invalid escape sequence"),
                    };
                    value.push(escaped);
                }
                Some('\n') | None => return self.err("unterminated string literal"),
                Some(c) => value.push(c),
            }
        }
        match self.peek() {
            Some('@') => self.err("language tags are not supported"),
            Some('^') if self.peek_at(1) == Some('^') => {
                self.advance(2);
                let dt = if self.peek() == Some('<') {
                    self.iri_ref()?
                } else {
                    self.prefixed_name()?
                };
                let datatype = match Datatype::from_iri(dt.as_str()) {
                    Some(d) => d,
                    None => {
                        warn!(datatype = %dt, "unsupported datatype, reading literal as string");
                        Datatype::String
                    }
                };
                match Literal::typed(&value, datatype) {
                    Ok(lit) => Ok(Term::Literal(lit)),
                    Err(e) => self.err(e.to_string()),
                }
            }
            _ => Ok(Term::Literal(Literal::string(value))),
        }
    }

    fn unicode_escape(&mut self, digits: usize) -> Result<char> {
        let mut code = 0u32;
        for _ in 0..digits {
            match self.bump().and_then(|c| c.to_digit(16)) {
                Some(d) => code = code * 16 + d,
                None => return self.err("invalid unicode escape"),
            }
        }
        match char::from_u32(code) {
            Some(c) => Ok(c),
            None => self.err("invalid unicode scalar"),
        }
    }

    fn numeric(&mut self) -> Result<Term> {
        let mut text = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            text.push(c);
            self.bump();
        }
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            text.push(c);
            self.bump();
        }
        let mut datatype = Datatype::Integer;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            datatype = Datatype::Decimal;
            text.push('.');
            self.bump();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                text.push(c);
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            return self.err("exponent (double) literals are not supported");
        }
        match Literal::typed(&text, datatype) {
            Ok(lit) => Ok(Term::Literal(lit)),
            Err(_) => self.err(format!("invalid number `{text}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: &str = "@prefix ex: <http://example.org/> .\n";

    #[test]
    fn empty_document() {
        assert_eq!(load_turtle("", "g").unwrap().len(), 0);
        assert_eq!(load_turtle("# only a comment\n", "g").unwrap().len(), 0);
    }

    #[test]
    fn single_statement_echo() {
        let doc = format!(
            "{EX}@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\nex:ClonedSample rdfs:subClassOf ex:TcruziSample ."
        );
        let g = load_turtle(&doc, "g").unwrap();
        assert_eq!(g.len(), 1);
        let t = &g.triples()[0];
        assert_eq!(t.subject, Term::iri("http://example.org/ClonedSample").unwrap());
        assert_eq!(t.predicate.as_str(), crate::vocab::rdfs::SUB_CLASS_OF);
        assert_eq!(t.object, Term::iri("http://example.org/TcruziSample").unwrap());
    }

    #[test]
    fn lists_and_keywords() {
        let doc = format!(
            "{EX}ex:a a ex:C ; ex:p ex:b , ex:c ; ex:n 12 , -1.5 , true ; ex:s \"x\\\"y\" ;\n.\nPREFIX q: <urn:q:>\nq:z ex:p 'single' ."
        );
        let g = load_turtle(&doc, "g").unwrap();
        assert_eq!(g.len(), 8);
        let n = Iri::new("http://example.org/n").unwrap();
        let nums: Vec<_> = g.lookup(None, Some(&n), None).map(|t| t.object.clone()).collect();
        assert!(nums.contains(&Term::Literal(Literal::typed("12", Datatype::Integer).unwrap())));
        assert!(nums.contains(&Term::Literal(Literal::typed("-1.5", Datatype::Decimal).unwrap())));
        assert!(nums.contains(&Term::Literal(Literal::boolean(true))));
    }

    #[test]
    fn integer_before_statement_end() {
        let g = load_turtle(&format!("{EX}ex:a ex:n 1."), "g").unwrap();
        assert_eq!(
            g.triples()[0].object,
            Term::Literal(Literal::typed("1", Datatype::Integer).unwrap())
        );
    }

    #[test]
    fn blank_nodes_relabelled_deterministically() {
        let doc = format!("{EX}ex:a ex:p [ ex:q ex:b ] .\n_:x ex:p _:x .\n_:y ex:p _:x .");
        let g1 = load_turtle(&doc, "strains").unwrap();
        let g2 = load_turtle(&doc, "strains").unwrap();
        assert_eq!(g1, g2);
        let labels: Vec<String> = g1
            .triples()
            .iter()
            .flat_map(|t| [&t.subject, &t.object])
            .filter_map(|t| match t {
                Term::Blank(b) => Some(b.to_string()),
                _ => None,
            })
            .collect();
        assert_eq!(
            labels,
            [
                "strains_b0",
                "strains_b0",
                "strains_b1",
                "strains_b1",
                "strains_b2",
                "strains_b1"
            ]
        );
    }

    #[test]
    fn typed_literals_and_unknown_datatypes() {
        let doc = format!(
            "{EX}@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\nex:a ex:p \"2.5\"^^xsd:decimal ; ex:q \"2020-01-01\"^^xsd:date ."
        );
        let g = load_turtle(&doc, "g").unwrap();
        let objs: Vec<_> = g.triples().iter().map(|t| t.object.clone()).collect();
        assert_eq!(
            objs[0],
            Term::Literal(Literal::typed("2.5", Datatype::Decimal).unwrap())
        );
        assert_eq!(objs[1], Term::Literal(Literal::string("2020-01-01")));
    }

    #[test]
    fn errors_carry_positions() {
        match load_turtle("@prefix ex: <http://e.org/> .\nex:a ex:p", "g") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match load_turtle("zz:a <http://e.org/p> <http://e.org/o> .", "g") {
            Err(Error::UnresolvedPrefix { prefix, line, column }) => {
                assert_eq!((prefix.as_str(), line, column), ("zz", 1, 1))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_turtle("<relative> <http://e.org/p> <http://e.org/o> .", "g"),
            Err(Error::MalformedIri { .. })
        ));
        for bad in [
            "<http://e.org/a> <http://e.org/p> \"x\"@en .",
            "<http://e.org/a> <http://e.org/p> ( <http://e.org/b> ) .",
            "<http://e.org/a> <http://e.org/p> \"\"\"long\"\"\" .",
            "<http://e.org/a> <http://e.org/p> 1e5 .",
            "\"lit\" <http://e.org/p> <http://e.org/o> .",
            "<http://e.org/a> <http://e.org/p> \"abc\"^^<http://www.w3.org/2001/XMLSchema#integer> .",
        ] {
            assert!(matches!(load_turtle(bad, "g"), Err(Error::Syntax { .. })), "{bad}");
        }
    }

    #[test]
    fn serializer_sorts_and_groups() {
        let doc = format!("{EX}ex:b ex:p ex:c .\nex:a ex:q \"v\" ; ex:p 3 .");
        let out = to_turtle(&load_turtle(&doc, "g").unwrap());
        assert_eq!(
            out,
            "<http://example.org/a> <http://example.org/p> \"3\"^^<http://www.w3.org/2001/XMLSchema#integer> ;\n    <http://example.org/q> \"v\" .\n<http://example.org/b> <http://example.org/p> <http://example.org/c> .\n"
        );
    }
}
