//! Turns a [`PathQuery`] into an evaluation plan and into query text, and
//! parses that text back.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::query::{
    Comparator, DatasetSelector, Direction, Filter, InstanceSelection, NodeKind, PathQuery, QueryEdge, QueryNode,
    SelectionOp,
};
use crate::reasoner::Ontology;
use crate::term::{write_escaped, Datatype, Iri, Literal};
use crate::vocab::kdq;

pub const QUERY_TEXT_HEADER: &str = "# kdq query v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanStep {
    /// Bind the node to instances of the class or any subclass.
    ExtendedTypeScan {
        node: usize,
        class: Iri,
    },
    /// Bind a datatype node to literal objects of `property`; joined to
    /// `from_node` by the following edge join.
    LiteralBind {
        node: usize,
        property: Iri,
        from_node: usize,
        datatype: Datatype,
    },
    InstanceRestrict {
        node: usize,
        selection: InstanceSelection,
    },
    FilterApply {
        node: usize,
        filter: Filter,
    },
    EdgeJoin(QueryEdge),
}

impl PlanStep {
    pub fn node(&self) -> usize {
        match self {
            PlanStep::ExtendedTypeScan { node, .. }
            | PlanStep::LiteralBind { node, .. }
            | PlanStep::InstanceRestrict { node, .. }
            | PlanStep::FilterApply { node, .. } => *node,
            PlanStep::EdgeJoin(e) => e.to,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OutputColumn {
    pub node_id: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationPlan {
    pub steps: Vec<PlanStep>,
    /// One column per node, in node id order.
    pub output_columns: Vec<OutputColumn>,
}

impl EvaluationPlan {
    pub fn scans(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, PlanStep::ExtendedTypeScan { .. }))
            .count()
    }

    pub fn joins(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, PlanStep::EdgeJoin(_))).count()
    }
}

/// Label of a node for headers and variable names.
pub fn node_label(onto: &Ontology, node: &QueryNode) -> String {
    match &node.kind {
        NodeKind::Class(c) => onto.class_label(c),
        NodeKind::Datatype(d) => d.name().to_string(),
    }
}

fn node_steps(q: &PathQuery, node: &QueryNode, steps: &mut Vec<PlanStep>) {
    match &node.kind {
        NodeKind::Class(class) => steps.push(PlanStep::ExtendedTypeScan {
            node: node.id,
            class: class.clone(),
        }),
        NodeKind::Datatype(datatype) => {
            let edge = q.incoming_edge(node.id).expect("datatype nodes are never the root");
            steps.push(PlanStep::LiteralBind {
                node: node.id,
                property: edge.property.clone(),
                from_node: edge.from,
                datatype: *datatype,
            });
        }
    }
    if let Some(selection) = &node.selection {
        steps.push(PlanStep::InstanceRestrict {
            node: node.id,
            selection: selection.clone(),
        });
    }
    if let Some(filter) = &node.filter {
        steps.push(PlanStep::FilterApply {
            node: node.id,
            filter: filter.clone(),
        });
    }
}

/// Root scan first, then for each edge in pre-order: the child's binding,
/// its restrictions, and the join to its parent.
pub fn compile(q: &PathQuery, onto: &Ontology) -> Result<EvaluationPlan> {
    q.validate(onto)?;
    let mut steps = Vec::new();
    node_steps(q, q.root(), &mut steps);
    for edge in q.edges_preorder() {
        node_steps(q, q.node(edge.to)?, &mut steps);
        steps.push(PlanStep::EdgeJoin(edge.clone()));
    }
    let output_columns = q
        .nodes()
        .iter()
        .map(|n| OutputColumn {
            node_id: n.id,
            label: node_label(onto, n),
        })
        .collect();
    Ok(EvaluationPlan { steps, output_columns })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SparqlText {
    pub text: String,
    pub variable_map: BTreeMap<usize, String>,
}

/// Lowercase, with every run of other characters collapsed to one underscore.
pub fn snake_case(label: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for c in label.chars() {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('_');
            }
            gap = false;
            out.extend(c.to_lowercase());
        } else {
            gap = true;
        }
    }
    out
}

/// `?any_<snake label><ordinal>`, the ordinal being the 1-based creation index.
pub fn variable_name(onto: &Ontology, node: &QueryNode) -> String {
    format!("?any_{}{}", snake_case(&node_label(onto, node)), node.id + 1)
}

fn push_literal(out: &mut String, lit: &Literal) {
    out.push('"');
    let _ = write_escaped(out, lit.lexical());
    let _ = write!(out, "\"^^<{}>", lit.datatype().iri_str());
}

/// Renders the query in the documented SPARQL-DL-flavoured subset. Type
/// atoms (`?x a <C>`) match instances of C and of all its subclasses.
pub fn emit_sparql(q: &PathQuery, onto: &Ontology) -> SparqlText {
    let variable_map: BTreeMap<usize, String> = q.nodes().iter().map(|n| (n.id, variable_name(onto, n))).collect();
    let var = |id: usize| variable_map[&id].as_str();
    let mut out = String::new();
    let _ = writeln!(out, "{QUERY_TEXT_HEADER}");
    out.push_str("SELECT");
    for v in variable_map.values() {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    if let DatasetSelector::One(id) = q.dataset() {
        let _ = writeln!(out, "FROM <{}{id}>", kdq::DATASET_NS);
    }
    out.push_str("WHERE {\n");
    let node_block = |out: &mut String, node: &QueryNode| {
        let v = var(node.id);
        match &node.kind {
            NodeKind::Class(c) => {
                let _ = writeln!(out, "  {v} a <{c}> .");
            }
            NodeKind::Datatype(d) => {
                let _ = writeln!(out, "  FILTER(datatype({v}) = <{}>)", d.iri_str());
            }
        }
        if let Some(sel) = &node.selection {
            match sel.op {
                SelectionOp::AnyOf => {
                    let _ = write!(out, "  VALUES {v} {{");
                    for i in &sel.instances {
                        let _ = write!(out, " <{i}>");
                    }
                    out.push_str(" }\n");
                }
                SelectionOp::NoneOf => {
                    let items: Vec<String> = sel.instances.iter().map(|i| format!("<{i}>")).collect();
                    let _ = writeln!(out, "  FILTER({v} NOT IN ({}))", items.join(", "));
                }
            }
        }
        if let Some(f) = &node.filter {
            let _ = write!(out, "  FILTER({v} {} ", f.comparator.symbol());
            push_literal(out, &f.value);
            out.push_str(")\n");
        }
    };
    node_block(&mut out, q.root());
    for edge in q.edges_preorder() {
        let (s, o) = match edge.direction {
            Direction::Forward => (var(edge.from), var(edge.to)),
            Direction::Inverse => (var(edge.to), var(edge.from)),
        };
        let _ = writeln!(out, "  {s} <{}> {o} .", edge.property);
        node_block(&mut out, q.node(edge.to).expect("edge target exists"));
    }
    out.push_str("}\n");
    SparqlText {
        text: out,
        variable_map,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Iri(String),
    Str(String),
    Cmp(Comparator),
    Punct(char),
    DoubleCaret,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn grammar<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Grammar {
        line,
        column,
        message: message.into(),
    })
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let (l, co) = (line, col);
        let next = chars.get(i + 1).copied();
        let tok = match c {
            c if c.is_whitespace() => {
                advance(&mut i, &mut line, &mut col, 1);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance(&mut i, &mut line, &mut col, 1);
                }
                continue;
            }
            '<' if next.is_none_or(char::is_whitespace) => {
                advance(&mut i, &mut line, &mut col, 1);
                Tok::Cmp(Comparator::Lt)
            }
            '<' if next == Some('=') && chars.get(i + 2).is_none_or(|c| c.is_whitespace()) => {
                advance(&mut i, &mut line, &mut col, 2);
                Tok::Cmp(Comparator::Le)
            }
            '<' => {
                let start = i + 1;
                let Some(len) = chars[start..].iter().position(|&c| c == '>') else {
                    return grammar(l, co, "unterminated IRI");
                };
                let iri: String = chars[start..start + len].iter().collect();
                if iri.chars().any(char::is_whitespace) {
                    return grammar(l, co, "whitespace inside IRI");
                }
                advance(&mut i, &mut line, &mut col, len + 2);
                Tok::Iri(iri)
            }
            '>' if next == Some('=') => {
                advance(&mut i, &mut line, &mut col, 2);
                Tok::Cmp(Comparator::Ge)
            }
            '>' => {
                advance(&mut i, &mut line, &mut col, 1);
                Tok::Cmp(Comparator::Gt)
            }
            '!' if next == Some('=') => {
                advance(&mut i, &mut line, &mut col, 2);
                Tok::Cmp(Comparator::Ne)
            }
            '=' => {
                advance(&mut i, &mut line, &mut col, 1);
                Tok::Cmp(Comparator::Eq)
            }
            '^' if next == Some('^') => {
                advance(&mut i, &mut line, &mut col, 2);
                Tok::DoubleCaret
            }
            '"' => {
                let mut s = String::new();
                advance(&mut i, &mut line, &mut col, 1);
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return grammar(l, co, "unterminated string"),
                        Some('"') => {
                            advance(&mut i, &mut line, &mut col, 1);
                            break;
                        }
                        Some('\\') => {
                            let esc = match chars.get(i + 1) {
                                Some('n') => '\n',
                                Some('r') => '\r',
                                Some('t') => '\t',
                                Some('"') => '"',
                                Some('\\') => '\\',
                                _ => return grammar(line, col, "bad escape"),
                            };
                            s.push(esc);
                            advance(&mut i, &mut line, &mut col, 2);
                        }
                        Some(&c) => {
                            s.push(c);
                            advance(&mut i, &mut line, &mut col, 1);
                        }
                    }
                }
                Tok::Str(s)
            }
            '?' => {
                let len = chars[i + 1..]
                    .iter()
                    .take_while(|c| c.is_alphanumeric() || **c == '_')
                    .count();
                if len == 0 {
                    return grammar(l, co, "empty variable name");
                }
                let name: String = chars[i..i + 1 + len].iter().collect();
                advance(&mut i, &mut line, &mut col, len + 1);
                Tok::Var(name)
            }
            '{' | '}' | '(' | ')' | '.' | ',' => {
                advance(&mut i, &mut line, &mut col, 1);
                Tok::Punct(c)
            }
            c if c.is_ascii_alphabetic() => {
                let len = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric()).count();
                let word: String = chars[i..i + len].iter().collect();
                advance(&mut i, &mut line, &mut col, len);
                Tok::Word(word)
            }
            other => return grammar(l, co, format!("unexpected character `{other}`")),
        };
        toks.push(Spanned {
            tok,
            line: l,
            column: co,
        });
    }
    Ok(toks)
}

struct TextParser<'o> {
    onto: &'o Ontology,
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

#[derive(Default)]
struct ParsedNode {
    kind: Option<NodeKind>,
    selection: Option<InstanceSelection>,
    filter: Option<Filter>,
}

impl TextParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.column))
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        grammar(line, column, message)
    }

    fn next(&mut self) -> Result<Tok> {
        match self.toks.get(self.pos) {
            Some(s) => {
                self.pos += 1;
                Ok(s.tok.clone())
            }
            None => self.fail("unexpected end of input"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail(format!("expected `{kw}`")),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn punct(&mut self, p: char) -> Result<()> {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected `{p}`"))
        }
    }

    fn iri(&mut self) -> Result<Iri> {
        match self.next()? {
            Tok::Iri(s) => Iri::new(s),
            _ => {
                self.pos -= 1;
                self.fail("expected an IRI")
            }
        }
    }

    fn var(&mut self, vars: &BTreeMap<String, usize>) -> Result<usize> {
        match self.next()? {
            Tok::Var(v) => match vars.get(&v) {
                Some(&i) => Ok(i),
                None => {
                    self.pos -= 1;
                    self.fail(format!("variable {v} is not selected"))
                }
            },
            _ => {
                self.pos -= 1;
                self.fail("expected a variable")
            }
        }
    }

    fn class(&mut self) -> Result<Iri> {
        let iri = self.iri()?;
        if self.onto.schema.class(&iri).is_none() {
            return Err(Error::UnknownSymbol(iri.to_string()));
        }
        Ok(iri)
    }

    fn property(&mut self) -> Result<Iri> {
        let iri = self.iri()?;
        if self.onto.schema.property(&iri).is_none() {
            return Err(Error::UnknownSymbol(iri.to_string()));
        }
        Ok(iri)
    }

    fn literal(&mut self) -> Result<Literal> {
        let Tok::Str(lexical) = self.next()? else {
            self.pos -= 1;
            return self.fail("expected a typed literal");
        };
        if self.next()? != Tok::DoubleCaret {
            self.pos -= 1;
            return self.fail("expected `^^`");
        }
        let dt = self.iri()?;
        let Some(datatype) = Datatype::from_iri(dt.as_str()) else {
            return Err(Error::UnknownSymbol(dt.to_string()));
        };
        Literal::typed(lexical, datatype)
    }

    fn set_once<T>(&self, slot: &mut Option<T>, value: T, what: &str) -> Result<()> {
        if slot.is_some() {
            return self.fail(format!("duplicate {what}"));
        }
        *slot = Some(value);
        Ok(())
    }

    fn parse(mut self) -> Result<PathQuery> {
        self.keyword("SELECT")?;
        let mut vars: BTreeMap<String, usize> = BTreeMap::new();
        while let Some(Tok::Var(v)) = self.peek() {
            let v = v.clone();
            let n = vars.len();
            if vars.insert(v.clone(), n).is_some() {
                return self.fail(format!("variable {v} selected twice"));
            }
            self.pos += 1;
        }
        if vars.is_empty() {
            return self.fail("SELECT needs at least one variable");
        }
        let mut dataset = DatasetSelector::All;
        if self.is_keyword("FROM") {
            self.pos += 1;
            let iri = self.iri()?;
            match iri.as_str().strip_prefix(kdq::DATASET_NS) {
                Some(id) if !id.is_empty() => dataset = DatasetSelector::One(id.to_string()),
                _ => return Err(Error::UnknownSymbol(iri.to_string())),
            }
        }
        self.keyword("WHERE")?;
        self.punct('{')?;
        let mut nodes: Vec<ParsedNode> = (0..vars.len()).map(|_| ParsedNode::default()).collect();
        let mut edges: Vec<QueryEdge> = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Punct('}')) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Var(_)) => {
                    let s = self.var(&vars)?;
                    if self.is_keyword("a") {
                        self.pos += 1;
                        let class = self.class()?;
                        self.set_once(&mut nodes[s].kind, NodeKind::Class(class), "type atom")?;
                    } else {
                        let property = self.property()?;
                        let o = self.var(&vars)?;
                        if s == o {
                            return self.fail("an edge cannot loop on one variable");
                        }
                        edges.push(if s < o {
                            QueryEdge {
                                from: s,
                                property,
                                to: o,
                                direction: Direction::Forward,
                            }
                        } else {
                            QueryEdge {
                                from: o,
                                property,
                                to: s,
                                direction: Direction::Inverse,
                            }
                        });
                    }
                    self.punct('.')?;
                }
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("VALUES") => {
                    self.pos += 1;
                    let v = self.var(&vars)?;
                    self.punct('{')?;
                    let mut instances = BTreeSet::new();
                    while matches!(self.peek(), Some(Tok::Iri(_))) {
                        instances.insert(self.iri()?);
                    }
                    self.punct('}')?;
                    let sel = InstanceSelection {
                        op: SelectionOp::AnyOf,
                        instances,
                    };
                    self.set_once(&mut nodes[v].selection, sel, "instance selection")?;
                }
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("FILTER") => {
                    self.pos += 1;
                    self.punct('(')?;
                    if self.is_keyword("datatype") {
                        self.pos += 1;
                        self.punct('(')?;
                        let v = self.var(&vars)?;
                        self.punct(')')?;
                        if self.next()? != Tok::Cmp(Comparator::Eq) {
                            self.pos -= 1;
                            return self.fail("expected `=`");
                        }
                        let dt = self.iri()?;
                        let Some(d) = Datatype::from_iri(dt.as_str()) else {
                            return Err(Error::UnknownSymbol(dt.to_string()));
                        };
                        self.set_once(&mut nodes[v].kind, NodeKind::Datatype(d), "type atom")?;
                    } else {
                        let v = self.var(&vars)?;
                        if self.is_keyword("NOT") {
                            self.pos += 1;
                            self.keyword("IN")?;
                            self.punct('(')?;
                            let mut instances = BTreeSet::new();
                            instances.insert(self.iri()?);
                            while self.peek() == Some(&Tok::Punct(',')) {
                                self.pos += 1;
                                instances.insert(self.iri()?);
                            }
                            self.punct(')')?;
                            let sel = InstanceSelection {
                                op: SelectionOp::NoneOf,
                                instances,
                            };
                            self.set_once(&mut nodes[v].selection, sel, "instance selection")?;
                        } else {
                            let Tok::Cmp(comparator) = self.next()? else {
                                self.pos -= 1;
                                return self.fail("expected a comparator");
                            };
                            let value = self.literal()?;
                            let filter = Filter { comparator, value };
                            self.set_once(&mut nodes[v].filter, filter, "filter")?;
                        }
                    }
                    self.punct(')')?;
                }
                Some(_) => return self.fail("expected a triple pattern, VALUES or FILTER"),
                None => return self.fail("unterminated WHERE block"),
            }
        }
        if self.pos != self.toks.len() {
            return self.fail("trailing input after WHERE block");
        }
        let mut built = Vec::with_capacity(nodes.len());
        for (id, n) in nodes.into_iter().enumerate() {
            let Some(kind) = n.kind else {
                let name = vars
                    .iter()
                    .find(|(_, &i)| i == id)
                    .map(|(v, _)| v.clone())
                    .unwrap_or_default();
                return self.fail(format!("variable {name} has no type atom"));
            };
            built.push(QueryNode {
                id,
                kind,
                selection: n.selection,
                filter: n.filter,
            });
        }
        let q = PathQuery::from_parts(built, edges, dataset)?;
        q.validate(self.onto)?;
        Ok(q)
    }
}

/// Parses text in the grammar produced by [`emit_sparql`]. Variables are
/// numbered by their position in the SELECT list; an edge points from the
/// earlier variable to the later one.
pub fn parse_query_text(text: &str, onto: &Ontology) -> Result<PathQuery> {
    let toks = tokenize(text)?;
    let end = text
        .lines()
        .enumerate()
        .last()
        .map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    TextParser {
        onto,
        toks,
        pos: 0,
        end,
    }
    .parse()
}
