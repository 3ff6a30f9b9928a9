//! The user's path query: a tree of typed nodes joined by property edges,
//! with instance selections, literal filters and an undo history.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::reasoner::{instances_of_extended, is_applicable, target_compatible, Ontology};
use crate::term::{Datatype, Iri, Literal, Term};

pub const CANONICAL_VERSION: &str = "kdq-query/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Inverse => "inverse",
        })
    }
}

/// What a query node binds: instances of a class, or literal values of a datatype.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Class(Iri),
    Datatype(Datatype),
}

impl NodeKind {
    pub fn class(&self) -> Option<&Iri> {
        match self {
            NodeKind::Class(c) => Some(c),
            NodeKind::Datatype(_) => None,
        }
    }

    pub fn datatype(&self) -> Option<Datatype> {
        match self {
            NodeKind::Datatype(d) => Some(*d),
            NodeKind::Class(_) => None,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Class(c) => write!(f, "<{c}>"),
            NodeKind::Datatype(d) => write!(f, "datatype {d}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionOp {
    AnyOf,
    NoneOf,
}

impl SelectionOp {
    pub fn name(self) -> &'static str {
        match self {
            SelectionOp::AnyOf => "any-of",
            SelectionOp::NoneOf => "none-of",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InstanceSelection {
    pub op: SelectionOp,
    pub instances: BTreeSet<Iri>,
}

impl InstanceSelection {
    pub fn admits(&self, value: &Term) -> bool {
        let member = value.as_iri().is_some_and(|i| self.instances.contains(i));
        match self.op {
            SelectionOp::AnyOf => member,
            SelectionOp::NoneOf => !member,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparator {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Ne,
}

impl Comparator {
    pub const ALL: [Comparator; 6] = [
        Comparator::Lt,
        Comparator::Le,
        Comparator::Eq,
        Comparator::Ge,
        Comparator::Gt,
        Comparator::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Ne => "!=",
        }
    }

    /// Accepts ASCII symbols, their Unicode forms, and the two-letter names.
    pub fn parse(text: &str) -> Option<Comparator> {
        Some(match text {
            "<" | "lt" => Comparator::Lt,
            "<=" | "≤" | "le" => Comparator::Le,
            "=" | "==" | "eq" => Comparator::Eq,
            ">=" | "≥" | "ge" => Comparator::Ge,
            ">" | "gt" => Comparator::Gt,
            "!=" | "≠" | "ne" => Comparator::Ne,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Comparator::Lt => "lt",
            Comparator::Le => "le",
            Comparator::Eq => "eq",
            Comparator::Ge => "ge",
            Comparator::Gt => "gt",
            Comparator::Ne => "ne",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, Comparator::Eq | Comparator::Ne)
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Filter {
    pub comparator: Comparator,
    pub value: Literal,
}

impl Filter {
    /// Numeric values compare by value; other values only by (in)equality of
    /// datatype and lexical form.
    pub fn matches(&self, candidate: &Literal) -> bool {
        use std::cmp::Ordering;
        let ordering = match (candidate.numeric_value(), self.value.numeric_value()) {
            (Some(a), Some(b)) => Some(a.cmp(&b)),
            _ => None,
        };
        match (self.comparator, ordering) {
            (Comparator::Lt, Some(o)) => o == Ordering::Less,
            (Comparator::Le, Some(o)) => o != Ordering::Greater,
            (Comparator::Eq, Some(o)) => o == Ordering::Equal,
            (Comparator::Ge, Some(o)) => o != Ordering::Less,
            (Comparator::Gt, Some(o)) => o == Ordering::Greater,
            (Comparator::Ne, Some(o)) => o != Ordering::Equal,
            (Comparator::Eq, None) => candidate == &self.value,
            (Comparator::Ne, None) => candidate != &self.value,
            (_, None) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryNode {
    pub id: usize,
    pub kind: NodeKind,
    pub selection: Option<InstanceSelection>,
    pub filter: Option<Filter>,
}

impl QueryNode {
    fn new(id: usize, kind: NodeKind) -> Self {
        QueryNode {
            id,
            kind,
            selection: None,
            filter: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QueryEdge {
    pub from: usize,
    pub property: Iri,
    pub to: usize,
    pub direction: Direction,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DatasetSelector {
    #[default]
    All,
    One(String),
}

impl DatasetSelector {
    pub fn parse(text: &str) -> DatasetSelector {
        if text.is_empty() || text == "all" {
            DatasetSelector::All
        } else {
            DatasetSelector::One(text.to_string())
        }
    }
}

impl fmt::Display for DatasetSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSelector::All => f.write_str("all"),
            DatasetSelector::One(id) => f.write_str(id),
        }
    }
}

/// A query tree rooted at its first node. Node ids reflect creation order
/// and are never renumbered; a child's id is always greater than its parent's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathQuery {
    nodes: Vec<QueryNode>,
    edges: Vec<QueryEdge>,
    dataset: DatasetSelector,
}

impl PathQuery {
    /// A single-node query. Queries start at a class.
    pub fn new(onto: &Ontology, root: NodeKind) -> Result<PathQuery> {
        match &root {
            NodeKind::Class(c) => onto.require_class(c)?,
            NodeKind::Datatype(d) => {
                return Err(Error::InvalidQuery(format!(
                    "a query must start at a class, not datatype {d}"
                )))
            }
        }
        Ok(PathQuery {
            nodes: vec![QueryNode::new(0, root)],
            edges: Vec::new(),
            dataset: DatasetSelector::All,
        })
    }

    /// Assembles a query from parts without schema checks; see [`PathQuery::validate`].
    pub fn from_parts(nodes: Vec<QueryNode>, edges: Vec<QueryEdge>, dataset: DatasetSelector) -> Result<PathQuery> {
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        let q = PathQuery { nodes, edges, dataset };
        q.check_tree()?;
        Ok(q)
    }

    pub fn nodes(&self) -> &[QueryNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[QueryEdge] {
        &self.edges
    }

    pub fn dataset(&self) -> &DatasetSelector {
        &self.dataset
    }

    pub fn with_dataset(&self, dataset: DatasetSelector) -> PathQuery {
        PathQuery {
            dataset,
            ..self.clone()
        }
    }

    pub fn root(&self) -> &QueryNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> Result<&QueryNode> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .map(|i| &self.nodes[i])
            .map_err(|_| Error::UnknownNode(id))
    }

    fn node_mut(&mut self, id: usize) -> Result<&mut QueryNode> {
        match self.nodes.binary_search_by_key(&id, |n| n.id) {
            Ok(i) => Ok(&mut self.nodes[i]),
            Err(_) => Err(Error::UnknownNode(id)),
        }
    }

    /// The edge entering `id`, `None` for the root.
    pub fn incoming_edge(&self, id: usize) -> Option<&QueryEdge> {
        self.edges.iter().find(|e| e.to == id)
    }

    pub fn child_edges(&self, id: usize) -> impl Iterator<Item = &QueryEdge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.child_edges(id).next().is_none()
    }

    /// Edges in depth-first pre-order from the root, children in insertion order.
    pub fn edges_preorder(&self) -> Vec<&QueryEdge> {
        let mut out = Vec::with_capacity(self.edges.len());
        let mut stack: Vec<&QueryEdge> = self.child_edges(self.root().id).collect();
        stack.reverse();
        while let Some(edge) = stack.pop() {
            out.push(edge);
            let mut children: Vec<&QueryEdge> = self.child_edges(edge.to).collect();
            children.reverse();
            stack.extend(children);
        }
        out
    }

    fn next_id(&self) -> usize {
        self.nodes.last().map_or(0, |n| n.id + 1)
    }

    pub fn add_step(
        &self,
        onto: &Ontology,
        from: usize,
        property: &Iri,
        direction: Direction,
        target: NodeKind,
    ) -> Result<PathQuery> {
        let mut next = self.clone();
        let edge = QueryEdge {
            from,
            property: property.clone(),
            to: next.next_id(),
            direction,
        };
        next.check_edge(onto, &edge, &target)?;
        next.nodes.push(QueryNode::new(edge.to, target));
        next.edges.push(edge);
        Ok(next)
    }

    fn check_edge(&self, onto: &Ontology, edge: &QueryEdge, target: &NodeKind) -> Result<()> {
        let from = self.node(edge.from)?;
        let prop = onto.require_property(&edge.property)?;
        let Some(class) = from.kind.class() else {
            return Err(Error::InapplicableProperty {
                class: from.kind.to_string(),
                property: edge.property.to_string(),
                direction: edge.direction,
            });
        };
        if !is_applicable(&onto.schema, &onto.closure, prop, class, edge.direction) {
            return Err(Error::InapplicableProperty {
                class: class.to_string(),
                property: edge.property.to_string(),
                direction: edge.direction,
            });
        }
        if let NodeKind::Class(c) = target {
            onto.require_class(c)?;
        }
        if !target_compatible(&onto.schema, &onto.closure, prop, class, edge.direction, target) {
            return Err(Error::IncompatibleTarget {
                property: edge.property.to_string(),
                target: target.to_string(),
                direction: edge.direction,
            });
        }
        Ok(())
    }

    /// Restricts a class node to (or away from) explicit instances. Every
    /// instance must be typed by the node class or a subclass in `graphs`.
    pub fn set_instance_selection(
        &self,
        onto: &Ontology,
        graphs: &[&Graph],
        node: usize,
        op: SelectionOp,
        instances: BTreeSet<Iri>,
    ) -> Result<PathQuery> {
        if instances.is_empty() {
            return Err(Error::EmptySelection);
        }
        let target = self.node(node)?;
        let offending: Vec<String> = match target.kind.class() {
            Some(class) => {
                let extended = instances_of_extended(&onto.closure, class, graphs)?;
                instances
                    .iter()
                    .filter(|i| !extended.contains(&Term::Iri((*i).clone())))
                    .map(|i| i.to_string())
                    .collect()
            }
            None => instances.iter().map(|i| i.to_string()).collect(),
        };
        if !offending.is_empty() {
            return Err(Error::TypeMismatch {
                node,
                instances: offending,
            });
        }
        let mut next = self.clone();
        next.node_mut(node)?.selection = Some(InstanceSelection { op, instances });
        Ok(next)
    }

    pub fn add_literal_filter(&self, node: usize, comparator: Comparator, value: Literal) -> Result<PathQuery> {
        let target = self.node(node)?;
        let Some(datatype) = target.kind.datatype() else {
            return Err(Error::DatatypeMismatch(format!(
                "node {node} binds class instances, not literal values"
            )));
        };
        check_filter(datatype, comparator, &value)?;
        let mut next = self.clone();
        next.node_mut(node)?.filter = Some(Filter { comparator, value });
        Ok(next)
    }

    /// Removes a leaf node and the edge entering it.
    pub fn remove_node(&self, node: usize) -> Result<PathQuery> {
        self.node(node)?;
        if node == self.root().id {
            return Err(Error::RootRemoval);
        }
        if !self.is_leaf(node) {
            return Err(Error::NonLeafRemoval(node));
        }
        let mut next = self.clone();
        next.nodes.retain(|n| n.id != node);
        next.edges.retain(|e| e.to != node);
        Ok(next)
    }

    fn check_tree(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidQuery(msg));
        if self.nodes.is_empty() {
            return invalid("query has no nodes".into());
        }
        if self.nodes.windows(2).any(|w| w[0].id == w[1].id) {
            return invalid("duplicate node ids".into());
        }
        if self.edges.len() + 1 != self.nodes.len() {
            return invalid("a query tree has exactly one edge per non-root node".into());
        }
        let root = self.root().id;
        let mut seen_targets = BTreeSet::new();
        for e in &self.edges {
            self.node(e.from)?;
            self.node(e.to)?;
            if e.to == root || e.from >= e.to || !seen_targets.insert(e.to) {
                return invalid(format!("edge {} -> {} breaks the tree shape", e.from, e.to));
            }
        }
        // from < to on every edge and one parent per node: connected and acyclic.
        Ok(())
    }

    /// Checks tree shape, edge applicability, target compatibility and filters.
    pub fn validate(&self, onto: &Ontology) -> Result<()> {
        self.check_tree()?;
        match &self.root().kind {
            NodeKind::Class(c) => onto.require_class(c)?,
            NodeKind::Datatype(_) => return Err(Error::InvalidQuery("a query must start at a class".into())),
        }
        for e in &self.edges {
            self.check_edge(onto, e, &self.node(e.to)?.kind)?;
        }
        for n in &self.nodes {
            if let Some(f) = &n.filter {
                let Some(dt) = n.kind.datatype() else {
                    return Err(Error::DatatypeMismatch(format!("filter on class node {}", n.id)));
                };
                check_filter(dt, f.comparator, &f.value)?;
            }
            if let Some(sel) = &n.selection {
                if sel.instances.is_empty() {
                    return Err(Error::EmptySelection);
                }
                if n.kind.class().is_none() {
                    return Err(Error::TypeMismatch {
                        node: n.id,
                        instances: sel.instances.iter().map(|i| i.to_string()).collect(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Order-normalised text form: sibling subtrees are sorted by property
    /// IRI, then target, then their own serialisation. Used as cache key,
    /// persistence record and API payload.
    pub fn canonicalize(&self) -> String {
        let mut out = format!("{CANONICAL_VERSION} dataset=");
        match &self.dataset {
            DatasetSelector::All => out.push_str("all"),
            DatasetSelector::One(id) => push_quoted(&mut out, id),
        }
        out.push(' ');
        out.push_str(&self.canonical_subtree(self.root().id));
        out
    }

    fn canonical_subtree(&self, id: usize) -> String {
        let node = self.node(id).expect("edges reference existing nodes");
        let mut out = String::from("(");
        match &node.kind {
            NodeKind::Class(c) => {
                let _ = write!(out, "class <{c}>");
            }
            NodeKind::Datatype(d) => {
                let _ = write!(out, "datatype {d}");
            }
        }
        if let Some(sel) = &node.selection {
            let _ = write!(out, " ({}", sel.op.name());
            for i in &sel.instances {
                let _ = write!(out, " <{i}>");
            }
            out.push(')');
        }
        if let Some(f) = &node.filter {
            let _ = write!(out, " (filter {} {})", f.comparator.name(), f.value);
        }
        let mut children: Vec<(&Iri, Direction, &NodeKind, String)> = self
            .child_edges(id)
            .map(|e| {
                let child = self.node(e.to).expect("edges reference existing nodes");
                (&e.property, e.direction, &child.kind, self.canonical_subtree(e.to))
            })
            .collect();
        children.sort();
        for (property, direction, _, sub) in children {
            let tag = match direction {
                Direction::Forward => "fwd",
                Direction::Inverse => "inv",
            };
            let _ = write!(out, " ({tag} <{property}> {sub})");
        }
        out.push(')');
        out
    }

    /// Parses the output of [`PathQuery::canonicalize`]. Node ids are assigned
    /// in pre-order of the canonical text.
    pub fn from_canonical(text: &str) -> Result<PathQuery> {
        CanonicalParser::new(text).parse()
    }
}

fn check_filter(node_datatype: Datatype, comparator: Comparator, value: &Literal) -> Result<()> {
    let value_dt = value.datatype();
    let ok = if comparator.is_ordering() {
        node_datatype.is_numeric() && value_dt.is_numeric()
    } else {
        node_datatype.admits(value_dt) || (node_datatype.is_numeric() && value_dt.is_numeric())
    };
    if ok {
        Ok(())
    } else {
        Err(Error::DatatypeMismatch(format!(
            "cannot compare {node_datatype} values with {comparator} {value}"
        )))
    }
}

fn push_quoted(out: &mut String, s: &str) {
    out.push('"');
    let _ = crate::term::write_escaped(out, s);
    out.push('"');
}

struct CanonicalParser<'a> {
    src: &'a str,
    pos: usize,
    nodes: Vec<QueryNode>,
    edges: Vec<QueryEdge>,
}

impl<'a> CanonicalParser<'a> {
    fn new(src: &'a str) -> Self {
        CanonicalParser {
            src,
            pos: 0,
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Grammar {
            line: 1,
            column: self.src[..self.pos].chars().count() + 1,
            message: message.into(),
        })
    }

    fn ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected `{token}`"))
        }
    }

    fn word(&mut self) -> Result<&'a str> {
        self.ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected a word");
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn iri(&mut self) -> Result<Iri> {
        self.expect("<")?;
        let rest = &self.src[self.pos..];
        let Some(end) = rest.find('>') else {
            return self.err("unterminated IRI");
        };
        self.pos += end + 1;
        Iri::new(&rest[..end])
    }

    fn quoted(&mut self) -> Result<String> {
        self.expect("\"")?;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, c)) => out.push(c),
                    None => break,
                },
                c => out.push(c),
            }
        }
        self.err("unterminated string")
    }

    fn literal(&mut self) -> Result<Literal> {
        let lexical = self.quoted()?;
        self.expect("^^")?;
        let dt = self.iri()?;
        let Some(datatype) = Datatype::from_iri(dt.as_str()) else {
            return self.err(format!("unsupported datatype <{dt}>"));
        };
        Literal::typed(lexical, datatype)
    }

    fn parse(mut self) -> Result<PathQuery> {
        self.expect(CANONICAL_VERSION)?;
        self.expect("dataset=")?;
        let dataset = if self.eat("all") {
            DatasetSelector::All
        } else {
            DatasetSelector::One(self.quoted()?)
        };
        self.node(None)?;
        self.ws();
        if self.pos != self.src.len() {
            return self.err("trailing input");
        }
        PathQuery::from_parts(self.nodes, self.edges, dataset)
    }

    fn node(&mut self, parent: Option<(usize, Iri, Direction)>) -> Result<()> {
        self.expect("(")?;
        let kind = match self.word()? {
            "class" => NodeKind::Class(self.iri()?),
            "datatype" => {
                let name = self.word()?;
                match Datatype::from_name(name) {
                    Some(d) => NodeKind::Datatype(d),
                    None => return self.err(format!("unknown datatype `{name}`")),
                }
            }
            other => return self.err(format!("expected `class` or `datatype`, found `{other}`")),
        };
        let id = self.nodes.len();
        self.nodes.push(QueryNode::new(id, kind));
        if let Some((from, property, direction)) = parent {
            self.edges.push(QueryEdge {
                from,
                property,
                to: id,
                direction,
            });
        }
        loop {
            if self.eat(")") {
                return Ok(());
            }
            self.expect("(")?;
            match self.word()? {
                tag @ ("any-of" | "none-of") => {
                    let op = if tag == "any-of" {
                        SelectionOp::AnyOf
                    } else {
                        SelectionOp::NoneOf
                    };
                    let mut instances = BTreeSet::new();
                    while !self.eat(")") {
                        instances.insert(self.iri()?);
                    }
                    self.nodes[id].selection = Some(InstanceSelection { op, instances });
                }
                "filter" => {
                    let name = self.word()?;
                    let Some(comparator) = Comparator::parse(name) else {
                        return self.err(format!("unknown comparator `{name}`"));
                    };
                    let value = self.literal()?;
                    self.expect(")")?;
                    self.nodes[id].filter = Some(Filter { comparator, value });
                }
                tag @ ("fwd" | "inv") => {
                    let direction = if tag == "fwd" {
                        Direction::Forward
                    } else {
                        Direction::Inverse
                    };
                    let property = self.iri()?;
                    self.node(Some((id, property, direction)))?;
                    self.expect(")")?;
                }
                other => return self.err(format!("unexpected `{other}`")),
            }
        }
    }
}

/// Stack of query snapshots; the top is the current query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryHistory {
    states: Vec<PathQuery>,
}

impl QueryHistory {
    pub fn new(initial: PathQuery) -> Self {
        QueryHistory { states: vec![initial] }
    }

    pub fn current(&self) -> &PathQuery {
        self.states.last().expect("history is never empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn push(&mut self, next: PathQuery) -> &PathQuery {
        self.states.push(next);
        self.current()
    }

    /// Applies `op` to the current query and pushes the result. On error the
    /// history is untouched.
    pub fn apply(&mut self, op: impl FnOnce(&PathQuery) -> Result<PathQuery>) -> Result<&PathQuery> {
        let next = op(self.current())?;
        Ok(self.push(next))
    }

    pub fn undo(&mut self) -> Result<&PathQuery> {
        if self.states.len() < 2 {
            return Err(Error::NothingToUndo);
        }
        self.states.pop();
        Ok(self.current())
    }
}

/// Maps node id → parent id for every non-root node.
pub fn parent_map(q: &PathQuery) -> BTreeMap<usize, usize> {
    q.edges().iter().map(|e| (e.to, e.from)).collect()
}
