//! Interactive formulation helpers: concept autocomplete, annotations,
//! relation and target suggestions, and schema path discovery.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::query::{Direction, NodeKind};
use crate::reasoner::{properties_of, relations, target_compatible, Ontology};
use crate::schema::PropertyInfo;
use crate::term::{Datatype, Iri};

pub const DEFAULT_SUGGESTION_LIMIT: usize = 20;
pub const DEFAULT_PATH_MAX_LENGTH: usize = 6;
pub const PATH_MAX_LENGTH_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum MatchKind {
    Label,
    AltLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Annotation {
    pub description: Option<String>,
    pub alt_labels: Vec<String>,
    pub properties: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Suggestion {
    pub class_iri: Iri,
    pub label: String,
    pub match_kind: MatchKind,
    /// The label or alternate label that matched.
    pub matched: String,
    pub annotation: Annotation,
}

/// Trims, collapses internal whitespace and lowercases.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Classes whose label or an alternate label starts with `prefix`, ranked
/// label matches first, then by shorter matched text, then lexicographically.
/// Each class appears at most once, under its best match.
pub fn suggest_concepts(onto: &Ontology, prefix: &str, limit: usize) -> Vec<Suggestion> {
    let needle = normalize(prefix);
    if needle.is_empty() || limit == 0 {
        return Vec::new();
    }
    let mut hits: Vec<(MatchKind, &str, &Iri)> = Vec::new();
    for class in onto.schema.classes() {
        let best = if normalize(&class.label).starts_with(&needle) {
            Some((MatchKind::Label, class.label.as_str()))
        } else {
            class
                .alt_labels
                .iter()
                .filter(|alt| normalize(alt).starts_with(&needle))
                .min_by(|a, b| rank_text(a, b))
                .map(|alt| (MatchKind::AltLabel, alt.as_str()))
        };
        if let Some((kind, text)) = best {
            hits.push((kind, text, &class.iri));
        }
    }
    hits.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| rank_text(a.1, b.1))
            .then_with(|| a.2.cmp(b.2))
    });
    hits.truncate(limit);
    hits.into_iter()
        .map(|(match_kind, matched, iri)| {
            let info = onto.schema.class(iri).expect("hit comes from the schema");
            Suggestion {
                class_iri: iri.clone(),
                label: info.label.clone(),
                match_kind,
                matched: matched.to_string(),
                annotation: annotate(onto, iri).expect("class is known"),
            }
        })
        .collect()
}

fn rank_text(a: &str, b: &str) -> Ordering {
    a.chars().count().cmp(&b.chars().count()).then_with(|| a.cmp(b))
}

pub fn annotate(onto: &Ontology, class: &Iri) -> Result<Annotation> {
    let info = onto
        .schema
        .class(class)
        .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
    let properties = properties_of(&onto.schema, &onto.closure, class)?
        .into_iter()
        .map(|p| p.label.clone())
        .collect();
    Ok(Annotation {
        description: info.description.clone(),
        alt_labels: info.alt_labels.clone(),
        properties,
    })
}

pub fn suggest_relations<'o>(onto: &'o Ontology, class: &Iri, direction: Direction) -> Result<Vec<&'o PropertyInfo>> {
    relations(&onto.schema, &onto.closure, class, direction)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetSuggestion {
    #[serde(skip)]
    pub kind: NodeKind,
    /// Class IRI or datatype IRI.
    pub iri: Iri,
    pub label: String,
    pub is_datatype: bool,
}

/// Node kinds that may follow `property` from `class`, sorted by label.
pub fn suggest_targets(
    onto: &Ontology,
    class: &Iri,
    property: &Iri,
    direction: Direction,
) -> Result<Vec<TargetSuggestion>> {
    onto.require_class(class)?;
    let prop = onto.require_property(property)?;
    let mut out: Vec<TargetSuggestion> = if prop.is_data() {
        [
            Datatype::String,
            Datatype::Decimal,
            Datatype::Integer,
            Datatype::Boolean,
        ]
        .into_iter()
        .map(NodeKind::Datatype)
        .filter(|k| target_compatible(&onto.schema, &onto.closure, prop, class, direction, k))
        .map(|kind| {
            let dt = kind.datatype().expect("datatype kind");
            TargetSuggestion {
                iri: dt.iri(),
                label: dt.name().to_string(),
                is_datatype: true,
                kind,
            }
        })
        .collect()
    } else {
        onto.schema
            .classes()
            .filter(|c| {
                target_compatible(
                    &onto.schema,
                    &onto.closure,
                    prop,
                    class,
                    direction,
                    &NodeKind::Class(c.iri.clone()),
                )
            })
            .map(|c| TargetSuggestion {
                kind: NodeKind::Class(c.iri.clone()),
                iri: c.iri.clone(),
                label: c.label.clone(),
                is_datatype: false,
            })
            .collect()
    };
    out.sort_by(|a, b| a.label.cmp(&b.label).then_with(|| a.iri.cmp(&b.iri)));
    Ok(out)
}

/// A schema-level edge: `subject` is a domain or restricted class of
/// `property`, `object` a range or restriction filler.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SchemaEdge {
    pub subject: Iri,
    pub property: Iri,
    pub object: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathStep {
    /// Class the step leaves from (as reached by the previous step).
    pub from: Iri,
    pub property: Iri,
    pub to: Iri,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaPath {
    pub steps: Vec<PathStep>,
}

impl SchemaPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Object-property edges from domain × range pairs and from restrictions.
pub fn schema_edges(onto: &Ontology) -> BTreeSet<SchemaEdge> {
    let mut edges = BTreeSet::new();
    for p in onto.schema.properties().filter(|p| !p.is_data()) {
        for d in &p.domains {
            for r in &p.ranges {
                edges.insert(SchemaEdge {
                    subject: d.clone(),
                    property: p.iri.clone(),
                    object: r.clone(),
                });
            }
        }
    }
    for c in onto.schema.classes() {
        for (p, f) in &c.restriction_props {
            if onto.schema.property(p).is_some_and(|info| !info.is_data()) && onto.closure.contains(f) {
                edges.insert(SchemaEdge {
                    subject: c.iri.clone(),
                    property: p.clone(),
                    object: f.clone(),
                });
            }
        }
    }
    edges
}

/// Every simple path from `from` to `to` of at most `max_length` steps.
/// Edges may be walked in either direction; a step may leave from any class
/// that is a subclass or superclass of the current one. A path stops at the
/// first class compatible with `to`. Setting `cancel` aborts the search.
pub fn discover_paths(
    onto: &Ontology,
    from: &Iri,
    to: &Iri,
    max_length: usize,
    cancel: Option<&AtomicBool>,
) -> Result<Vec<SchemaPath>> {
    onto.require_class(from)?;
    onto.require_class(to)?;
    if max_length == 0 || max_length > PATH_MAX_LENGTH_CAP {
        return Err(Error::InvalidQuery(format!(
            "path length must be between 1 and {PATH_MAX_LENGTH_CAP}"
        )));
    }
    if from == to {
        return Ok(vec![SchemaPath { steps: Vec::new() }]);
    }
    let edges: Vec<SchemaEdge> = schema_edges(onto).into_iter().collect();
    let mut search = PathSearch {
        onto,
        edges: &edges,
        to,
        max_length,
        cancel,
        visited: vec![from.clone()],
        steps: Vec::new(),
        found: Vec::new(),
    };
    search.extend(from)?;
    let mut found = search.found;
    let labels =
        |p: &SchemaPath| -> Vec<String> { p.steps.iter().map(|s| onto.schema.label_of(&s.property)).collect() };
    found.sort_by_cached_key(|p| {
        let iris: Vec<(String, Direction, String)> = p
            .steps
            .iter()
            .map(|s| (s.property.to_string(), s.direction, s.to.to_string()))
            .collect();
        (p.len(), labels(p), iris)
    });
    // Distinct edges can yield the same step sequence.
    found.dedup();
    Ok(found)
}

struct PathSearch<'a> {
    onto: &'a Ontology,
    edges: &'a [SchemaEdge],
    to: &'a Iri,
    max_length: usize,
    cancel: Option<&'a AtomicBool>,
    visited: Vec<Iri>,
    steps: Vec<PathStep>,
    found: Vec<SchemaPath>,
}

impl PathSearch<'_> {
    fn extend(&mut self, current: &Iri) -> Result<()> {
        if self.cancel.is_some_and(|c| c.load(AtomicOrdering::Relaxed)) {
            return Err(Error::Cancelled);
        }
        if self.steps.len() == self.max_length {
            return Ok(());
        }
        let closure = &self.onto.closure;
        for edge in self.edges {
            for direction in [Direction::Forward, Direction::Inverse] {
                let (near, far) = match direction {
                    Direction::Forward => (&edge.subject, &edge.object),
                    Direction::Inverse => (&edge.object, &edge.subject),
                };
                if !closure.compatible(current, near) || self.visited.contains(far) {
                    continue;
                }
                self.steps.push(PathStep {
                    from: current.clone(),
                    property: edge.property.clone(),
                    to: far.clone(),
                    direction,
                });
                if closure.compatible(far, self.to) {
                    self.found.push(SchemaPath {
                        steps: self.steps.clone(),
                    });
                } else {
                    self.visited.push(far.clone());
                    let result = self.extend(far);
                    self.visited.pop();
                    result?;
                }
                self.steps.pop();
            }
        }
        Ok(())
    }
}
