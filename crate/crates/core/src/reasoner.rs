//! Bounded inference: subclass closure, property applicability through
//! domain inheritance and existential restrictions, and subclass-extended
//! instance retrieval.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use tracing::warn;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::query::{Direction, NodeKind};
use crate::schema::{PropertyInfo, SchemaIndex};
use crate::term::{Iri, Term};
use crate::vocab::rdf;

/// Reflexive-transitive closure of the subclass relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubclassClosure {
    ancestors: HashMap<Iri, BTreeSet<Iri>>,
    descendants: HashMap<Iri, BTreeSet<Iri>>,
    cycles: Vec<Vec<Iri>>,
}

impl SubclassClosure {
    /// Builds the closure over `classes` and the direct (child, parent) edges.
    /// Edge endpoints missing from `classes` are added.
    pub fn from_edges<'a>(
        classes: impl IntoIterator<Item = &'a Iri>,
        edges: impl IntoIterator<Item = &'a (Iri, Iri)>,
    ) -> Self {
        let mut graph: DiGraph<Iri, ()> = DiGraph::new();
        let mut nodes: BTreeMap<Iri, NodeIndex> = BTreeMap::new();
        let mut node = |graph: &mut DiGraph<Iri, ()>, iri: &Iri| {
            *nodes.entry(iri.clone()).or_insert_with(|| graph.add_node(iri.clone()))
        };
        for c in classes {
            node(&mut graph, c);
        }
        for (child, parent) in edges {
            let c = node(&mut graph, child);
            let p = node(&mut graph, parent);
            graph.update_edge(c, p, ());
        }

        // Tarjan yields components with every component's successors
        // (superclasses) before the component itself.
        let components = tarjan_scc(&graph);
        let mut component_of = vec![0usize; graph.node_count()];
        for (i, comp) in components.iter().enumerate() {
            for &n in comp {
                component_of[n.index()] = i;
            }
        }
        let mut component_ancestors: Vec<BTreeSet<Iri>> = Vec::with_capacity(components.len());
        let mut cycles = Vec::new();
        for (i, comp) in components.iter().enumerate() {
            let mut set: BTreeSet<Iri> = comp.iter().map(|&n| graph[n].clone()).collect();
            for &n in comp {
                for succ in graph.neighbors(n) {
                    let j = component_of[succ.index()];
                    if j != i {
                        set.extend(component_ancestors[j].iter().cloned());
                    }
                }
            }
            if comp.len() > 1 {
                let mut group: Vec<Iri> = comp.iter().map(|&n| graph[n].clone()).collect();
                group.sort();
                warn!(classes = ?group, "subclass cycle treated as an equivalence group");
                cycles.push(group);
            }
            component_ancestors.push(set);
        }
        cycles.sort();

        let mut ancestors = HashMap::with_capacity(graph.node_count());
        let mut descendants: HashMap<Iri, BTreeSet<Iri>> = HashMap::with_capacity(graph.node_count());
        for idx in graph.node_indices() {
            let iri = graph[idx].clone();
            let set = component_ancestors[component_of[idx.index()]].clone();
            for a in &set {
                descendants.entry(a.clone()).or_default().insert(iri.clone());
            }
            ancestors.insert(iri, set);
        }
        SubclassClosure {
            ancestors,
            descendants,
            cycles,
        }
    }

    pub fn contains(&self, class: &Iri) -> bool {
        self.ancestors.contains_key(class)
    }

    /// `reachable(class)`: the class itself and every superclass.
    pub fn ancestors(&self, class: &Iri) -> Result<&BTreeSet<Iri>> {
        self.ancestors
            .get(class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    /// The class itself and every subclass.
    pub fn descendants(&self, class: &Iri) -> Result<&BTreeSet<Iri>> {
        self.descendants
            .get(class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    /// Groups of classes that are mutually subclassed, each sorted.
    pub fn cycles(&self) -> &[Vec<Iri>] {
        &self.cycles
    }

    pub fn classes(&self) -> impl Iterator<Item = &Iri> {
        self.ancestors.keys()
    }

    /// All (class, ancestor) pairs, excluding the reflexive ones.
    pub fn derived_edges(&self) -> BTreeSet<(Iri, Iri)> {
        self.ancestors
            .iter()
            .flat_map(|(c, set)| set.iter().filter(move |a| *a != c).map(move |a| (c.clone(), a.clone())))
            .collect()
    }

    /// One class is a (reflexive) subclass of the other.
    pub fn compatible(&self, a: &Iri, b: &Iri) -> bool {
        self.is_ancestor(a, b) || self.is_ancestor(b, a)
    }

    /// `parent ∈ reachable(child)`; false for unknown classes.
    pub fn is_ancestor(&self, child: &Iri, parent: &Iri) -> bool {
        self.ancestors.get(child).is_some_and(|set| set.contains(parent))
    }
}

pub fn subclass_closure(schema: &SchemaIndex) -> SubclassClosure {
    SubclassClosure::from_edges(schema.classes().map(|c| &c.iri), schema.subclass_edges())
}

pub fn is_subclass_of(closure: &SubclassClosure, child: &Iri, parent: &Iri) -> Result<bool> {
    let ancestors = closure.ancestors(child)?;
    closure.ancestors(parent)?;
    Ok(ancestors.contains(parent))
}

fn sort_by_label(props: &mut Vec<&PropertyInfo>) {
    props.sort_by(|a, b| a.label.cmp(&b.label).then_with(|| a.iri.cmp(&b.iri)));
    props.dedup_by(|a, b| a.iri == b.iri);
}

/// Whether `property` may leave an instance of `class` (outgoing) or reach
/// one (incoming).
pub fn is_applicable(
    schema: &SchemaIndex,
    closure: &SubclassClosure,
    property: &PropertyInfo,
    class: &Iri,
    direction: Direction,
) -> bool {
    let Some(ancestors) = closure.ancestors.get(class) else {
        return false;
    };
    match direction {
        Direction::Forward => {
            property.domains.iter().any(|d| ancestors.contains(d))
                || ancestors.iter().any(|a| {
                    schema
                        .class(a)
                        .is_some_and(|c| c.restriction_props.iter().any(|(p, _)| p == &property.iri))
                })
        }
        Direction::Inverse => {
            !property.is_data()
                && (property.ranges.iter().any(|r| ancestors.contains(r))
                    || schema.classes().any(|c| {
                        c.restriction_props
                            .iter()
                            .any(|(p, f)| p == &property.iri && ancestors.contains(f))
                    }))
        }
    }
}

/// Outgoing properties of `class`: domain-attached through any ancestor plus
/// restriction-attached on the class or an ancestor. Sorted by label.
pub fn properties_of<'s>(
    schema: &'s SchemaIndex,
    closure: &SubclassClosure,
    class: &Iri,
) -> Result<Vec<&'s PropertyInfo>> {
    relations(schema, closure, class, Direction::Forward)
}

/// Properties applicable to `class` in the given direction, sorted by label.
pub fn relations<'s>(
    schema: &'s SchemaIndex,
    closure: &SubclassClosure,
    class: &Iri,
    direction: Direction,
) -> Result<Vec<&'s PropertyInfo>> {
    closure.ancestors(class)?;
    let mut out: Vec<&PropertyInfo> = schema
        .properties()
        .filter(|p| is_applicable(schema, closure, p, class, direction))
        .collect();
    sort_by_label(&mut out);
    Ok(out)
}

/// Whether a node of kind `target` may sit at the far end of `property`
/// starting from an instance of `from`.
pub fn target_compatible(
    schema: &SchemaIndex,
    closure: &SubclassClosure,
    property: &PropertyInfo,
    from: &Iri,
    direction: Direction,
    target: &NodeKind,
) -> bool {
    let Ok(from_ancestors) = closure.ancestors(from) else {
        return false;
    };
    match (direction, target) {
        (Direction::Forward, NodeKind::Datatype(dt)) => {
            property.is_data() && property.datatypes().iter().any(|r| r == dt || dt.admits(*r))
        }
        (Direction::Inverse, NodeKind::Datatype(_)) => false,
        (_, NodeKind::Class(_)) if property.is_data() => false,
        (Direction::Forward, NodeKind::Class(target)) => {
            let Ok(target_ancestors) = closure.ancestors(target) else {
                return false;
            };
            let fillers: Vec<&Iri> = from_ancestors
                .iter()
                .filter_map(|a| schema.class(a))
                .flat_map(|c| c.restriction_props.iter())
                .filter(|(p, _)| p == &property.iri)
                .map(|(_, f)| f)
                .collect();
            if property.ranges.is_empty() && fillers.is_empty() {
                return true;
            }
            property.ranges.iter().any(|r| target_ancestors.contains(r))
                || fillers.iter().any(|f| target_ancestors.contains(*f))
        }
        (Direction::Inverse, NodeKind::Class(target)) => {
            let Ok(target_ancestors) = closure.ancestors(target) else {
                return false;
            };
            let mut any_restriction = false;
            let via_restriction = schema.classes().any(|c| {
                c.restriction_props.iter().any(|(p, f)| {
                    if p != &property.iri {
                        return false;
                    }
                    any_restriction = true;
                    target_ancestors.contains(&c.iri) && from_ancestors.contains(f)
                })
            });
            if via_restriction || property.domains.iter().any(|d| target_ancestors.contains(d)) {
                return true;
            }
            property.domains.is_empty() && !any_restriction
        }
    }
}

/// Instances of a class, split into those asserted under the class itself
/// and those admitted only through a proper subclass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtendedInstances {
    pub queried_class: Option<Iri>,
    pub direct: BTreeSet<Term>,
    /// Instance → the proper subclass that typed it (smallest IRI when several do).
    pub via_subclass: BTreeMap<Term, Iri>,
}

impl ExtendedInstances {
    pub fn contains(&self, instance: &Term) -> bool {
        self.direct.contains(instance) || self.via_subclass.contains_key(instance)
    }

    pub fn len(&self) -> usize {
        self.direct.len() + self.via_subclass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = &Term> {
        self.direct.iter().chain(self.via_subclass.keys())
    }
}

pub fn instances_of_extended(closure: &SubclassClosure, class: &Iri, graphs: &[&Graph]) -> Result<ExtendedInstances> {
    let subclasses = closure.descendants(class)?;
    let rdf_type = Iri::from_static(rdf::TYPE);
    let mut out = ExtendedInstances {
        queried_class: Some(class.clone()),
        ..Default::default()
    };
    for graph in graphs {
        for sub in subclasses {
            let object = Term::Iri(sub.clone());
            for t in graph.lookup(None, Some(&rdf_type), Some(&object)) {
                if sub == class {
                    out.direct.insert(t.subject.clone());
                } else {
                    out.via_subclass
                        .entry(t.subject.clone())
                        .and_modify(|w| {
                            if sub < w {
                                *w = sub.clone()
                            }
                        })
                        .or_insert_with(|| sub.clone());
                }
            }
        }
    }
    let direct = &out.direct;
    out.via_subclass.retain(|k, _| !direct.contains(k));
    Ok(out)
}

/// Every type asserted for `instance` across `graphs`.
pub fn asserted_types(instance: &Term, graphs: &[&Graph]) -> BTreeSet<Iri> {
    let rdf_type = Iri::from_static(rdf::TYPE);
    graphs
        .iter()
        .flat_map(|g| g.lookup(Some(instance), Some(&rdf_type), None))
        .filter_map(|t| t.object.as_iri().cloned())
        .collect()
}

/// Schema digest and its subclass closure, the pair nearly every operation needs.
#[derive(Debug, Clone)]
pub struct Ontology {
    pub schema: SchemaIndex,
    pub closure: SubclassClosure,
}

impl Ontology {
    pub fn new(schema: SchemaIndex) -> Self {
        let closure = subclass_closure(&schema);
        Ontology { schema, closure }
    }

    pub fn class_label(&self, iri: &Iri) -> String {
        self.schema.label_of(iri)
    }

    pub fn require_class(&self, iri: &Iri) -> Result<()> {
        if self.schema.class(iri).is_some() {
            Ok(())
        } else {
            Err(Error::UnknownClass(iri.to_string()))
        }
    }

    pub fn require_property(&self, iri: &Iri) -> Result<&PropertyInfo> {
        self.schema
            .property(iri)
            .ok_or_else(|| Error::UnknownProperty(iri.to_string()))
    }
}
