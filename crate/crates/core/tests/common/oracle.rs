//! Reference implementations written without the library's planning,
//! closure or search machinery.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use kdq_core::query::{Comparator, SelectionOp};
use kdq_core::{Datatype, Direction, Graph, Iri, Literal, NodeKind, PathQuery, Term};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// Reflexive ancestor sets by breadth-first search from every class.
pub fn bfs_ancestors(classes: &[Iri], edges: &[(Iri, Iri)]) -> BTreeMap<Iri, BTreeSet<Iri>> {
    let mut all: BTreeSet<Iri> = classes.iter().cloned().collect();
    for (c, p) in edges {
        all.insert(c.clone());
        all.insert(p.clone());
    }
    let mut out = BTreeMap::new();
    for start in &all {
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(c) = queue.pop_front() {
            for (child, parent) in edges {
                if *child == c && seen.insert(parent.clone()) {
                    queue.push_back(parent.clone());
                }
            }
        }
        out.insert(start.clone(), seen);
    }
    out
}

/// Groups of two or more classes that reach each other.
pub fn bfs_cycle_groups(ancestors: &BTreeMap<Iri, BTreeSet<Iri>>) -> Vec<Vec<Iri>> {
    let mut groups = BTreeSet::new();
    for (c, anc) in ancestors {
        let group: Vec<Iri> = anc
            .iter()
            .filter(|a| ancestors.get(*a).is_some_and(|back| back.contains(c)))
            .cloned()
            .collect();
        if group.len() > 1 {
            groups.insert(group);
        }
    }
    groups.into_iter().collect()
}

fn admits(node: Datatype, value: Datatype) -> bool {
    node == value || (node == Datatype::Decimal && value == Datatype::Integer)
}

fn number(lit: &Literal) -> Option<f64> {
    match lit.datatype() {
        Datatype::Decimal | Datatype::Integer => lit.lexical().parse().ok(),
        _ => None,
    }
}

fn filter_holds(cmp: Comparator, value: &Literal, bound: &Literal) -> bool {
    match (number(value), number(bound)) {
        (Some(a), Some(b)) => match cmp {
            Comparator::Lt => a < b,
            Comparator::Le => a <= b,
            Comparator::Eq => a == b,
            Comparator::Ge => a >= b,
            Comparator::Gt => a > b,
            Comparator::Ne => a != b,
        },
        _ => {
            let same = value.datatype() == bound.datatype() && value.lexical() == bound.lexical();
            match cmp {
                Comparator::Eq => same,
                Comparator::Ne => !same,
                _ => false,
            }
        }
    }
}

/// Every binding of the query's nodes (in node order) satisfying all
/// constraints, found by trying each term of the graphs at each node.
pub fn brute_force(q: &PathQuery, graphs: &[&Graph], ancestors: &BTreeMap<Iri, BTreeSet<Iri>>) -> BTreeSet<Vec<Term>> {
    let triples: BTreeSet<(Term, Iri, Term)> = graphs
        .iter()
        .flat_map(|g| g.triples().iter())
        .map(|t| (t.subject.clone(), t.predicate.clone(), t.object.clone()))
        .collect();
    let universe: BTreeSet<Term> = triples.iter().flat_map(|(s, _, o)| [s.clone(), o.clone()]).collect();
    let rdf_type = Iri::new(RDF_TYPE).unwrap();
    let mut types: BTreeMap<&Term, Vec<&Iri>> = BTreeMap::new();
    for (s, p, o) in &triples {
        if *p == rdf_type {
            if let Some(t) = o.as_iri() {
                types.entry(s).or_default().push(t);
            }
        }
    }
    let is_instance = |v: &Term, class: &Iri| {
        types.get(v).is_some_and(|ts| {
            ts.iter()
                .any(|t| *t == class || ancestors.get(*t).is_some_and(|a| a.contains(class)))
        })
    };
    let nodes = q.nodes();
    let node_ok = |i: usize, v: &Term| -> bool {
        let n = &nodes[i];
        let kind_ok = match &n.kind {
            NodeKind::Class(c) => !v.is_literal() && is_instance(v, c),
            NodeKind::Datatype(d) => v.as_literal().is_some_and(|l| admits(*d, l.datatype())),
        };
        let sel_ok = n.selection.as_ref().is_none_or(|s| {
            let member = v.as_iri().is_some_and(|i| s.instances.contains(i));
            match s.op {
                SelectionOp::AnyOf => member,
                SelectionOp::NoneOf => !member,
            }
        });
        let filter_ok = n
            .filter
            .as_ref()
            .is_none_or(|f| v.as_literal().is_some_and(|l| filter_holds(f.comparator, l, &f.value)));
        kind_ok && sel_ok && filter_ok
    };
    let index_of = |id: usize| nodes.iter().position(|n| n.id == id).unwrap();
    let edges: Vec<(usize, Iri, usize, Direction)> = q
        .edges()
        .iter()
        .map(|e| (index_of(e.from), e.property.clone(), index_of(e.to), e.direction))
        .collect();

    let mut out = BTreeSet::new();
    let mut binding: Vec<Term> = Vec::new();
    fn search(
        i: usize,
        binding: &mut Vec<Term>,
        out: &mut BTreeSet<Vec<Term>>,
        universe: &BTreeSet<Term>,
        width: usize,
        ok: &dyn Fn(usize, &[Term], &Term) -> bool,
    ) {
        if i == width {
            out.insert(binding.clone());
            return;
        }
        for v in universe {
            if ok(i, binding, v) {
                binding.push(v.clone());
                search(i + 1, binding, out, universe, width, ok);
                binding.pop();
            }
        }
    }
    let ok = |i: usize, bound: &[Term], v: &Term| -> bool {
        node_ok(i, v)
            && edges.iter().filter(|(_, _, to, _)| *to == i).all(|(from, p, _, dir)| {
                let parent = &bound[*from];
                let (s, o) = match dir {
                    Direction::Forward => (parent, v),
                    Direction::Inverse => (v, parent),
                };
                triples.contains(&(s.clone(), p.clone(), o.clone()))
            })
    };
    search(0, &mut binding, &mut out, &universe, nodes.len(), &ok);
    out
}

/// A schema path as (property, direction, reached class) triples.
pub type OraclePath = Vec<(Iri, Direction, Iri)>;

/// Simple paths over (subject, property, object) schema edges, walked either
/// way, leaving from any class comparable with the current one, stopping at
/// the first class comparable with `to`.
pub fn dfs_paths(
    edges: &[(Iri, Iri, Iri)],
    ancestors: &BTreeMap<Iri, BTreeSet<Iri>>,
    from: &Iri,
    to: &Iri,
    max: usize,
) -> BTreeSet<OraclePath> {
    let comparable = |a: &Iri, b: &Iri| {
        ancestors.get(a).is_some_and(|s| s.contains(b)) || ancestors.get(b).is_some_and(|s| s.contains(a))
    };
    let mut out = BTreeSet::new();
    if from == to {
        out.insert(Vec::new());
        return out;
    }
    let mut stack: Vec<(Iri, Vec<Iri>, OraclePath)> = vec![(from.clone(), vec![from.clone()], Vec::new())];
    while let Some((at, visited, path)) = stack.pop() {
        if path.len() == max {
            continue;
        }
        for (s, p, o) in edges {
            for (near, far, dir) in [(s, o, Direction::Forward), (o, s, Direction::Inverse)] {
                if !comparable(&at, near) || visited.contains(far) {
                    continue;
                }
                let mut next = path.clone();
                next.push((p.clone(), dir, far.clone()));
                if comparable(far, to) {
                    out.insert(next);
                } else {
                    let mut v = visited.clone();
                    v.push(far.clone());
                    stack.push((far.clone(), v, next));
                }
            }
        }
    }
    out
}
