mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::oracle::{bfs_ancestors, bfs_cycle_groups, brute_force};
use common::random::{self, rng};
use kdq_core::compiler::{compile, emit_sparql, parse_query_text, PlanStep};
use kdq_core::query::{QueryEdge, QueryHistory, QueryNode};
use kdq_core::reasoner::SubclassClosure;
use kdq_core::{load_turtle, to_turtle, Datatype, Engine, Graph, Iri, Literal, PathQuery, Term, Triple};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn iri(i: usize) -> Iri {
    Iri::new(format!("http://p.org/x#n{i}")).unwrap()
}

fn arb_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        "[ -~éü\\n\\t\"\\\\]{0,12}".prop_map(Literal::string),
        (-1000i64..1000).prop_map(|n| Literal::typed(n.to_string(), Datatype::Integer).unwrap()),
        (-1000i64..1000, 0u32..100).prop_map(|(a, b)| Literal::typed(format!("{a}.{b}"), Datatype::Decimal).unwrap()),
        any::<bool>().prop_map(Literal::boolean),
    ]
}

fn arb_triples() -> impl Strategy<Value = Vec<Triple>> {
    let object = prop_oneof![
        (0usize..8).prop_map(|i| Term::Iri(iri(i))),
        arb_literal().prop_map(Term::Literal)
    ];
    prop::collection::vec((0usize..8, 0usize..4, object), 0..40).prop_map(|v| {
        v.into_iter()
            .map(|(s, p, o)| Triple::new(Term::Iri(iri(s)), iri(100 + p), o).unwrap())
            .collect()
    })
}

/// Rebuilds `q` with each node's children visited in a shuffled order and
/// ids reassigned in that visiting order. Returns the query and old→new ids.
fn reorder(q: &PathQuery, seed: u64) -> (PathQuery, BTreeMap<usize, usize>) {
    let mut r = rng(seed);
    let mut map = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut stack = vec![(q.root().id, None::<&QueryEdge>)];
    while let Some((old, via)) = stack.pop() {
        let new = map.len();
        map.insert(old, new);
        let n = q.node(old).unwrap();
        nodes.push(QueryNode { id: new, ..n.clone() });
        if let Some(e) = via {
            edges.push(QueryEdge {
                from: map[&e.from],
                to: new,
                ..e.clone()
            });
        }
        let mut children: Vec<&QueryEdge> = q.child_edges(old).collect();
        children.shuffle(&mut r);
        for e in children {
            stack.push((e.to, Some(e)));
        }
    }
    (PathQuery::from_parts(nodes, edges, q.dataset().clone()).unwrap(), map)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lookup_agrees_with_linear_scan(triples in arb_triples(), s in 0usize..8, p in 0usize..4, o in 0usize..8, mask in 0u8..8) {
        let g = Graph::new("g", triples);
        let (s, p, o) = (Term::Iri(iri(s)), iri(100 + p), Term::Iri(iri(o)));
        let s = (mask & 1 != 0).then_some(&s);
        let p = (mask & 2 != 0).then_some(&p);
        let o = (mask & 4 != 0).then_some(&o);
        let mut got: Vec<&Triple> = g.lookup(s, p, o).collect();
        got.sort();
        let mut expected: Vec<&Triple> = g
            .triples()
            .iter()
            .filter(|t| s.is_none_or(|s| t.subject == *s) && p.is_none_or(|p| t.predicate == *p) && o.is_none_or(|o| t.object == *o))
            .collect();
        expected.sort();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn turtle_round_trip_preserves_statements(triples in arb_triples()) {
        let g = Graph::new("g", triples);
        let text = to_turtle(&g);
        let back = load_turtle(&text, "g").unwrap();
        let a: BTreeSet<&Triple> = g.triples().iter().collect();
        let b: BTreeSet<&Triple> = back.triples().iter().collect();
        prop_assert_eq!(a, b);
        prop_assert_eq!(to_turtle(&back), text);
    }

    #[test]
    fn closure_matches_bfs(seed in any::<u64>(), n in 1usize..30, cyclic in any::<bool>()) {
        let mut r = rng(seed);
        let classes: Vec<Iri> = (0..n).map(random::class_iri).collect();
        let edges = random::random_hierarchy(&mut r, n, cyclic);
        let closure = SubclassClosure::from_edges(&classes, &edges);
        let oracle = bfs_ancestors(&classes, &edges);
        for (c, anc) in &oracle {
            prop_assert_eq!(closure.ancestors(c).unwrap(), anc);
            prop_assert!(anc.contains(c));
        }
        let groups = bfs_cycle_groups(&oracle);
        prop_assert_eq!(closure.cycles(), groups.as_slice());
    }

    #[test]
    fn evaluator_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let world = random::random_world(&mut r, 15, 80);
        let q = random::random_query(&mut r, &world, 4);
        let e = world.engine();
        let graphs = e.graphs(q.dataset()).unwrap();
        let table = e.execute(&q, q.dataset()).unwrap();
        let rows: BTreeSet<Vec<Term>> = table.rows.iter().cloned().collect();
        prop_assert_eq!(rows, brute_force(&q, &graphs, &bfs_ancestors(&world.classes, &world.subclass_edges)));
    }

    #[test]
    fn query_text_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let world = random::random_world(&mut r, 10, 40);
        let q = random::random_query(&mut r, &world, 7);
        let text = emit_sparql(&q, &world.onto).text;
        let back = parse_query_text(&text, &world.onto).unwrap();
        prop_assert_eq!(back.canonicalize(), q.canonicalize());
        let canon = PathQuery::from_canonical(&q.canonicalize()).unwrap();
        prop_assert_eq!(canon.canonicalize(), q.canonicalize());
        prop_assert_eq!(canon.nodes().len(), q.nodes().len());
    }

    #[test]
    fn plan_covers_every_node_in_dependency_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let world = random::random_world(&mut r, 10, 40);
        let q = random::random_query(&mut r, &world, 7);
        let plan = compile(&q, &world.onto).unwrap();
        let binds = plan.steps.iter().filter(|s| matches!(s, PlanStep::LiteralBind { .. })).count();
        prop_assert_eq!(plan.scans() + binds, q.nodes().len());
        prop_assert_eq!(plan.joins(), q.edges().len());
        let mut bound = BTreeSet::new();
        for step in &plan.steps {
            match step {
                PlanStep::ExtendedTypeScan { node, .. } => { bound.insert(*node); }
                PlanStep::LiteralBind { node, from_node, .. } => {
                    prop_assert!(bound.contains(from_node));
                    bound.insert(*node);
                }
                PlanStep::EdgeJoin(e) => prop_assert!(bound.contains(&e.from) && bound.contains(&e.to)),
                other => prop_assert!(bound.contains(&other.node())),
            }
        }
        let cols: Vec<usize> = plan.output_columns.iter().map(|c| c.node_id).collect();
        let ids: Vec<usize> = q.nodes().iter().map(|n| n.id).collect();
        prop_assert_eq!(cols, ids);
    }

    #[test]
    fn branch_order_does_not_matter(seed in any::<u64>(), shuffle in any::<u64>()) {
        let mut r = rng(seed);
        let world = random::random_world(&mut r, 10, 60);
        let q = random::random_query(&mut r, &world, 6);
        let (p, map) = reorder(&q, shuffle);
        prop_assert_eq!(p.canonicalize(), q.canonicalize());
        prop_assert_eq!(Engine::cache_key(&p, p.dataset()), Engine::cache_key(&q, q.dataset()));
        let e = world.engine();
        let a = e.execute(&q, q.dataset()).unwrap();
        let b = e.execute(&p, p.dataset()).unwrap();
        let permuted: BTreeSet<Vec<Term>> = a
            .rows
            .iter()
            .map(|row| {
                let mut out = vec![row[0].clone(); row.len()];
                for (old, new) in &map {
                    out[*new] = row[a.column_of(*old).unwrap()].clone();
                }
                out
            })
            .collect();
        prop_assert_eq!(permuted, b.rows.iter().cloned().collect::<BTreeSet<_>>());
    }

    #[test]
    fn undo_restores_previous_states(seed in any::<u64>(), ops in 1usize..30) {
        let mut r = rng(seed);
        let world = random::random_world(&mut r, 10, 40);
        let graphs = world.graphs();
        let root = world.classes.choose(&mut r).unwrap().clone();
        let mut h = QueryHistory::new(PathQuery::new(&world.onto, kdq_core::NodeKind::Class(root)).unwrap());
        let mut states = vec![h.current().clone()];
        for _ in 0..ops {
            let cur = h.current().clone();
            let next = match r.gen_range(0..3) {
                0 => random::random_step(&mut r, &world.onto, &cur),
                1 => random::random_selection(&mut r, &world.onto, &graphs, &cur),
                _ => random::random_filter(&mut r, &cur),
            };
            if let Some(q) = next {
                h.push(q.clone());
                states.push(q);
            }
        }
        while states.len() > 1 {
            states.pop();
            h.undo().unwrap();
            prop_assert_eq!(h.current(), states.last().unwrap());
        }
        prop_assert!(h.undo().is_err());
        prop_assert_eq!(h.current(), &states[0]);
    }
}
