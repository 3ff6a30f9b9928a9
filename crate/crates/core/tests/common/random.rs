//! Seeded generators for schemas, data and valid queries.

use std::collections::BTreeSet;

use kdq_core::query::{Comparator, SelectionOp};
use kdq_core::reasoner::{instances_of_extended, relations};
use kdq_core::schema::build_schema_index;
use kdq_core::suggest::suggest_targets;
use kdq_core::{
    Dataset, DatasetRegistry, DatasetSelector, Datatype, Direction, Engine, Graph, Iri, Literal, NodeKind, Ontology,
    PathQuery, Term, Triple,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const OWL: &str = "http://www.w3.org/2002/07/owl#";

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}

fn t(s: impl Into<Term>, p: &str, o: impl Into<Term>) -> Triple {
    Triple::new(s.into(), iri(p), o.into()).unwrap()
}

pub fn class_iri(i: usize) -> Iri {
    iri(&format!("http://r.org/s#C{i}"))
}

/// Random subclass edges over `n` classes; `cyclic` allows back edges.
pub fn random_hierarchy(rng: &mut TestRng, n: usize, cyclic: bool) -> Vec<(Iri, Iri)> {
    let mut edges = BTreeSet::new();
    for child in 1..n {
        let parents = rng.gen_range(0..=2);
        for _ in 0..parents {
            let parent = rng.gen_range(0..child);
            edges.insert((class_iri(child), class_iri(parent)));
        }
    }
    if cyclic {
        for _ in 0..rng.gen_range(1..=3) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            edges.insert((class_iri(a), class_iri(b)));
        }
    }
    edges.into_iter().collect()
}

pub struct World {
    pub onto: Ontology,
    pub classes: Vec<Iri>,
    pub subclass_edges: Vec<(Iri, Iri)>,
    pub datasets: Vec<Dataset>,
}

impl World {
    pub fn graphs(&self) -> Vec<&Graph> {
        self.datasets.iter().map(|d| &d.graph).collect()
    }

    pub fn engine(&self) -> Engine {
        Engine::new(
            self.onto.clone(),
            DatasetRegistry::new(self.datasets.clone()).unwrap(),
            64,
        )
    }

    pub fn triple_count(&self) -> usize {
        self.datasets.iter().map(|d| d.graph.len()).sum()
    }
}

const DECIMALS: [&str; 6] = ["-1.5", "0.5", "1", "1.0", "1.5", "2.25"];
const INTEGERS: [&str; 4] = ["0", "1", "2", "3"];
const STRINGS: [&str; 4] = ["ACGT", "a", "b", "GGTN"];

fn random_literal(rng: &mut TestRng, dt: Datatype) -> Literal {
    match dt {
        Datatype::Decimal => Literal::typed(*DECIMALS.choose(rng).unwrap(), Datatype::Decimal).unwrap(),
        Datatype::Integer => Literal::typed(*INTEGERS.choose(rng).unwrap(), Datatype::Integer).unwrap(),
        Datatype::Boolean => Literal::boolean(rng.gen_bool(0.5)),
        Datatype::String => Literal::string(*STRINGS.choose(rng).unwrap()),
    }
}

/// A schema with at most `max_classes` classes and up to `max_triples` data
/// triples spread over two datasets.
pub fn random_world(rng: &mut TestRng, max_classes: usize, max_triples: usize) -> World {
    let n = rng.gen_range(2..=max_classes);
    let classes: Vec<Iri> = (0..n).map(class_iri).collect();
    let subclass_edges = random_hierarchy(rng, n, false);
    let mut schema = Vec::new();
    for c in &classes {
        schema.push(t(c.clone(), &format!("{RDF}type"), iri(&format!("{OWL}Class"))));
        schema.push(t(
            c.clone(),
            &format!("{RDFS}label"),
            Literal::string(format!("class {}", c.local_name())),
        ));
    }
    for (c, p) in &subclass_edges {
        schema.push(t(c.clone(), &format!("{RDFS}subClassOf"), p.clone()));
    }
    let object_props: Vec<Iri> = (0..rng.gen_range(1..=4))
        .map(|i| iri(&format!("http://r.org/s#op{i}")))
        .collect();
    for p in &object_props {
        schema.push(t(
            p.clone(),
            &format!("{RDF}type"),
            iri(&format!("{OWL}ObjectProperty")),
        ));
        if rng.gen_bool(0.8) {
            schema.push(t(
                p.clone(),
                &format!("{RDFS}domain"),
                classes.choose(rng).unwrap().clone(),
            ));
        }
        if rng.gen_bool(0.8) {
            schema.push(t(
                p.clone(),
                &format!("{RDFS}range"),
                classes.choose(rng).unwrap().clone(),
            ));
        }
        if rng.gen_bool(0.4) {
            let b: Term = Term::Blank(format!("r_{}", p.local_name()).into());
            let owner = classes.choose(rng).unwrap().clone();
            schema.push(t(owner, &format!("{RDFS}subClassOf"), b.clone()));
            schema.push(t(b.clone(), &format!("{RDF}type"), iri(&format!("{OWL}Restriction"))));
            schema.push(t(b.clone(), &format!("{OWL}onProperty"), p.clone()));
            schema.push(t(
                b,
                &format!("{OWL}someValuesFrom"),
                classes.choose(rng).unwrap().clone(),
            ));
        }
    }
    let data_props: Vec<(Iri, Datatype)> = (0..rng.gen_range(1..=2))
        .map(|i| {
            let dt = *[Datatype::Decimal, Datatype::Integer, Datatype::String]
                .choose(rng)
                .unwrap();
            (iri(&format!("http://r.org/s#dp{i}")), dt)
        })
        .collect();
    for (p, dt) in &data_props {
        schema.push(t(
            p.clone(),
            &format!("{RDF}type"),
            iri(&format!("{OWL}DatatypeProperty")),
        ));
        schema.push(t(
            p.clone(),
            &format!("{RDFS}domain"),
            classes.choose(rng).unwrap().clone(),
        ));
        schema.push(t(p.clone(), &format!("{RDFS}range"), dt.iri()));
    }
    let onto = Ontology::new(build_schema_index(&Graph::new("schema", schema)));

    let instances: Vec<Iri> = (0..rng.gen_range(3..=20))
        .map(|i| iri(&format!("http://r.org/d/i{i}")))
        .collect();
    let mut data: Vec<Triple> = Vec::new();
    for inst in &instances {
        for _ in 0..rng.gen_range(0..=2) {
            data.push(t(
                inst.clone(),
                &format!("{RDF}type"),
                classes.choose(rng).unwrap().clone(),
            ));
        }
    }
    let budget = rng.gen_range(data.len().min(max_triples)..=max_triples);
    while data.len() < budget {
        let s = instances.choose(rng).unwrap().clone();
        if rng.gen_bool(0.75) {
            let p = object_props.choose(rng).unwrap();
            data.push(t(s, p.as_str(), instances.choose(rng).unwrap().clone()));
        } else {
            let (p, dt) = data_props.choose(rng).unwrap();
            // Occasionally store a value under a neighbouring datatype.
            let stored = if rng.gen_bool(0.2) { Datatype::Integer } else { *dt };
            data.push(t(s, p.as_str(), random_literal(rng, stored)));
        }
    }
    data.truncate(max_triples);
    let mut parts = (Vec::new(), Vec::new());
    for triple in data {
        if rng.gen_bool(0.5) {
            parts.0.push(triple);
        } else {
            parts.1.push(triple);
        }
    }
    let datasets = vec![
        Dataset {
            id: "left".into(),
            label: "left".into(),
            graph: Graph::new("left", parts.0),
        },
        Dataset {
            id: "right".into(),
            label: "right".into(),
            graph: Graph::new("right", parts.1),
        },
    ];
    World {
        onto,
        classes,
        subclass_edges,
        datasets,
    }
}

/// Tries to extend `q` by one random applicable step.
pub fn random_step(rng: &mut TestRng, onto: &Ontology, q: &PathQuery) -> Option<PathQuery> {
    let class_nodes: Vec<(usize, Iri)> = q
        .nodes()
        .iter()
        .filter_map(|n| n.kind.class().map(|c| (n.id, c.clone())))
        .collect();
    let (from, class) = class_nodes.choose(rng)?.clone();
    let dir = if rng.gen_bool(0.7) {
        Direction::Forward
    } else {
        Direction::Inverse
    };
    let props = relations(&onto.schema, &onto.closure, &class, dir).ok()?;
    let prop = props.choose(rng)?;
    let targets = suggest_targets(onto, &class, &prop.iri, dir).ok()?;
    let target = targets.choose(rng)?;
    q.add_step(onto, from, &prop.iri, dir, target.kind.clone()).ok()
}

pub fn random_selection(rng: &mut TestRng, onto: &Ontology, graphs: &[&Graph], q: &PathQuery) -> Option<PathQuery> {
    let node = q.nodes().choose(rng)?;
    let class = node.kind.class()?;
    let ext = instances_of_extended(&onto.closure, class, graphs).ok()?;
    let pool: Vec<Iri> = ext.all().filter_map(|t| t.as_iri().cloned()).collect();
    if pool.is_empty() {
        return None;
    }
    let k = rng.gen_range(1..=pool.len().min(3));
    let chosen: BTreeSet<Iri> = pool.choose_multiple(rng, k).cloned().collect();
    let op = if rng.gen_bool(0.6) {
        SelectionOp::AnyOf
    } else {
        SelectionOp::NoneOf
    };
    q.set_instance_selection(onto, graphs, node.id, op, chosen).ok()
}

pub fn random_filter(rng: &mut TestRng, q: &PathQuery) -> Option<PathQuery> {
    let nodes: Vec<(usize, Datatype)> = q
        .nodes()
        .iter()
        .filter_map(|n| n.kind.datatype().map(|d| (n.id, d)))
        .collect();
    let (id, dt) = *nodes.choose(rng)?;
    let (cmp, value) = if dt.is_numeric() {
        let vdt = if rng.gen_bool(0.5) {
            Datatype::Integer
        } else {
            Datatype::Decimal
        };
        (*Comparator::ALL.choose(rng).unwrap(), random_literal(rng, vdt))
    } else {
        let cmp = if rng.gen_bool(0.5) {
            Comparator::Eq
        } else {
            Comparator::Ne
        };
        (cmp, random_literal(rng, dt))
    };
    q.add_literal_filter(id, cmp, value).ok()
}

/// A valid query of at most `max_nodes` nodes, possibly with selections and filters.
pub fn random_query(rng: &mut TestRng, world: &World, max_nodes: usize) -> PathQuery {
    let onto = &world.onto;
    let graphs = world.graphs();
    let root = world.classes.choose(rng).unwrap().clone();
    let mut q = PathQuery::new(onto, NodeKind::Class(root)).unwrap();
    let target = rng.gen_range(1..=max_nodes);
    for _ in 0..target * 4 {
        if q.nodes().len() >= target {
            break;
        }
        if let Some(next) = random_step(rng, onto, &q) {
            q = next;
        }
    }
    if rng.gen_bool(0.3) {
        if let Some(next) = random_selection(rng, onto, &graphs, &q) {
            q = next;
        }
    }
    if rng.gen_bool(0.6) {
        if let Some(next) = random_filter(rng, &q) {
            q = next;
        }
    }
    let selector = match rng.gen_range(0..4) {
        0 => DatasetSelector::One("left".into()),
        1 => DatasetSelector::One("right".into()),
        _ => DatasetSelector::All,
    };
    q.with_dataset(selector)
}
