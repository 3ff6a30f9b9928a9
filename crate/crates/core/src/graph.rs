use std::collections::{HashMap, HashSet};

use crate::term::{Iri, Term, Triple};

/// An immutable set of triples for one dataset, indexed by subject, predicate and object.
#[derive(Debug, Clone)]
pub struct Graph {
    id: String,
    triples: Vec<Triple>,
    by_subject: HashMap<Term, Vec<u32>>,
    by_predicate: HashMap<Iri, Vec<u32>>,
    by_object: HashMap<Term, Vec<u32>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.triples == other.triples
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph, dropping duplicate triples while keeping first-seen order.
    pub fn new(id: impl Into<String>, triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut seen = HashSet::new();
        let mut graph = Graph {
            id: id.into(),
            triples: Vec::new(),
            by_subject: HashMap::new(),
            by_predicate: HashMap::new(),
            by_object: HashMap::new(),
        };
        for triple in triples {
            if !seen.insert(triple.clone()) {
                continue;
            }
            let idx = graph.triples.len() as u32;
            graph.by_subject.entry(triple.subject.clone()).or_default().push(idx);
            graph
                .by_predicate
                .entry(triple.predicate.clone())
                .or_default()
                .push(idx);
            graph.by_object.entry(triple.object.clone()).or_default().push(idx);
            graph.triples.push(triple);
        }
        graph
    }

    pub fn empty(id: impl Into<String>) -> Self {
        Graph::new(id, std::iter::empty())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.lookup(Some(&triple.subject), Some(&triple.predicate), Some(&triple.object))
            .next()
            .is_some()
    }

    /// Number of entries held by each index, in (subject, predicate, object) order.
    pub fn index_cardinalities(&self) -> (usize, usize, usize) {
        (
            self.by_subject.values().map(Vec::len).sum(),
            self.by_predicate.values().map(Vec::len).sum(),
            self.by_object.values().map(Vec::len).sum(),
        )
    }

    /// Triples matching every bound position. Candidates come from the
    /// smallest posting list among the bound positions.
    pub fn lookup<'a>(
        &'a self,
        subject: Option<&'a Term>,
        predicate: Option<&'a Iri>,
        object: Option<&'a Term>,
    ) -> Box<dyn Iterator<Item = &'a Triple> + 'a> {
        const EMPTY: &[u32] = &[];
        let mut best: Option<&[u32]> = None;
        let mut consider = |list: Option<&'a Vec<u32>>| {
            let list = list.map(Vec::as_slice).unwrap_or(EMPTY);
            if best.is_none_or(|b| list.len() < b.len()) {
                best = Some(list);
            }
        };
        if let Some(s) = subject {
            consider(self.by_subject.get(s));
        }
        if let Some(p) = predicate {
            consider(self.by_predicate.get(p));
        }
        if let Some(o) = object {
            consider(self.by_object.get(o));
        }
        let matches = move |t: &&Triple| {
            subject.is_none_or(|s| &t.subject == s)
                && predicate.is_none_or(|p| &t.predicate == p)
                && object.is_none_or(|o| &t.object == o)
        };
        match best {
            None => Box::new(self.triples.iter()),
            Some(list) => Box::new(list.iter().map(move |&i| &self.triples[i as usize]).filter(matches)),
        }
    }
}
