//! Plan execution over loaded datasets, specific/general partitioning and
//! the result cache.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use lru::LruCache;
use serde::Serialize;
use tracing::debug;

use crate::compiler::{compile, EvaluationPlan, PlanStep};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::query::{DatasetSelector, Direction, NodeKind, PathQuery};
use crate::reasoner::{instances_of_extended, ExtendedInstances, Ontology};
use crate::term::{Datatype, Iri, Term};
use crate::vocab::rdfs;

pub const DEFAULT_CACHE_CAPACITY: usize = 256;

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub label: String,
    pub graph: Graph,
}

/// The loaded datasets plus a version stamp that changes on every load.
#[derive(Debug)]
pub struct DatasetRegistry {
    datasets: Vec<Dataset>,
    stamp: u64,
}

impl DatasetRegistry {
    pub fn new(datasets: Vec<Dataset>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for d in &datasets {
            if d.id == "all" || !seen.insert(d.id.as_str()) {
                return Err(Error::Config(format!("duplicate or reserved dataset id `{}`", d.id)));
            }
        }
        Ok(DatasetRegistry {
            datasets,
            stamp: NEXT_STAMP.fetch_add(1, Ordering::Relaxed),
        })
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    pub fn get(&self, id: &str) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.id == id)
    }

    pub fn select(&self, selector: &DatasetSelector) -> Result<Vec<&Graph>> {
        match selector {
            DatasetSelector::All => Ok(self.datasets.iter().map(|d| &d.graph).collect()),
            DatasetSelector::One(id) => self
                .get(id)
                .map(|d| vec![&d.graph])
                .ok_or_else(|| Error::UnknownDataset(id.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "type")]
pub enum ColumnKind {
    Class { class: Iri },
    Datatype { datatype: Datatype, property: Iri },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Column {
    pub node_id: usize,
    pub label: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Term>>,
    /// Ids of the datasets that contributed to each row.
    pub provenance: Vec<BTreeSet<String>>,
    /// Display labels (`rdfs:label` in the data) for IRIs in the rows.
    pub labels: BTreeMap<Term, String>,
}

impl ResultTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_of(&self, node_id: usize) -> Option<usize> {
        self.columns.iter().position(|c| c.node_id == node_id)
    }

    pub fn display(&self, term: &Term) -> String {
        self.labels
            .get(term)
            .cloned()
            .unwrap_or_else(|| term.text().to_string())
    }

    /// Tab-separated text: a header of column labels, then display values.
    pub fn to_tsv(&self) -> String {
        let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
        let mut out = self
            .columns
            .iter()
            .map(|c| clean(&c.label))
            .collect::<Vec<_>>()
            .join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|t| clean(&self.display(t))).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    fn subset(&self, keep: impl Fn(usize) -> bool) -> ResultTable {
        let idx: Vec<usize> = (0..self.rows.len()).filter(|&i| keep(i)).collect();
        let rows: Vec<Vec<Term>> = idx.iter().map(|&i| self.rows[i].clone()).collect();
        let used: BTreeSet<&Term> = rows.iter().flatten().collect();
        ResultTable {
            columns: self.columns.clone(),
            provenance: idx.iter().map(|&i| self.provenance[i].clone()).collect(),
            labels: self
                .labels
                .iter()
                .filter(|(t, _)| used.contains(t))
                .map(|(t, l)| (t.clone(), l.clone()))
                .collect(),
            rows,
        }
    }
}

fn row_key(row: &[Term]) -> Vec<String> {
    row.iter().map(|t| t.to_string()).collect()
}

/// Runs `plan` for `q` over the union of `graphs` with left-deep nested-loop
/// joins. Rows are de-duplicated and sorted by their term serialisations.
pub fn execute(
    plan: &EvaluationPlan,
    q: &PathQuery,
    onto: &Ontology,
    graphs: &[(&str, &Graph)],
) -> Result<ResultTable> {
    let plain: Vec<&Graph> = graphs.iter().map(|(_, g)| *g).collect();
    let position: HashMap<usize, usize> = q.nodes().iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let mut candidates: HashMap<usize, BTreeSet<Term>> = HashMap::new();
    let mut rows: Option<Vec<Vec<Option<Term>>>> = None;
    let width = q.nodes().len();

    for step in &plan.steps {
        match step {
            PlanStep::ExtendedTypeScan { node, class } => {
                let found: BTreeSet<Term> = instances_of_extended(&onto.closure, class, &plain)?
                    .all()
                    .cloned()
                    .collect();
                candidates.insert(*node, found);
            }
            PlanStep::LiteralBind {
                node,
                property,
                datatype,
                ..
            } => {
                let found: BTreeSet<Term> = plain
                    .iter()
                    .flat_map(|g| g.lookup(None, Some(property), None))
                    .filter(|t| t.object.as_literal().is_some_and(|l| datatype.admits(l.datatype())))
                    .map(|t| t.object.clone())
                    .collect();
                candidates.insert(*node, found);
            }
            PlanStep::InstanceRestrict { node, selection } => {
                if let Some(set) = candidates.get_mut(node) {
                    set.retain(|t| selection.admits(t));
                }
            }
            PlanStep::FilterApply { node, filter } => {
                if let Some(set) = candidates.get_mut(node) {
                    set.retain(|t| t.as_literal().is_some_and(|l| filter.matches(l)));
                }
            }
            PlanStep::EdgeJoin(edge) => {
                let current = rows.take().unwrap_or_default();
                let (pi, ci) = (position[&edge.from], position[&edge.to]);
                let allowed = candidates.get(&edge.to).cloned().unwrap_or_default();
                let mut next = Vec::new();
                for row in current {
                    let parent = row[pi].as_ref().expect("parent bound before child");
                    let neighbours: BTreeSet<&Term> = match edge.direction {
                        Direction::Forward => plain
                            .iter()
                            .flat_map(|g| g.lookup(Some(parent), Some(&edge.property), None))
                            .map(|t| &t.object)
                            .collect(),
                        Direction::Inverse => plain
                            .iter()
                            .flat_map(|g| g.lookup(None, Some(&edge.property), Some(parent)))
                            .map(|t| &t.subject)
                            .collect(),
                    };
                    for value in neighbours.into_iter().filter(|v| allowed.contains(*v)) {
                        let mut extended = row.clone();
                        extended[ci] = Some(value.clone());
                        next.push(extended);
                    }
                }
                rows = Some(next);
            }
        }
        // Seed one row per root value once the root's own steps have run.
        if rows.is_none() && is_last_root_step(plan, step, q.root().id) {
            let root_values = candidates.get(&q.root().id).cloned().unwrap_or_default();
            let ri = position[&q.root().id];
            rows = Some(
                root_values
                    .into_iter()
                    .map(|v| {
                        let mut r = vec![None; width];
                        r[ri] = Some(v);
                        r
                    })
                    .collect(),
            );
        }
    }

    let mut full: Vec<Vec<Term>> = rows
        .unwrap_or_default()
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|t| t.expect("every node is bound by a join"))
                .collect()
        })
        .collect();
    full.sort_by_cached_key(|r| row_key(r));
    full.dedup();

    let columns = q
        .nodes()
        .iter()
        .map(|n| Column {
            node_id: n.id,
            label: plan
                .output_columns
                .iter()
                .find(|c| c.node_id == n.id)
                .map(|c| c.label.clone())
                .unwrap_or_default(),
            kind: match &n.kind {
                NodeKind::Class(c) => ColumnKind::Class { class: c.clone() },
                NodeKind::Datatype(d) => ColumnKind::Datatype {
                    datatype: *d,
                    property: q
                        .incoming_edge(n.id)
                        .map(|e| e.property.clone())
                        .expect("datatype nodes have a parent"),
                },
            },
        })
        .collect();
    let provenance = full.iter().map(|r| row_provenance(r, q, &position, graphs)).collect();
    let labels = collect_labels(&full, &plain);
    debug!(rows = full.len(), steps = plan.steps.len(), "executed plan");
    Ok(ResultTable {
        columns,
        rows: full,
        provenance,
        labels,
    })
}

fn is_last_root_step(plan: &EvaluationPlan, step: &PlanStep, root: usize) -> bool {
    let last_root = plan
        .steps
        .iter()
        .take_while(|s| s.node() == root && !matches!(s, PlanStep::EdgeJoin(_)))
        .last();
    last_root.is_some_and(|s| std::ptr::eq(s, step))
}

fn row_provenance(
    row: &[Term],
    q: &PathQuery,
    position: &HashMap<usize, usize>,
    graphs: &[(&str, &Graph)],
) -> BTreeSet<String> {
    let rdf_type = Iri::new(crate::vocab::rdf::TYPE).expect("valid IRI");
    let mut out = BTreeSet::new();
    for (id, graph) in graphs {
        let contributes = q.edges().iter().any(|e| {
            let (p, c) = (&row[position[&e.from]], &row[position[&e.to]]);
            let (s, o) = match e.direction {
                Direction::Forward => (p, c),
                Direction::Inverse => (c, p),
            };
            graph.lookup(Some(s), Some(&e.property), Some(o)).next().is_some()
        }) || q.nodes().iter().any(|n| {
            n.kind.class().is_some()
                && graph
                    .lookup(Some(&row[position[&n.id]]), Some(&rdf_type), None)
                    .next()
                    .is_some()
        });
        if contributes {
            out.insert(id.to_string());
        }
    }
    out
}

fn collect_labels(rows: &[Vec<Term>], graphs: &[&Graph]) -> BTreeMap<Term, String> {
    let label = Iri::new(rdfs::LABEL).expect("valid IRI");
    let mut out = BTreeMap::new();
    for term in rows.iter().flatten() {
        if term.is_literal() || out.contains_key(term) {
            continue;
        }
        let best = graphs
            .iter()
            .flat_map(|g| g.lookup(Some(term), Some(&label), None))
            .filter_map(|t| t.object.as_literal().map(|l| l.lexical().to_string()))
            .min();
        if let Some(l) = best {
            out.insert(term.clone(), l);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartitionedResults {
    pub specific: ResultTable,
    pub general: ResultTable,
    /// For each general row: node id → the proper subclass that admitted its value.
    pub general_witnesses: Vec<BTreeMap<usize, Iri>>,
}

/// Splits rows into those whose class-node values are all asserted under the
/// queried class itself and those with at least one value admitted only
/// through a proper subclass.
pub fn partition_results(
    table: &ResultTable,
    q: &PathQuery,
    onto: &Ontology,
    graphs: &[&Graph],
) -> Result<PartitionedResults> {
    let mut per_column: Vec<Option<(usize, ExtendedInstances)>> = Vec::new();
    for col in &table.columns {
        per_column.push(match &q.node(col.node_id)?.kind {
            NodeKind::Class(c) => Some((col.node_id, instances_of_extended(&onto.closure, c, graphs)?)),
            NodeKind::Datatype(_) => None,
        });
    }
    let mut general_rows = BTreeSet::new();
    let mut witnesses = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let mut witness = BTreeMap::new();
        let mut general = false;
        for (value, info) in row.iter().zip(&per_column) {
            let Some((node, ext)) = info else { continue };
            if ext.direct.contains(value) {
                continue;
            }
            general = true;
            if let Some(sub) = ext.via_subclass.get(value) {
                witness.insert(*node, sub.clone());
            }
        }
        if general {
            general_rows.insert(i);
            witnesses.push(witness);
        }
    }
    Ok(PartitionedResults {
        specific: table.subset(|i| !general_rows.contains(&i)),
        general: table.subset(|i| general_rows.contains(&i)),
        general_witnesses: witnesses,
    })
}

/// LRU cache of result tables keyed by canonical query text. Entries carry
/// the dataset stamp they were computed against and are ignored once the
/// stamp moves on.
pub struct ResultCache {
    entries: Mutex<LruCache<String, (u64, Arc<ResultTable>)>>,
}

impl std::fmt::Debug for ResultCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResultCache").field("len", &self.len()).finish()
    }
}

impl ResultCache {
    pub fn new(capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity).unwrap_or(NonZeroUsize::MIN);
        ResultCache {
            entries: Mutex::new(LruCache::new(cap)),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.entries.lock().expect("cache lock").cap().get()
    }

    pub fn get(&self, key: &str, stamp: u64) -> Option<Arc<ResultTable>> {
        let mut entries = self.entries.lock().expect("cache lock");
        match entries.get(key) {
            Some((s, table)) if *s == stamp => Some(table.clone()),
            Some(_) => {
                entries.pop(key);
                None
            }
            None => None,
        }
    }

    /// Returns the cached table when fresh, otherwise runs `compute` (outside
    /// the lock) and stores its result. Errors are never stored.
    pub fn get_or_compute(
        &self,
        key: &str,
        stamp: u64,
        compute: impl FnOnce() -> Result<ResultTable>,
    ) -> Result<(Arc<ResultTable>, bool)> {
        if let Some(hit) = self.get(key, stamp) {
            return Ok((hit, true));
        }
        let table = Arc::new(compute()?);
        self.entries
            .lock()
            .expect("cache lock")
            .put(key.to_string(), (stamp, table.clone()));
        Ok((table, false))
    }
}

impl Default for ResultCache {
    fn default() -> Self {
        ResultCache::new(DEFAULT_CACHE_CAPACITY)
    }
}

/// Ontology, datasets and cache bundled for answering queries.
#[derive(Debug)]
pub struct Engine {
    pub onto: Ontology,
    registry: DatasetRegistry,
    cache: ResultCache,
}

impl Engine {
    pub fn new(onto: Ontology, registry: DatasetRegistry, cache_capacity: usize) -> Self {
        Engine {
            onto,
            registry,
            cache: ResultCache::new(cache_capacity),
        }
    }

    pub fn registry(&self) -> &DatasetRegistry {
        &self.registry
    }

    pub fn cache(&self) -> &ResultCache {
        &self.cache
    }

    /// Replaces the datasets; cached results for the old ones go stale.
    pub fn reload(&mut self, datasets: Vec<Dataset>) -> Result<()> {
        self.registry = DatasetRegistry::new(datasets)?;
        Ok(())
    }

    pub fn graphs(&self, selector: &DatasetSelector) -> Result<Vec<&Graph>> {
        self.registry.select(selector)
    }

    fn named_graphs(&self, selector: &DatasetSelector) -> Result<Vec<(&str, &Graph)>> {
        match selector {
            DatasetSelector::All => Ok(self
                .registry
                .datasets()
                .iter()
                .map(|d| (d.id.as_str(), &d.graph))
                .collect()),
            DatasetSelector::One(id) => self
                .registry
                .get(id)
                .map(|d| vec![(d.id.as_str(), &d.graph)])
                .ok_or_else(|| Error::UnknownDataset(id.clone())),
        }
    }

    pub fn execute(&self, q: &PathQuery, selector: &DatasetSelector) -> Result<ResultTable> {
        let graphs = self.named_graphs(selector)?;
        let plan = compile(q, &self.onto)?;
        execute(&plan, q, &self.onto, &graphs)
    }

    pub fn cache_key(q: &PathQuery, selector: &DatasetSelector) -> String {
        q.with_dataset(selector.clone()).canonicalize()
    }

    pub fn cached_execute(&self, q: &PathQuery, selector: &DatasetSelector) -> Result<(Arc<ResultTable>, bool)> {
        self.cached_execute_with(q, selector, || self.execute(q, selector))
    }

    /// As [`Engine::cached_execute`] with a caller-supplied executor.
    pub fn cached_execute_with(
        &self,
        q: &PathQuery,
        selector: &DatasetSelector,
        run: impl FnOnce() -> Result<ResultTable>,
    ) -> Result<(Arc<ResultTable>, bool)> {
        self.named_graphs(selector)?;
        let key = Engine::cache_key(q, selector);
        self.cache.get_or_compute(&key, self.registry.stamp(), run)
    }

    pub fn partition(
        &self,
        table: &ResultTable,
        q: &PathQuery,
        selector: &DatasetSelector,
    ) -> Result<PartitionedResults> {
        let graphs = self.graphs(selector)?;
        partition_results(table, q, &self.onto, &graphs)
    }
}
