//! JSON payloads. Field names here are part of the HTTP contract documented
//! in docs/api.md.

use std::collections::BTreeMap;

use kdq_core::answer::{Column, PartitionedResults};
use kdq_core::compiler::variable_name;
use kdq_core::enrichment::EnrichableColumn;
use kdq_core::schema::PropertyInfo;
use kdq_core::suggest::SchemaPath;
use kdq_core::{Direction, Iri, NodeKind, Ontology, PathQuery, ResultTable, Term};
use serde::Serialize;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetView {
    pub id: String,
    pub label: String,
    pub triples: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionView {
    pub op: &'static str,
    pub instances: Vec<Iri>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FilterView {
    pub comparator: &'static str,
    pub value: String,
    pub datatype: &'static str,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeView {
    pub id: usize,
    /// "class" or "datatype".
    pub kind: &'static str,
    pub iri: Iri,
    pub label: String,
    pub variable: String,
    pub selection: Option<SelectionView>,
    pub filter: Option<FilterView>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EdgeView {
    pub from: usize,
    pub to: usize,
    pub property: Iri,
    pub property_label: String,
    pub direction: Direction,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryView {
    pub canonical: String,
    pub dataset: String,
    pub nodes: Vec<NodeView>,
    pub edges: Vec<EdgeView>,
}

impl QueryView {
    pub fn new(q: &PathQuery, onto: &Ontology) -> Self {
        let nodes = q
            .nodes()
            .iter()
            .map(|n| {
                let (kind, iri, label) = match &n.kind {
                    NodeKind::Class(c) => ("class", c.clone(), onto.class_label(c)),
                    NodeKind::Datatype(d) => ("datatype", d.iri(), d.name().to_string()),
                };
                NodeView {
                    id: n.id,
                    kind,
                    iri,
                    label,
                    variable: variable_name(onto, n),
                    selection: n.selection.as_ref().map(|s| SelectionView {
                        op: s.op.name(),
                        instances: s.instances.iter().cloned().collect(),
                    }),
                    filter: n.filter.as_ref().map(|f| FilterView {
                        comparator: f.comparator.symbol(),
                        value: f.value.lexical().to_string(),
                        datatype: f.value.datatype().name(),
                    }),
                }
            })
            .collect();
        let edges = q
            .edges()
            .iter()
            .map(|e| EdgeView {
                from: e.from,
                to: e.to,
                property_label: onto.schema.label_of(&e.property),
                property: e.property.clone(),
                direction: e.direction,
            })
            .collect();
        QueryView {
            canonical: q.canonicalize(),
            dataset: q.dataset().to_string(),
            nodes,
            edges,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub session_id: String,
    pub can_undo: bool,
    pub query: QueryView,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationView {
    pub iri: Iri,
    pub label: String,
    /// "object-property" or "data-property".
    pub kind: kdq_core::schema::PropertyKind,
    pub direction: Direction,
    pub sequence_kind: Option<String>,
}

impl RelationView {
    pub fn new(p: &PropertyInfo, direction: Direction) -> Self {
        RelationView {
            iri: p.iri.clone(),
            label: p.label.clone(),
            kind: p.kind,
            direction,
            sequence_kind: p.sequence_kind.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepView {
    pub from: Iri,
    pub from_label: String,
    pub property: Iri,
    pub property_label: String,
    pub to: Iri,
    pub to_label: String,
    pub direction: Direction,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathView {
    pub length: usize,
    pub steps: Vec<StepView>,
}

impl PathView {
    pub fn new(path: &SchemaPath, onto: &Ontology) -> Self {
        PathView {
            length: path.len(),
            steps: path
                .steps
                .iter()
                .map(|s| StepView {
                    from_label: onto.class_label(&s.from),
                    from: s.from.clone(),
                    property_label: onto.schema.label_of(&s.property),
                    property: s.property.clone(),
                    to_label: onto.class_label(&s.to),
                    to: s.to.clone(),
                    direction: s.direction,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CellView {
    /// "iri", "literal" or "blank".
    pub kind: &'static str,
    pub value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datatype: Option<&'static str>,
    pub label: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableView {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<CellView>>,
    /// Dataset ids contributing to each row.
    pub provenance: Vec<Vec<String>>,
}

impl TableView {
    pub fn new(table: &ResultTable) -> Self {
        let cell = |t: &Term| CellView {
            kind: match t {
                Term::Iri(_) => "iri",
                Term::Literal(_) => "literal",
                Term::Blank(_) => "blank",
            },
            value: t.text().to_string(),
            datatype: t.as_literal().map(|l| l.datatype().name()),
            label: table.display(t),
        };
        TableView {
            columns: table.columns.clone(),
            rows: table.rows.iter().map(|r| r.iter().map(cell).collect()).collect(),
            provenance: table.provenance.iter().map(|p| p.iter().cloned().collect()).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessView {
    pub node_id: usize,
    pub class: Iri,
    pub label: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecuteView {
    pub dataset: String,
    pub cache_hit: bool,
    pub total: usize,
    pub specific: TableView,
    pub general: TableView,
    /// One list per general row: the subclass that admitted it at each node.
    pub general_witnesses: Vec<Vec<WitnessView>>,
    pub enrichable: Vec<EnrichableColumn>,
}

impl ExecuteView {
    pub fn new(
        dataset: String,
        cache_hit: bool,
        table: &ResultTable,
        parts: &PartitionedResults,
        enrichable: Vec<EnrichableColumn>,
        onto: &Ontology,
    ) -> Self {
        let witness = |w: &BTreeMap<usize, Iri>| {
            w.iter()
                .map(|(node, class)| WitnessView {
                    node_id: *node,
                    label: onto.class_label(class),
                    class: class.clone(),
                })
                .collect()
        };
        ExecuteView {
            dataset,
            cache_hit,
            total: table.len(),
            specific: TableView::new(&parts.specific),
            general: TableView::new(&parts.general),
            general_witnesses: parts.general_witnesses.iter().map(witness).collect(),
            enrichable,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SparqlView {
    pub text: String,
    pub variables: BTreeMap<usize, String>,
}
