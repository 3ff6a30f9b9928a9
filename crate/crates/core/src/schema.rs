//! Schema digest: classes, properties, annotations, subclass edges and
//! existential restriction attachments harvested from an ontology graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::graph::Graph;
use crate::term::{Datatype, Iri, Term};
use crate::vocab::{kdq, owl, rdf, rdfs, skos, xsd};

/// Which annotation predicates carry labels, descriptions and alternate labels.
/// Earlier entries take precedence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationVocabulary {
    pub label: Vec<Iri>,
    pub description: Vec<Iri>,
    pub alt_label: Vec<Iri>,
}

impl Default for AnnotationVocabulary {
    fn default() -> Self {
        AnnotationVocabulary {
            label: vec![Iri::from_static(rdfs::LABEL), Iri::from_static(skos::PREF_LABEL)],
            description: vec![Iri::from_static(rdfs::COMMENT), Iri::from_static(skos::DEFINITION)],
            alt_label: vec![Iri::from_static(skos::ALT_LABEL)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassInfo {
    pub iri: Iri,
    pub label: String,
    pub description: Option<String>,
    pub alt_labels: Vec<String>,
    /// (property, filler class) pairs from `subClassOf [ someValuesFrom ]` restrictions.
    pub restriction_props: Vec<(Iri, Iri)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKind {
    ObjectProperty,
    DataProperty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyInfo {
    pub iri: Iri,
    pub label: String,
    pub kind: PropertyKind,
    pub domains: BTreeSet<Iri>,
    /// Class IRIs for object properties, datatype IRIs for data properties.
    pub ranges: BTreeSet<Iri>,
    pub description: Option<String>,
    /// Set when the property is annotated as carrying biological sequences.
    pub sequence_kind: Option<String>,
}

impl PropertyInfo {
    pub fn is_data(&self) -> bool {
        self.kind == PropertyKind::DataProperty
    }

    /// Datatypes a data property may bind.
    pub fn datatypes(&self) -> Vec<Datatype> {
        self.ranges
            .iter()
            .filter_map(|r| Datatype::from_iri(r.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaDiagnostic {
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaIndex {
    classes: BTreeMap<Iri, ClassInfo>,
    properties: BTreeMap<Iri, PropertyInfo>,
    subclass_edges: BTreeSet<(Iri, Iri)>,
    diagnostics: Vec<SchemaDiagnostic>,
}

impl SchemaIndex {
    pub fn class(&self, iri: &Iri) -> Option<&ClassInfo> {
        self.classes.get(iri)
    }

    pub fn property(&self, iri: &Iri) -> Option<&PropertyInfo> {
        self.properties.get(iri)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassInfo> {
        self.classes.values()
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyInfo> {
        self.properties.values()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn property_count(&self) -> usize {
        self.properties.len()
    }

    /// Direct (child, parent) subclass edges between named classes.
    pub fn subclass_edges(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.subclass_edges
    }

    pub fn diagnostics(&self) -> &[SchemaDiagnostic] {
        &self.diagnostics
    }

    /// Resolves a class from its IRI or (case-insensitively) its label.
    pub fn resolve_class(&self, text: &str) -> Option<&ClassInfo> {
        if let Ok(iri) = Iri::new(text) {
            if let Some(c) = self.classes.get(&iri) {
                return Some(c);
            }
        }
        let needle = text.trim().to_lowercase();
        self.classes.values().find(|c| c.label.to_lowercase() == needle)
    }

    /// Resolves a property from its IRI or (case-insensitively) its label.
    pub fn resolve_property(&self, text: &str) -> Option<&PropertyInfo> {
        if let Ok(iri) = Iri::new(text) {
            if let Some(p) = self.properties.get(&iri) {
                return Some(p);
            }
        }
        let needle = text.trim().to_lowercase();
        self.properties.values().find(|p| p.label.to_lowercase() == needle)
    }

    /// Human label for a class or property IRI, falling back to its local name.
    pub fn label_of(&self, iri: &Iri) -> String {
        if let Some(c) = self.classes.get(iri) {
            return c.label.clone();
        }
        if let Some(p) = self.properties.get(iri) {
            return p.label.clone();
        }
        iri.local_name().to_string()
    }
}

fn is_datatype_iri(iri: &Iri) -> bool {
    iri.as_str().starts_with(xsd::NS) || iri.as_str() == "http://www.w3.org/2000/01/rdf-schema#Literal"
}

fn datatype_for(iri: &Iri) -> Datatype {
    Datatype::from_iri(iri.as_str()).unwrap_or_else(|| {
        warn!(datatype = %iri, "unsupported range datatype, treating as string");
        Datatype::String
    })
}

pub fn build_schema_index(schema: &Graph) -> SchemaIndex {
    build_schema_index_with(schema, &AnnotationVocabulary::default())
}

pub fn build_schema_index_with(schema: &Graph, vocab: &AnnotationVocabulary) -> SchemaIndex {
    let rdf_type = Iri::from_static(rdf::TYPE);
    let sub_class_of = Iri::from_static(rdfs::SUB_CLASS_OF);
    let on_property = Iri::from_static(owl::ON_PROPERTY);
    let some_values_from = Iri::from_static(owl::SOME_VALUES_FROM);

    let mut class_iris: BTreeSet<Iri> = BTreeSet::new();
    let mut declared_kind: BTreeMap<Iri, Option<PropertyKind>> = BTreeMap::new();
    let mut domains: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    let mut ranges: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    let mut restrictions: BTreeMap<Iri, Vec<(Iri, Iri)>> = BTreeMap::new();
    let mut edges = BTreeSet::new();
    let mut diagnostics = Vec::new();

    let mut diagnose = |subject: &dyn std::fmt::Display, message: String| {
        warn!(subject = %subject, "{message}");
        diagnostics.push(SchemaDiagnostic {
            subject: subject.to_string(),
            message,
        });
    };

    for t in schema.lookup(None, Some(&rdf_type), None) {
        let (Term::Iri(s), Term::Iri(o)) = (&t.subject, &t.object) else {
            continue;
        };
        match o.as_str() {
            owl::CLASS | rdfs::CLASS => {
                class_iris.insert(s.clone());
            }
            owl::OBJECT_PROPERTY => {
                declared_kind.insert(s.clone(), Some(PropertyKind::ObjectProperty));
            }
            owl::DATATYPE_PROPERTY => {
                declared_kind.insert(s.clone(), Some(PropertyKind::DataProperty));
            }
            rdf::PROPERTY => {
                declared_kind.entry(s.clone()).or_insert(None);
            }
            _ => {}
        }
    }

    for (pred, map) in [(rdfs::DOMAIN, &mut domains), (rdfs::RANGE, &mut ranges)] {
        let pred = Iri::from_static(pred);
        for t in schema.lookup(None, Some(&pred), None) {
            match (&t.subject, &t.object) {
                (Term::Iri(p), Term::Iri(c)) => {
                    declared_kind.entry(p.clone()).or_insert(None);
                    map.entry(p.clone()).or_default().insert(c.clone());
                }
                (s, _) => diagnose(s, format!("ignoring non-named {}", pred.local_name())),
            }
        }
    }

    for t in schema.lookup(None, Some(&sub_class_of), None) {
        let Term::Iri(child) = &t.subject else {
            continue;
        };
        match &t.object {
            Term::Iri(parent) => {
                edges.insert((child.clone(), parent.clone()));
            }
            Term::Blank(_) => {
                let node = &t.object;
                let property = schema
                    .lookup(Some(node), Some(&on_property), None)
                    .find_map(|t| t.object.as_iri().cloned());
                let filler = schema
                    .lookup(Some(node), Some(&some_values_from), None)
                    .find_map(|t| t.object.as_iri().cloned());
                match (property, filler) {
                    (Some(p), Some(f)) => {
                        declared_kind.entry(p.clone()).or_insert(None);
                        restrictions.entry(child.clone()).or_default().push((p, f));
                    }
                    (Some(p), None) => {
                        let flavor = schema
                            .lookup(Some(node), None, None)
                            .map(|t| t.predicate.clone())
                            .find(|p| {
                                matches!(
                                    p.as_str(),
                                    owl::ALL_VALUES_FROM
                                        | owl::HAS_VALUE
                                        | owl::CARDINALITY
                                        | owl::MIN_CARDINALITY
                                        | owl::MAX_CARDINALITY
                                        | owl::QUALIFIED_CARDINALITY
                                )
                            })
                            .map(|p| p.local_name().to_string())
                            .unwrap_or_else(|| "unrecognised".to_string());
                        diagnose(child, format!("ignoring {flavor} restriction on <{p}>"));
                    }
                    _ => diagnose(child, "ignoring anonymous superclass expression".to_string()),
                }
            }
            Term::Literal(_) => {}
        }
    }

    // Kinds: data iff a range (or restriction filler) is a datatype.
    let mut properties = BTreeMap::new();
    for (iri, declared) in &declared_kind {
        let mut prop_ranges = ranges.get(iri).cloned().unwrap_or_default();
        for fillers in restrictions.values() {
            for (p, f) in fillers {
                if p == iri && is_datatype_iri(f) {
                    prop_ranges.insert(f.clone());
                }
            }
        }
        let has_datatype_range = prop_ranges.iter().any(is_datatype_iri);
        let kind = if has_datatype_range || *declared == Some(PropertyKind::DataProperty) {
            PropertyKind::DataProperty
        } else {
            PropertyKind::ObjectProperty
        };
        let prop_ranges: BTreeSet<Iri> = match kind {
            PropertyKind::DataProperty => {
                let mut dts: BTreeSet<Iri> = prop_ranges
                    .iter()
                    .filter(|r| is_datatype_iri(r))
                    .map(|r| datatype_for(r).iri())
                    .collect();
                if prop_ranges.iter().any(|r| !is_datatype_iri(r)) {
                    diagnose(iri, "data property with class range; class ranges dropped".to_string());
                }
                if dts.is_empty() {
                    dts.insert(Datatype::String.iri());
                }
                dts
            }
            PropertyKind::ObjectProperty => prop_ranges,
        };
        properties.insert(
            iri.clone(),
            PropertyInfo {
                iri: iri.clone(),
                label: String::new(),
                kind,
                domains: domains.get(iri).cloned().unwrap_or_default(),
                ranges: prop_ranges,
                description: None,
                sequence_kind: None,
            },
        );
    }

    // Auto-register every class referenced structurally.
    for (c, p) in &edges {
        class_iris.insert(c.clone());
        class_iris.insert(p.clone());
    }
    for prop in properties.values() {
        class_iris.extend(prop.domains.iter().cloned());
        if prop.kind == PropertyKind::ObjectProperty {
            class_iris.extend(prop.ranges.iter().cloned());
        }
    }
    for (class, attached) in &restrictions {
        class_iris.insert(class.clone());
        for (_, filler) in attached {
            if !is_datatype_iri(filler) {
                class_iris.insert(filler.clone());
            }
        }
    }

    let mut classes = BTreeMap::new();
    for iri in class_iris {
        let subject = Term::Iri(iri.clone());
        let mut attached: Vec<(Iri, Iri)> = restrictions.remove(&iri).unwrap_or_default();
        attached.sort();
        attached.dedup();
        classes.insert(
            iri.clone(),
            ClassInfo {
                label: first_text(schema, &subject, &vocab.label).unwrap_or_else(|| iri.local_name().to_string()),
                description: first_text(schema, &subject, &vocab.description),
                alt_labels: all_texts(schema, &subject, &vocab.alt_label),
                restriction_props: attached,
                iri,
            },
        );
    }

    let sequence_kind = Iri::from_static(kdq::SEQUENCE_KIND);
    for prop in properties.values_mut() {
        let subject = Term::Iri(prop.iri.clone());
        prop.label = first_text(schema, &subject, &vocab.label).unwrap_or_else(|| prop.iri.local_name().to_string());
        prop.description = first_text(schema, &subject, &vocab.description);
        prop.sequence_kind = schema
            .lookup(Some(&subject), Some(&sequence_kind), None)
            .map(|t| t.object.text().to_string())
            .min();
    }

    SchemaIndex {
        classes,
        properties,
        subclass_edges: edges,
        diagnostics,
    }
}

fn texts<'a>(graph: &'a Graph, subject: &'a Term, predicate: &'a Iri) -> impl Iterator<Item = String> + 'a {
    graph
        .lookup(Some(subject), Some(predicate), None)
        .filter_map(|t| t.object.as_literal().map(|l| l.lexical().to_string()))
}

fn first_text(graph: &Graph, subject: &Term, predicates: &[Iri]) -> Option<String> {
    predicates.iter().find_map(|p| texts(graph, subject, p).min())
}

fn all_texts(graph: &Graph, subject: &Term, predicates: &[Iri]) -> Vec<String> {
    let mut out: Vec<String> = predicates.iter().flat_map(|p| texts(graph, subject, p)).collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turtle::load_turtle;

    const PRELUDE: &str = "@prefix ex: <http://example.org/> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix skos: <http://www.w3.org/2004/02/skos/core#> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
";

    fn schema(body: &str) -> SchemaIndex {
        build_schema_index(&load_turtle(&format!("{PRELUDE}{body}"), "schema").unwrap())
    }

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://example.org/{s}")).unwrap()
    }

    #[test]
    fn empty_graph_gives_empty_index() {
        let idx = build_schema_index(&Graph::empty("s"));
        assert_eq!(idx.class_count(), 0);
        assert_eq!(idx.property_count(), 0);
    }

    #[test]
    fn labels_default_to_local_name() {
        let idx = schema("ex:Gene a owl:Class .\nex:Sample a owl:Class ; rdfs:label \"sample\" ; rdfs:comment \"a sample\" ; skos:altLabel \"specimen\", \"biosample\" .");
        assert_eq!(idx.class(&iri("Gene")).unwrap().label, "Gene");
        let sample = idx.class(&iri("Sample")).unwrap();
        assert_eq!(sample.label, "sample");
        assert_eq!(sample.description.as_deref(), Some("a sample"));
        assert_eq!(sample.alt_labels, ["biosample", "specimen"]);
    }

    #[test]
    fn undeclared_classes_auto_registered() {
        let idx = schema("ex:A rdfs:subClassOf ex:B .\nex:p rdfs:domain ex:C ; rdfs:range ex:D .");
        for c in ["A", "B", "C", "D"] {
            assert!(idx.class(&iri(c)).is_some(), "{c}");
        }
        assert!(idx.subclass_edges().contains(&(iri("A"), iri("B"))));
        assert_eq!(idx.property(&iri("p")).unwrap().kind, PropertyKind::ObjectProperty);
    }

    #[test]
    fn data_kind_follows_range() {
        let idx = schema(
            "ex:ratio rdfs:domain ex:Gene ; rdfs:range xsd:decimal .
ex:seq a owl:DatatypeProperty ; <urn:kdq:vocab#sequenceKind> \"nucleotide\" .
ex:when rdfs:range xsd:date .",
        );
        let ratio = idx.property(&iri("ratio")).unwrap();
        assert!(ratio.is_data());
        assert_eq!(ratio.datatypes(), [Datatype::Decimal]);
        assert!(idx.class(&Iri::new(xsd::DECIMAL).unwrap()).is_none());
        let seq = idx.property(&iri("seq")).unwrap();
        assert_eq!(seq.datatypes(), [Datatype::String]);
        assert_eq!(seq.sequence_kind.as_deref(), Some("nucleotide"));
        assert_eq!(idx.property(&iri("when")).unwrap().datatypes(), [Datatype::String]);
    }

    #[test]
    fn existential_restrictions_harvested() {
        let idx = schema(
            "ex:CellCloning rdfs:subClassOf ex:Process ,
    [ a owl:Restriction ; owl:onProperty ex:hasOutputValue ; owl:someValuesFrom ex:TcruziSample ] ,
    [ a owl:Restriction ; owl:onProperty ex:hasParameter ; owl:allValuesFrom ex:Gene ] .",
        );
        let cc = idx.class(&iri("CellCloning")).unwrap();
        assert_eq!(cc.restriction_props, [(iri("hasOutputValue"), iri("TcruziSample"))]);
        assert!(idx.class(&iri("TcruziSample")).is_some());
        assert!(idx.property(&iri("hasOutputValue")).is_some());
        assert_eq!(idx.diagnostics().len(), 1);
        assert!(idx.diagnostics()[0].message.contains("allValuesFrom"));
        // the blank node itself never becomes a class or an edge
        assert_eq!(idx.subclass_edges().len(), 1);
    }

    #[test]
    fn resolve_by_label_or_iri() {
        let idx = schema("ex:TS a owl:Class ; rdfs:label \"T.cruzi sample\" .");
        assert_eq!(idx.resolve_class("t.cruzi SAMPLE").unwrap().iri, iri("TS"));
        assert_eq!(idx.resolve_class("http://example.org/TS").unwrap().iri, iri("TS"));
        assert!(idx.resolve_class("nope").is_none());
    }
}
