#![allow(dead_code)]

pub mod oracle;
pub mod random;

use std::path::PathBuf;

use kdq_core::load::{load_dataset, load_ontology};
use kdq_core::query::QueryHistory;
use kdq_core::schema::AnnotationVocabulary;
use kdq_core::{DatasetRegistry, Direction, Engine, Iri, NodeKind, Ontology, PathQuery};

pub const PE: &str = "http://example.org/parasite-experiment#";
pub const STRAINS: &str = "http://example.org/strains/";
pub const TRANSCRIPTOME: &str = "http://example.org/transcriptome/";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn pe(local: &str) -> Iri {
    Iri::new(format!("{PE}{local}")).unwrap()
}

pub fn strains(local: &str) -> Iri {
    Iri::new(format!("{STRAINS}{local}")).unwrap()
}

pub fn ontology() -> Ontology {
    load_ontology(&fixture("parasite-schema.ttl"), &AnnotationVocabulary::default()).unwrap()
}

pub fn engine() -> Engine {
    let datasets = vec![
        load_dataset("strains", "strain database", &fixture("strains.ttl")).unwrap(),
        load_dataset(
            "transcriptome",
            "stage transcriptome database",
            &fixture("transcriptome.ttl"),
        )
        .unwrap(),
    ];
    Engine::new(ontology(), DatasetRegistry::new(datasets).unwrap(), 256)
}

pub fn class(local: &str) -> NodeKind {
    NodeKind::Class(pe(local))
}

/// The seven-concept chain of the "genes used to create any T.cruzi sample"
/// question, built one step at a time through a history.
pub fn sample_chain_history(onto: &Ontology) -> QueryHistory {
    let mut h = QueryHistory::new(PathQuery::new(onto, class("CellCloning")).unwrap());
    let steps: [(usize, &str, &str); 6] = [
        (0, "hasOutputValue", "TcruziSample"),
        (0, "precededBy", "DrugSelection"),
        (2, "precededBy", "Transfection"),
        (3, "precededBy", "KnockoutPlasmidConstruction"),
        (4, "precededBy", "SequenceExtraction"),
        (5, "hasParameter", "Gene"),
    ];
    for (from, prop, target) in steps {
        h.apply(|q| q.add_step(onto, from, &pe(prop), Direction::Forward, class(target)))
            .unwrap();
    }
    h
}

pub fn sample_chain_query(onto: &Ontology) -> PathQuery {
    sample_chain_history(onto).current().clone()
}

/// Genes with log-base-2 ratio above 1 that have a 3 prime region primer.
pub fn ratio_primer_query(onto: &Ontology) -> PathQuery {
    use kdq_core::query::Comparator;
    use kdq_core::{Datatype, Literal};
    PathQuery::new(onto, class("Gene"))
        .unwrap()
        .add_step(
            onto,
            0,
            &pe("hasLogBase2Ratio"),
            Direction::Forward,
            NodeKind::Datatype(Datatype::Decimal),
        )
        .unwrap()
        .add_literal_filter(1, Comparator::Gt, Literal::typed("1", Datatype::Integer).unwrap())
        .unwrap()
        .add_step(onto, 0, &pe("has3PrimeRegion"), Direction::Forward, class("Primer"))
        .unwrap()
}

/// Microarray oligonucleotides from genes homologous to genes with a 3 prime region primer.
pub fn oligo_homolog_query(onto: &Ontology) -> PathQuery {
    PathQuery::new(onto, class("MicroarrayOligonucleotide"))
        .unwrap()
        .add_step(onto, 0, &pe("hasOligonucleotide"), Direction::Inverse, class("Gene"))
        .unwrap()
        .add_step(onto, 1, &pe("isHomologousTo"), Direction::Forward, class("Gene"))
        .unwrap()
        .add_step(onto, 2, &pe("has3PrimeRegion"), Direction::Forward, class("Primer"))
        .unwrap()
}
