use std::path::Path;

use tracing::info;

use crate::answer::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::reasoner::Ontology;
use crate::schema::{build_schema_index_with, AnnotationVocabulary};
use crate::turtle::load_turtle;

pub fn read_turtle_file(path: &Path, graph_id: &str) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let graph = load_turtle(&text, graph_id)?;
    info!(path = %path.display(), triples = graph.len(), "loaded turtle");
    Ok(graph)
}

pub fn load_ontology(path: &Path, vocab: &AnnotationVocabulary) -> Result<Ontology> {
    let graph = read_turtle_file(path, "schema")?;
    Ok(Ontology::new(build_schema_index_with(&graph, vocab)))
}

pub fn load_dataset(id: &str, label: &str, path: &Path) -> Result<Dataset> {
    Ok(Dataset {
        id: id.to_string(),
        label: label.to_string(),
        graph: read_turtle_file(path, id)?,
    })
}
