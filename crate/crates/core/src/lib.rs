pub mod answer;
pub mod compiler;
pub mod enrichment;
pub mod error;
pub mod graph;
pub mod load;
pub mod query;
pub mod reasoner;
pub mod schema;
pub mod suggest;
pub mod term;
pub mod turtle;
pub mod vocab;

pub use answer::{Dataset, DatasetRegistry, Engine, ResultTable};
pub use error::{Error, Result};
pub use graph::Graph;
pub use query::{DatasetSelector, Direction, NodeKind, PathQuery};
pub use reasoner::Ontology;
pub use term::{Datatype, Iri, Literal, Term, Triple};
pub use turtle::{load_turtle, to_turtle};
