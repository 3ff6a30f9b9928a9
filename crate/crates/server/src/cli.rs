use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use kdq_core::compiler::parse_query_text;
use kdq_core::suggest::{discover_paths, suggest_concepts};
use kdq_core::DatasetSelector;
use tracing::info;

use crate::config::Deployment;
use crate::service::{Service, StartupError};

/// Exit status for invalid input: bad configuration, schema or query.
pub const EXIT_INVALID: u8 = 1;
/// Exit status when a file cannot be read.
pub const EXIT_IO: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "kdq", version, about = "Ontology-guided path queries over RDF datasets")]
pub struct Cli {
    /// Deployment configuration (TOML).
    #[arg(long, short, default_value = "deployment.toml")]
    pub config: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the HTTP API.
    Serve {
        /// Overrides the listen address from the configuration.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Run a query file (or stdin with `-`) and print the results as TSV.
    Query {
        #[arg(default_value = "-")]
        file: String,
        /// Dataset id or `all`; defaults to the query's own dataset clause.
        #[arg(long)]
        dataset: Option<String>,
        /// Print specific and general results separately.
        #[arg(long)]
        partition: bool,
    },
    /// List concepts matching a prefix.
    Suggest {
        prefix: String,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Load the deployment and report schema and dataset statistics.
    Validate,
    /// List schema paths between two concepts.
    Paths {
        from: String,
        to: String,
        #[arg(long)]
        max: Option<usize>,
    },
}

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub status: u8,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Failure {
            status: EXIT_INVALID,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Failure {
            status: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl From<StartupError> for Failure {
    fn from(e: StartupError) -> Self {
        if e.is_io() {
            Failure::io(e)
        } else {
            Failure::invalid(e)
        }
    }
}

impl From<kdq_core::Error> for Failure {
    fn from(e: kdq_core::Error) -> Self {
        if matches!(e, kdq_core::Error::Io { .. }) {
            Failure::io(e)
        } else {
            Failure::invalid(e)
        }
    }
}

pub fn run(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kdq: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}

fn start(config: &std::path::Path) -> Result<Service, Failure> {
    let deployment = Deployment::from_file(config).map_err(StartupError::from)?;
    Ok(Service::start(deployment)?)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let service = start(&cli.config)?;
    match cli.command {
        Command::Serve { listen } => serve(service, listen),
        Command::Query {
            file,
            dataset,
            partition,
        } => query(&service, &file, dataset.as_deref(), partition),
        Command::Suggest { prefix, limit } => {
            let limit = limit.unwrap_or(service.deployment.suggestion_limit);
            for s in suggest_concepts(&service.engine.onto, &prefix, limit) {
                println!("{}\t{}", s.label, s.class_iri);
            }
            Ok(())
        }
        Command::Validate => {
            validate(&service);
            Ok(())
        }
        Command::Paths { from, to, max } => paths(&service, &from, &to, max),
    }
}

fn serve(service: Service, listen: Option<String>) -> Result<(), Failure> {
    let addr = listen.unwrap_or_else(|| service.deployment.listen.clone());
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::io)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::io(format!("cannot listen on {addr}: {e}")))?;
        info!(%addr, "listening");
        axum::serve(listener, crate::api::router(Arc::new(service)))
            .await
            .map_err(Failure::io)
    })
}

fn query(service: &Service, file: &str, dataset: Option<&str>, partition: bool) -> Result<(), Failure> {
    let text = if file == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf).map_err(Failure::io)?;
        buf
    } else {
        std::fs::read_to_string(file).map_err(|e| Failure::io(format!("cannot read {file}: {e}")))?
    };
    let engine = &service.engine;
    let q = parse_query_text(&text, &engine.onto)?;
    let selector = dataset
        .map(DatasetSelector::parse)
        .unwrap_or_else(|| q.dataset().clone());
    let (table, _) = engine.cached_execute(&q, &selector)?;
    if partition {
        let parts = engine.partition(&table, &q, &selector)?;
        println!("# specific ({} rows)", parts.specific.len());
        print!("{}", parts.specific.to_tsv());
        println!("# general ({} rows)", parts.general.len());
        print!("{}", parts.general.to_tsv());
    } else {
        print!("{}", table.to_tsv());
    }
    Ok(())
}

fn validate(service: &Service) {
    let onto = &service.engine.onto;
    println!("classes: {}", onto.schema.class_count());
    println!("properties: {}", onto.schema.property_count());
    println!("diagnostics: {}", onto.schema.diagnostics().len());
    for d in onto.schema.diagnostics() {
        println!("  {}: {}", d.subject, d.message);
    }
    println!("subclass cycles: {}", onto.closure.cycles().len());
    for cycle in onto.closure.cycles() {
        let names: Vec<String> = cycle.iter().map(|c| c.to_string()).collect();
        println!("  {}", names.join(" = "));
    }
    for d in service.engine.registry().datasets() {
        println!("dataset {}: {} triples", d.id, d.graph.len());
    }
}

fn paths(service: &Service, from: &str, to: &str, max: Option<usize>) -> Result<(), Failure> {
    let onto = &service.engine.onto;
    let resolve = |text: &str| {
        onto.schema
            .resolve_class(text)
            .map(|c| c.iri.clone())
            .ok_or_else(|| Failure::from(kdq_core::Error::UnknownClass(text.to_string())))
    };
    let (from, to) = (resolve(from)?, resolve(to)?);
    let max = max.unwrap_or(service.deployment.path_max_length);
    for path in discover_paths(onto, &from, &to, max, None)? {
        let mut line = String::new();
        for (i, step) in path.steps.iter().enumerate() {
            if i == 0 {
                line.push_str(&onto.class_label(&step.from));
            }
            let prop = onto.schema.label_of(&step.property);
            match step.direction {
                kdq_core::Direction::Forward => line.push_str(&format!(" -[{prop}]-> ")),
                kdq_core::Direction::Inverse => line.push_str(&format!(" <-[{prop}]- ")),
            }
            line.push_str(&onto.class_label(&step.to));
        }
        println!("{}\t{line}", path.len());
    }
    Ok(())
}
