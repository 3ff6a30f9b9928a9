use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use kdq_core::enrichment::{AlignmentService, JobRegistry, NcbiBlastClient, NcbiConfig, StubAligner};
use kdq_core::load::{load_dataset, load_ontology};
use kdq_core::query::QueryHistory;
use kdq_core::{DatasetRegistry, Engine, PathQuery, ResultTable};
use thiserror::Error;
use tracing::info;

use crate::config::{ConfigError, Deployment, EnrichmentChoice};

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Load(#[from] kdq_core::Error),
    #[error("alignment service: {0}")]
    Aligner(String),
}

impl StartupError {
    /// Whether the failure came from reading a file rather than its content.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            StartupError::Config(ConfigError::Read { .. }) | StartupError::Load(kdq_core::Error::Io { .. })
        )
    }
}

pub struct Session {
    pub history: QueryHistory,
    /// Full table of the most recent execution, the target of enrichment requests.
    pub last_table: Option<Arc<ResultTable>>,
}

struct SessionEntry {
    session: Arc<tokio::sync::Mutex<Session>>,
    last_activity: Instant,
}

/// Formulation sessions keyed by id. Each session sits behind its own async
/// mutex so that mutations of one session are serialized.
pub struct SessionStore {
    idle: Duration,
    entries: Mutex<HashMap<String, SessionEntry>>,
}

impl SessionStore {
    pub fn new(idle: Duration) -> Self {
        SessionStore {
            idle,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn create(&self, query: PathQuery) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session {
            history: QueryHistory::new(query),
            last_table: None,
        };
        let mut entries = self.entries.lock().expect("session lock");
        self.purge(&mut entries);
        entries.insert(
            id.clone(),
            SessionEntry {
                session: Arc::new(tokio::sync::Mutex::new(session)),
                last_activity: Instant::now(),
            },
        );
        id
    }

    /// The live session with this id, refreshing its idle timer. Expired
    /// sessions are dropped and reported as absent.
    pub fn get(&self, id: &str) -> Option<Arc<tokio::sync::Mutex<Session>>> {
        let mut entries = self.entries.lock().expect("session lock");
        self.purge(&mut entries);
        let entry = entries.get_mut(id)?;
        entry.last_activity = Instant::now();
        Some(entry.session.clone())
    }

    pub fn len(&self) -> usize {
        let mut entries = self.entries.lock().expect("session lock");
        self.purge(&mut entries);
        entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn purge(&self, entries: &mut HashMap<String, SessionEntry>) {
        let idle = self.idle;
        entries.retain(|_, e| e.last_activity.elapsed() < idle);
    }
}

/// Everything a running deployment serves: the engine over the loaded
/// schema and datasets, sessions, and enrichment jobs.
pub struct Service {
    pub deployment: Deployment,
    pub engine: Engine,
    pub sessions: SessionStore,
    pub jobs: JobRegistry,
    pub aligner: Arc<dyn AlignmentService>,
}

impl Service {
    /// Loads every file named by the deployment. Any failure aborts startup,
    /// so a service never runs with a partial registry.
    pub fn start(deployment: Deployment) -> Result<Service, StartupError> {
        let onto = load_ontology(&deployment.schema, &deployment.annotations.vocabulary())?;
        info!(
            classes = onto.schema.class_count(),
            properties = onto.schema.property_count(),
            cycles = onto.closure.cycles().len(),
            "schema loaded"
        );
        let datasets = deployment
            .datasets
            .iter()
            .map(|d| load_dataset(&d.id, d.label.as_deref().unwrap_or(&d.id), &d.path))
            .collect::<Result<Vec<_>, _>>()?;
        let registry = DatasetRegistry::new(datasets)?;
        let aligner: Arc<dyn AlignmentService> = match deployment.enrichment {
            EnrichmentChoice::Stub => Arc::new(StubAligner::new()),
            EnrichmentChoice::Ncbi => {
                let mut cfg = NcbiConfig::default();
                let s = &deployment.ncbi;
                if let Some(url) = &s.base_url {
                    cfg.base_url = url.clone();
                }
                if let Some(p) = &s.program {
                    cfg.program = p.clone();
                }
                if let Some(db) = &s.database {
                    cfg.database = db.clone();
                }
                if let Some(t) = s.timeout_secs {
                    cfg.timeout = Duration::from_secs(t);
                }
                Arc::new(NcbiBlastClient::new(cfg).map_err(|e| StartupError::Aligner(e.0))?)
            }
        };
        Ok(Service {
            engine: Engine::new(onto, registry, deployment.cache_capacity),
            sessions: SessionStore::new(Duration::from_secs(deployment.session_idle_secs)),
            jobs: JobRegistry::new(Duration::from_secs(deployment.job_ttl_secs)),
            aligner,
            deployment,
        })
    }
}
