use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use kdq_core::schema::AnnotationVocabulary;
use kdq_core::suggest::{DEFAULT_PATH_MAX_LENGTH, DEFAULT_SUGGESTION_LIMIT, PATH_MAX_LENGTH_CAP};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid deployment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnrichmentChoice {
    #[default]
    Stub,
    Ncbi,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub id: String,
    pub label: Option<String>,
    pub path: PathBuf,
}

/// Overrides for the remote alignment client; unset fields keep its defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcbiSettings {
    pub base_url: Option<String>,
    pub program: Option<String>,
    pub database: Option<String>,
    pub timeout_secs: Option<u64>,
}

/// Annotation predicates for labels, descriptions and alternate labels.
/// Lists replace the defaults; earlier entries take precedence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSettings {
    pub label: Option<Vec<kdq_core::Iri>>,
    pub description: Option<Vec<kdq_core::Iri>>,
    pub alt_label: Option<Vec<kdq_core::Iri>>,
}

impl AnnotationSettings {
    pub fn vocabulary(&self) -> AnnotationVocabulary {
        let mut v = AnnotationVocabulary::default();
        if let Some(l) = &self.label {
            v.label = l.clone();
        }
        if let Some(d) = &self.description {
            v.description = d.clone();
        }
        if let Some(a) = &self.alt_label {
            v.alt_label = a.clone();
        }
        v
    }
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_suggestion_limit() -> usize {
    DEFAULT_SUGGESTION_LIMIT
}
fn default_path_max_length() -> usize {
    DEFAULT_PATH_MAX_LENGTH
}
fn default_cache_capacity() -> usize {
    kdq_core::answer::DEFAULT_CACHE_CAPACITY
}
fn default_session_idle_secs() -> u64 {
    2 * 60 * 60
}
fn default_job_ttl_secs() -> u64 {
    60 * 60
}

/// Startup configuration, read from a TOML file. Relative paths are
/// resolved against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    pub schema: PathBuf,
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_suggestion_limit")]
    pub suggestion_limit: usize,
    #[serde(default = "default_path_max_length")]
    pub path_max_length: usize,
    #[serde(default = "default_cache_capacity")]
    pub cache_capacity: usize,
    #[serde(default = "default_session_idle_secs")]
    pub session_idle_secs: u64,
    #[serde(default = "default_job_ttl_secs")]
    pub job_ttl_secs: u64,
    #[serde(default)]
    pub enrichment: EnrichmentChoice,
    #[serde(default)]
    pub ncbi: NcbiSettings,
    #[serde(default)]
    pub annotations: AnnotationSettings,
    #[serde(default)]
    pub datasets: Vec<DatasetConfig>,
}

impl Deployment {
    pub fn from_file(path: &Path) -> Result<Deployment, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Deployment::from_toml(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Deployment, ConfigError> {
        let mut d: Deployment = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            message: e.message().to_string(),
        })?;
        d.schema = base.join(&d.schema);
        for ds in &mut d.datasets {
            ds.path = base.join(&ds.path);
        }
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.datasets.is_empty() {
            return invalid("at least one dataset is required".into());
        }
        let mut seen = BTreeSet::new();
        for ds in &self.datasets {
            if ds.id.is_empty() || ds.id == "all" || ds.id.contains(char::is_whitespace) {
                return invalid(format!("dataset id `{}` is not allowed", ds.id));
            }
            if !seen.insert(&ds.id) {
                return invalid(format!("duplicate dataset id `{}`", ds.id));
            }
        }
        for (name, value) in [
            ("suggestion_limit", self.suggestion_limit),
            ("path_max_length", self.path_max_length),
            ("cache_capacity", self.cache_capacity),
        ] {
            if value == 0 {
                return invalid(format!("{name} must be positive"));
            }
        }
        if self.path_max_length > PATH_MAX_LENGTH_CAP {
            return invalid(format!("path_max_length must be at most {PATH_MAX_LENGTH_CAP}"));
        }
        let a = &self.annotations;
        if [&a.label, &a.description, &a.alt_label]
            .iter()
            .any(|l| l.as_ref().is_some_and(Vec::is_empty))
        {
            return invalid("annotation predicate lists must not be empty".into());
        }
        if self.session_idle_secs == 0 || self.job_ttl_secs == 0 {
            return invalid("session_idle_secs and job_ttl_secs must be positive".into());
        }
        Ok(())
    }
}
