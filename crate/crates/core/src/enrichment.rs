//! Sequence enrichment: find nucleotide columns in a result table and run
//! them through an alignment service in background jobs.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rust_decimal::Decimal;
use serde::Serialize;
use tracing::{info, warn};

use crate::answer::{ColumnKind, ResultTable};
use crate::error::{Error, Result};
use crate::reasoner::Ontology;
use crate::term::Iri;

pub const DEFAULT_JOB_TTL: Duration = Duration::from_secs(3600);

/// Non-empty and made only of A, C, G, T and N (any case).
pub fn is_sequence(text: &str) -> bool {
    !text.is_empty()
        && text
            .chars()
            .all(|c| matches!(c.to_ascii_uppercase(), 'A' | 'C' | 'G' | 'T' | 'N'))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnrichableColumn {
    pub column_index: usize,
    pub node_id: usize,
    pub property: Iri,
    /// Value of the schema's sequence annotation on `property`.
    pub sequence_kind: String,
}

/// Columns bound through a property annotated as sequence-bearing whose
/// values pass the alphabet check in at least one row.
pub fn detect_enrichable_columns(table: &ResultTable, onto: &Ontology) -> Vec<EnrichableColumn> {
    let mut out = Vec::new();
    for (index, col) in table.columns.iter().enumerate() {
        let ColumnKind::Datatype { property, .. } = &col.kind else {
            continue;
        };
        let Some(kind) = onto.schema.property(property).and_then(|p| p.sequence_kind.clone()) else {
            continue;
        };
        let any_sequence = table
            .rows
            .iter()
            .any(|row| row[index].as_literal().is_some_and(|l| is_sequence(l.lexical())));
        if any_sequence {
            out.push(EnrichableColumn {
                column_index: index,
                node_id: col.node_id,
                property: property.clone(),
                sequence_kind: kind,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignmentHit {
    pub summary: String,
    pub score: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct AlignmentError(pub String);

pub trait AlignmentService: Send + Sync {
    fn name(&self) -> &str;
    fn align(&self, sequence: &str) -> std::result::Result<AlignmentHit, AlignmentError>;
}

/// Lets a test hold a stub service mid-call until released.
#[derive(Debug, Clone, Default)]
pub struct Gate(Arc<(Mutex<bool>, Condvar)>);

impl Gate {
    pub fn new() -> Self {
        Gate::default()
    }

    pub fn release(&self) {
        let (open, cv) = &*self.0;
        *open.lock().expect("gate lock") = true;
        cv.notify_all();
    }

    fn wait(&self) {
        let (open, cv) = &*self.0;
        let mut guard = open.lock().expect("gate lock");
        while !*guard {
            guard = cv.wait(guard).expect("gate lock");
        }
    }
}

/// Offline aligner: score is the sequence length, summary the reversed sequence.
#[derive(Debug, Clone, Default)]
pub struct StubAligner {
    failure: Option<String>,
    gate: Option<Gate>,
}

impl StubAligner {
    pub fn new() -> Self {
        StubAligner::default()
    }

    pub fn failing(message: impl Into<String>) -> Self {
        StubAligner {
            failure: Some(message.into()),
            gate: None,
        }
    }

    /// Blocks every call until `gate` is released.
    pub fn gated(gate: Gate) -> Self {
        StubAligner {
            failure: None,
            gate: Some(gate),
        }
    }
}

impl AlignmentService for StubAligner {
    fn name(&self) -> &str {
        "stub"
    }

    fn align(&self, sequence: &str) -> std::result::Result<AlignmentHit, AlignmentError> {
        if let Some(gate) = &self.gate {
            gate.wait();
        }
        if let Some(msg) = &self.failure {
            return Err(AlignmentError(msg.clone()));
        }
        Ok(AlignmentHit {
            summary: sequence.chars().rev().collect(),
            score: Decimal::from(sequence.chars().count()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct NcbiConfig {
    pub base_url: String,
    pub program: String,
    pub database: String,
    pub timeout: Duration,
    pub poll_interval: Duration,
    pub max_polls: u32,
    pub api_key: Option<String>,
}

impl Default for NcbiConfig {
    fn default() -> Self {
        NcbiConfig {
            base_url: "https://blast.ncbi.nlm.nih.gov/Blast.cgi".into(),
            program: "blastn".into(),
            database: "nt".into(),
            timeout: Duration::from_secs(30),
            poll_interval: Duration::from_secs(15),
            max_polls: 40,
            api_key: std::env::var("NCBI_API_KEY").ok().filter(|k| !k.is_empty()),
        }
    }
}

/// Client for the NCBI BLAST URL API (submit, poll, fetch tabular report).
pub struct NcbiBlastClient {
    config: NcbiConfig,
    http: reqwest::blocking::Client,
}

impl NcbiBlastClient {
    pub fn new(config: NcbiConfig) -> std::result::Result<Self, AlignmentError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| AlignmentError(format!("http client: {e}")))?;
        Ok(NcbiBlastClient { config, http })
    }

    fn call(&self, params: &[(&str, &str)]) -> std::result::Result<String, AlignmentError> {
        let mut params: Vec<(&str, &str)> = params.to_vec();
        if let Some(key) = &self.config.api_key {
            params.push(("api_key", key));
        }
        let resp = self
            .http
            .post(&self.config.base_url)
            .form(&params)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| AlignmentError(format!("request failed: {e}")))?;
        resp.text()
            .map_err(|e| AlignmentError(format!("reading response: {e}")))
    }
}

/// Value of a `KEY = value` line inside an NCBI QBlastInfo block.
pub fn qblast_field(body: &str, key: &str) -> Option<String> {
    body.lines().find_map(|line| {
        let (k, v) = line.split_once('=')?;
        (k.trim() == key).then(|| v.trim().to_string())
    })
}

/// Best hit from a tabular BLAST report: subject id and bit score of the
/// first data line.
pub fn parse_tabular_hit(report: &str) -> Option<AlignmentHit> {
    let line = report
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with('<'))?;
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 12 {
        return None;
    }
    let score = Decimal::from_str(fields[11].trim()).ok()?;
    Some(AlignmentHit {
        summary: fields[1].trim().to_string(),
        score,
    })
}

impl AlignmentService for NcbiBlastClient {
    fn name(&self) -> &str {
        "ncbi"
    }

    fn align(&self, sequence: &str) -> std::result::Result<AlignmentHit, AlignmentError> {
        let put = self.call(&[
            ("CMD", "Put"),
            ("PROGRAM", &self.config.program),
            ("DATABASE", &self.config.database),
            ("QUERY", sequence),
        ])?;
        let rid = qblast_field(&put, "RID").ok_or_else(|| AlignmentError("no RID in submit response".into()))?;
        for _ in 0..self.config.max_polls {
            thread::sleep(self.config.poll_interval);
            let info = self.call(&[("CMD", "Get"), ("FORMAT_OBJECT", "SearchInfo"), ("RID", &rid)])?;
            match qblast_field(&info, "Status").as_deref() {
                Some("WAITING") => continue,
                Some("READY") => {
                    if qblast_field(&info, "ThereAreHits").as_deref() != Some("yes") {
                        return Err(AlignmentError(format!("search {rid} found no hits")));
                    }
                    let report = self.call(&[
                        ("CMD", "Get"),
                        ("RID", &rid),
                        ("FORMAT_TYPE", "Tabular"),
                        ("ALIGNMENTS", "1"),
                        ("DESCRIPTIONS", "1"),
                    ])?;
                    return parse_tabular_hit(&report)
                        .ok_or_else(|| AlignmentError(format!("unreadable report for {rid}")));
                }
                other => {
                    return Err(AlignmentError(format!(
                        "search {rid} ended with status {}",
                        other.unwrap_or("missing")
                    )))
                }
            }
        }
        Err(AlignmentError(format!("search {rid} did not finish in time")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportLine {
    /// Index of the row in the enriched table.
    pub row: usize,
    pub summary: String,
    pub score: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnrichmentJob {
    pub job_id: String,
    pub status: JobStatus,
    pub service: String,
    pub column: usize,
    pub rows: Vec<usize>,
    pub report: Option<Vec<ReportLine>>,
    pub diagnostic: Option<String>,
}

struct JobEntry {
    job: EnrichmentJob,
    finished: Option<Instant>,
}

type Jobs = Arc<Mutex<HashMap<String, JobEntry>>>;

/// Tracks enrichment jobs; finished jobs are kept for `ttl`.
#[derive(Clone)]
pub struct JobRegistry {
    jobs: Jobs,
    ttl: Duration,
}

impl Default for JobRegistry {
    fn default() -> Self {
        JobRegistry::new(DEFAULT_JOB_TTL)
    }
}

impl JobRegistry {
    pub fn new(ttl: Duration) -> Self {
        JobRegistry {
            jobs: Arc::default(),
            ttl,
        }
    }

    /// Starts a job over the rows of `column_index` that hold sequences and
    /// returns it while still pending.
    pub fn submit(
        &self,
        table: &ResultTable,
        onto: &Ontology,
        column_index: usize,
        service: Arc<dyn AlignmentService>,
    ) -> Result<EnrichmentJob> {
        if !detect_enrichable_columns(table, onto)
            .iter()
            .any(|c| c.column_index == column_index)
        {
            return Err(Error::UnflaggedColumn(column_index));
        }
        let work: Vec<(usize, String)> = table
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| {
                let lit = row[column_index].as_literal()?;
                is_sequence(lit.lexical()).then(|| (i, lit.lexical().to_string()))
            })
            .collect();
        let job = EnrichmentJob {
            job_id: uuid::Uuid::new_v4().to_string(),
            status: JobStatus::Pending,
            service: service.name().to_string(),
            column: column_index,
            rows: work.iter().map(|(i, _)| *i).collect(),
            report: None,
            diagnostic: None,
        };
        self.purge();
        self.jobs.lock().expect("job lock").insert(
            job.job_id.clone(),
            JobEntry {
                job: job.clone(),
                finished: None,
            },
        );
        let jobs = self.jobs.clone();
        let id = job.job_id.clone();
        thread::Builder::new()
            .name(format!("enrich-{id}"))
            .spawn(move || run_job(jobs, id, work, service))
            .map_err(|e| Error::Io {
                path: "enrichment worker".into(),
                message: e.to_string(),
            })?;
        info!(job = %job.job_id, rows = job.rows.len(), "enrichment submitted");
        Ok(job)
    }

    pub fn poll(&self, job_id: &str) -> Result<EnrichmentJob> {
        self.purge();
        self.jobs
            .lock()
            .expect("job lock")
            .get(job_id)
            .map(|e| e.job.clone())
            .ok_or_else(|| Error::UnknownJob(job_id.to_string()))
    }

    fn purge(&self) {
        let ttl = self.ttl;
        self.jobs
            .lock()
            .expect("job lock")
            .retain(|_, e| e.finished.is_none_or(|t| t.elapsed() < ttl));
    }
}

fn update(jobs: &Jobs, id: &str, f: impl FnOnce(&mut JobEntry)) {
    if let Some(entry) = jobs.lock().expect("job lock").get_mut(id) {
        f(entry);
    }
}

fn run_job(jobs: Jobs, id: String, work: Vec<(usize, String)>, service: Arc<dyn AlignmentService>) {
    update(&jobs, &id, |e| e.job.status = JobStatus::Running);
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let mut report = Vec::with_capacity(work.len());
        for (row, seq) in &work {
            let hit = service.align(seq).map_err(|e| format!("row {row}: {e}"))?;
            report.push(ReportLine {
                row: *row,
                summary: hit.summary,
                score: hit.score,
            });
        }
        Ok::<_, String>(report)
    }))
    .unwrap_or_else(|_| Err("alignment service panicked".to_string()));
    update(&jobs, &id, |e| {
        match outcome {
            Ok(report) => {
                e.job.status = JobStatus::Done;
                e.job.report = Some(report);
            }
            Err(msg) => {
                warn!(job = %id, error = %msg, "enrichment failed");
                e.job.status = JobStatus::Failed;
                e.job.diagnostic = Some(msg);
            }
        }
        e.finished = Some(Instant::now());
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_check() {
        assert!(is_sequence("ACGTN"));
        assert!(is_sequence("acgtn"));
        assert!(!is_sequence(""));
        assert!(!is_sequence("ACGU"));
        assert!(!is_sequence("Gene_170"));
    }

    #[test]
    fn stub_contract() {
        let hit = StubAligner::new().align("ACGTT").unwrap();
        assert_eq!(hit.summary, "TTGCA");
        assert_eq!(hit.score, Decimal::from(5));
        assert!(StubAligner::failing("down").align("A").is_err());
    }

    #[test]
    fn qblast_parsing() {
        let put = "<html><!--QBlastInfoBegin\n    RID = 8ZK1XYZ014\n    RTOE = 18\nQBlastInfoEnd\n-->";
        assert_eq!(qblast_field(put, "RID").as_deref(), Some("8ZK1XYZ014"));
        assert_eq!(qblast_field(put, "RTOE").as_deref(), Some("18"));
        let info = "QBlastInfoBegin\n\tStatus=READY\nQBlastInfoEnd\n\tThereAreHits=yes\n";
        assert_eq!(qblast_field(info, "Status").as_deref(), Some("READY"));
        assert_eq!(qblast_field(info, "ThereAreHits").as_deref(), Some("yes"));
        let report =
            "# BLASTN 2.15\n# Fields: ...\nQuery_1\tgi|123|ref|XM_1\t100.00\t10\t0\t0\t1\t10\t5\t14\t0.003\t20.3\n";
        assert_eq!(
            parse_tabular_hit(report),
            Some(AlignmentHit {
                summary: "gi|123|ref|XM_1".into(),
                score: Decimal::from_str("20.3").unwrap()
            })
        );
        assert_eq!(parse_tabular_hit("# nothing\n"), None);
    }
}
