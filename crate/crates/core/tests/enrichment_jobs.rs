mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use common::*;
use kdq_core::enrichment::{
    AlignmentService, EnrichmentJob, JobRegistry, JobStatus, NcbiBlastClient, NcbiConfig, StubAligner,
};
use kdq_core::{DatasetSelector, Datatype, Direction, Error, NodeKind, PathQuery, ResultTable};
use rust_decimal::Decimal;

fn primer_table() -> (kdq_core::Engine, ResultTable) {
    let e = engine();
    let q = PathQuery::new(&e.onto, class("Primer"))
        .unwrap()
        .add_step(
            &e.onto,
            0,
            &pe("hasSequence"),
            Direction::Forward,
            NodeKind::Datatype(Datatype::String),
        )
        .unwrap();
    let table = e.execute(&q, &DatasetSelector::All).unwrap();
    (e, table)
}

fn finish(registry: &JobRegistry, id: &str) -> EnrichmentJob {
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        let job = registry.poll(id).unwrap();
        if matches!(job.status, JobStatus::Done | JobStatus::Failed) {
            return job;
        }
        assert!(Instant::now() < deadline, "job did not finish");
        std::thread::sleep(Duration::from_millis(5));
    }
}

#[test]
fn stub_report_skips_non_sequence_rows() {
    let (e, table) = primer_table();
    assert_eq!(table.len(), 3);
    let registry = JobRegistry::default();
    let job = registry
        .submit(&table, &e.onto, 1, Arc::new(StubAligner::new()))
        .unwrap();
    let done = finish(&registry, &job.job_id);
    assert_eq!(done.status, JobStatus::Done);
    assert_eq!(done.service, "stub");
    let report = done.report.unwrap();
    let rows: Vec<usize> = report.iter().map(|l| l.row).collect();
    assert_eq!(rows, done.rows);
    for line in &report {
        let seq = table.rows[line.row][1].as_literal().unwrap().lexical();
        assert!(!seq.is_empty() && seq != "not sequenced");
        assert_eq!(line.score, Decimal::from(seq.len()));
    }
}

#[test]
fn finished_jobs_expire() {
    let (e, table) = primer_table();
    let registry = JobRegistry::new(Duration::from_millis(50));
    let job = registry
        .submit(&table, &e.onto, 1, Arc::new(StubAligner::new()))
        .unwrap();
    finish(&registry, &job.job_id);
    std::thread::sleep(Duration::from_millis(80));
    assert_eq!(registry.poll(&job.job_id), Err(Error::UnknownJob(job.job_id.clone())));
}

/// A tiny HTTP server answering BLAST URL API calls from a script.
struct MockBlast {
    url: String,
    requests: Arc<Mutex<Vec<String>>>,
}

fn mock_blast(waiting_polls: usize, hits: bool, fail_put: bool) -> MockBlast {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/Blast.cgi", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = requests.clone();
    let polls = AtomicUsize::new(0);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let body = String::from_utf8(body).unwrap();
            log.lock().unwrap().push(body.clone());
            let (status, reply) = if body.contains("CMD=Put") {
                if fail_put {
                    ("500 Internal Server Error", "boom".to_string())
                } else {
                    (
                        "200 OK",
                        "<!--QBlastInfoBegin\n    RID = MOCK42\n    RTOE = 1\nQBlastInfoEnd\n-->".to_string(),
                    )
                }
            } else if body.contains("FORMAT_OBJECT=SearchInfo") {
                let n = polls.fetch_add(1, Ordering::SeqCst);
                let status = if n < waiting_polls { "WAITING" } else { "READY" };
                let there = if hits { "yes" } else { "no" };
                ("200 OK", format!("QBlastInfoBegin\n\tStatus={status}\nQBlastInfoEnd\nQBlastInfoBegin\n\tThereAreHits={there}\nQBlastInfoEnd\n"))
            } else {
                (
                    "200 OK",
                    "# BLASTN 2.15.0+\n# Fields: query id, subject id, ...\nQuery_1\tgi|123|XM_800001.1\t100.0\t10\t0\t0\t1\t10\t5\t14\t0.01\t20.3\n"
                        .to_string(),
                )
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    MockBlast { url, requests }
}

fn client(url: &str) -> NcbiBlastClient {
    NcbiBlastClient::new(NcbiConfig {
        base_url: url.to_string(),
        poll_interval: Duration::from_millis(1),
        max_polls: 5,
        timeout: Duration::from_secs(5),
        api_key: Some("k123".into()),
        ..NcbiConfig::default()
    })
    .unwrap()
}

#[test]
fn blast_client_submits_polls_and_fetches() {
    let mock = mock_blast(2, true, false);
    let hit = client(&mock.url).align("ACGTACGTAA").unwrap();
    assert_eq!(hit.summary, "gi|123|XM_800001.1");
    assert_eq!(hit.score, Decimal::new(203, 1));
    let requests = mock.requests.lock().unwrap();
    assert_eq!(requests.len(), 1 + 3 + 1);
    assert!(requests[0].contains("QUERY=ACGTACGTAA") && requests[0].contains("PROGRAM=blastn"));
    assert!(requests.iter().all(|r| r.contains("api_key=k123")));
    assert!(requests[4].contains("FORMAT_TYPE=Tabular") && requests[4].contains("RID=MOCK42"));
}

#[test]
fn blast_client_failures_are_reported() {
    let no_hits = mock_blast(0, false, false);
    assert!(client(&no_hits.url).align("ACGT").unwrap_err().0.contains("no hits"));
    let down = mock_blast(0, true, true);
    assert!(client(&down.url)
        .align("ACGT")
        .unwrap_err()
        .0
        .contains("request failed"));
    let slow = mock_blast(100, true, false);
    assert!(client(&slow.url)
        .align("ACGT")
        .unwrap_err()
        .0
        .contains("did not finish"));
}

#[test]
fn remote_failure_marks_the_job_failed() {
    let (e, table) = primer_table();
    let down = mock_blast(0, true, true);
    let registry = JobRegistry::default();
    let job = registry
        .submit(&table, &e.onto, 1, Arc::new(client(&down.url)))
        .unwrap();
    let done = finish(&registry, &job.job_id);
    assert_eq!(done.status, JobStatus::Failed);
    assert_eq!(done.service, "ncbi");
    assert!(done.diagnostic.unwrap().contains("request failed"));
    assert!(done.report.is_none());
}
