use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use kdq_core::compiler::emit_sparql;
use kdq_core::enrichment::{detect_enrichable_columns, EnrichmentJob};
use kdq_core::query::{Comparator, SelectionOp};
use kdq_core::suggest::{
    annotate, discover_paths, suggest_concepts, suggest_relations, suggest_targets, Annotation, Suggestion,
    TargetSuggestion,
};
use kdq_core::{DatasetSelector, Datatype, Direction, Iri, Literal, NodeKind, Ontology, PathQuery};
use serde::Deserialize;
use serde_json::json;
use tracing::{debug, warn};

use crate::service::{Service, Session};
use crate::views::{DatasetView, ExecuteView, PathView, QueryView, RelationView, SessionView, SparqlView};

/// Upper bound on `limit` for suggestion requests.
const MAX_SUGGESTIONS: usize = 200;

type Shared = Arc<Service>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid-request", message)
    }

    fn session_not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "session-not-found", format!("no session `{id}`"))
    }
}

impl From<kdq_core::Error> for ApiError {
    fn from(e: kdq_core::Error) -> Self {
        let status = if e.is_not_found() {
            StatusCode::NOT_FOUND
        } else if matches!(e, kdq_core::Error::Io { .. } | kdq_core::Error::Cancelled) {
            StatusCode::INTERNAL_SERVER_ERROR
        } else {
            StatusCode::BAD_REQUEST
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            warn!(code = %self.code, message = %self.message, "request failed");
        } else {
            debug!(code = %self.code, message = %self.message, "request rejected");
        }
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/suggest", get(suggest))
        .route("/concepts/{iri}/annotation", get(annotation))
        .route("/concepts/{iri}/relations", get(relations))
        .route("/concepts/{iri}/targets", get(targets))
        .route("/paths", get(paths))
        .route("/sessions", post(new_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/steps", post(add_step))
        .route("/sessions/{id}/selection", post(set_selection))
        .route("/sessions/{id}/filter", post(add_filter))
        .route("/sessions/{id}/nodes/{node}", delete(remove_node))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/sparql", get(sparql))
        .route("/sessions/{id}/execute", post(execute))
        .route("/enrichments", post(submit_enrichment))
        .route("/enrichments/{job}", get(poll_enrichment))
        .with_state(service)
}

/// Loaded datasets followed by the `all` pseudo-dataset.
pub fn dataset_views(service: &Service) -> Vec<DatasetView> {
    let registry = service.engine.registry();
    let mut out: Vec<DatasetView> = registry
        .datasets()
        .iter()
        .map(|d| DatasetView {
            id: d.id.clone(),
            label: d.label.clone(),
            triples: d.graph.len(),
        })
        .collect();
    let total = out.iter().map(|d| d.triples).sum();
    out.push(DatasetView {
        id: "all".into(),
        label: "all datasets".into(),
        triples: total,
    });
    out
}

async fn list_datasets(State(s): State<Shared>) -> Json<Vec<DatasetView>> {
    Json(dataset_views(&s))
}

fn parse_direction(text: Option<&str>) -> Result<Direction, ApiError> {
    match text.unwrap_or("forward") {
        "forward" | "outgoing" => Ok(Direction::Forward),
        "inverse" | "incoming" => Ok(Direction::Inverse),
        other => Err(ApiError::bad_request(format!("unknown direction `{other}`"))),
    }
}

fn resolve_class(onto: &Ontology, text: &str) -> Result<Iri, ApiError> {
    onto.schema
        .resolve_class(text)
        .map(|c| c.iri.clone())
        .ok_or_else(|| kdq_core::Error::UnknownClass(text.to_string()).into())
}

fn resolve_property(onto: &Ontology, text: &str) -> Result<Iri, ApiError> {
    onto.schema
        .resolve_property(text)
        .map(|p| p.iri.clone())
        .ok_or_else(|| kdq_core::Error::UnknownProperty(text.to_string()).into())
}

/// A datatype name or IRI, otherwise a class label or IRI.
fn resolve_target(onto: &Ontology, text: &str) -> Result<NodeKind, ApiError> {
    if let Some(d) = Datatype::from_name(text).or_else(|| Datatype::from_iri(text)) {
        return Ok(NodeKind::Datatype(d));
    }
    resolve_class(onto, text).map(NodeKind::Class)
}

#[derive(Deserialize)]
struct SuggestParams {
    q: Option<String>,
    limit: Option<usize>,
}

async fn suggest(
    State(s): State<Shared>,
    params: Result<Query<SuggestParams>, QueryRejection>,
) -> ApiResult<Vec<Suggestion>> {
    let Query(p) = params?;
    let limit = p.limit.unwrap_or(s.deployment.suggestion_limit).min(MAX_SUGGESTIONS);
    Ok(Json(suggest_concepts(
        &s.engine.onto,
        p.q.as_deref().unwrap_or(""),
        limit,
    )))
}

async fn annotation(State(s): State<Shared>, Path(iri): Path<String>) -> ApiResult<Annotation> {
    let class = resolve_class(&s.engine.onto, &iri)?;
    Ok(Json(annotate(&s.engine.onto, &class)?))
}

#[derive(Deserialize)]
struct RelationParams {
    direction: Option<String>,
}

async fn relations(
    State(s): State<Shared>,
    Path(iri): Path<String>,
    params: Result<Query<RelationParams>, QueryRejection>,
) -> ApiResult<Vec<RelationView>> {
    let Query(p) = params?;
    let dir = parse_direction(p.direction.as_deref())?;
    let class = resolve_class(&s.engine.onto, &iri)?;
    let props = suggest_relations(&s.engine.onto, &class, dir)?;
    Ok(Json(props.into_iter().map(|p| RelationView::new(p, dir)).collect()))
}

#[derive(Deserialize)]
struct TargetParams {
    property: String,
    direction: Option<String>,
}

async fn targets(
    State(s): State<Shared>,
    Path(iri): Path<String>,
    params: Result<Query<TargetParams>, QueryRejection>,
) -> ApiResult<Vec<TargetSuggestion>> {
    let Query(p) = params?;
    let dir = parse_direction(p.direction.as_deref())?;
    let onto = &s.engine.onto;
    let class = resolve_class(onto, &iri)?;
    let property = resolve_property(onto, &p.property)?;
    Ok(Json(suggest_targets(onto, &class, &property, dir)?))
}

#[derive(Deserialize)]
struct PathParams {
    from: String,
    to: String,
    max: Option<usize>,
}

/// Sets the flag when dropped, so an abandoned request stops its search.
struct CancelOnDrop(Arc<AtomicBool>);

impl Drop for CancelOnDrop {
    fn drop(&mut self) {
        self.0.store(true, Ordering::Relaxed);
    }
}

async fn paths(State(s): State<Shared>, params: Result<Query<PathParams>, QueryRejection>) -> ApiResult<Vec<PathView>> {
    let Query(p) = params?;
    let from = resolve_class(&s.engine.onto, &p.from)?;
    let to = resolve_class(&s.engine.onto, &p.to)?;
    let max = p.max.unwrap_or(s.deployment.path_max_length);
    let cancel = Arc::new(AtomicBool::new(false));
    let _guard = CancelOnDrop(cancel.clone());
    let svc = s.clone();
    let found = tokio::task::spawn_blocking(move || {
        let onto = &svc.engine.onto;
        discover_paths(onto, &from, &to, max, Some(&cancel))
            .map(|ps| ps.iter().map(|p| PathView::new(p, onto)).collect::<Vec<_>>())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(found))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NewSessionBody {
    root: String,
    dataset: Option<String>,
}

fn session_view(id: &str, session: &Session, onto: &Ontology) -> SessionView {
    SessionView {
        session_id: id.to_string(),
        can_undo: session.history.len() > 1,
        query: QueryView::new(session.history.current(), onto),
    }
}

async fn new_session(
    State(s): State<Shared>,
    body: Result<Json<NewSessionBody>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(b) = body?;
    let onto = &s.engine.onto;
    let root = resolve_class(onto, &b.root)?;
    let mut q = PathQuery::new(onto, NodeKind::Class(root))?;
    if let Some(ds) = b.dataset {
        let selector = DatasetSelector::parse(&ds);
        s.engine.graphs(&selector)?;
        q = q.with_dataset(selector);
    }
    let id = s.sessions.create(q);
    let session = s.sessions.get(&id).ok_or_else(|| ApiError::session_not_found(&id))?;
    let guard = session.lock().await;
    Ok((StatusCode::CREATED, Json(session_view(&id, &guard, onto))))
}

async fn get_session(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let session = s.sessions.get(&id).ok_or_else(|| ApiError::session_not_found(&id))?;
    let guard = session.lock().await;
    Ok(Json(session_view(&id, &guard, &s.engine.onto)))
}

/// Applies `op` to the session's current query under the session lock.
async fn mutate(
    s: &Service,
    id: &str,
    op: impl FnOnce(&PathQuery, &Service) -> Result<PathQuery, ApiError>,
) -> ApiResult<SessionView> {
    let session = s.sessions.get(id).ok_or_else(|| ApiError::session_not_found(id))?;
    let mut guard = session.lock().await;
    let next = op(guard.history.current(), s)?;
    guard.history.push(next);
    Ok(Json(session_view(id, &guard, &s.engine.onto)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct StepBody {
    from: usize,
    property: String,
    direction: Option<String>,
    target: String,
}

async fn add_step(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<StepBody>, JsonRejection>,
) -> ApiResult<SessionView> {
    let Json(b) = body?;
    mutate(&s, &id, |q, s| {
        let onto = &s.engine.onto;
        let dir = parse_direction(b.direction.as_deref())?;
        let property = resolve_property(onto, &b.property)?;
        let target = resolve_target(onto, &b.target)?;
        Ok(q.add_step(onto, b.from, &property, dir, target)?)
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SelectionBody {
    node: usize,
    op: SelectionOp,
    instances: Vec<String>,
}

async fn set_selection(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<SelectionBody>, JsonRejection>,
) -> ApiResult<SessionView> {
    let Json(b) = body?;
    mutate(&s, &id, |q, s| {
        let instances = b.instances.iter().map(Iri::new).collect::<Result<BTreeSet<_>, _>>()?;
        let graphs = s.engine.graphs(&DatasetSelector::All)?;
        Ok(q.set_instance_selection(&s.engine.onto, &graphs, b.node, b.op, instances)?)
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct FilterBody {
    node: usize,
    comparator: String,
    value: serde_json::Value,
    datatype: Option<String>,
}

fn filter_literal(value: &serde_json::Value, datatype: Option<&str>) -> Result<Literal, ApiError> {
    let dt = match datatype {
        Some(name) => Some(
            Datatype::from_name(name)
                .or_else(|| Datatype::from_iri(name))
                .ok_or_else(|| ApiError::bad_request(format!("unknown datatype `{name}`")))?,
        ),
        None => None,
    };
    let lit = match (value, dt) {
        (serde_json::Value::String(s), Some(d)) => Literal::typed(s, d)?,
        (serde_json::Value::String(s), None) => Literal::string(s),
        (serde_json::Value::Number(n), d) => {
            let d = d.unwrap_or(if n.is_f64() {
                Datatype::Decimal
            } else {
                Datatype::Integer
            });
            Literal::typed(n.to_string(), d)?
        }
        (serde_json::Value::Bool(b), None | Some(Datatype::Boolean)) => Literal::boolean(*b),
        _ => {
            return Err(ApiError::bad_request(
                "filter value must be a string, number or boolean",
            ))
        }
    };
    Ok(lit)
}

async fn add_filter(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<FilterBody>, JsonRejection>,
) -> ApiResult<SessionView> {
    let Json(b) = body?;
    mutate(&s, &id, |q, _| {
        let cmp = Comparator::parse(&b.comparator)
            .ok_or_else(|| ApiError::bad_request(format!("unknown comparator `{}`", b.comparator)))?;
        let value = filter_literal(&b.value, b.datatype.as_deref())?;
        Ok(q.add_literal_filter(b.node, cmp, value)?)
    })
    .await
}

async fn remove_node(State(s): State<Shared>, Path((id, node)): Path<(String, usize)>) -> ApiResult<SessionView> {
    mutate(&s, &id, |q, _| Ok(q.remove_node(node)?)).await
}

async fn undo(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let session = s.sessions.get(&id).ok_or_else(|| ApiError::session_not_found(&id))?;
    let mut guard = session.lock().await;
    guard.history.undo()?;
    Ok(Json(session_view(&id, &guard, &s.engine.onto)))
}

async fn sparql(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<SparqlView> {
    let session = s.sessions.get(&id).ok_or_else(|| ApiError::session_not_found(&id))?;
    let guard = session.lock().await;
    let text = emit_sparql(guard.history.current(), &s.engine.onto);
    Ok(Json(SparqlView {
        text: text.text,
        variables: text.variable_map,
    }))
}

#[derive(Deserialize)]
struct ExecuteParams {
    dataset: Option<String>,
}

async fn execute(
    State(s): State<Shared>,
    Path(id): Path<String>,
    params: Result<Query<ExecuteParams>, QueryRejection>,
) -> ApiResult<ExecuteView> {
    let Query(p) = params?;
    let session = s.sessions.get(&id).ok_or_else(|| ApiError::session_not_found(&id))?;
    let mut guard = session.lock().await;
    let q = guard.history.current().clone();
    let selector = p
        .dataset
        .as_deref()
        .map(DatasetSelector::parse)
        .unwrap_or_else(|| q.dataset().clone());
    let svc = s.clone();
    let sel = selector.clone();
    let (table, hit, parts) = tokio::task::spawn_blocking(move || {
        let (table, hit) = svc.engine.cached_execute(&q, &sel)?;
        let parts = svc.engine.partition(&table, &q, &sel)?;
        Ok::<_, kdq_core::Error>((table, hit, parts))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let onto = &s.engine.onto;
    let enrichable = detect_enrichable_columns(&table, onto);
    let view = ExecuteView::new(selector.to_string(), hit, &table, &parts, enrichable, onto);
    guard.last_table = Some(table);
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct EnrichmentBody {
    session_id: String,
    column: usize,
}

async fn submit_enrichment(
    State(s): State<Shared>,
    body: Result<Json<EnrichmentBody>, JsonRejection>,
) -> Result<(StatusCode, Json<EnrichmentJob>), ApiError> {
    let Json(b) = body?;
    let session = s
        .sessions
        .get(&b.session_id)
        .ok_or_else(|| ApiError::session_not_found(&b.session_id))?;
    let guard = session.lock().await;
    let table = guard.last_table.clone().ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "no-results",
            "execute the query before requesting enrichment",
        )
    })?;
    let job = s.jobs.submit(&table, &s.engine.onto, b.column, s.aligner.clone())?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn poll_enrichment(State(s): State<Shared>, Path(job): Path<String>) -> ApiResult<EnrichmentJob> {
    Ok(Json(s.jobs.poll(&job)?))
}
