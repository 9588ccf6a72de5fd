//! Static document server with the telemetry ingest endpoint.
//!
//! Routes:
//! - `POST /events`: a JSON array of client events, appended all or nothing
//! - `POST /consent`, `POST /withdraw`: participant cookies
//! - `GET /doc/{id}`: the document in the reader's last used format
//! - `GET /format/{format}?doc={id}`: switch format and show the document
//! - anything else: files under the served directory
//!
//! Server-side events (page visits, consent, sessions, document opens and
//! format changes) are logged here; client events only arrive by POST.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Body;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use axum_extra::extract::cookie::{Cookie, CookieJar, SameSite};
use casdoc_core::telemetry::{parse_batch, BatchError, Detail, EventType, Format, InteractionEvent};
use serde::Deserialize;

use crate::convert::{BASELINE_SUFFIX, HTML_SUFFIX};

pub const PID_COOKIE: &str = "pid";
pub const SID_COOKIE: &str = "sid";
pub const FORMAT_COOKIE: &str = "format";
pub const ACCEPTED_HEADER: &str = "x-accepted";

/// Append-only newline-delimited event log. Each batch is written with a
/// single call while holding the lock, so batches never interleave.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl EventLog {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, events: &[InteractionEvent]) -> io::Result<()> {
        if events.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for e in events {
            buf.push_str(&e.to_line());
            buf.push('\n');
        }
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(buf.as_bytes())
    }

    pub fn sync(&self) -> io::Result<()> {
        self.file.lock().unwrap_or_else(|p| p.into_inner()).sync_data()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error("event {index}: `{kind}` events are recorded by the server, not posted")]
    ServerOrigin { index: usize, kind: EventType },
    #[error("cannot write the event log: {0}")]
    Io(#[from] io::Error),
}

/// Validates a POST body and appends it. Returns the number of events
/// written.
pub fn ingest(log: &EventLog, body: &str) -> Result<usize, IngestError> {
    let events = parse_batch(body)?;
    if let Some((index, e)) = events.iter().enumerate().find(|(_, e)| !e.kind.is_client()) {
        return Err(IngestError::ServerOrigin { index, kind: e.kind });
    }
    log.append(&events)?;
    Ok(events.len())
}

#[derive(Clone)]
pub struct AppState {
    pub root: Arc<PathBuf>,
    pub log: Arc<EventLog>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/events", post(post_events))
        .route("/consent", post(post_consent))
        .route("/withdraw", post(post_withdraw))
        .route("/doc/{id}", get(get_doc))
        .route("/format/{format}", get(get_format))
        .fallback(get(get_static))
        .with_state(state)
}

fn now() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64)
}

fn event(kind: EventType, pid: Option<u64>, sid: Option<&str>, did: Option<&str>, detail: Detail) -> InteractionEvent {
    InteractionEvent { t: now(), kind, pid, sid: sid.map(String::from), did: did.map(String::from), detail }
}

fn pid_of(jar: &CookieJar) -> Option<u64> {
    jar.get(PID_COOKIE).and_then(|c| c.value().parse().ok())
}

fn sid_of(jar: &CookieJar) -> Option<String> {
    jar.get(SID_COOKIE).map(|c| c.value().to_string()).filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric()))
}

fn cookie(name: &'static str, value: String, persistent: bool) -> Cookie<'static> {
    let mut c = Cookie::new(name, value);
    c.set_path("/");
    c.set_same_site(SameSite::Lax);
    if persistent {
        c.make_permanent();
    }
    c
}

fn write_events(state: &AppState, events: &[InteractionEvent]) -> Result<(), Box<Response>> {
    state.log.append(events).map_err(|e| Box::new((StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response()))
}

async fn post_events(State(state): State<AppState>, body: String) -> Response {
    match ingest(&state.log, &body) {
        Ok(n) => (StatusCode::NO_CONTENT, [(ACCEPTED_HEADER, n.to_string())]).into_response(),
        Err(IngestError::Io(e)) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        Err(e) => (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    }
}

async fn post_consent(State(state): State<AppState>, jar: CookieJar) -> Response {
    let pid = pid_of(&jar).unwrap_or_else(rand::random);
    let sid = sid_of(&jar).unwrap_or_else(|| rand::random::<u64>().to_string());
    if let Err(r) = write_events(&state, &[event(EventType::Consent, Some(pid), Some(&sid), None, Detail::None)]) {
        return *r;
    }
    let jar = jar.add(cookie(PID_COOKIE, pid.to_string(), true)).add(cookie(SID_COOKIE, sid, false));
    (jar, StatusCode::NO_CONTENT).into_response()
}

async fn post_withdraw(State(state): State<AppState>, jar: CookieJar) -> Response {
    let Some(pid) = pid_of(&jar) else {
        return (StatusCode::BAD_REQUEST, "no participant cookie").into_response();
    };
    if let Err(r) = write_events(&state, &[event(EventType::Withdraw, Some(pid), None, None, Detail::None)]) {
        return *r;
    }
    let jar = jar.remove(Cookie::build(PID_COOKIE).path("/")).remove(Cookie::build(SID_COOKIE).path("/"));
    (jar, StatusCode::NO_CONTENT).into_response()
}

fn is_doc_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn doc_path(root: &Path, id: &str, format: Format) -> PathBuf {
    match format {
        Format::Casdoc => root.join(format!("{id}{HTML_SUFFIX}")),
        Format::Baseline => root.join(format!("{id}{BASELINE_SUFFIX}")),
    }
}

fn content_type(path: &Path) -> &'static str {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    match name.rsplit_once('.').map(|(_, ext)| ext) {
        Some("html") => "text/html; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("js") => "text/javascript; charset=utf-8",
        Some("json") => "application/json",
        Some("java" | "txt" | "md") => "text/plain; charset=utf-8",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

fn file_response(path: &Path, bytes: Vec<u8>) -> Response {
    let mut r = Response::new(Body::from(bytes));
    r.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type(path)));
    r
}

/// Events logged when a document is shown: the page visit, a session start
/// when the participant has none, and the open or format change.
fn document_events(jar: CookieJar, id: &str, format: Format, kind: EventType) -> (CookieJar, Vec<InteractionEvent>) {
    let mut events = vec![event(EventType::VisitPage, None, None, Some(id), Detail::None)];
    let Some(pid) = pid_of(&jar) else { return (jar, events) };
    let (jar, sid) = match sid_of(&jar) {
        Some(sid) => (jar, sid),
        None => {
            let sid = rand::random::<u64>().to_string();
            events.push(event(EventType::SessionStart, Some(pid), Some(&sid), None, Detail::None));
            (jar.add(cookie(SID_COOKIE, sid.clone(), false)), sid)
        }
    };
    events.push(event(kind, Some(pid), Some(&sid), Some(id), Detail::Format(format)));
    (jar, events)
}

async fn show_document(state: &AppState, jar: CookieJar, id: &str, format: Format, kind: EventType) -> Response {
    let path = doc_path(&state.root, id, format);
    let Ok(bytes) = tokio::fs::read(&path).await else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let (jar, events) = document_events(jar, id, format, kind);
    if let Err(r) = write_events(state, &events) {
        return *r;
    }
    (jar, file_response(&path, bytes)).into_response()
}

async fn get_doc(State(state): State<AppState>, jar: CookieJar, UrlPath(id): UrlPath<String>) -> Response {
    if !is_doc_id(&id) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let format = jar.get(FORMAT_COOKIE).and_then(|c| Format::parse(c.value())).unwrap_or(Format::Casdoc);
    show_document(&state, jar, &id, format, EventType::OpenExample).await
}

#[derive(Deserialize)]
struct FormatQuery {
    doc: Option<String>,
}

async fn get_format(
    State(state): State<AppState>,
    jar: CookieJar,
    UrlPath(format): UrlPath<String>,
    Query(q): Query<FormatQuery>,
) -> Response {
    let Some(format) = Format::parse(&format) else {
        return (StatusCode::BAD_REQUEST, "unknown format").into_response();
    };
    let jar = jar.add(cookie(FORMAT_COOKIE, format.as_str().to_string(), true));
    match q.doc {
        Some(id) if is_doc_id(&id) => show_document(&state, jar, &id, format, EventType::ChangeFormat).await,
        Some(_) => StatusCode::NOT_FOUND.into_response(),
        None => (jar, StatusCode::NO_CONTENT).into_response(),
    }
}

/// Resolves a request path under the root, refusing anything that could
/// leave it.
fn resolve(root: &Path, uri_path: &str) -> Option<PathBuf> {
    let rel = uri_path.trim_start_matches('/');
    let rel = if rel.is_empty() || rel.ends_with('/') { format!("{rel}index.html") } else { rel.to_string() };
    if rel.contains('%') || rel.contains('\\') {
        return None;
    }
    let rel = Path::new(&rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

async fn get_static(State(state): State<AppState>, jar: CookieJar, uri: Uri) -> Response {
    let Some(path) = resolve(&state.root, uri.path()) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let in_root = path.parent() == Some(state.root.as_path());
    if in_root {
        if let Some(id) = name.strip_suffix(BASELINE_SUFFIX).filter(|id| is_doc_id(id)) {
            return show_document(&state, jar, id, Format::Baseline, EventType::OpenExample).await;
        }
    }
    let Ok(bytes) = tokio::fs::read(&path).await else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let is_document = in_root && name.ends_with(HTML_SUFFIX) && {
        let head = &bytes[..bytes.len().min(4096)];
        String::from_utf8_lossy(head).contains("name=\"casdoc:format\"")
    };
    if is_document {
        if let Some(id) = name.strip_suffix(HTML_SUFFIX).filter(|id| is_doc_id(id)) {
            let (jar, events) = document_events(jar, id, Format::Casdoc, EventType::OpenExample);
            if let Err(r) = write_events(&state, &events) {
                return *r;
            }
            return (jar, file_response(&path, bytes)).into_response();
        }
    }
    file_response(&path, bytes)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("{0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("cannot open event log {0}: {1}")]
    Log(PathBuf, io::Error),
    #[error("cannot listen on {0}: {1}")]
    Bind(SocketAddr, io::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Serves until interrupted, then flushes the log to disk.
pub async fn run(root: PathBuf, addr: SocketAddr, log_path: PathBuf) -> Result<(), ServeError> {
    if !root.is_dir() {
        return Err(ServeError::NotADirectory(root));
    }
    let log = Arc::new(EventLog::open(&log_path).map_err(|e| ServeError::Log(log_path.clone(), e))?);
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| ServeError::Bind(addr, e))?;
    eprintln!("serving {} on http://{}", root.display(), listener.local_addr()?);
    let state = AppState { root: Arc::new(root), log: log.clone() };
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    log.sync()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_stay_inside_root() {
        let root = Path::new("/srv");
        assert_eq!(resolve(root, "/a/b.html"), Some(PathBuf::from("/srv/a/b.html")));
        assert_eq!(resolve(root, "/"), Some(PathBuf::from("/srv/index.html")));
        assert_eq!(resolve(root, "/../etc/passwd"), None);
        assert_eq!(resolve(root, "/a/%2e%2e/x"), None);
    }
}
