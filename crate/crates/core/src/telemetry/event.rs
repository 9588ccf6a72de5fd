use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Milliseconds since the Unix epoch, UTC.
pub type Millis = i64;

pub const SECOND: Millis = 1000;
pub const MINUTE: Millis = 60 * SECOND;
pub const HOUR: Millis = 60 * MINUTE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    VisitPage,
    Consent,
    Withdraw,
    SessionStart,
    OpenExample,
    ChangeFormat,
    OpenCloseAnnotation,
    InteractMarker,
    Search,
    NavigationWidget,
}

/// Which ids an event must carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequiredIds {
    pub pid: bool,
    pub sid: bool,
    pub did: bool,
}

impl EventType {
    pub const ALL: [EventType; 10] = [
        EventType::VisitPage,
        EventType::Consent,
        EventType::Withdraw,
        EventType::SessionStart,
        EventType::OpenExample,
        EventType::ChangeFormat,
        EventType::OpenCloseAnnotation,
        EventType::InteractMarker,
        EventType::Search,
        EventType::NavigationWidget,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::VisitPage => "visit_page",
            EventType::Consent => "consent",
            EventType::Withdraw => "withdraw",
            EventType::SessionStart => "session_start",
            EventType::OpenExample => "open_example",
            EventType::ChangeFormat => "change_format",
            EventType::OpenCloseAnnotation => "open_close_annotation",
            EventType::InteractMarker => "interact_marker",
            EventType::Search => "search",
            EventType::NavigationWidget => "navigation_widget",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn required_ids(self) -> RequiredIds {
        let (pid, sid, did) = match self {
            EventType::VisitPage => (false, false, true),
            EventType::Consent | EventType::SessionStart => (true, true, false),
            EventType::Withdraw => (true, false, false),
            _ => (true, true, true),
        };
        RequiredIds { pid, sid, did }
    }

    /// Sent by the document's script rather than logged by the server.
    pub fn is_client(self) -> bool {
        matches!(
            self,
            EventType::OpenCloseAnnotation | EventType::InteractMarker | EventType::Search | EventType::NavigationWidget
        )
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Casdoc,
    Baseline,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Casdoc => "casdoc",
            Format::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "casdoc" => Some(Format::Casdoc),
            "baseline" => Some(Format::Baseline),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenClose {
    /// Pin.
    Open,
    /// Unpin.
    Close,
}

/// What opened or closed a pinned annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Via {
    Anchor,
    Search,
    Breadcrumb,
    Walkthrough,
    Undo,
    Redo,
    State,
}

impl Via {
    pub fn is_navigation(self) -> bool {
        self != Via::Anchor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Widget {
    Breadcrumb,
    Undo,
    Redo,
    Walkthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionAction {
    Hover,
    Select,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub annotation: String,
    pub action: SelectionAction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Detail {
    None,
    Format(Format),
    Annotation { annotation: String, action: OpenClose, via: Via },
    Marker { marker: String, dwell_ms: u64 },
    Search { query: String, selections: Vec<Selection> },
    Navigation { widget: Widget, result: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionEvent {
    pub t: Millis,
    pub kind: EventType,
    pub pid: Option<u64>,
    pub sid: Option<String>,
    pub did: Option<String>,
    pub detail: Detail,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("not an event object: {0}")]
    Shape(String),
    #[error("unknown event type `{0}`")]
    UnknownType(String),
    #[error("timestamp `{0}` is not an ISO-8601 instant")]
    Timestamp(String),
    #[error("pid `{0}` is not a 64-bit unsigned decimal")]
    Pid(String),
    #[error("{kind} requires `{field}`")]
    MissingId { kind: EventType, field: &'static str },
    #[error("{kind} must not carry `{field}`")]
    UnexpectedId { kind: EventType, field: &'static str },
    #[error("`{field}` must be a non-empty slug")]
    BadId { field: &'static str },
    #[error("{kind} detail: {message}")]
    Detail { kind: EventType, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BatchError {
    #[error("batch is not a JSON array of events: {0}")]
    NotArray(String),
    #[error("event {index}: {error}")]
    Event { index: usize, error: EventError },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireEvent {
    t: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    did: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    detail: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FormatDetail {
    format: Format,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationDetail {
    annotation: String,
    action: OpenClose,
    via: Via,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkerDetail {
    marker: String,
    dwell_ms: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchDetail {
    query: String,
    #[serde(default)]
    selections: Vec<Selection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NavigationDetail {
    widget: Widget,
    result: String,
}

pub fn parse_timestamp(s: &str) -> Option<Millis> {
    DateTime::parse_from_rfc3339(s).ok().map(|d| d.timestamp_millis())
}

pub fn format_timestamp(t: Millis) -> String {
    DateTime::<Utc>::from_timestamp_millis(t)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Millis, true))
        .unwrap_or_else(|| t.to_string())
}

fn is_id(s: &str) -> bool {
    !s.is_empty() && s.len() <= 200 && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

fn parse_detail(kind: EventType, detail: Option<Value>) -> Result<Detail, EventError> {
    fn take<T: serde::de::DeserializeOwned>(kind: EventType, v: Option<Value>) -> Result<T, EventError> {
        let v = v.ok_or_else(|| EventError::Detail { kind, message: "missing".into() })?;
        serde_json::from_value(v).map_err(|e| EventError::Detail { kind, message: e.to_string() })
    }
    let bad = |message: &str| EventError::Detail { kind, message: message.to_string() };
    Ok(match kind {
        EventType::VisitPage | EventType::Consent | EventType::Withdraw | EventType::SessionStart => match detail {
            None | Some(Value::Null) => Detail::None,
            Some(Value::Object(m)) if m.is_empty() => Detail::None,
            Some(_) => return Err(bad("takes no detail")),
        },
        EventType::OpenExample | EventType::ChangeFormat => Detail::Format(take::<FormatDetail>(kind, detail)?.format),
        EventType::OpenCloseAnnotation => {
            let d: AnnotationDetail = take(kind, detail)?;
            if !is_id(&d.annotation) {
                return Err(bad("annotation id must be a slug"));
            }
            Detail::Annotation { annotation: d.annotation, action: d.action, via: d.via }
        }
        EventType::InteractMarker => {
            let d: MarkerDetail = take(kind, detail)?;
            if !is_id(&d.marker) {
                return Err(bad("marker id must be a slug"));
            }
            Detail::Marker { marker: d.marker, dwell_ms: d.dwell_ms }
        }
        EventType::Search => {
            let d: SearchDetail = take(kind, detail)?;
            if d.selections.iter().any(|s| !is_id(&s.annotation)) {
                return Err(bad("selection annotation id must be a slug"));
            }
            Detail::Search { query: d.query, selections: d.selections }
        }
        EventType::NavigationWidget => {
            let d: NavigationDetail = take(kind, detail)?;
            Detail::Navigation { widget: d.widget, result: d.result }
        }
    })
}

impl InteractionEvent {
    /// Validates one wire object.
    pub fn from_value(v: Value) -> Result<Self, EventError> {
        let w: WireEvent = serde_json::from_value(v).map_err(|e| EventError::Shape(e.to_string()))?;
        Self::from_wire(w)
    }

    fn from_wire(w: WireEvent) -> Result<Self, EventError> {
        let kind = EventType::parse(&w.kind).ok_or_else(|| EventError::UnknownType(w.kind.clone()))?;
        let t = parse_timestamp(&w.t).ok_or_else(|| EventError::Timestamp(w.t.clone()))?;
        let req = kind.required_ids();
        let pid = match w.pid {
            Some(p) => {
                let ok = !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
                Some(p.parse::<u64>().ok().filter(|_| ok).ok_or(EventError::Pid(p))?)
            }
            None => None,
        };
        for (present, required, field) in
            [(pid.is_some(), req.pid, "pid"), (w.sid.is_some(), req.sid, "sid"), (w.did.is_some(), req.did, "did")]
        {
            if required && !present {
                return Err(EventError::MissingId { kind, field });
            }
            if present && !required {
                return Err(EventError::UnexpectedId { kind, field });
            }
        }
        if w.sid.as_deref().is_some_and(|s| !is_id(s)) {
            return Err(EventError::BadId { field: "sid" });
        }
        if w.did.as_deref().is_some_and(|s| !is_id(s)) {
            return Err(EventError::BadId { field: "did" });
        }
        let detail = parse_detail(kind, w.detail)?;
        Ok(Self { t, kind, pid, sid: w.sid, did: w.did, detail })
    }

    fn to_wire(&self) -> WireEvent {
        let detail = match &self.detail {
            Detail::None => None,
            Detail::Format(f) => Some(serde_json::json!({ "format": f.as_str() })),
            Detail::Annotation { annotation, action, via } => {
                Some(serde_json::json!({ "annotation": annotation, "action": action, "via": via }))
            }
            Detail::Marker { marker, dwell_ms } => Some(serde_json::json!({ "marker": marker, "dwell_ms": dwell_ms })),
            Detail::Search { query, selections } => Some(serde_json::json!({ "query": query, "selections": selections })),
            Detail::Navigation { widget, result } => Some(serde_json::json!({ "widget": widget, "result": result })),
        };
        WireEvent {
            t: format_timestamp(self.t),
            kind: self.kind.as_str().to_string(),
            pid: self.pid.map(|p| p.to_string()),
            sid: self.sid.clone(),
            did: self.did.clone(),
            detail,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self.to_wire()).expect("event serializes")
    }

    /// One log line, without the terminator.
    pub fn to_line(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("event serializes")
    }

    pub fn parse_line(line: &str) -> Result<Self, EventError> {
        let w: WireEvent = serde_json::from_str(line).map_err(|e| EventError::Shape(e.to_string()))?;
        Self::from_wire(w)
    }

    pub fn format(&self) -> Option<Format> {
        match self.detail {
            Detail::Format(f) => Some(f),
            _ => None,
        }
    }
}

/// Parses a POST body: a JSON array of events. Any invalid event rejects
/// the whole batch.
pub fn parse_batch(body: &str) -> Result<Vec<InteractionEvent>, BatchError> {
    let items: Vec<Value> = serde_json::from_str(body).map_err(|e| BatchError::NotArray(e.to_string()))?;
    items
        .into_iter()
        .enumerate()
        .map(|(index, v)| InteractionEvent::from_value(v).map_err(|error| BatchError::Event { index, error }))
        .collect()
}

/// A log line that could not be read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogIssue {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

/// Reads a newline-delimited log, skipping blank and corrupt lines.
pub fn parse_log(text: &str) -> (Vec<InteractionEvent>, Vec<LogIssue>) {
    let mut events = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match InteractionEvent::parse_line(line) {
            Ok(e) => events.push(e),
            Err(e) => issues.push(LogIssue { line: i + 1, message: e.to_string() }),
        }
    }
    (events, issues)
}
