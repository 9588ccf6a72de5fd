//! From a flat event log to participants, sessions, code example views,
//! annotation views and search actions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use super::config::AnalysisConfig;
use super::event::{Detail, EventType, Format, InteractionEvent, Millis, OpenClose, SelectionAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitOrigin {
    Cookie,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub pid: u64,
    pub sid: Option<String>,
    pub start: Millis,
    pub end: Millis,
    pub split_origin: SplitOrigin,
    pub events: Vec<InteractionEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeExampleView {
    pub did: String,
    /// Index of the session within the participant's sessions.
    pub session: usize,
    pub format: Format,
    /// Started by an action after a gap split rather than by opening.
    pub synthetic: bool,
    pub start: Millis,
    pub actions: Vec<InteractionEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HoverSegment {
    pub first: Millis,
    pub last: Millis,
    pub dwell_ms: u64,
    pub events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenedVia {
    Anchor,
    Navigation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationView {
    pub annotation: String,
    pub start: Millis,
    pub hovers: Vec<HoverSegment>,
    pub pinned: bool,
    pub unpinned: bool,
    pub opened_via: OpenedVia,
    /// An unpin arrived without a pin; the view was taken as pinned.
    pub coerced: bool,
}

impl AnnotationView {
    pub fn is_hover_only(&self) -> bool {
        !self.pinned
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchInteraction {
    pub annotation: String,
    pub action: SelectionAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchAction {
    pub final_query: String,
    pub keystrokes: usize,
    pub start: Millis,
    pub end: Millis,
    pub interactions: Vec<SearchInteraction>,
}

impl SearchAction {
    pub fn selected(&self) -> bool {
        self.interactions.iter().any(|i| i.action == SelectionAction::Select)
    }

    pub fn hovered_only(&self) -> bool {
        !self.selected() && !self.interactions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IssueKind {
    NoConsent,
    Withdrawn,
    /// Action on a document the participant never opened.
    Orphan { did: String },
    UnpinWithoutPin { annotation: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub pid: u64,
    pub t: Option<Millis>,
    pub kind: IssueKind,
}

impl core::fmt::Display for Issue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "participant {}", self.pid)?;
        if let Some(t) = self.t {
            write!(f, " at {}", super::event::format_timestamp(t))?;
        }
        match &self.kind {
            IssueKind::NoConsent => f.write_str(": no consent event; excluded"),
            IssueKind::Withdrawn => f.write_str(": withdrew consent; excluded"),
            IssueKind::Orphan { did } => write!(f, ": action on never-opened document `{did}` dropped"),
            IssueKind::UnpinWithoutPin { annotation } => {
                write!(f, ": unpin of `{annotation}` without a pin; taken as pinned")
            }
        }
    }
}

/// Events of each participant, sorted by time (stable).
pub fn group_by_participant(events: &[InteractionEvent]) -> BTreeMap<u64, Vec<InteractionEvent>> {
    let mut by: BTreeMap<u64, Vec<InteractionEvent>> = BTreeMap::new();
    for e in events {
        if let Some(pid) = e.pid {
            by.entry(pid).or_default().push(e.clone());
        }
    }
    for list in by.values_mut() {
        list.sort_by_key(|e| e.t);
    }
    by
}

/// Participants kept for analysis, with their consent time. A participant
/// is kept iff some event falls strictly after the end of the learning
/// period that follows their first consent. Participants without consent,
/// or who withdrew, are excluded and reported.
pub fn filter_participants(
    by_pid: &BTreeMap<u64, Vec<InteractionEvent>>,
    cfg: &AnalysisConfig,
) -> (BTreeMap<u64, Millis>, Vec<Issue>) {
    let mut kept = BTreeMap::new();
    let mut issues = Vec::new();
    for (&pid, events) in by_pid {
        if let Some(w) = events.iter().find(|e| e.kind == EventType::Withdraw) {
            issues.push(Issue { pid, t: Some(w.t), kind: IssueKind::Withdrawn });
            continue;
        }
        let Some(consent) = events.iter().filter(|e| e.kind == EventType::Consent).map(|e| e.t).min() else {
            issues.push(Issue { pid, t: None, kind: IssueKind::NoConsent });
            continue;
        };
        if events.iter().any(|e| e.t > consent + cfg.learning_period) {
            kept.insert(pid, consent);
        }
    }
    (kept, issues)
}

/// Splits one participant's events first at session-cookie changes, then
/// at every inactivity gap of at least `session_gap`.
pub fn split_sessions(pid: u64, events: &[InteractionEvent], cfg: &AnalysisConfig) -> Vec<Session> {
    let mut sorted: Vec<&InteractionEvent> = events.iter().collect();
    sorted.sort_by_key(|e| e.t);
    let mut sessions: Vec<Session> = Vec::new();
    let mut cookie: Option<&str> = None;
    for e in sorted {
        let sid = e.sid.as_deref();
        let origin = match sessions.last() {
            None => Some(SplitOrigin::Cookie),
            Some(_) if sid.is_some() && cookie.is_some() && sid != cookie => Some(SplitOrigin::Cookie),
            Some(last) if e.t - last.end >= cfg.session_gap => Some(SplitOrigin::Gap),
            Some(_) => None,
        };
        if sid.is_some() {
            cookie = sid;
        }
        match origin {
            Some(split_origin) => sessions.push(Session {
                pid,
                sid: cookie.map(String::from),
                start: e.t,
                end: e.t,
                split_origin,
                events: alloc::vec![e.clone()],
            }),
            None => {
                let s = sessions.last_mut().expect("a session is open");
                if s.sid.is_none() {
                    s.sid = cookie.map(String::from);
                }
                s.end = e.t;
                s.events.push(e.clone());
            }
        }
    }
    sessions
}

/// Code example views of one participant across their sessions. Opening
/// (or changing the format of) a document starts a view; actions attach
/// to the latest view of their document in the same session. An action on
/// a document opened in an earlier session starts a synthetic view.
pub fn derive_views(sessions: &[Session]) -> (Vec<CodeExampleView>, Vec<Issue>) {
    let mut views: Vec<CodeExampleView> = Vec::new();
    let mut issues = Vec::new();
    let mut last_format: BTreeMap<String, Format> = BTreeMap::new();
    for (si, session) in sessions.iter().enumerate() {
        let mut current: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &session.events {
            let Some(did) = e.did.as_deref() else { continue };
            match e.kind {
                EventType::OpenExample | EventType::ChangeFormat => {
                    let format = e.format().unwrap_or(Format::Casdoc);
                    current.insert(did, views.len());
                    last_format.insert(String::from(did), format);
                    views.push(CodeExampleView {
                        did: String::from(did),
                        session: si,
                        format,
                        synthetic: false,
                        start: e.t,
                        actions: alloc::vec![e.clone()],
                    });
                }
                k if k.is_client() => {
                    if let Some(&v) = current.get(did) {
                        views[v].actions.push(e.clone());
                    } else if let Some(&format) = last_format.get(did) {
                        current.insert(did, views.len());
                        views.push(CodeExampleView {
                            did: String::from(did),
                            session: si,
                            format,
                            synthetic: true,
                            start: e.t,
                            actions: alloc::vec![e.clone()],
                        });
                    } else {
                        issues.push(Issue {
                            pid: session.pid,
                            t: Some(e.t),
                            kind: IssueKind::Orphan { did: String::from(did) },
                        });
                    }
                }
                _ => {}
            }
        }
    }
    (views, issues)
}

struct OpenView {
    slot: usize,
    last_hover: Option<Millis>,
}

/// Groups hover, pin and unpin events per annotation following
/// `hovers* pin? unpin?`. Hovers shorter than `hover_min` are dropped; a
/// hover joins the open unpinned view when it comes less than
/// `hover_merge` after the previous hover. A pin from the anchor joins the
/// open unpinned view; a pin from a navigation aid starts a view of its
/// own. Hovers while pinned belong to the pinned view.
pub fn group_annotation_views(pid: u64, view: &CodeExampleView, cfg: &AnnotationViewConfig) -> (Vec<AnnotationView>, Vec<Issue>) {
    let mut out: Vec<AnnotationView> = Vec::new();
    let mut issues = Vec::new();
    let mut open: BTreeMap<&str, OpenView> = BTreeMap::new();
    for e in &view.actions {
        match &e.detail {
            Detail::Marker { marker, dwell_ms } => {
                if (*dwell_ms as i128) < cfg.hover_min as i128 {
                    continue;
                }
                let seg = HoverSegment { first: e.t, last: e.t, dwell_ms: *dwell_ms, events: 1 };
                if let Some(ov) = open.get_mut(marker.as_str()) {
                    let v = &mut out[ov.slot];
                    let near = ov.last_hover.is_some_and(|h| e.t - h < cfg.hover_merge);
                    if v.pinned || near {
                        match v.hovers.last_mut() {
                            Some(last) if near => {
                                last.last = e.t;
                                last.dwell_ms += dwell_ms;
                                last.events += 1;
                            }
                            _ => v.hovers.push(seg),
                        }
                        ov.last_hover = Some(e.t);
                        continue;
                    }
                }
                open.insert(marker.as_str(), OpenView { slot: out.len(), last_hover: Some(e.t) });
                out.push(AnnotationView {
                    annotation: marker.clone(),
                    start: e.t,
                    hovers: alloc::vec![seg],
                    pinned: false,
                    unpinned: false,
                    opened_via: OpenedVia::Anchor,
                    coerced: false,
                });
            }
            Detail::Annotation { annotation, action: OpenClose::Open, via } => {
                let id = annotation.as_str();
                if !via.is_navigation() {
                    if let Some(ov) = open.get(id) {
                        if !out[ov.slot].pinned {
                            out[ov.slot].pinned = true;
                            continue;
                        }
                    }
                }
                open.insert(id, OpenView { slot: out.len(), last_hover: None });
                out.push(AnnotationView {
                    annotation: annotation.clone(),
                    start: e.t,
                    hovers: Vec::new(),
                    pinned: true,
                    unpinned: false,
                    opened_via: if via.is_navigation() { OpenedVia::Navigation } else { OpenedVia::Anchor },
                    coerced: false,
                });
            }
            Detail::Annotation { annotation, action: OpenClose::Close, via } => {
                let id = annotation.as_str();
                match open.remove(id) {
                    Some(ov) if out[ov.slot].pinned => out[ov.slot].unpinned = true,
                    Some(ov) => {
                        issues.push(Issue { pid, t: Some(e.t), kind: IssueKind::UnpinWithoutPin { annotation: annotation.clone() } });
                        let v = &mut out[ov.slot];
                        v.pinned = true;
                        v.unpinned = true;
                        v.coerced = true;
                    }
                    None => {
                        issues.push(Issue { pid, t: Some(e.t), kind: IssueKind::UnpinWithoutPin { annotation: annotation.clone() } });
                        out.push(AnnotationView {
                            annotation: annotation.clone(),
                            start: e.t,
                            hovers: Vec::new(),
                            pinned: true,
                            unpinned: true,
                            opened_via: if via.is_navigation() { OpenedVia::Navigation } else { OpenedVia::Anchor },
                            coerced: true,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    (out, issues)
}

/// The two thresholds annotation grouping needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotationViewConfig {
    pub hover_merge: Millis,
    pub hover_min: Millis,
}

impl From<&AnalysisConfig> for AnnotationViewConfig {
    fn from(c: &AnalysisConfig) -> Self {
        Self { hover_merge: c.hover_merge, hover_min: c.hover_min }
    }
}

fn shares_prefix(a: &str, b: &str) -> bool {
    matches!((a.chars().next(), b.chars().next()), (Some(x), Some(y)) if x.to_lowercase().eq(y.to_lowercase()))
}

/// Groups incremental search keystrokes into actions. A query continues
/// the current action when both share a non-empty common prefix and less
/// than `hover_merge` has passed; result hovers and selections attach to
/// the latest action whose final query they were made from.
pub fn group_search_actions(view: &CodeExampleView, hover_merge: Millis) -> Vec<SearchAction> {
    let mut out: Vec<SearchAction> = Vec::new();
    for e in &view.actions {
        let Detail::Search { query, selections } = &e.detail else { continue };
        let q = query.trim();
        if !selections.is_empty() {
            let target = out.iter().rposition(|a| a.final_query == q);
            let slot = match target {
                Some(i) => i,
                None => {
                    out.push(SearchAction {
                        final_query: String::from(q),
                        keystrokes: 0,
                        start: e.t,
                        end: e.t,
                        interactions: Vec::new(),
                    });
                    out.len() - 1
                }
            };
            let a = &mut out[slot];
            a.end = a.end.max(e.t);
            a.interactions.extend(
                selections.iter().map(|s| SearchInteraction { annotation: s.annotation.clone(), action: s.action }),
            );
            continue;
        }
        if q.is_empty() {
            continue;
        }
        match out.last_mut() {
            Some(a) if e.t - a.end < hover_merge && shares_prefix(&a.final_query, q) => {
                a.final_query = String::from(q);
                a.keystrokes += 1;
                a.end = e.t;
            }
            _ => out.push(SearchAction {
                final_query: String::from(q),
                keystrokes: 1,
                start: e.t,
                end: e.t,
                interactions: Vec::new(),
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantData {
    pub pid: u64,
    pub consent: Millis,
    pub sessions: Vec<Session>,
    pub views: Vec<CodeExampleView>,
    /// Parallel to `views`.
    pub annotation_views: Vec<Vec<AnnotationView>>,
    /// Parallel to `views`.
    pub searches: Vec<Vec<SearchAction>>,
}

impl ParticipantData {
    pub fn is_learning(&self, t: Millis, cfg: &AnalysisConfig) -> bool {
        t <= self.consent + cfg.learning_period
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reconstruction {
    pub participants: Vec<ParticipantData>,
    pub issues: Vec<Issue>,
    /// Participants with consent but no activity after the learning period.
    pub excluded_learning_only: BTreeSet<u64>,
}

/// The whole reconstruction, participant by participant.
pub fn reconstruct(events: &[InteractionEvent], cfg: &AnalysisConfig) -> Reconstruction {
    let by_pid = group_by_participant(events);
    let (kept, mut issues) = filter_participants(&by_pid, cfg);
    let excluded_learning_only = by_pid
        .keys()
        .filter(|p| !kept.contains_key(p) && !issues.iter().any(|i| i.pid == **p))
        .copied()
        .collect();
    let av_cfg = AnnotationViewConfig::from(cfg);
    let mut participants = Vec::with_capacity(kept.len());
    for (pid, consent) in kept {
        let sessions = split_sessions(pid, &by_pid[&pid], cfg);
        let (views, view_issues) = derive_views(&sessions);
        issues.extend(view_issues);
        let mut annotation_views = Vec::with_capacity(views.len());
        let mut searches = Vec::with_capacity(views.len());
        for v in &views {
            let (avs, av_issues) = group_annotation_views(pid, v, &av_cfg);
            issues.extend(av_issues);
            annotation_views.push(avs);
            searches.push(group_search_actions(v, cfg.hover_merge));
        }
        participants.push(ParticipantData { pid, consent, sessions, views, annotation_views, searches });
    }
    Reconstruction { participants, issues, excluded_learning_only }
}
