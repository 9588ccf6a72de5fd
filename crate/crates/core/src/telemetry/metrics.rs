//! Usage tallies and the metric report built from them.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::catalog::{Catalog, MarkerKind};
use super::config::AnalysisConfig;
use super::event::{Detail, EventType, Format, Widget};
use super::reconstruct::{OpenedVia, ParticipantData, Reconstruction};
use super::stats::sign_test;
use crate::graph::NodeKind;

/// Raw counts behind every metric. Filled from a reconstruction by
/// [`count_usage`], or directly when only published counts are known.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct UsageCounts {
    pub participants: u64,
    pub only_casdoc: u64,
    pub tried_baseline: u64,
    pub baseline_learning_only: u64,
    pub baseline_one_document: u64,
    pub baseline_one_session: u64,
    pub baseline_multiple_sessions: u64,
    pub changed_more_than_once: u64,
    pub kept_baseline: u64,

    pub annotation_views: u64,
    pub participants_using_annotations: u64,
    pub annotated_document_views: u64,
    pub annotated_document_views_with_view: u64,
    /// Per participant: (markers interacted with, markers seen).
    pub marker_interactions: Vec<(u64, u64)>,
    pub original_annotations: u64,
    pub original_annotations_viewed: u64,

    pub hover_only_views: u64,
    pub clicked_views: u64,
    pub navigation_views: u64,
    pub nested_views: u64,
    pub top_level_views: u64,

    pub breadcrumb_uses: u64,
    pub undo_redo_uses: u64,
    pub document_views: u64,
    pub search_actions: u64,
    pub search_hovered_only: u64,
    pub search_selected: u64,
    pub search_participants: u64,
    pub search_document_views: u64,
    /// Per participant: (inline, block) markers seen.
    pub markers_seen_by_kind: Vec<(u64, u64)>,
    /// Per participant: (inline, block) markers interacted with.
    pub markers_interacted_by_kind: Vec<(u64, u64)>,

    pub unique_annotations: u64,
    pub unique_javadoc_only: u64,
    pub javadoc_only_views: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Count,
    Rate,
    Ratio,
    /// Mean of per-participant rates; numerator and denominator are the
    /// pooled counts.
    MeanRate,
    PValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub key: &'static str,
    pub kind: MetricKind,
    pub value: Option<f64>,
    pub numerator: u64,
    pub denominator: Option<u64>,
    pub definition: &'static str,
    pub insufficient_data: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metrics: Vec<Metric>,
}

impl MetricReport {
    pub fn get(&self, key: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.key == key)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|m| m.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let width = self.metrics.iter().map(|m| m.key.len()).max().unwrap_or(0);
        let mut out = String::new();
        for m in &self.metrics {
            let value = match (m.value, m.kind) {
                (None, _) => String::from("n/a"),
                (Some(v), MetricKind::Count) => alloc::format!("{v}"),
                (Some(v), MetricKind::Rate | MetricKind::MeanRate) => alloc::format!("{:.1}%", v * 100.0),
                (Some(v), MetricKind::Ratio) => alloc::format!("{v:.3}"),
                (Some(v), MetricKind::PValue) => alloc::format!("{v:.3e}"),
            };
            let frac = match m.denominator {
                Some(d) => alloc::format!("{}/{}", m.numerator, d),
                None => String::new(),
            };
            let _ = writeln!(out, "{:width$}  {:>10}  {:>13}  {}", m.key, value, frac, m.definition);
        }
        out
    }
}

struct Builder(Vec<Metric>);

impl Builder {
    fn push(&mut self, key: &'static str, kind: MetricKind, value: Option<f64>, num: u64, den: Option<u64>, def: &'static str) {
        self.0.push(Metric {
            key,
            kind,
            insufficient_data: value.is_none(),
            value,
            numerator: num,
            denominator: den,
            definition: def,
        });
    }

    fn count(&mut self, key: &'static str, n: u64, def: &'static str) {
        self.push(key, MetricKind::Count, Some(n as f64), n, None, def);
    }

    fn rate(&mut self, key: &'static str, num: u64, den: u64, def: &'static str) {
        let v = (den > 0).then(|| num as f64 / den as f64);
        self.push(key, MetricKind::Rate, v, num, Some(den), def);
    }

    fn ratio(&mut self, key: &'static str, num: u64, den: u64, def: &'static str) {
        let v = (den > 0).then(|| num as f64 / den as f64);
        self.push(key, MetricKind::Ratio, v, num, Some(den), def);
    }

    fn mean_rate(&mut self, key: &'static str, pairs: &[(u64, u64)], def: &'static str) {
        let rates: Vec<f64> = pairs.iter().filter(|p| p.1 > 0).map(|&(a, b)| a as f64 / b as f64).collect();
        let v = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
        let num = pairs.iter().map(|p| p.0).sum();
        let den = pairs.iter().map(|p| p.1).sum();
        self.push(key, MetricKind::MeanRate, v, num, Some(den), def);
    }
}

fn shares(pairs: &[(u64, u64)]) -> Vec<(u64, u64)> {
    pairs.iter().map(|&(inline, block)| (inline, inline + block)).collect()
}

/// One metric per tallied quantity. Zero denominators leave the value out
/// and flag the metric instead of dividing.
pub fn compute_metrics(c: &UsageCounts) -> MetricReport {
    let mut b = Builder(Vec::new());
    b.count("participants", c.participants, "participants kept after the learning period");
    b.rate("adoption.only_casdoc", c.only_casdoc, c.participants, "participants who used only the interactive format");
    b.rate("adoption.tried_baseline", c.tried_baseline, c.participants, "participants who viewed at least one document in the baseline format");
    b.count("adoption.baseline_learning_only", c.baseline_learning_only, "tried the baseline only during the learning period");
    b.count("adoption.baseline_one_document", c.baseline_one_document, "used the baseline for one document after the learning period");
    b.count("adoption.baseline_one_session", c.baseline_one_session, "used the baseline for several documents in one session after the learning period");
    b.count("adoption.baseline_multiple_sessions", c.baseline_multiple_sessions, "used the baseline in several sessions after the learning period");
    b.count("adoption.changed_more_than_once", c.changed_more_than_once, "switched to the baseline more than once");
    b.rate("adoption.kept_baseline", c.kept_baseline, c.tried_baseline, "of those who tried it, kept the baseline until their last document view");

    b.count("annotations.views", c.annotation_views, "annotation views");
    b.rate("annotations.participants_using", c.participants_using_annotations, c.participants, "participants with at least one annotation view");
    b.rate("annotations.annotated_views_with_view", c.annotated_document_views_with_view, c.annotated_document_views, "annotated document views with one or more annotation views");
    b.mean_rate("annotations.markers_interacted", &c.marker_interactions, "visible code markers interacted with, averaged by participant");
    b.rate("annotations.unique_originals_viewed", c.original_annotations_viewed, c.original_annotations, "original annotations viewed by at least one participant");

    let anchor_views = c.annotation_views.saturating_sub(c.navigation_views);
    b.count("fragments.hover_only_views", c.hover_only_views, "annotation views by only hovering on the anchor");
    b.count("fragments.clicked_views", c.clicked_views, "annotation views pinned from the anchor");
    b.count("fragments.navigation_views", c.navigation_views, "annotation views opened from a navigation aid");
    b.rate("fragments.floating_only", c.hover_only_views, anchor_views, "hover-only views over views opened from the anchor");
    b.ratio("fragments.nested_to_top_level", c.nested_views, c.top_level_views, "nested over top-level views of original annotations opened from the anchor");

    b.count("hints.breadcrumb_uses", c.breadcrumb_uses, "breadcrumb uses");
    b.count("hints.undo_redo_uses", c.undo_redo_uses, "undo and redo uses");
    b.count("hints.search_actions", c.search_actions, "search actions");
    b.rate("hints.search_hovered_only", c.search_hovered_only, c.search_actions, "search actions where results were hovered but none selected");
    b.rate("hints.search_selected", c.search_selected, c.search_actions, "search actions where a result was selected");
    b.rate("hints.search_participants", c.search_participants, c.participants, "participants who searched at least once");
    b.rate("hints.search_document_views", c.search_document_views, c.document_views, "document views with at least one search action");
    b.mean_rate("hints.inline_share_seen", &shares(&c.markers_seen_by_kind), "inline share of markers seen, averaged by participant");
    b.mean_rate("hints.inline_share_interacted", &shares(&c.markers_interacted_by_kind), "inline share of markers interacted with, averaged by participant");
    let (k, n) = inline_sign_counts(c);
    let p = if n > 0 { sign_test(k, n).ok() } else { None };
    b.push("hints.inline_sign_test", MetricKind::PValue, p, k, Some(n), "sign test: participants whose inline share interacted exceeds their inline share seen");

    b.count("external.unique_annotations", c.unique_annotations, "annotations across all documents");
    b.rate("external.unique_javadoc_only", c.unique_javadoc_only, c.unique_annotations, "annotations with only reference content");
    b.rate("external.javadoc_only_views", c.javadoc_only_views, c.annotation_views, "annotation views of annotations with only reference content");
    MetricReport { metrics: b.0 }
}

/// Participants who interacted with markers: how many favoured inline
/// markers more than their exposure would predict, out of the untied.
fn inline_sign_counts(c: &UsageCounts) -> (u64, u64) {
    let (mut k, mut n) = (0, 0);
    for (seen, inter) in c.markers_seen_by_kind.iter().zip(&c.markers_interacted_by_kind) {
        let (st, it) = (seen.0 + seen.1, inter.0 + inter.1);
        if st == 0 || it == 0 {
            continue;
        }
        // Compare inter.0/it with seen.0/st without rounding.
        let lhs = u128::from(inter.0) * u128::from(st);
        let rhs = u128::from(seen.0) * u128::from(it);
        if lhs != rhs {
            n += 1;
            k += u64::from(lhs > rhs);
        }
    }
    (k, n)
}

fn adoption(p: &ParticipantData, cfg: &AnalysisConfig, c: &mut UsageCounts) {
    let baseline: Vec<_> = p.views.iter().filter(|v| v.format == Format::Baseline).collect();
    if baseline.is_empty() {
        c.only_casdoc += 1;
        return;
    }
    c.tried_baseline += 1;
    let after: Vec<_> = baseline.iter().filter(|v| !p.is_learning(v.start, cfg)).collect();
    let docs: BTreeSet<&str> = after.iter().map(|v| v.did.as_str()).collect();
    let sessions: BTreeSet<usize> = after.iter().map(|v| v.session).collect();
    match (docs.len(), sessions.len()) {
        (0, _) => c.baseline_learning_only += 1,
        (1, _) => c.baseline_one_document += 1,
        (_, 1) => c.baseline_one_session += 1,
        _ => c.baseline_multiple_sessions += 1,
    }
    let switches = p
        .views
        .iter()
        .filter(|v| v.format == Format::Baseline && v.actions.first().is_some_and(|e| e.kind == EventType::ChangeFormat))
        .count();
    if switches > 1 {
        c.changed_more_than_once += 1;
    }
    if p.views.iter().max_by_key(|v| v.start).is_some_and(|v| v.format == Format::Baseline) {
        c.kept_baseline += 1;
    }
}

/// Tallies a reconstruction against the documents' annotation catalog.
/// Annotation ids missing from the catalog count as views but are not
/// classified.
pub fn count_usage(r: &Reconstruction, catalog: &Catalog, cfg: &AnalysisConfig) -> UsageCounts {
    let mut c = UsageCounts { participants: r.participants.len() as u64, ..UsageCounts::default() };
    let mut originals_viewed: BTreeSet<(&str, &str)> = BTreeSet::new();
    for doc in catalog.values() {
        c.unique_annotations += doc.annotations.len() as u64;
        c.unique_javadoc_only += doc.annotations.values().filter(|a| a.kind == NodeKind::Apiref).count() as u64;
        c.original_annotations += doc.original_count() as u64;
    }

    for p in &r.participants {
        adoption(p, cfg, &mut c);
        let mut used_annotations = false;
        let mut searched = false;
        let (mut interacted, mut seen) = (0u64, 0u64);
        let (mut seen_kind, mut inter_kind) = ((0u64, 0u64), (0u64, 0u64));
        for (vi, view) in p.views.iter().enumerate() {
            c.document_views += 1;
            let avs = &p.annotation_views[vi];
            let searches = &p.searches[vi];
            used_annotations |= !avs.is_empty();
            if !searches.is_empty() {
                searched = true;
                c.search_document_views += 1;
            }
            c.search_actions += searches.len() as u64;
            c.search_selected += searches.iter().filter(|s| s.selected()).count() as u64;
            c.search_hovered_only += searches.iter().filter(|s| s.hovered_only()).count() as u64;
            for e in &view.actions {
                if let Detail::Navigation { widget, .. } = e.detail {
                    match widget {
                        Widget::Breadcrumb => c.breadcrumb_uses += 1,
                        Widget::Undo | Widget::Redo => c.undo_redo_uses += 1,
                        Widget::Walkthrough => {}
                    }
                }
            }

            let doc = catalog.get(&view.did);
            if view.format == Format::Casdoc {
                if let Some(doc) = doc.filter(|d| !d.annotations.is_empty()) {
                    c.annotated_document_views += 1;
                    c.annotated_document_views_with_view += u64::from(!avs.is_empty());
                    let visible = doc.annotations.iter().filter(|(_, a)| {
                        a.kind.is_original() && !a.nested && a.marker != MarkerKind::None
                    });
                    let opened: BTreeSet<&str> = avs
                        .iter()
                        .filter(|a| a.opened_via == OpenedVia::Anchor)
                        .map(|a| a.annotation.as_str())
                        .collect();
                    for (id, a) in visible {
                        let inline = a.marker == MarkerKind::Inline;
                        seen += 1;
                        if inline { seen_kind.0 += 1 } else { seen_kind.1 += 1 }
                        if opened.contains(id.as_str()) {
                            interacted += 1;
                            if inline { inter_kind.0 += 1 } else { inter_kind.1 += 1 }
                        }
                    }
                }
            }

            for av in avs {
                c.annotation_views += 1;
                match (av.opened_via, av.pinned) {
                    (OpenedVia::Navigation, _) => c.navigation_views += 1,
                    (OpenedVia::Anchor, false) => c.hover_only_views += 1,
                    (OpenedVia::Anchor, true) => c.clicked_views += 1,
                }
                let Some(info) = doc.and_then(|d| d.get(&av.annotation)) else { continue };
                if info.kind == NodeKind::Apiref {
                    c.javadoc_only_views += 1;
                }
                if info.kind.is_original() {
                    originals_viewed.insert((view.did.as_str(), av.annotation.as_str()));
                    if av.opened_via == OpenedVia::Anchor {
                        if info.nested { c.nested_views += 1 } else { c.top_level_views += 1 }
                    }
                }
            }
        }
        c.participants_using_annotations += u64::from(used_annotations);
        c.search_participants += u64::from(searched);
        if seen > 0 {
            c.marker_interactions.push((interacted, seen));
            c.markers_seen_by_kind.push(seen_kind);
            c.markers_interacted_by_kind.push(inter_kind);
        }
    }
    c.original_annotations_viewed = originals_viewed.len() as u64;
    c
}
