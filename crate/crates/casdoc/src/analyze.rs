//! From an event log file to the metric report.

use casdoc_core::telemetry::{
    compute_metrics, count_usage, parse_log, reconstruct, AnalysisConfig, Catalog, LogIssue, MetricReport, UsageCounts,
};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub events: usize,
    pub skipped_lines: Vec<SkippedLine>,
    pub participants: usize,
    pub sessions: usize,
    pub document_views: usize,
    pub diagnostics: Vec<String>,
    pub counts: UsageCounts,
    pub report: MetricReport,
}

impl Analysis {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "events {}  skipped lines {}  participants {}  sessions {}  document views {}\n\n",
            self.events,
            self.skipped_lines.len(),
            self.participants,
            self.sessions,
            self.document_views
        );
        s.push_str(&self.report.to_table());
        s
    }
}

pub fn analyze(log: &str, catalog: &Catalog, cfg: &AnalysisConfig) -> Analysis {
    let (events, issues) = parse_log(log);
    let r = reconstruct(&events, cfg);
    let counts = count_usage(&r, catalog, cfg);
    Analysis {
        events: events.len(),
        skipped_lines: issues.into_iter().map(|LogIssue { line, message }| SkippedLine { line, message }).collect(),
        participants: r.participants.len(),
        sessions: r.participants.iter().map(|p| p.sessions.len()).sum(),
        document_views: r.participants.iter().map(|p| p.views.len()).sum(),
        diagnostics: r.issues.iter().map(ToString::to_string).collect(),
        report: compute_metrics(&counts),
        counts,
    }
}
