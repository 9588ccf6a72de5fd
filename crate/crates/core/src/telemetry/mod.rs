//! Interaction events, their reconstruction into sessions and views, and
//! the metrics computed over them.

pub mod catalog;
pub mod config;
pub mod event;
pub mod metrics;
pub mod reconstruct;
pub mod stats;

pub use catalog::{AnnotationInfo, Catalog, DocumentInfo, MarkerKind};
pub use config::{AnalysisConfig, ConfigError};
pub use event::{
    parse_batch, parse_log, BatchError, Detail, EventError, EventType, Format, InteractionEvent, LogIssue, Millis,
};
pub use metrics::{compute_metrics, count_usage, Metric, MetricKind, MetricReport, UsageCounts};
pub use reconstruct::{
    derive_views, filter_participants, group_annotation_views, group_by_participant, group_search_actions,
    reconstruct, split_sessions, AnnotationView, CodeExampleView, Issue, IssueKind, ParticipantData,
    Reconstruction, SearchAction, Session, SplitOrigin,
};
pub use stats::{chi_square_cramers_v, kendall_tau, pearson_r, sign_test, ChiSquare, KendallTau, StatsError};
