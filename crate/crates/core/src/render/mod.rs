//! Output formats: the interactive HTML document, the baseline source file
//! with annotations as plain comments, and the save-state URL fragment.

mod baseline;
mod interactive;
mod state;

pub use baseline::render_baseline;
pub use interactive::{code_block_text, render_interactive};
pub use state::{decode_state, encode_state, Pin, SavedState, StateError, STATE_VERSION};

use alloc::string::String;
use alloc::vec::Vec;

use crate::diag::Diagnostic;

pub const CSS: &str = include_str!("assets/casdoc.css");
pub const JS: &str = include_str!("assets/casdoc.js");
pub const CSS_FILE: &str = "casdoc.css";
pub const JS_FILE: &str = "casdoc.js";

/// Value of the `casdoc:format` metadata for each output format.
pub const FORMAT_INTERACTIVE: &str = "casdoc";
pub const FORMAT_BASELINE: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    pub embed_assets: bool,
    /// Relative location of the viewer assets when not embedded.
    pub asset_dir: String,
    pub title: String,
    pub telemetry_url: Option<String>,
    pub document_id: String,
}

impl RenderOptions {
    pub fn new(document_id: impl Into<String>, title: impl Into<String>) -> Self {
        Self {
            embed_assets: false,
            asset_dir: String::from("assets"),
            title: title.into(),
            telemetry_url: None,
            document_id: document_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("graph has {} error(s); refusing to render", .0.len())]
    InvalidGraph(Vec<Diagnostic>),
    #[error("document id `{0}` is not a slug")]
    InvalidDocumentId(String),
    #[error("telemetry URL `{0}` is not absolute")]
    InvalidTelemetryUrl(String),
}

pub fn is_slug(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

pub(crate) fn is_absolute_http_url(s: &str) -> bool {
    (s.starts_with("http://") || s.starts_with("https://")) && s.len() > "https://".len()
}
