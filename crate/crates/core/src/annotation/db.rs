//! Reusable annotations shared between documents.
//!
//! An entry is stored as `<id>.html` (content) plus `<id>.meta`
//! (`key = value` lines, `title` required). Reading the directory is the
//! caller's job; this module only validates and resolves.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Origin, RawAnnotation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbEntry {
    pub content: String,
    pub meta: BTreeMap<String, String>,
}

impl DbEntry {
    pub fn title(&self) -> &str {
        self.meta.get("title").map(String::as_str).unwrap_or_default()
    }

    /// Attribution for copied material, when the entry has one.
    pub fn source(&self) -> Option<&str> {
        self.meta.get("source").map(String::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationDb {
    entries: BTreeMap<String, DbEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DbError {
    #[error("database id `{0}` is not a slug")]
    InvalidId(String),
    #[error("database id `{0}` appears twice")]
    DuplicateId(String),
    #[error("{id}.meta line {line}: expected `key = value`")]
    MalformedMeta { id: String, line: usize },
    #[error("{id}.meta has no `title`")]
    MissingTitle { id: String },
    #[error("database entry `{id}` is missing its {missing} file")]
    IncompleteEntry { id: String, missing: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown database id `{id}` included by entry {} of annotation comment {}", origin.entry, origin.comment)]
pub struct IncludeError {
    pub id: String,
    pub origin: Origin,
}

/// Parses a `.meta` file: one `key = value` per line, blank lines and
/// `#` comments ignored.
pub fn parse_meta(id: &str, text: &str) -> Result<BTreeMap<String, String>, DbError> {
    let mut meta = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .filter(|(k, _)| !k.trim().is_empty())
            .ok_or_else(|| DbError::MalformedMeta { id: id.to_owned(), line: i + 1 })?;
        meta.insert(key.trim().to_owned(), value.trim().to_owned());
    }
    if meta.get("title").is_none_or(|t| t.is_empty()) {
        return Err(DbError::MissingTitle { id: id.to_owned() });
    }
    Ok(meta)
}

impl AnnotationDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: &str, content_html: &str, meta_text: &str) -> Result<(), DbError> {
        if id.is_empty() || !id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_') {
            return Err(DbError::InvalidId(id.to_owned()));
        }
        if self.entries.contains_key(id) {
            return Err(DbError::DuplicateId(id.to_owned()));
        }
        let meta = parse_meta(id, meta_text)?;
        self.entries.insert(id.to_owned(), DbEntry { content: content_html.to_owned(), meta });
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&DbEntry> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Replaces every `include:` reference with the database content, placed
/// before the entry's own content. Every unknown id is reported.
pub fn expand_includes(
    annotations: Vec<RawAnnotation>,
    db: &AnnotationDb,
) -> Result<Vec<RawAnnotation>, Vec<IncludeError>> {
    let mut errors = Vec::new();
    let mut out = Vec::with_capacity(annotations.len());
    for mut a in annotations {
        if let Some(id) = a.include.take() {
            match db.get(&id) {
                Some(entry) => {
                    let local = core::mem::take(&mut a.content);
                    a.content = entry.content.trim_end().to_owned();
                    if !local.is_empty() {
                        a.content.push_str("\n\n");
                        a.content.push_str(&local);
                    }
                    if a.title.is_none() {
                        a.title = Some(entry.title().to_owned());
                    }
                }
                None => errors.push(IncludeError { id, origin: a.origin }),
            }
        }
        out.push(a);
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}
