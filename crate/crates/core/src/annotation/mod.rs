//! Annotation comments: extraction, entry grammar, database includes and
//! the clean code left once they are removed.

mod db;
mod extract;
mod grammar;
mod strip;

pub use db::{expand_includes, parse_meta, AnnotationDb, DbEntry, DbError, IncludeError};
pub use extract::{extract_annotation_comments, AnnotationComment, ExtractError};
pub use grammar::{
    parse_entries, AnchorDecl, BlockExtent, GrammarError, GrammarErrorKind, Origin, RawAnnotation,
};
pub use strip::{strip_annotations, CleanCode, Splice};

use alloc::string::String;
use alloc::vec::Vec;

use crate::diag::{codes, Diagnostic};

/// Host language of an annotated file. Only Java-style comments exist today.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Host {
    #[default]
    Java,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    pub host: Host,
}

impl SourceFile {
    pub fn java(path: impl Into<String>, text: impl Into<String>) -> Self {
        Self { path: path.into(), text: text.into(), host: Host::Java }
    }
}

/// Extracts and parses every annotation comment of `src`.
///
/// Grammar errors are collected across all comments rather than stopping
/// at the first one.
pub fn parse_source(
    src: &SourceFile,
) -> Result<(Vec<AnnotationComment>, Vec<RawAnnotation>), Vec<Diagnostic>> {
    let comments = extract_annotation_comments(src).map_err(|e| alloc::vec![e.to_diagnostic()])?;
    let mut annotations = Vec::new();
    let mut errors = Vec::new();
    for (i, comment) in comments.iter().enumerate() {
        match parse_entries(comment, i + 1) {
            Ok(entries) => annotations.extend(entries),
            Err(e) => errors.push(e.to_diagnostic()),
        }
    }
    if errors.is_empty() {
        Ok((comments, annotations))
    } else {
        Err(errors)
    }
}

impl ExtractError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        match self {
            ExtractError::Unterminated { line } => {
                Diagnostic::error(*line, codes::UNTERMINATED, alloc::format!("{self}"))
            }
        }
    }
}

impl GrammarError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.line, codes::GRAMMAR, alloc::format!("{self}"))
    }
}

impl IncludeError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.origin.line, codes::UNKNOWN_INCLUDE, alloc::format!("{self}"))
    }
}
