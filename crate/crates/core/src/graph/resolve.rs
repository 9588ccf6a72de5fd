use alloc::string::{String, ToString};
use core::fmt;

use super::{AnnotationNode, CodeAnchor, NestedAnchor};
use crate::annotation::{BlockExtent, CleanCode};
use crate::html::TextMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveError {
    /// No code line follows, or the text is absent from it.
    Dangling { text: String, line: Option<usize> },
    Occurrence { text: String, line: usize, wanted: u32, found: usize },
    OutOfRange { wanted: u32, available: usize },
    DanglingNested { text: String, parent: String },
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveError::Dangling { text, line: Some(line) } => {
                write!(f, "anchor `{text}` not found on code line {line}")
            }
            ResolveError::Dangling { text, line: None } => {
                write!(f, "anchor `{text}` has no code line after it")
            }
            ResolveError::Occurrence { text, line, wanted, found } => write!(
                f,
                "anchor `{text}` wants occurrence {wanted} but code line {line} has {found}"
            ),
            ResolveError::OutOfRange { wanted, available } => {
                write!(f, "block wants {wanted} lines but only {available} remain")
            }
            ResolveError::DanglingNested { text, parent } => {
                write!(f, "nested anchor `{text}` not found in the content of `{parent}`")
            }
        }
    }
}

fn first_non_blank_after(code: &CleanCode, after_line: usize) -> Option<usize> {
    (after_line + 1..=code.line_count()).find(|&l| !code.line_text(l).unwrap_or("").trim().is_empty())
}

/// The `occurrence`-th non-overlapping match of `text`, left to right, on
/// the first non-blank code line after `after_line`.
pub fn resolve_inline(
    code: &CleanCode,
    text: &str,
    occurrence: u32,
    after_line: usize,
) -> Result<CodeAnchor, ResolveError> {
    let Some(line) = first_non_blank_after(code, after_line) else {
        return Err(ResolveError::Dangling { text: text.to_string(), line: None });
    };
    let line_text = code.line_text(line).unwrap_or("");
    let mut found = 0;
    for (byte, m) in line_text.match_indices(text) {
        found += 1;
        if found == occurrence as usize {
            let col_start = line_text[..byte].chars().count();
            return Ok(CodeAnchor::Inline {
                line,
                col_start,
                col_end: col_start + m.chars().count(),
                text: text.to_string(),
            });
        }
    }
    if found == 0 {
        Err(ResolveError::Dangling { text: text.to_string(), line: Some(line) })
    } else {
        Err(ResolveError::Occurrence { text: text.to_string(), line, wanted: occurrence, found })
    }
}

/// Lines covered by a block anchor, starting at the first non-blank code
/// line after `after_line`.
pub fn resolve_block(
    code: &CleanCode,
    extent: &BlockExtent,
    after_line: usize,
) -> Result<CodeAnchor, ResolveError> {
    let wanted = match extent {
        BlockExtent::Lines(n) => *n,
        BlockExtent::UntilBlank => 1,
    };
    let Some(first_line) = first_non_blank_after(code, after_line) else {
        return Err(ResolveError::OutOfRange { wanted, available: 0 });
    };
    let available = code.line_count() + 1 - first_line;
    let last_line = match extent {
        BlockExtent::Lines(n) => {
            if (*n as usize) > available {
                return Err(ResolveError::OutOfRange { wanted: *n, available });
            }
            first_line + *n as usize - 1
        }
        BlockExtent::UntilBlank => (first_line..=code.line_count())
            .take_while(|&l| !code.line_text(l).unwrap_or("").trim().is_empty())
            .last()
            .unwrap_or(first_line),
    };
    Ok(CodeAnchor::Block { first_line, last_line })
}

/// First occurrence of `text` in the parent's visible content (its first,
/// author-written part).
pub fn resolve_within(parent: &AnnotationNode, text: &str) -> Result<NestedAnchor, ResolveError> {
    let html = parent.parts.first().map_or("", |p| p.html.as_str());
    let range = TextMap::new(html).find(text).ok_or_else(|| ResolveError::DanglingNested {
        text: text.to_string(),
        parent: parent.id.clone(),
    })?;
    Ok(NestedAnchor { parent: parent.id.clone(), start: range.start, end: range.end, text: text.to_string() })
}
