use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use super::SourceFile;
use crate::lexer::{tokenize, LineIndex, TokenKind};

/// A `/*? ... */` block comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationComment {
    /// Byte range in the source, delimiters included.
    pub span: Range<usize>,
    pub first_line: usize,
    pub last_line: usize,
    /// Body between `/*?` and `*/`.
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("annotation comment opened on line {line} is never closed")]
    Unterminated { line: usize },
}

/// Returns the block comments whose body starts with `?`, in source order.
pub fn extract_annotation_comments(
    src: &SourceFile,
) -> Result<Vec<AnnotationComment>, ExtractError> {
    let text = src.text.as_str();
    let lines = LineIndex::new(text);
    let mut out = Vec::new();
    for tok in tokenize(text) {
        let TokenKind::BlockComment { terminated } = tok.kind else { continue };
        let body = &text[tok.span.clone()];
        if !body.starts_with("/*?") {
            continue;
        }
        let first_line = lines.line_of(tok.span.start);
        if !terminated {
            return Err(ExtractError::Unterminated { line: first_line });
        }
        out.push(AnnotationComment {
            first_line,
            last_line: lines.line_of(tok.span.end - 1),
            payload: body[3..body.len() - 2].to_string(),
            span: tok.span,
        });
    }
    Ok(out)
}
