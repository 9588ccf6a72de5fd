use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use super::{extract_annotation_comments, ExtractError, SourceFile};
use crate::lexer::LineIndex;

/// One removed annotation comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splice {
    /// Insertion point in the clean code.
    pub clean_offset: usize,
    /// Removed byte range of the original text.
    pub original: Range<usize>,
    pub removed: String,
    /// The comment sat alone on its lines; its indentation and one line
    /// terminator were removed with it.
    pub whole_line: bool,
}

/// Code with every annotation comment removed, plus the splices needed to
/// map back to the annotated original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanCode {
    code: String,
    lines: LineIndex,
    splices: Vec<Splice>,
}

impl CleanCode {
    /// Clean code without any source mapping, e.g. read back from a dump.
    pub fn from_code(code: String) -> Self {
        Self { lines: LineIndex::new(&code), code, splices: Vec::new() }
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn lines(&self) -> &LineIndex {
        &self.lines
    }

    pub fn line_count(&self) -> usize {
        self.lines.line_count()
    }

    pub fn line_text(&self, line: usize) -> Option<&str> {
        self.lines.line_text(&self.code, line)
    }

    pub fn splices(&self) -> &[Splice] {
        &self.splices
    }

    /// Line after which the anchors of the `comment`-th (1-based) annotation
    /// comment resolve.
    pub fn anchor_base_line(&self, comment: usize) -> Option<usize> {
        let s = self.splices.get(comment.checked_sub(1)?)?;
        let line = self.lines.line_of(s.clean_offset);
        Some(if s.whole_line { line - 1 } else { line })
    }

    /// Maps a clean-code byte offset to the original text. Offsets at a
    /// splice point map to the position right after the removed text.
    pub fn to_original(&self, clean_offset: usize) -> usize {
        let shift: usize = self
            .splices
            .iter()
            .take_while(|s| s.clean_offset <= clean_offset)
            .map(|s| s.removed.len())
            .sum();
        clean_offset + shift
    }

    /// Puts every removed comment back, reproducing the original text.
    pub fn reinsert(&self) -> String {
        let extra: usize = self.splices.iter().map(|s| s.removed.len()).sum();
        let mut out = String::with_capacity(self.code.len() + extra);
        let mut pos = 0;
        for s in &self.splices {
            out.push_str(&self.code[pos..s.clean_offset]);
            out.push_str(&s.removed);
            pos = s.clean_offset;
        }
        out.push_str(&self.code[pos..]);
        out
    }
}

fn is_space(b: u8) -> bool {
    b == b' ' || b == b'\t'
}

/// Removes all annotation comments. A comment alone on its lines takes its
/// indentation, trailing blanks and one line terminator with it; a comment
/// sharing a line with code removes only its own characters.
pub fn strip_annotations(src: &SourceFile) -> Result<CleanCode, ExtractError> {
    let text = src.text.as_str();
    let bytes = text.as_bytes();
    let comments = extract_annotation_comments(src)?;

    let mut code = String::with_capacity(text.len());
    let mut splices = Vec::with_capacity(comments.len());
    let mut pos = 0;
    for c in comments {
        let line_start = text[..c.span.start].rfind('\n').map_or(0, |i| i + 1);
        let before_blank = line_start >= pos && bytes[line_start..c.span.start].iter().all(|&b| is_space(b));
        let mut after = c.span.end;
        while after < bytes.len() && is_space(bytes[after]) {
            after += 1;
        }
        let mut terminator = after;
        if bytes[terminator..].starts_with(b"\r\n") {
            terminator += 2;
        } else if bytes[terminator..].starts_with(b"\n") {
            terminator += 1;
        }
        let after_blank = terminator > after || after == bytes.len();
        let whole_line = before_blank && after_blank;
        let removed = if whole_line { line_start..terminator } else { c.span.clone() };

        code.push_str(&text[pos..removed.start]);
        splices.push(Splice {
            clean_offset: code.len(),
            removed: String::from(&text[removed.clone()]),
            original: removed.clone(),
            whole_line,
        });
        pos = removed.end;
    }
    code.push_str(&text[pos..]);
    Ok(CleanCode { lines: LineIndex::new(&code), code, splices })
}
