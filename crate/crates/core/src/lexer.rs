//! Minimal lexical scan of Java-style source text.
//!
//! Only what annotation extraction and symbol scanning need: comment and
//! literal boundaries plus identifiers. It is not a parser and accepts any
//! input; malformed literals simply end at the end of their line.

use alloc::vec::Vec;
use core::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    StringLit,
    CharLit,
    /// `"""` text block.
    TextBlock,
    LineComment,
    /// `terminated` is false when the comment runs to the end of input.
    BlockComment { terminated: bool },
    Whitespace,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.clone()]
    }

    pub fn is_trivia(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::Whitespace | TokenKind::LineComment | TokenKind::BlockComment { .. }
        )
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

/// Splits `src` into tokens covering every byte exactly once.
pub fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < src.len() {
        let start = pos;
        let rest = &src[pos..];
        let c = rest.chars().next().unwrap();
        let kind = if rest.starts_with("//") {
            pos = rest.find('\n').map_or(src.len(), |i| pos + i);
            TokenKind::LineComment
        } else if let Some(body) = rest.strip_prefix("/*") {
            match body.find("*/") {
                Some(i) => {
                    pos += 2 + i + 2;
                    TokenKind::BlockComment { terminated: true }
                }
                None => {
                    pos = src.len();
                    TokenKind::BlockComment { terminated: false }
                }
            }
        } else if rest.starts_with("\"\"\"") {
            pos = scan_text_block(src, pos + 3);
            TokenKind::TextBlock
        } else if c == '"' {
            pos = scan_quoted(bytes, pos + 1, b'"');
            TokenKind::StringLit
        } else if c == '\'' {
            pos = scan_quoted(bytes, pos + 1, b'\'');
            TokenKind::CharLit
        } else if c.is_whitespace() {
            pos += rest
                .char_indices()
                .find(|&(_, ch)| !ch.is_whitespace())
                .map_or(rest.len(), |(i, _)| i);
            TokenKind::Whitespace
        } else if is_ident_start(c) {
            pos += rest
                .char_indices()
                .find(|&(_, ch)| !is_ident_continue(ch))
                .map_or(rest.len(), |(i, _)| i);
            TokenKind::Ident
        } else if c.is_ascii_digit() {
            pos += rest
                .char_indices()
                .find(|&(_, ch)| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '.'))
                .map_or(rest.len(), |(i, _)| i);
            TokenKind::Number
        } else {
            pos += c.len_utf8();
            TokenKind::Punct
        };
        tokens.push(Token { kind, span: start..pos });
    }
    tokens
}

/// Scans a string or char literal body; stops after the closing quote or
/// before the line break that leaves it unterminated.
fn scan_quoted(bytes: &[u8], mut pos: usize, quote: u8) -> usize {
    while pos < bytes.len() {
        match bytes[pos] {
            b'\\' => pos += 2,
            b'\n' | b'\r' => return pos,
            b if b == quote => return pos + 1,
            _ => pos += 1,
        }
    }
    bytes.len()
}

fn scan_text_block(src: &str, mut pos: usize) -> usize {
    let bytes = src.as_bytes();
    while pos < bytes.len() {
        if bytes[pos] == b'\\' {
            pos += 2;
        } else if bytes[pos..].starts_with(b"\"\"\"") {
            return pos + 3;
        } else {
            pos += 1;
        }
    }
    bytes.len()
}

/// Byte offsets of line starts, with code-point columns.
///
/// Lines are 1-based, columns 0-based code-point offsets within the line.
/// A `\r` before `\n` belongs to the terminator, not the line content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIndex {
    starts: Vec<usize>,
    len: usize,
    /// Text is empty or ends with `\n`.
    terminated: bool,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut starts = alloc::vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        // A trailing newline does not open a further line.
        if *starts.last().unwrap() == text.len() {
            starts.pop();
        }
        Self { starts, len: text.len(), terminated: text.is_empty() || text.ends_with('\n') }
    }

    pub fn line_count(&self) -> usize {
        self.starts.len()
    }

    /// Line containing `offset`. The end offset of a text that ends with a
    /// newline (or of an empty text) yields `line_count() + 1`.
    pub fn line_of(&self, offset: usize) -> usize {
        if offset >= self.len && self.terminated {
            return self.starts.len() + 1;
        }
        match self.starts.binary_search(&offset) {
            Ok(i) => i + 1,
            Err(i) => i.max(1),
        }
    }

    /// Byte range of the line's content, excluding its terminator.
    pub fn line_range(&self, text: &str, line: usize) -> Option<Range<usize>> {
        let start = *self.starts.get(line.checked_sub(1)?)?;
        let mut end = self.starts.get(line).copied().unwrap_or(text.len());
        let bytes = text.as_bytes();
        if end > start && bytes[end - 1] == b'\n' {
            end -= 1;
            if end > start && bytes[end - 1] == b'\r' {
                end -= 1;
            }
        }
        Some(start..end)
    }

    pub fn line_text<'a>(&self, text: &'a str, line: usize) -> Option<&'a str> {
        self.line_range(text, line).map(|r| &text[r])
    }

    pub fn line_start(&self, line: usize) -> Option<usize> {
        self.starts.get(line.checked_sub(1)?).copied()
    }

    /// (line, code-point column) of a byte offset.
    pub fn line_col(&self, text: &str, offset: usize) -> (usize, usize) {
        let line = self.line_of(offset);
        let start = self.line_start(line).unwrap_or(text.len());
        let col = text[start.min(offset)..offset].chars().count();
        (line, col)
    }
}
