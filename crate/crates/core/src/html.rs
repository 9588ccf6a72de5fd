//! Small HTML utilities over rendered annotation content: escaping, the
//! text content a reader sees, span injection, and flattening to plain
//! text for comments.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    escape_into(&mut out, s);
    out
}

pub fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
}

fn decode_entity(entity: &str) -> Option<char> {
    match entity {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some('\u{a0}'),
        _ => {
            let num = entity.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)
        }
    }
}

/// A piece of markup or text in a rendered fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    /// Tag or comment, with its lowercase tag name (`/p` for closers).
    Tag { name: String },
    /// One decoded character with the bytes it came from.
    Char { c: char, raw: Range<usize> },
}

fn pieces(html: &str) -> Vec<Piece> {
    let bytes = html.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < html.len() {
        let rest = &html[pos..];
        if rest.starts_with("<!--") {
            let end = rest.find("-->").map_or(html.len(), |i| pos + i + 3);
            out.push(Piece::Tag { name: String::from("!--") });
            pos = end;
        } else if rest.starts_with('<')
            && rest[1..].starts_with(|c: char| c.is_ascii_alphabetic() || c == '/' || c == '!')
        {
            let mut i = pos + 1;
            let mut quote = None;
            while i < bytes.len() {
                match (quote, bytes[i]) {
                    (None, b'"' | b'\'') => quote = Some(bytes[i]),
                    (Some(q), b) if b == q => quote = None,
                    (None, b'>') => break,
                    _ => {}
                }
                i += 1;
            }
            let end = (i + 1).min(html.len());
            let name: String = html[pos + 1..end]
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '/' || *c == '!')
                .map(|c| c.to_ascii_lowercase())
                .collect();
            out.push(Piece::Tag { name });
            pos = end;
        } else if let Some(entity) = rest.strip_prefix('&') {
            let decoded = entity
                .find(';')
                .filter(|&i| i <= 10)
                .and_then(|i| decode_entity(&entity[..i]).map(|c| (c, i + 2)));
            match decoded {
                Some((c, len)) => {
                    out.push(Piece::Char { c, raw: pos..pos + len });
                    pos += len;
                }
                None => {
                    out.push(Piece::Char { c: '&', raw: pos..pos + 1 });
                    pos += 1;
                }
            }
        } else {
            let c = rest.chars().next().unwrap();
            out.push(Piece::Char { c, raw: pos..pos + c.len_utf8() });
            pos += c.len_utf8();
        }
    }
    out
}

/// Visible text of an HTML fragment with the markup position of each
/// character, so that text ranges can be mapped back into the markup.
#[derive(Debug, Clone)]
pub struct TextMap {
    text: String,
    /// Per character: raw byte range and the index of its text run.
    chars: Vec<(Range<usize>, usize)>,
}

impl TextMap {
    pub fn new(html: &str) -> Self {
        let mut text = String::new();
        let mut chars = Vec::new();
        let mut run = 0;
        let mut in_text = false;
        for p in pieces(html) {
            match p {
                Piece::Tag { .. } => {
                    if in_text {
                        run += 1;
                    }
                    in_text = false;
                }
                Piece::Char { c, raw } => {
                    text.push(c);
                    chars.push((raw, run));
                    in_text = true;
                }
            }
        }
        Self { text, chars }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn char_len(&self) -> usize {
        self.chars.len()
    }

    /// Code-point range of the first occurrence of `needle`.
    pub fn find(&self, needle: &str) -> Option<Range<usize>> {
        let byte = self.text.find(needle)?;
        let start = self.text[..byte].chars().count();
        Some(start..start + needle.chars().count())
    }

    /// Splits a code-point range into markup byte ranges that each lie in a
    /// single text run.
    pub fn raw_pieces(&self, range: Range<usize>) -> Vec<Range<usize>> {
        let mut out: Vec<(Range<usize>, usize)> = Vec::new();
        for (raw, run) in &self.chars[range.start.min(self.chars.len())..range.end.min(self.chars.len())] {
            match out.last_mut() {
                Some((r, last_run)) if *last_run == *run && r.end == raw.start => r.end = raw.end,
                _ => out.push((raw.clone(), *run)),
            }
        }
        out.into_iter().map(|(r, _)| r).collect()
    }
}

/// Wraps text ranges of `html` in elements. Each range is a code-point
/// range of the fragment's visible text; ranges must not overlap. A range
/// crossing markup is split: the first piece gets `open_first`, the others
/// `open_rest`, and all pieces are closed with `close`.
pub fn wrap_text_ranges(
    html: &str,
    ranges: &[(Range<usize>, String, String)],
    close: &str,
) -> String {
    let map = TextMap::new(html);
    let mut inserts: Vec<(usize, bool, usize, &str)> = Vec::new();
    for (seq, (range, open_first, open_rest)) in ranges.iter().enumerate() {
        for (i, raw) in map.raw_pieces(range.clone()).into_iter().enumerate() {
            let open = if i == 0 { open_first.as_str() } else { open_rest.as_str() };
            // Closers sort before openers at the same offset.
            inserts.push((raw.start, true, seq, open));
            inserts.push((raw.end, false, seq, close));
        }
    }
    inserts.sort_by_key(|&(at, is_open, seq, _)| (at, is_open, seq));
    let mut out = String::with_capacity(html.len() + inserts.len() * 32);
    let mut pos = 0;
    for (at, _, _, s) in inserts {
        out.push_str(&html[pos..at]);
        out.push_str(s);
        pos = at;
    }
    out.push_str(&html[pos..]);
    out
}

/// A block of plain text recovered from HTML.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextBlock {
    /// Flowing text; whitespace collapsed.
    Paragraph(String),
    /// Preformatted text, lines kept.
    Preformatted(String),
}

const BLOCK_TAGS: &[&str] = &[
    "p", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "table", "tr",
    "br", "hr", "dl", "dt", "dd", "section",
];

/// Flattens an HTML fragment into paragraphs and preformatted blocks.
pub fn to_text_blocks(html: &str) -> Vec<TextBlock> {
    let mut blocks = Vec::new();
    let mut current = String::new();
    let mut pre_depth = 0usize;
    let flush = |current: &mut String, pre: bool, blocks: &mut Vec<TextBlock>| {
        if pre {
            let text = current.trim_matches('\n');
            if !text.trim().is_empty() {
                blocks.push(TextBlock::Preformatted(String::from(text)));
            }
        } else {
            let collapsed: Vec<&str> = current.split_whitespace().collect();
            if !collapsed.is_empty() {
                blocks.push(TextBlock::Paragraph(collapsed.join(" ")));
            }
        }
        current.clear();
    };
    for p in pieces(html) {
        match p {
            Piece::Tag { name, .. } => {
                let bare = name.trim_start_matches('/');
                if bare == "pre" {
                    flush(&mut current, pre_depth > 0, &mut blocks);
                    if name.starts_with('/') {
                        pre_depth = pre_depth.saturating_sub(1);
                    } else {
                        pre_depth += 1;
                    }
                } else if pre_depth == 0 && BLOCK_TAGS.contains(&bare) {
                    flush(&mut current, false, &mut blocks);
                    if name == "li" {
                        current.push_str("- ");
                    }
                }
            }
            Piece::Char { c, .. } => current.push(if c == '\u{a0}' { ' ' } else { c }),
        }
    }
    flush(&mut current, pre_depth > 0, &mut blocks);
    blocks
}

/// Greedy word wrap; words longer than `width` get their own line.
pub fn wrap_words(text: &str, width: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut line = String::new();
    let mut len = 0;
    for word in text.split_whitespace() {
        let w = word.chars().count();
        if len > 0 && len + 1 + w > width {
            lines.push(core::mem::take(&mut line));
            len = 0;
        }
        if len > 0 {
            line.push(' ');
            len += 1;
        }
        line.push_str(word);
        len += w;
    }
    if !line.is_empty() {
        lines.push(line);
    }
    lines
}
