//! Line-oriented entry grammar inside an annotation comment.
//!
//! ```text
//! block   := entry ( "---" NEWLINE entry )*
//! entry   := header+ BLANKLINE content
//! header  := name ["[" INT "]"] ":" SP* VALUE NEWLINE
//! ```
//!
//! Directive names: `anchor`, `block`, `within`, `title`, `step`,
//! `include`, `id`. Content is Markdown, kept verbatim.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::AnnotationComment;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockExtent {
    Lines(u32),
    /// Up to, excluding, the next blank code line.
    UntilBlank,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorDecl {
    /// `anchor[k]: text`, the k-th occurrence on the next code line.
    Inline { text: String, occurrence: u32 },
    /// `block: n` or `block:`.
    Block(BlockExtent),
    /// `within: text`, a phrase in the preceding entry's content.
    Within { text: String },
}

/// Where an entry was declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Origin {
    /// 1-based index of the annotation comment in the file.
    pub comment: usize,
    /// 1-based index of the entry within its comment.
    pub entry: usize,
    /// Source line of the entry's first directive.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAnnotation {
    pub id: String,
    pub title: Option<String>,
    /// Markdown source.
    pub content: String,
    pub anchors: Vec<AnchorDecl>,
    pub step: Option<u32>,
    pub include: Option<String>,
    pub origin: Origin,
}

impl RawAnnotation {
    pub fn is_nested(&self) -> bool {
        matches!(self.anchors.first(), Some(AnchorDecl::Within { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarError {
    pub comment: usize,
    pub entry: usize,
    pub line: usize,
    pub kind: GrammarErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrammarErrorKind {
    MissingAnchor,
    UnknownDirective(String),
    ExpectedBlankLine,
    InvalidValue { directive: &'static str, value: String },
    DuplicateDirective(&'static str),
    MixedAnchorKinds,
    UnexpectedIndex(String),
}

impl fmt::Display for GrammarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "entry {} of annotation comment {}: ", self.entry, self.comment)?;
        match &self.kind {
            GrammarErrorKind::MissingAnchor => {
                f.write_str("entry must start with an anchor, block or within directive")
            }
            GrammarErrorKind::UnknownDirective(name) => write!(f, "unknown directive `{name}`"),
            GrammarErrorKind::ExpectedBlankLine => {
                f.write_str("expected a blank line between directives and content")
            }
            GrammarErrorKind::InvalidValue { directive, value } => {
                write!(f, "invalid value `{value}` for `{directive}`")
            }
            GrammarErrorKind::DuplicateDirective(name) => write!(f, "`{name}` given more than once"),
            GrammarErrorKind::MixedAnchorKinds => {
                f.write_str("an entry cannot mix anchor, block and within directives")
            }
            GrammarErrorKind::UnexpectedIndex(name) => {
                write!(f, "only `anchor` takes an occurrence index, not `{name}`")
            }
        }
    }
}

/// A payload line with its source line number.
#[derive(Debug, Clone, Copy)]
struct Line<'a> {
    no: usize,
    text: &'a str,
}

fn is_blank(s: &str) -> bool {
    s.trim().is_empty()
}

fn indent_width(s: &str) -> usize {
    s.chars().take_while(|c| *c == ' ' || *c == '\t').count()
}

/// Splits a payload into lines and removes the indentation shared by its
/// body lines, so that indented comments do not turn Markdown into code
/// blocks.
fn payload_lines(comment: &AnnotationComment) -> Vec<Line<'_>> {
    let raw: Vec<&str> =
        comment.payload.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    let last = raw.len() - 1;
    let common = raw
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(i, l)| !is_blank(l) && !(*i == last && is_blank(l)))
        .map(|(_, l)| indent_width(l))
        .min()
        .unwrap_or(0);
    let mut out = Vec::with_capacity(raw.len());
    for (i, text) in raw.iter().enumerate() {
        let no = comment.first_line + i;
        let text = if i == 0 {
            text.trim_start()
        } else if is_blank(text) {
            ""
        } else {
            let cut = text.char_indices().nth(common).map_or(text.len(), |(b, _)| b);
            &text[cut..]
        };
        out.push(Line { no, text });
    }
    if out.first().is_some_and(|l| l.text.is_empty()) {
        out.remove(0);
    }
    if out.last().is_some_and(|l| is_blank(l.text)) {
        out.pop();
    }
    out
}

struct Header<'a> {
    name: &'a str,
    index: Option<&'a str>,
    value: &'a str,
}

/// Recognizes `name[idx]: value`. Returns `None` for anything that is not
/// shaped like a directive.
fn parse_header(line: &str) -> Option<Header<'_>> {
    let name_len = line.bytes().take_while(|b| b.is_ascii_lowercase()).count();
    if name_len == 0 {
        return None;
    }
    let name = &line[..name_len];
    let mut rest = &line[name_len..];
    let mut index = None;
    if let Some(r) = rest.strip_prefix('[') {
        let close = r.find(']')?;
        index = Some(&r[..close]);
        rest = &r[close + 1..];
    }
    let value = rest.strip_prefix(':')?;
    Some(Header { name, index, value: value.trim() })
}

fn is_slug(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// Parses the entries of one annotation comment.
///
/// `comment_index` is the 1-based position of the comment in its file and
/// seeds the default ids `a<comment>-<entry>`.
pub fn parse_entries(
    comment: &AnnotationComment,
    comment_index: usize,
) -> Result<Vec<RawAnnotation>, GrammarError> {
    let lines = payload_lines(comment);
    let mut chunks: Vec<&[Line<'_>]> = Vec::new();
    let mut start = 0;
    for (i, line) in lines.iter().enumerate() {
        if line.text.trim_end() == "---" {
            chunks.push(&lines[start..i]);
            start = i + 1;
        }
    }
    chunks.push(&lines[start..]);

    chunks
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| parse_entry(chunk, comment_index, i + 1, comment.first_line))
        .collect()
}

fn parse_entry(
    lines: &[Line<'_>],
    comment: usize,
    entry: usize,
    fallback_line: usize,
) -> Result<RawAnnotation, GrammarError> {
    let first = lines.iter().position(|l| !is_blank(l.text));
    let entry_line = first.map_or(fallback_line, |i| lines[i].no);
    let err = |line: usize, kind| GrammarError { comment, entry, line, kind };

    let mut anchors = Vec::new();
    let mut title = None;
    let mut step = None;
    let mut include = None;
    let mut id = None;
    let mut rest = &lines[first.unwrap_or(lines.len())..];
    let mut saw_header = false;

    while let Some((line, tail)) = rest.split_first() {
        if is_blank(line.text) {
            rest = tail;
            break;
        }
        let Some(h) = parse_header(line.text) else {
            let kind = if saw_header {
                GrammarErrorKind::ExpectedBlankLine
            } else {
                GrammarErrorKind::MissingAnchor
            };
            return Err(err(line.no, kind));
        };
        saw_header = true;
        rest = tail;

        if h.index.is_some() && h.name != "anchor" {
            return Err(err(line.no, GrammarErrorKind::UnexpectedIndex(h.name.to_owned())));
        }
        let invalid = |directive: &'static str| {
            err(line.no, GrammarErrorKind::InvalidValue { directive, value: h.value.to_owned() })
        };
        let set_once = |slot: &mut Option<String>, directive: &'static str| {
            if slot.is_some() {
                return Err(err(line.no, GrammarErrorKind::DuplicateDirective(directive)));
            }
            *slot = Some(h.value.to_owned());
            Ok(())
        };
        match h.name {
            "anchor" => {
                let occurrence = match h.index {
                    None => 1,
                    Some(k) => match k.trim().parse::<u32>() {
                        Ok(k) if k >= 1 => k,
                        _ => {
                            return Err(err(
                                line.no,
                                GrammarErrorKind::InvalidValue {
                                    directive: "anchor",
                                    value: format!("[{k}]"),
                                },
                            ))
                        }
                    },
                };
                if h.value.is_empty() {
                    return Err(invalid("anchor"));
                }
                anchors.push(AnchorDecl::Inline { text: h.value.to_owned(), occurrence });
            }
            "block" => {
                let extent = if h.value.is_empty() {
                    BlockExtent::UntilBlank
                } else {
                    match h.value.parse::<u32>() {
                        Ok(n) if n >= 1 => BlockExtent::Lines(n),
                        _ => return Err(invalid("block")),
                    }
                };
                anchors.push(AnchorDecl::Block(extent));
            }
            "within" => {
                if h.value.is_empty() {
                    return Err(invalid("within"));
                }
                anchors.push(AnchorDecl::Within { text: h.value.to_owned() });
            }
            "title" => {
                if h.value.is_empty() {
                    return Err(invalid("title"));
                }
                set_once(&mut title, "title")?;
            }
            "step" => {
                if step.is_some() {
                    return Err(err(line.no, GrammarErrorKind::DuplicateDirective("step")));
                }
                match h.value.parse::<u32>() {
                    Ok(k) if k >= 1 => step = Some(k),
                    _ => return Err(invalid("step")),
                }
            }
            "include" => {
                if !is_slug(h.value) {
                    return Err(invalid("include"));
                }
                set_once(&mut include, "include")?;
            }
            "id" => {
                if !is_slug(h.value) {
                    return Err(invalid("id"));
                }
                set_once(&mut id, "id")?;
            }
            other => {
                return Err(err(line.no, GrammarErrorKind::UnknownDirective(other.to_owned())))
            }
        }
    }

    let (mut inline, mut block, mut within) = (0, 0, 0);
    for a in &anchors {
        match a {
            AnchorDecl::Inline { .. } => inline += 1,
            AnchorDecl::Block(_) => block += 1,
            AnchorDecl::Within { .. } => within += 1,
        }
    }
    if anchors.is_empty() {
        return Err(err(entry_line, GrammarErrorKind::MissingAnchor));
    }
    if [inline, block, within].iter().filter(|&&n| n > 0).count() > 1 {
        return Err(err(entry_line, GrammarErrorKind::MixedAnchorKinds));
    }
    if block > 1 {
        return Err(err(entry_line, GrammarErrorKind::DuplicateDirective("block")));
    }
    if within > 1 {
        return Err(err(entry_line, GrammarErrorKind::DuplicateDirective("within")));
    }

    let body: Vec<&str> = rest.iter().map(|l| l.text).collect();
    let start = body.iter().position(|l| !is_blank(l)).unwrap_or(body.len());
    let end = body.iter().rposition(|l| !is_blank(l)).map_or(start, |i| i + 1);
    let content = body[start..end].join("\n");

    Ok(RawAnnotation {
        id: id.unwrap_or_else(|| format!("a{comment}-{entry}")),
        title,
        content,
        anchors,
        step,
        include,
        origin: Origin { comment, entry, line: entry_line },
    })
}
