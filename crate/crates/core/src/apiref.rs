//! Offline API-reference index and the markerless reference annotations
//! generated from it.
//!
//! Symbols are resolved lexically: explicit single-type imports, the
//! implicit `java.lang` package and on-demand imports with a unique match.
//! Members are recognized only in the `Type.member(` form.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::annotation::CleanCode;
use crate::graph::{AnnotationNode, CodeAnchor, ContentPart, NodeAnchors, NodeKind, LABEL_REFERENCE};
use crate::lexer::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Type,
    Method,
    Field,
    Constructor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiRefEntry {
    pub kind: EntryKind,
    #[serde(rename = "summary")]
    pub summary_html: String,
    pub url: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiRefIndex {
    entries: BTreeMap<String, ApiRefEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("malformed index at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("duplicate index key `{key}`")]
    DuplicateKey { key: String },
    #[error("index key `{key}` is not a qualified name")]
    InvalidKey { key: String },
    #[error("index entry `{key}`: {reason}")]
    InvalidEntry { key: String, reason: &'static str },
}

/// Keeps every key, duplicates included, so they can be reported by name.
struct EntryList(Vec<(String, ApiRefEntry)>);

impl<'de> Deserialize<'de> for EntryList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ListVisitor;
        impl<'de> Visitor<'de> for ListVisitor {
            type Value = EntryList;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object keyed by qualified name")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<EntryList, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, ApiRefEntry>()? {
                    out.push((k, v));
                }
                Ok(EntryList(out))
            }
        }
        d.deserialize_map(ListVisitor)
    }
}

fn is_java_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c == '_' || c == '$' || c.is_alphabetic())
        && chars.all(|c| c == '_' || c == '$' || c.is_alphanumeric())
}

fn is_valid_key(key: &str) -> bool {
    let (ty, member) = match key.split_once('#') {
        Some((t, m)) => (t, Some(m)),
        None => (key, None),
    };
    ty.split('.').all(is_java_ident) && member.is_none_or(is_java_ident)
}

fn is_absolute_url(url: &str) -> bool {
    match url.split_once(':') {
        Some((scheme, rest)) => {
            !rest.is_empty()
                && scheme.starts_with(|c: char| c.is_ascii_alphabetic())
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        None => false,
    }
}

/// Byte offset of a 1-based line and column as reported by the JSON parser.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses an index document: a JSON object mapping qualified names (members
/// as `type#member`) to `{"kind", "summary", "url"}`.
pub fn load_index(text: &str) -> Result<ApiRefIndex, IndexError> {
    let list: EntryList = serde_json::from_str(text).map_err(|e| IndexError::Syntax {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut entries = BTreeMap::new();
    for (key, entry) in list.0 {
        if !is_valid_key(&key) {
            return Err(IndexError::InvalidKey { key });
        }
        if entry.summary_html.trim().is_empty() {
            return Err(IndexError::InvalidEntry { key, reason: "summary is empty" });
        }
        if !is_absolute_url(&entry.url) {
            return Err(IndexError::InvalidEntry { key, reason: "url is not absolute" });
        }
        if entries.contains_key(&key) {
            return Err(IndexError::DuplicateKey { key });
        }
        entries.insert(key, entry);
    }
    Ok(ApiRefIndex { entries })
}

impl ApiRefIndex {
    pub fn get(&self, fq_name: &str) -> Option<&ApiRefEntry> {
        self.entries.get(fq_name)
    }

    pub fn contains(&self, fq_name: &str) -> bool {
        self.entries.contains_key(fq_name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ApiRefEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolOccurrence {
    /// Always an inline anchor on the simple or member name.
    pub span: CodeAnchor,
    pub fq_name: String,
    pub kind: EntryKind,
}

struct Imports {
    single: BTreeMap<String, String>,
    on_demand: Vec<String>,
    /// Token positions (in the significant token list) of package and
    /// import statements.
    skip: BTreeSet<usize>,
    local_types: BTreeSet<String>,
}

fn collect_imports(src: &str, toks: &[&Token]) -> Imports {
    let mut imports =
        Imports { single: BTreeMap::new(), on_demand: Vec::new(), skip: BTreeSet::new(), local_types: BTreeSet::new() };
    let text = |i: usize| toks.get(i).map_or("", |t| t.text(src));
    let mut i = 0;
    while i < toks.len() {
        let kw = text(i);
        let at_statement_start = i == 0 || matches!(text(i - 1), ";" | "}" | "{");
        if (kw == "import" || kw == "package") && at_statement_start && toks[i].kind == TokenKind::Ident {
            let start = i;
            let mut j = i + 1;
            let is_static = text(j) == "static";
            if is_static {
                j += 1;
            }
            let mut name = String::new();
            while j < toks.len() && text(j) != ";" {
                name.push_str(text(j));
                j += 1;
            }
            imports.skip.extend(start..=j.min(toks.len() - 1));
            if kw == "import" && !is_static {
                if let Some(pkg) = name.strip_suffix(".*") {
                    imports.on_demand.push(pkg.to_string());
                } else if let Some((_, simple)) = name.rsplit_once('.') {
                    imports.single.insert(simple.to_string(), name.clone());
                }
            }
            i = j + 1;
            continue;
        }
        if matches!(kw, "class" | "interface" | "enum" | "record") && toks[i].kind == TokenKind::Ident {
            if let Some(t) = toks.get(i + 1).filter(|t| t.kind == TokenKind::Ident) {
                imports.local_types.insert(t.text(src).to_string());
            }
        }
        i += 1;
    }
    imports
}

fn resolve_type(name: &str, imports: &Imports, index: &ApiRefIndex) -> Option<String> {
    if imports.local_types.contains(name) {
        return None;
    }
    if let Some(fq) = imports.single.get(name) {
        return index.contains(fq).then(|| fq.clone());
    }
    let mut candidates = BTreeSet::new();
    let lang = alloc::format!("java.lang.{name}");
    if index.contains(&lang) {
        candidates.insert(lang);
    }
    for pkg in &imports.on_demand {
        let fq = alloc::format!("{pkg}.{name}");
        if index.contains(&fq) {
            candidates.insert(fq);
        }
    }
    if candidates.len() == 1 {
        candidates.pop_first()
    } else {
        None
    }
}

/// Every occurrence of an indexed type or member in the code, in source
/// order. Literals and comments are never scanned; unresolvable names are
/// skipped.
pub fn scan_symbols(code: &CleanCode, index: &ApiRefIndex) -> Vec<SymbolOccurrence> {
    let src = code.code();
    let all = tokenize(src);
    let toks: Vec<&Token> = all.iter().filter(|t| !t.is_trivia()).collect();
    let imports = collect_imports(src, &toks);
    let text = |i: usize| toks.get(i).map_or("", |t| t.text(src));
    let anchor = |t: &Token| {
        let (line, col_start) = code.lines().line_col(src, t.span.start);
        let name = t.text(src);
        CodeAnchor::Inline { line, col_start, col_end: col_start + name.chars().count(), text: name.to_string() }
    };

    let mut cache: BTreeMap<&str, Option<String>> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, tok) in toks.iter().enumerate() {
        if tok.kind != TokenKind::Ident || imports.skip.contains(&i) || (i > 0 && text(i - 1) == ".") {
            continue;
        }
        let name = tok.text(src);
        let fq = cache.entry(name).or_insert_with(|| resolve_type(name, &imports, index)).clone();
        let Some(fq) = fq else { continue };
        let kind = index.get(&fq).map_or(EntryKind::Type, |e| e.kind);
        out.push(SymbolOccurrence { span: anchor(tok), fq_name: fq.clone(), kind });

        if text(i + 1) == "." && text(i + 3) == "(" && toks.get(i + 2).is_some_and(|t| t.kind == TokenKind::Ident) {
            let member_key = alloc::format!("{fq}#{}", text(i + 2));
            if let Some(entry) = index.get(&member_key) {
                out.push(SymbolOccurrence { span: anchor(toks[i + 2]), fq_name: member_key, kind: entry.kind });
            }
        }
    }
    out
}

/// Node id for a qualified name: `javadoc-` plus the lowercased name with
/// `.` as `-` and `#` as `--`.
pub fn apiref_id(fq_name: &str) -> String {
    let mut id = String::from("javadoc-");
    for c in fq_name.chars() {
        match c {
            '.' => id.push('-'),
            '#' => id.push_str("--"),
            c => id.extend(c.to_lowercase()),
        }
    }
    id
}

/// One markerless reference node per distinct qualified name, ordered by
/// first occurrence, with one anchor per occurrence.
pub fn make_apiref_annotations(occs: &[SymbolOccurrence], index: &ApiRefIndex) -> Vec<AnnotationNode> {
    let mut order: Vec<&str> = Vec::new();
    let mut anchors: BTreeMap<&str, Vec<CodeAnchor>> = BTreeMap::new();
    for o in occs {
        let list = anchors.entry(&o.fq_name).or_default();
        if list.is_empty() {
            order.push(&o.fq_name);
        }
        list.push(o.span.clone());
    }
    order
        .into_iter()
        .filter_map(|fq| {
            let entry = index.get(fq)?;
            Some(AnnotationNode {
                id: apiref_id(fq),
                kind: NodeKind::Apiref,
                title: Some(fq.replace('#', ".")),
                parts: alloc::vec![ContentPart {
                    label: LABEL_REFERENCE.to_string(),
                    html: entry.summary_html.clone(),
                    source: Some(entry.url.clone()),
                }],
                anchors: NodeAnchors::Code(anchors.remove(fq).unwrap_or_default()),
                reference_anchors: Vec::new(),
                children: Vec::new(),
                step: None,
                show_marker: false,
                origin: None,
                merged_from: None,
            })
        })
        .collect()
}
