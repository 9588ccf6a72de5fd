use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{AnnotationNode, CodeAnchor, DocumentGraph};
use crate::html::{to_text_blocks, wrap_words, TextBlock};

const WIDTH: usize = 100;

/// Comment lines for one node and its nested children, without the `/*`
/// and `*/` delimiters. Only the author-written part is kept.
fn comment_lines(graph: &DocumentGraph, node: &AnnotationNode, depth: usize, out: &mut Vec<String>) {
    let pad = "  ".repeat(depth);
    let width = WIDTH.saturating_sub(pad.len()).max(20);
    let mut paragraphs: Vec<TextBlock> = Vec::new();
    if let Some(t) = node.title.as_deref().filter(|t| !t.trim().is_empty()) {
        paragraphs.push(TextBlock::Paragraph(String::from(t.trim())));
    }
    if let Some(part) = node.parts.first() {
        paragraphs.extend(to_text_blocks(&part.html));
    }
    for block in paragraphs {
        if !out.is_empty() {
            out.push(String::new());
        }
        match block {
            TextBlock::Paragraph(p) => out.extend(wrap_words(&p, width).into_iter().map(|l| alloc::format!("{pad}{l}"))),
            TextBlock::Preformatted(p) => out.extend(p.lines().map(|l| alloc::format!("{pad}{l}"))),
        }
    }
    for c in &node.children {
        if let Some(child) = graph.node(c) {
            comment_lines(graph, child, depth + 1, out);
        }
    }
}

/// A plain block comment. Text that would close the comment early is
/// broken up.
fn block_comment(lines: &[String], indent: &str, nl: &str) -> String {
    let mut s = String::new();
    s.push_str(indent);
    s.push_str("/*");
    s.push_str(nl);
    for l in lines {
        s.push_str(indent);
        s.push_str(" *");
        if !l.is_empty() {
            s.push(' ');
            s.push_str(&l.replace("*/", "* /"));
        }
        s.push_str(nl);
    }
    s.push_str(indent);
    s.push_str(" */");
    s
}

/// The static format: clean code with every author-written annotation as a
/// plain comment where it was declared. Reference documentation is left
/// out entirely, including the reference part of merged annotations.
pub fn render_baseline(graph: &DocumentGraph) -> String {
    let code = graph.code();
    let text = code.code();
    let nl = if text.contains("\r\n") { "\r\n" } else { "\n" };

    // Insertion offset, whether the comment sat on its own line, indentation.
    let mut inserts: Vec<(usize, bool, String, Vec<String>)> = Vec::new();
    for root in graph.roots() {
        let Some(node) = graph.node(root) else { continue };
        if !node.kind.is_original() {
            continue;
        }
        let mut lines = Vec::new();
        comment_lines(graph, node, 0, &mut lines);
        let splice = node.origin.and_then(|o| code.splices().get(o.comment.wrapping_sub(1)));
        let (at, whole_line, indent) = match splice {
            Some(s) => {
                let indent: String = s.removed.chars().take_while(|c| *c == ' ' || *c == '\t').collect();
                (s.clean_offset, s.whole_line, if s.whole_line { indent } else { String::new() })
            }
            None => {
                let line = match node.code_anchors().first() {
                    Some(CodeAnchor::Inline { line, .. }) => *line,
                    Some(CodeAnchor::Block { first_line, .. }) => *first_line,
                    None => 1,
                };
                let start = code.lines().line_start(line).unwrap_or(text.len());
                let indent: String = text[start..].chars().take_while(|c| *c == ' ' || *c == '\t').collect();
                (start, true, indent)
            }
        };
        match inserts.last_mut() {
            // Entries of one annotation comment share a single comment.
            Some((prev_at, _, _, prev)) if *prev_at == at => {
                prev.push(String::new());
                prev.extend(lines);
            }
            _ => inserts.push((at, whole_line, indent, lines)),
        }
    }
    inserts.sort_by_key(|(at, ..)| *at);

    let mut out = String::with_capacity(text.len() * 2);
    let mut pos = 0;
    for (at, whole_line, indent, lines) in inserts {
        out.push_str(&text[pos..at]);
        out.push_str(&block_comment(&lines, &indent, nl));
        if whole_line {
            out.push_str(nl);
        }
        pos = at;
    }
    out.push_str(&text[pos..]);
    out
}
