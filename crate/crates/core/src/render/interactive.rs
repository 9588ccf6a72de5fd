use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{is_absolute_http_url, is_slug, RenderError, RenderOptions, CSS, CSS_FILE, FORMAT_INTERACTIVE, JS, JS_FILE};
use crate::graph::{validate_graph, AnnotationNode, CodeAnchor, DocumentGraph};
use crate::html::{escape, escape_into, wrap_text_ranges, TextMap};

/// An inline span to draw on one code line.
#[derive(Debug, Clone)]
struct LineSpan {
    start: usize,
    end: usize,
    id: String,
    marker: bool,
    reference: bool,
}

impl LineSpan {
    fn open(&self, continuation: bool) -> String {
        let mut class = String::from(if continuation { "cd-anchor-cont cd-inline" } else { "cd-anchor cd-inline" });
        if self.marker {
            class.push_str(" cd-marker");
        }
        if self.reference {
            class.push_str(" cd-reference");
        }
        format!("<span class=\"{class}\" data-cd-ids=\"{}\">", escape(&self.id))
    }
}

/// Writes one code line with its anchor spans. Spans may nest or cross;
/// a span cut by the end of another is closed and reopened as a
/// continuation piece.
fn write_line(out: &mut String, text: &str, spans: &mut [LineSpan]) {
    spans.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let chars: Vec<char> = text.chars().collect();
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 0;
    for pos in 0..=chars.len() {
        if stack.iter().any(|&s| spans[s].end <= pos) {
            let mut reopen = Vec::new();
            while let Some(top) = stack.pop() {
                out.push_str("</span>");
                if spans[top].end > pos {
                    reopen.push(top);
                }
                if stack.iter().all(|&s| spans[s].end > pos) {
                    break;
                }
            }
            reopen.reverse();
            for s in reopen {
                out.push_str(&spans[s].open(true));
                stack.push(s);
            }
        }
        while next < spans.len() && spans[next].start == pos {
            if spans[next].end > pos {
                out.push_str(&spans[next].open(false));
                stack.push(next);
            } else {
                // Empty spans still count as anchors.
                out.push_str(&spans[next].open(false));
                out.push_str("</span>");
            }
            next += 1;
        }
        if let Some(&c) = chars.get(pos) {
            let mut buf = [0u8; 4];
            escape_into(out, c.encode_utf8(&mut buf));
        }
    }
    for _ in stack {
        out.push_str("</span>");
    }
}

fn attr(out: &mut String, name: &str, value: &str) {
    let _ = write!(out, " {name}=\"{}\"", escape(value));
}

fn write_code(out: &mut String, graph: &DocumentGraph) -> Vec<(usize, usize, String, bool)> {
    let mut per_line: BTreeMap<usize, Vec<LineSpan>> = BTreeMap::new();
    let mut blocks = Vec::new();
    for n in graph.nodes() {
        let anchors = n.code_anchors().iter().map(|a| (a, n.show_marker, false));
        let refs = n.reference_anchors.iter().map(|a| (a, false, true));
        for (a, marker, reference) in anchors.chain(refs) {
            match a {
                CodeAnchor::Inline { line, col_start, col_end, .. } => {
                    per_line.entry(*line).or_default().push(LineSpan {
                        start: *col_start,
                        end: *col_end,
                        id: n.id.clone(),
                        marker,
                        reference,
                    });
                }
                CodeAnchor::Block { first_line, last_line } => {
                    blocks.push((*first_line, *last_line, n.id.clone(), n.show_marker));
                }
            }
        }
    }

    let code = graph.code();
    let text = code.code();
    out.push_str("<pre class=\"cd-code\"><code>");
    for line in 1..=code.line_count() {
        let range = code.lines().line_range(text, line).expect("line exists");
        let next_start = code.lines().line_start(line + 1).unwrap_or(text.len());
        let _ = write!(out, "<span class=\"cd-line\" data-line=\"{line}\">");
        let mut spans = per_line.remove(&line).unwrap_or_default();
        write_line(out, &text[range.clone()], &mut spans);
        out.push_str("</span>");
        out.push_str(&text[range.end..next_start]);
    }
    out.push_str("</code></pre>\n");
    blocks
}

fn write_annotation(out: &mut String, graph: &DocumentGraph, node: &AnnotationNode) {
    out.push_str("<section class=\"cd-annotation\" hidden");
    attr(out, "data-cd-id", &node.id);
    attr(out, "data-cd-kind", node.kind.as_str());
    if let Some(p) = node.parent() {
        attr(out, "data-cd-parent", p);
    }
    if let Some(s) = node.step {
        let _ = write!(out, " data-cd-step=\"{s}\"");
    }
    if let Some(t) = &node.title {
        attr(out, "data-cd-title", t);
    }
    if !node.children.is_empty() {
        attr(out, "data-cd-children", &node.children.join(" "));
    }
    out.push_str(">\n");

    // Nested anchors of the children live in the first part.
    let mut child_ranges = Vec::new();
    for c in &node.children {
        if let Some(anchor) = graph.node(c).and_then(AnnotationNode::nested_anchor) {
            let marker = if graph.node(c).is_some_and(|n| n.show_marker) { " cd-marker" } else { "" };
            let id = escape(c);
            child_ranges.push((
                anchor.start..anchor.end,
                format!("<span class=\"cd-anchor cd-nested{marker}\" data-cd-ids=\"{id}\">"),
                format!("<span class=\"cd-anchor-cont cd-nested{marker}\" data-cd-ids=\"{id}\">"),
            ));
        }
    }
    child_ranges.sort_by_key(|(r, _, _)| r.start);

    for (i, part) in node.parts.iter().enumerate() {
        out.push_str("<div class=\"cd-part\"");
        attr(out, "data-cd-label", &part.label);
        out.push_str(">\n<h3 class=\"cd-part-label\">");
        escape_into(out, &part.label);
        out.push_str("</h3>\n<div class=\"cd-part-body\">\n");
        if i == 0 && !child_ranges.is_empty() {
            out.push_str(&wrap_text_ranges(&part.html, &child_ranges, "</span>"));
        } else {
            out.push_str(&part.html);
        }
        out.push_str("</div>\n");
        if let Some(src) = &part.source {
            out.push_str("<a class=\"cd-source\" rel=\"noopener\" target=\"_blank\"");
            attr(out, "href", src);
            out.push_str(">Source</a>\n");
        }
        out.push_str("</div>\n");
    }
    out.push_str("</section>\n");
}

/// The interactive document. The graph is validated first; any
/// error-level diagnostic refuses rendering.
pub fn render_interactive(graph: &DocumentGraph, opts: &RenderOptions) -> Result<String, RenderError> {
    if !is_slug(&opts.document_id) {
        return Err(RenderError::InvalidDocumentId(opts.document_id.clone()));
    }
    if let Some(url) = &opts.telemetry_url {
        if !is_absolute_http_url(url) {
            return Err(RenderError::InvalidTelemetryUrl(url.clone()));
        }
    }
    let errors: Vec<_> = validate_graph(graph).into_iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        return Err(RenderError::InvalidGraph(errors));
    }

    let mut out = String::with_capacity(graph.code().code().len() * 4 + 8192);
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<meta name=\"viewport\" content=\"width=device-width, initial-scale=1\">\n");
    let _ = writeln!(out, "<meta name=\"casdoc:format\" content=\"{FORMAT_INTERACTIVE}\">");
    let _ = writeln!(out, "<meta name=\"casdoc:document-id\" content=\"{}\">", escape(&opts.document_id));
    if let Some(url) = &opts.telemetry_url {
        let _ = writeln!(out, "<meta name=\"casdoc:telemetry\" content=\"{}\">", escape(url));
    }
    let _ = writeln!(out, "<title>{}</title>", escape(&opts.title));
    let asset_dir = opts.asset_dir.trim_end_matches('/');
    if opts.embed_assets {
        let _ = writeln!(out, "<style>\n{CSS}</style>");
    } else {
        let _ = writeln!(out, "<link rel=\"stylesheet\" href=\"{}/{CSS_FILE}\">", escape(asset_dir));
    }
    out.push_str("</head>\n<body>\n");
    out.push_str("<main class=\"cd-document\"");
    attr(&mut out, "data-cd-document", &opts.document_id);
    out.push_str(">\n<header class=\"cd-toolbar\">\n<h1 class=\"cd-title\">");
    escape_into(&mut out, &opts.title);
    out.push_str("</h1>\n");
    if !graph.walkthrough().is_empty() {
        out.push_str("<button type=\"button\" class=\"cd-walkthrough\"");
        attr(&mut out, "data-cd-walkthrough", &graph.walkthrough().join(" "));
        out.push_str(">Walkthrough</button>\n");
    }
    out.push_str("<input type=\"search\" class=\"cd-search\" placeholder=\"Search annotations\" aria-label=\"Search annotations\">\n");
    out.push_str("<button type=\"button\" class=\"cd-undo\">Undo</button>\n<button type=\"button\" class=\"cd-redo\">Redo</button>\n");
    out.push_str("<button type=\"button\" class=\"cd-save\">Save state</button>\n</header>\n");

    out.push_str("<div class=\"cd-code-wrap\">\n");
    let blocks = write_code(&mut out, graph);
    out.push_str("<div class=\"cd-block-markers\">\n");
    for (first, last, id, marker) in blocks {
        let class = if marker { "cd-anchor cd-block cd-marker" } else { "cd-anchor cd-block" };
        let _ = writeln!(
            out,
            "<span class=\"{class}\" data-cd-ids=\"{}\" data-first-line=\"{first}\" data-last-line=\"{last}\" style=\"--cd-first:{first};--cd-last:{last}\"></span>",
            escape(&id)
        );
    }
    out.push_str("</div>\n</div>\n");

    out.push_str("<div class=\"cd-annotations\" hidden>\n");
    for n in graph.nodes() {
        write_annotation(&mut out, graph, n);
    }
    out.push_str("</div>\n</main>\n");
    if opts.embed_assets {
        let _ = writeln!(out, "<script>\n{JS}</script>");
    } else {
        let _ = writeln!(out, "<script src=\"{}/{JS_FILE}\"></script>", escape(asset_dir));
    }
    out.push_str("</body>\n</html>\n");
    Ok(out)
}

/// Text inside the document's code block, tags removed and entities
/// decoded.
pub fn code_block_text(html: &str) -> Option<String> {
    let start = html.find("<pre class=\"cd-code\"><code>")? + "<pre class=\"cd-code\"><code>".len();
    let end = start + html[start..].find("</code></pre>")?;
    Some(TextMap::new(&html[start..end]).text().to_string())
}
