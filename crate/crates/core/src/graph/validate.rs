use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{AnnotationNode, CodeAnchor, DocumentGraph};
use crate::diag::{codes, Diagnostic};
use crate::html::TextMap;

/// `(step, first id, second id)` for every step used more than once.
pub(crate) fn duplicate_steps(nodes: &[AnnotationNode]) -> Vec<(u32, String, String)> {
    let mut first: BTreeMap<u32, &str> = BTreeMap::new();
    let mut out = Vec::new();
    for n in nodes {
        if let Some(step) = n.step {
            match first.get(&step) {
                Some(id) => out.push((step, String::from(*id), n.id.clone())),
                None => {
                    first.insert(step, &n.id);
                }
            }
        }
    }
    out
}

/// Pairs of author-written nodes whose anchors overlap: inline code anchors
/// on the same line (with the line), or nested anchors in the same parent.
pub(crate) fn overlapping_anchors(nodes: &[AnnotationNode]) -> Vec<(String, String, Option<usize>)> {
    let mut by_line: BTreeMap<usize, Vec<(usize, usize, usize)>> = BTreeMap::new();
    let mut by_parent: BTreeMap<&str, Vec<(usize, usize, usize)>> = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate().filter(|(_, n)| n.kind.is_original()) {
        for a in n.code_anchors() {
            if let CodeAnchor::Inline { line, col_start, col_end, .. } = a {
                by_line.entry(*line).or_default().push((*col_start, *col_end, i));
            }
        }
        if let Some(nested) = n.nested_anchor() {
            by_parent.entry(nested.parent.as_str()).or_default().push((nested.start, nested.end, i));
        }
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let groups = by_line
        .into_iter()
        .map(|(l, v)| (Some(l), v))
        .chain(by_parent.into_values().map(|v| (None, v)));
    for (line, spans) in groups {
        for (x, &(s1, e1, i)) in spans.iter().enumerate() {
            for &(s2, e2, j) in &spans[x + 1..] {
                if i != j && s1 < e2 && s2 < e1 && seen.insert((i.min(j), i.max(j), line)) {
                    out.push((nodes[i.min(j)].id.clone(), nodes[i.max(j)].id.clone(), line));
                }
            }
        }
    }
    out
}

/// Structural checks on a built or loaded graph. An empty result means the
/// graph is well-formed; step gaps are informational only.
pub fn validate_graph(graph: &DocumentGraph) -> Vec<Diagnostic> {
    let nodes = graph.nodes();
    let mut out = Vec::new();
    let line_of = |id: &str| graph.node(id).map_or(0, AnnotationNode::line);

    let mut visited: BTreeSet<&str> = BTreeSet::new();
    let mut stack: Vec<&str> = Vec::new();
    for r in graph.roots() {
        match graph.node(r) {
            Some(n) if n.parent().is_none() => stack.push(r),
            Some(_) => out.push(Diagnostic::error(line_of(r), codes::DANGLING_LINK, format!("root `{r}` is a nested annotation"))),
            None => out.push(Diagnostic::error(0, codes::DANGLING_LINK, format!("root `{r}` does not exist"))),
        }
    }
    while let Some(id) = stack.pop() {
        if !visited.insert(id) {
            continue;
        }
        let node = graph.node(id).expect("pushed ids exist");
        for c in &node.children {
            match graph.node(c) {
                Some(child) if child.parent() == Some(id) => stack.push(c),
                Some(_) => out.push(Diagnostic::error(
                    node.line(),
                    codes::DANGLING_LINK,
                    format!("`{id}` lists `{c}` as a child but is not its parent"),
                )),
                None => out.push(Diagnostic::error(
                    node.line(),
                    codes::DANGLING_LINK,
                    format!("`{id}` lists missing child `{c}`"),
                )),
            }
        }
    }
    for n in nodes.iter().filter(|n| !visited.contains(n.id.as_str())) {
        out.push(Diagnostic::error(n.line(), codes::UNREACHABLE, format!("`{}` is not reachable from any code anchor", n.id)));
    }

    for n in nodes {
        let empty = n.parts.iter().all(|p| TextMap::new(&p.html).text().trim().is_empty());
        if empty {
            out.push(Diagnostic::warning(n.line(), codes::EMPTY_CONTENT, format!("`{}` has no content", n.id)));
        }
        if n.step.is_some() && n.parent().is_some() {
            out.push(Diagnostic::error(n.line(), codes::STEP_ON_NESTED, format!("`{}`: nested annotations cannot have a step", n.id)));
        }
    }

    for (step, first, second) in duplicate_steps(nodes) {
        out.push(Diagnostic::error(
            line_of(&second),
            codes::DUPLICATE_STEP,
            format!("step {step} used by both `{first}` and `{second}`"),
        ));
    }
    let steps: BTreeSet<u32> = nodes.iter().filter_map(|n| n.step).collect();
    if let Some(&max) = steps.last() {
        let missing: Vec<String> = (1..max).filter(|s| !steps.contains(s)).map(|s| format!("{s}")).collect();
        if !missing.is_empty() {
            out.push(Diagnostic::info(
                0,
                codes::STEP_GAP,
                format!("walkthrough skips step(s) {}", missing.join(", ")),
            ));
        }
    }

    for (first, second, line) in overlapping_anchors(nodes) {
        let msg = match line {
            Some(l) => format!("anchors of `{first}` and `{second}` overlap on code line {l}"),
            None => format!("nested anchors of `{first}` and `{second}` overlap"),
        };
        out.push(Diagnostic::error(line_of(&second), codes::OVERLAP, msg));
    }
    out
}
