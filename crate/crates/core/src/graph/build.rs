use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::resolve::{resolve_block, resolve_inline, resolve_within, ResolveError};
use super::validate::{duplicate_steps, overlapping_anchors};
use super::{AnnotationNode, ContentPart, DocumentGraph, NodeAnchors, NodeKind, LABEL_EXPLANATION};
use crate::annotation::{AnchorDecl, CleanCode, Origin, RawAnnotation};
use crate::diag::{codes, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    Resolve { id: String, origin: Origin, error: ResolveError },
    DuplicateId { id: String, origin: Origin, first: Origin },
    NoParent { id: String, origin: Origin },
    StepOnNested { id: String, origin: Origin },
    DuplicateStep { step: u32, first: String, second: String, origin: Option<Origin> },
    Overlap { first: String, second: String, line: Option<usize>, origin: Option<Origin> },
    Markdown { id: String, origin: Origin, message: String },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Resolve { id, error, .. } => write!(f, "`{id}`: {error}"),
            GraphError::DuplicateId { id, first, .. } => {
                write!(f, "id `{id}` already used on line {}", first.line)
            }
            GraphError::NoParent { id, .. } => {
                write!(f, "`{id}`: a within entry needs a preceding entry in the same comment")
            }
            GraphError::StepOnNested { id, .. } => write!(f, "`{id}`: nested annotations cannot have a step"),
            GraphError::DuplicateStep { step, first, second, .. } => {
                write!(f, "step {step} used by both `{first}` and `{second}`")
            }
            GraphError::Overlap { first, second, line: Some(line), .. } => {
                write!(f, "anchors of `{first}` and `{second}` overlap on code line {line}")
            }
            GraphError::Overlap { first, second, line: None, .. } => {
                write!(f, "nested anchors of `{first}` and `{second}` overlap")
            }
            GraphError::Markdown { id, message, .. } => write!(f, "`{id}`: markdown: {message}"),
        }
    }
}

impl GraphError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        let (line, code) = match self {
            GraphError::Resolve { origin, error, .. } => (
                origin.line,
                match error {
                    ResolveError::Dangling { .. } => codes::DANGLING_ANCHOR,
                    ResolveError::Occurrence { .. } => codes::OCCURRENCE,
                    ResolveError::OutOfRange { .. } => codes::BLOCK_RANGE,
                    ResolveError::DanglingNested { .. } => codes::DANGLING_NESTED,
                },
            ),
            GraphError::DuplicateId { origin, .. } => (origin.line, codes::DUPLICATE_ID),
            GraphError::NoParent { origin, .. } => (origin.line, codes::NO_PARENT),
            GraphError::StepOnNested { origin, .. } => (origin.line, codes::STEP_ON_NESTED),
            GraphError::DuplicateStep { origin, .. } => (origin.map_or(0, |o| o.line), codes::DUPLICATE_STEP),
            GraphError::Overlap { origin, .. } => (origin.map_or(0, |o| o.line), codes::OVERLAP),
            GraphError::Markdown { origin, .. } => (origin.line, codes::MARKDOWN),
        };
        Diagnostic::error(line, code, self.to_string())
    }
}

/// Markdown to HTML with GitHub extensions; inline HTML is kept so that
/// database content and authored markup pass through.
pub fn render_markdown(md: &str) -> Result<String, String> {
    let options = markdown::Options {
        parse: markdown::ParseOptions::gfm(),
        compile: markdown::CompileOptions {
            allow_dangerous_html: true,
            ..markdown::CompileOptions::gfm()
        },
    };
    markdown::to_html_with_options(md, &options).map_err(|m| m.to_string())
}

/// Builds the annotation graph. Every resolution and structure error is
/// collected; the graph is returned only when there are none.
pub fn build_graph(code: CleanCode, annotations: Vec<RawAnnotation>) -> Result<DocumentGraph, Vec<GraphError>> {
    let mut errors = Vec::new();
    let mut nodes: Vec<AnnotationNode> = Vec::with_capacity(annotations.len());
    let mut seen: BTreeMap<String, Origin> = BTreeMap::new();
    let mut roots = Vec::new();
    // Comment index and node slot of the previous entry.
    let mut prev: Option<(usize, Option<usize>)> = None;

    for a in annotations {
        let origin = a.origin;
        let parent = match prev {
            Some((comment, slot)) if comment == origin.comment => Some(slot),
            _ => None,
        };
        prev = Some((origin.comment, None));

        if let Some(first) = seen.get(&a.id) {
            errors.push(GraphError::DuplicateId { id: a.id.clone(), origin, first: *first });
            continue;
        }
        seen.insert(a.id.clone(), origin);

        let html = match render_markdown(&a.content) {
            Ok(h) => h,
            Err(message) => {
                errors.push(GraphError::Markdown { id: a.id.clone(), origin, message });
                continue;
            }
        };
        let mut node = AnnotationNode {
            id: a.id.clone(),
            kind: NodeKind::Original,
            title: a.title.clone(),
            parts: alloc::vec![ContentPart { label: LABEL_EXPLANATION.to_string(), html, source: None }],
            anchors: NodeAnchors::Code(Vec::new()),
            reference_anchors: Vec::new(),
            children: Vec::new(),
            step: a.step,
            show_marker: true,
            origin: Some(origin),
            merged_from: None,
        };

        if a.is_nested() {
            if a.step.is_some() {
                errors.push(GraphError::StepOnNested { id: a.id.clone(), origin });
            }
            let Some(AnchorDecl::Within { text }) = a.anchors.first() else { unreachable!() };
            let parent_slot = match parent {
                None => {
                    errors.push(GraphError::NoParent { id: a.id.clone(), origin });
                    continue;
                }
                // The parent failed and was already reported.
                Some(None) => continue,
                Some(Some(slot)) => slot,
            };
            match resolve_within(&nodes[parent_slot], text) {
                Ok(anchor) => node.anchors = NodeAnchors::Nested(anchor),
                Err(error) => {
                    errors.push(GraphError::Resolve { id: a.id.clone(), origin, error });
                    continue;
                }
            }
            nodes[parent_slot].children.push(a.id.clone());
        } else {
            let base = code.anchor_base_line(origin.comment);
            let mut anchors = Vec::with_capacity(a.anchors.len());
            let mut failed = false;
            for decl in &a.anchors {
                let resolved = match (decl, base) {
                    (AnchorDecl::Inline { text, occurrence }, Some(base)) => {
                        resolve_inline(&code, text, *occurrence, base)
                    }
                    (AnchorDecl::Inline { text, .. }, None) => {
                        Err(ResolveError::Dangling { text: text.clone(), line: None })
                    }
                    (AnchorDecl::Block(extent), Some(base)) => resolve_block(&code, extent, base),
                    (AnchorDecl::Block(_), None) => Err(ResolveError::OutOfRange { wanted: 1, available: 0 }),
                    (AnchorDecl::Within { text }, _) => {
                        Err(ResolveError::DanglingNested { text: text.clone(), parent: String::new() })
                    }
                };
                match resolved {
                    Ok(anchor) => anchors.push(anchor),
                    Err(error) => {
                        errors.push(GraphError::Resolve { id: a.id.clone(), origin, error });
                        failed = true;
                    }
                }
            }
            if failed {
                continue;
            }
            node.anchors = NodeAnchors::Code(anchors);
            roots.push(a.id.clone());
        }
        prev = Some((origin.comment, Some(nodes.len())));
        nodes.push(node);
    }

    for (step, first, second) in duplicate_steps(&nodes) {
        let origin = nodes.iter().find(|n| n.id == second).and_then(|n| n.origin);
        errors.push(GraphError::DuplicateStep { step, first, second, origin });
    }
    for (first, second, line) in overlapping_anchors(&nodes) {
        let origin = nodes.iter().find(|n| n.id == second).and_then(|n| n.origin);
        errors.push(GraphError::Overlap { first, second, line, origin });
    }

    if errors.is_empty() {
        Ok(DocumentGraph::from_parts(code, nodes, roots))
    } else {
        Err(errors)
    }
}
