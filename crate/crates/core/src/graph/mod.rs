//! The annotation graph of one document: nodes rooted in code anchors,
//! nested nodes anchored in their parent's content.

pub(crate) mod build;
mod merge;
mod resolve;
mod validate;

pub use build::{build_graph, render_markdown, GraphError};
pub use merge::merge_apiref;
pub use resolve::{resolve_block, resolve_inline, resolve_within, ResolveError};
pub use validate::validate_graph;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::annotation::{CleanCode, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Original,
    Apiref,
    Merged,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Original => "original",
            NodeKind::Apiref => "apiref",
            NodeKind::Merged => "merged",
        }
    }

    /// Carries author-written content.
    pub fn is_original(self) -> bool {
        matches!(self, NodeKind::Original | NodeKind::Merged)
    }
}

pub const LABEL_EXPLANATION: &str = "Explanation";
pub const LABEL_REFERENCE: &str = "API reference";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentPart {
    pub label: String,
    pub html: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CodeAnchor {
    /// Columns are 0-based code points; `col_end` is exclusive.
    Inline { line: usize, col_start: usize, col_end: usize, text: String },
    /// Inclusive 1-based line range.
    Block { first_line: usize, last_line: usize },
}

impl CodeAnchor {
    pub fn is_inline(&self) -> bool {
        matches!(self, CodeAnchor::Inline { .. })
    }

    /// Inline spans on the same line that share at least one column.
    pub fn intersects_inline(&self, other: &CodeAnchor) -> bool {
        match (self, other) {
            (
                CodeAnchor::Inline { line: l1, col_start: s1, col_end: e1, .. },
                CodeAnchor::Inline { line: l2, col_start: s2, col_end: e2, .. },
            ) => l1 == l2 && s1 < e2 && s2 < e1,
            _ => false,
        }
    }
}

/// Phrase in the parent's visible content text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedAnchor {
    pub parent: String,
    /// Code-point range in the parent's text content.
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeAnchors {
    Code(Vec<CodeAnchor>),
    Nested(NestedAnchor),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub parts: Vec<ContentPart>,
    pub anchors: NodeAnchors,
    /// Unmarked anchors inherited from an absorbed reference annotation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_anchors: Vec<CodeAnchor>,
    #[serde(default)]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u32>,
    pub show_marker: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
    /// Id of the reference annotation merged into this node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merged_from: Option<String>,
}

impl AnnotationNode {
    pub fn code_anchors(&self) -> &[CodeAnchor] {
        match &self.anchors {
            NodeAnchors::Code(a) => a,
            NodeAnchors::Nested(_) => &[],
        }
    }

    pub fn nested_anchor(&self) -> Option<&NestedAnchor> {
        match &self.anchors {
            NodeAnchors::Nested(n) => Some(n),
            NodeAnchors::Code(_) => None,
        }
    }

    pub fn parent(&self) -> Option<&str> {
        self.nested_anchor().map(|n| n.parent.as_str())
    }

    pub fn anchor_count(&self) -> usize {
        match &self.anchors {
            NodeAnchors::Code(a) => a.len() + self.reference_anchors.len(),
            NodeAnchors::Nested(_) => 1,
        }
    }

    pub fn line(&self) -> usize {
        self.origin.map_or(0, |o| o.line)
    }
}

/// Serialized form of a graph: the interchange format for tools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDump {
    pub code: String,
    pub nodes: Vec<AnnotationNode>,
    pub roots: Vec<String>,
    pub walkthrough: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentGraph {
    code: CleanCode,
    nodes: Vec<AnnotationNode>,
    index: BTreeMap<String, usize>,
    roots: Vec<String>,
    walkthrough: Vec<String>,
}

impl DocumentGraph {
    pub(crate) fn from_parts(code: CleanCode, nodes: Vec<AnnotationNode>, roots: Vec<String>) -> Self {
        let mut graph = Self { code, nodes, index: BTreeMap::new(), roots, walkthrough: Vec::new() };
        graph.reindex();
        graph
    }

    fn reindex(&mut self) {
        self.index = self.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let mut stepped: Vec<(u32, &str)> =
            self.nodes.iter().filter_map(|n| n.step.map(|s| (s, n.id.as_str()))).collect();
        stepped.sort();
        self.walkthrough = stepped.into_iter().map(|(_, id)| String::from(id)).collect();
    }

    pub fn code(&self) -> &CleanCode {
        &self.code
    }

    /// Nodes in declaration order, reference annotations last.
    pub fn nodes(&self) -> &[AnnotationNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&AnnotationNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn roots(&self) -> &[String] {
        &self.roots
    }

    pub fn walkthrough(&self) -> &[String] {
        &self.walkthrough
    }

    /// Ancestor ids, root first.
    pub fn ancestors(&self, id: &str) -> Vec<&str> {
        let mut chain = Vec::new();
        let mut cur = self.node(id).and_then(|n| n.parent());
        while let Some(p) = cur {
            if chain.contains(&p) || chain.len() > self.nodes.len() {
                break;
            }
            chain.push(p);
            cur = self.node(p).and_then(|n| n.parent());
        }
        chain.reverse();
        chain
    }

    pub fn total_anchor_count(&self) -> usize {
        self.nodes.iter().map(AnnotationNode::anchor_count).sum()
    }

    pub fn to_dump(&self) -> GraphDump {
        GraphDump {
            code: String::from(self.code.code()),
            nodes: self.nodes.clone(),
            roots: self.roots.clone(),
            walkthrough: self.walkthrough.clone(),
        }
    }

    /// Rebuilds a graph from a dump. Source mapping to the annotated file
    /// is not part of the dump.
    pub fn from_dump(dump: GraphDump) -> Self {
        Self::from_parts(CleanCode::from_code(dump.code), dump.nodes, dump.roots)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_dump()).expect("graph dump serializes")
    }
}
