//! What the analysis needs to know about each rendered document.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::graph::{CodeAnchor, DocumentGraph, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    Inline,
    Block,
    /// Nested annotations and unmarked reference nodes.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationInfo {
    pub kind: NodeKind,
    pub nested: bool,
    pub marker: MarkerKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DocumentInfo {
    pub annotations: BTreeMap<String, AnnotationInfo>,
}

impl DocumentInfo {
    pub fn from_graph(graph: &DocumentGraph) -> Self {
        let annotations = graph
            .nodes()
            .iter()
            .map(|n| {
                let marker = match n.code_anchors().first() {
                    _ if !n.show_marker => MarkerKind::None,
                    Some(CodeAnchor::Inline { .. }) => MarkerKind::Inline,
                    Some(CodeAnchor::Block { .. }) => MarkerKind::Block,
                    None => MarkerKind::None,
                };
                (n.id.clone(), AnnotationInfo { kind: n.kind, nested: n.parent().is_some(), marker })
            })
            .collect();
        Self { annotations }
    }

    pub fn get(&self, id: &str) -> Option<&AnnotationInfo> {
        self.annotations.get(id)
    }

    pub fn original_count(&self) -> usize {
        self.annotations.values().filter(|a| a.kind.is_original()).count()
    }
}

/// Documents by id.
pub type Catalog = BTreeMap<String, DocumentInfo>;
