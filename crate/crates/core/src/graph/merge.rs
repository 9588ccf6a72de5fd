use alloc::vec::Vec;

use super::{AnnotationNode, CodeAnchor, DocumentGraph, NodeKind};

fn intersects_any(a: &CodeAnchor, anchors: &[CodeAnchor]) -> bool {
    anchors.iter().any(|b| a.intersects_inline(b))
}

/// Folds reference annotations into the graph.
///
/// A reference annotation whose inline anchor intersects an inline anchor
/// of an author-written node on the same line is absorbed: the node becomes
/// `merged` and gains the reference part. A node absorbs at most one
/// reference annotation. Occurrences of the reference that intersect none
/// of its targets stay attached, unmarked, to the first target. Reference
/// annotations that touch no eligible node are added as markerless roots.
///
/// Merging the same list twice changes nothing.
pub fn merge_apiref(graph: DocumentGraph, apiref: Vec<AnnotationNode>) -> DocumentGraph {
    let DocumentGraph { code, mut nodes, mut roots, .. } = graph;
    for mut api in apiref {
        let already = nodes.iter().any(|n| n.id == api.id || n.merged_from.as_deref() == Some(api.id.as_str()));
        if already {
            continue;
        }
        let api_anchors = api.code_anchors().to_vec();
        let targets: Vec<usize> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Original)
            .filter(|(_, n)| n.code_anchors().iter().any(|a| intersects_any(a, &api_anchors)))
            .map(|(i, _)| i)
            .collect();
        if targets.is_empty() {
            api.kind = NodeKind::Apiref;
            api.show_marker = false;
            roots.push(api.id.clone());
            nodes.push(api);
            continue;
        }
        let part = api.parts.first().cloned();
        let rest: Vec<CodeAnchor> = api_anchors
            .into_iter()
            .filter(|a| !targets.iter().any(|&t| intersects_any(a, nodes[t].code_anchors())))
            .collect();
        for (k, &t) in targets.iter().enumerate() {
            let node = &mut nodes[t];
            node.kind = NodeKind::Merged;
            node.merged_from = Some(api.id.clone());
            node.parts.extend(part.clone());
            if k == 0 {
                node.reference_anchors = rest.clone();
            }
        }
    }
    DocumentGraph::from_parts(code, nodes, roots)
}
