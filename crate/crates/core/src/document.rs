//! The whole path from an annotated source file to a validated graph.

use alloc::vec::Vec;

use crate::annotation::{expand_includes, parse_source, strip_annotations, AnnotationDb, SourceFile};
use crate::apiref::{make_apiref_annotations, scan_symbols, ApiRefIndex};
use crate::diag::Diagnostic;
use crate::graph::{build_graph, merge_apiref, validate_graph, DocumentGraph};

/// Shared inputs of a conversion: the reusable annotation database and
/// the API reference index, both optional.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sources<'a> {
    pub db: Option<&'a AnnotationDb>,
    pub index: Option<&'a ApiRefIndex>,
}

/// Parses, strips, builds, merges reference annotations and validates.
/// On success the non-error diagnostics are returned with the graph; on
/// failure every diagnostic found is returned, errors first by line.
pub fn compile_document(src: &SourceFile, sources: Sources<'_>) -> Result<(DocumentGraph, Vec<Diagnostic>), Vec<Diagnostic>> {
    let (_, raw) = parse_source(src)?;
    let empty = AnnotationDb::new();
    let raw = expand_includes(raw, sources.db.unwrap_or(&empty))
        .map_err(|es| es.iter().map(|e| e.to_diagnostic()).collect::<Vec<_>>())?;
    let code = strip_annotations(src).map_err(|e| alloc::vec![e.to_diagnostic()])?;
    let mut graph = build_graph(code, raw).map_err(|es| {
        let mut d: Vec<Diagnostic> = es.iter().map(|e| e.to_diagnostic()).collect();
        d.sort_by_key(|d| d.line);
        d
    })?;
    if let Some(index) = sources.index {
        let occs = scan_symbols(graph.code(), index);
        let nodes = make_apiref_annotations(&occs, index);
        graph = merge_apiref(graph, nodes);
    }
    let mut diags = validate_graph(&graph);
    diags.sort_by_key(|d| d.line);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(diags);
    }
    Ok((graph, diags))
}

/// Every diagnostic for `src`, whether or not it compiles.
pub fn lint_document(src: &SourceFile, sources: Sources<'_>) -> Vec<Diagnostic> {
    match compile_document(src, sources) {
        Ok((_, d)) | Err(d) => d,
    }
}
