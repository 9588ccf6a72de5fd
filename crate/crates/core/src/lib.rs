//! Core of the Casdoc toolchain.
//!
//! Annotated source files carry explanations inside `/*? ... */` comments.
//! This crate turns them into a [`graph::DocumentGraph`], renders the
//! interactive and baseline documents, and reconstructs reading behavior
//! from the telemetry those documents emit.
//!
//! Everything here is pure computation over in-memory values; file access,
//! HTTP and the command line live in the `casdoc` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod annotation;
pub mod apiref;
pub mod diag;
pub mod document;
pub mod graph;
pub mod html;
pub mod lexer;
pub mod render;
pub mod telemetry;

pub use annotation::{
    expand_includes, extract_annotation_comments, parse_entries, strip_annotations,
    AnchorDecl, AnnotationComment, AnnotationDb, BlockExtent, CleanCode, RawAnnotation,
    SourceFile,
};
pub use apiref::{load_index, make_apiref_annotations, scan_symbols, ApiRefIndex};
pub use diag::{Diagnostic, Severity};
pub use document::{compile_document, lint_document, Sources};
pub use graph::{build_graph, merge_apiref, validate_graph, DocumentGraph};
pub use render::{decode_state, encode_state, render_baseline, render_interactive, RenderOptions};
