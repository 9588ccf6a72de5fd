//! Diagnostics without output files.

use std::io::Write;
use std::path::PathBuf;

use casdoc_core::annotation::AnnotationDb;
use casdoc_core::apiref::ApiRefIndex;
use casdoc_core::diag::{codes, Diagnostic, Severity};
use casdoc_core::{lint_document, Sources};
use rayon::prelude::*;

use crate::files::read_source;

pub fn lint(inputs: &[PathBuf], db: Option<&AnnotationDb>, index: Option<&ApiRefIndex>) -> Vec<(PathBuf, Vec<Diagnostic>)> {
    inputs
        .par_iter()
        .map(|p| {
            let diags = match read_source(p) {
                Ok(src) => lint_document(&src, Sources { db, index }),
                Err(e) => vec![Diagnostic::error(0, codes::IO, format!("{e:#}"))],
            };
            (p.clone(), diags)
        })
        .collect()
}

/// One `file:line: CODE message` line per diagnostic. Informational
/// notes are printed but do not fail the run.
pub fn print(results: &[(PathBuf, Vec<Diagnostic>)], out: &mut impl Write) -> i32 {
    let mut failed = false;
    for (path, diags) in results {
        let file = path.display().to_string();
        for d in diags {
            let _ = writeln!(out, "{}", d.display_in(&file));
            failed |= d.severity != Severity::Info;
        }
    }
    if failed {
        crate::exit::FAILURES
    } else {
        crate::exit::OK
    }
}
