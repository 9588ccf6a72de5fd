//! Batch conversion of annotated files to interactive and baseline outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use casdoc_core::annotation::AnnotationDb;
use casdoc_core::apiref::ApiRefIndex;
use casdoc_core::diag::{codes, Diagnostic};
use casdoc_core::render::{self, render_baseline, render_interactive, RenderOptions};
use casdoc_core::{compile_document, Sources};
use rayon::prelude::*;

use crate::files::{document_id, read_db, read_index, read_source, GRAPH_SUFFIX};

pub const HTML_SUFFIX: &str = ".html";
pub const BASELINE_SUFFIX: &str = ".baseline.java";

#[derive(Debug, Clone, Default)]
pub struct ConvertOptions {
    pub out: PathBuf,
    pub index: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub embed_assets: bool,
    pub telemetry: Option<String>,
    pub graph_dump: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileReport {
    pub input: PathBuf,
    pub document_id: String,
    pub diagnostics: Vec<Diagnostic>,
    pub outputs: Vec<PathBuf>,
}

impl FileReport {
    pub fn failed(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

struct Shared {
    db: Option<AnnotationDb>,
    index: Option<ApiRefIndex>,
}

fn convert_one(input: &Path, id: String, shared: &Shared, opts: &ConvertOptions) -> FileReport {
    let mut report = FileReport { input: input.to_path_buf(), document_id: id, diagnostics: Vec::new(), outputs: Vec::new() };
    let src = match read_source(input) {
        Ok(s) => s,
        Err(e) => {
            report.diagnostics.push(Diagnostic::error(0, codes::IO, format!("{e:#}")));
            return report;
        }
    };
    let sources = Sources { db: shared.db.as_ref(), index: shared.index.as_ref() };
    let (graph, warnings) = match compile_document(&src, sources) {
        Ok(ok) => ok,
        Err(diags) => {
            report.diagnostics = diags;
            return report;
        }
    };
    report.diagnostics = warnings;
    let title = input.file_name().and_then(|n| n.to_str()).unwrap_or(&report.document_id).to_string();
    let mut ropts = RenderOptions::new(report.document_id.clone(), title);
    ropts.embed_assets = opts.embed_assets;
    ropts.telemetry_url = opts.telemetry.clone();
    let html = match render_interactive(&graph, &ropts) {
        Ok(h) => h,
        Err(e) => {
            report.diagnostics.push(Diagnostic::error(0, codes::IO, e.to_string()));
            return report;
        }
    };
    let mut outputs = vec![
        (format!("{}{HTML_SUFFIX}", report.document_id), html),
        (format!("{}{BASELINE_SUFFIX}", report.document_id), render_baseline(&graph)),
    ];
    if opts.graph_dump {
        outputs.push((format!("{}{GRAPH_SUFFIX}", report.document_id), graph.to_json()));
    }
    for (name, content) in outputs {
        let path = opts.out.join(name);
        match fs::write(&path, content) {
            Ok(()) => report.outputs.push(path),
            Err(e) => report.diagnostics.push(Diagnostic::error(0, codes::IO, format!("cannot write {}: {e}", path.display()))),
        }
    }
    report
}

/// Converts every input in parallel. Global problems (output directory,
/// index, database) abort before any file is processed; per-file problems
/// are reported in that file's [`FileReport`].
pub fn convert(inputs: &[PathBuf], opts: &ConvertOptions) -> Result<Vec<FileReport>> {
    fs::create_dir_all(&opts.out).with_context(|| format!("cannot create {}", opts.out.display()))?;
    let probe = opts.out.join(".casdoc-write-test");
    fs::write(&probe, b"").with_context(|| format!("{} is not writable", opts.out.display()))?;
    let _ = fs::remove_file(&probe);
    if let Some(url) = &opts.telemetry {
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            anyhow::bail!("telemetry URL `{url}` is not an absolute http(s) URL");
        }
    }
    let shared = Shared {
        db: opts.db.as_deref().map(read_db).transpose()?,
        index: opts.index.as_deref().map(read_index).transpose()?,
    };
    if !opts.embed_assets && !inputs.is_empty() {
        let assets = opts.out.join("assets");
        fs::create_dir_all(&assets).with_context(|| format!("cannot create {}", assets.display()))?;
        fs::write(assets.join(render::CSS_FILE), render::CSS)?;
        fs::write(assets.join(render::JS_FILE), render::JS)?;
    }

    // Two inputs with the same id would overwrite each other's outputs.
    let mut first: BTreeMap<String, &Path> = BTreeMap::new();
    let jobs: Vec<(&PathBuf, String, Option<&Path>)> = inputs
        .iter()
        .map(|p| {
            let id = document_id(p);
            let clash = first.get(&id).copied();
            first.entry(id.clone()).or_insert(p);
            (p, id, clash)
        })
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(p, id, clash)| match clash {
            Some(other) => FileReport {
                input: p.clone(),
                document_id: id.clone(),
                diagnostics: vec![Diagnostic::error(
                    0,
                    codes::IO,
                    format!("document id `{id}` already used by {}", other.display()),
                )],
                outputs: Vec::new(),
            },
            None => convert_one(p, id, &shared, opts),
        })
        .collect())
}

/// Prints diagnostics as `file:line: CODE message` and returns the exit code.
pub fn report_exit_code(reports: &[FileReport], out: &mut impl std::io::Write) -> i32 {
    let mut failed = false;
    for r in reports {
        let file = r.input.display().to_string();
        for d in &r.diagnostics {
            let _ = writeln!(out, "{}", d.display_in(&file));
        }
        failed |= r.failed();
    }
    if failed {
        crate::exit::FAILURES
    } else {
        crate::exit::OK
    }
}
