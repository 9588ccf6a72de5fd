//! Reading the inputs the core crate expects as in-memory values.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use casdoc_core::annotation::{AnnotationDb, DbError, SourceFile};
use casdoc_core::apiref::{load_index, ApiRefIndex};
use casdoc_core::telemetry::{Catalog, DocumentInfo};
use casdoc_core::graph::{DocumentGraph, GraphDump};

pub const GRAPH_SUFFIX: &str = ".graph.json";

pub fn read_source(path: &Path) -> Result<SourceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(SourceFile::java(path.display().to_string(), text))
}

pub fn read_index(path: &Path) -> Result<ApiRefIndex> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read index {}", path.display()))?;
    load_index(&text).with_context(|| format!("invalid index {}", path.display()))
}

/// A database directory holds `<id>.html` and `<id>.meta` pairs. Other
/// files are ignored.
pub fn read_db(dir: &Path) -> Result<AnnotationDb> {
    let mut pairs: BTreeMap<String, (Option<PathBuf>, Option<PathBuf>)> = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot read database {}", dir.display()))? {
        let path = entry?.path();
        let (Some(stem), Some(ext)) = (path.file_stem().and_then(|s| s.to_str()), path.extension()) else {
            continue;
        };
        let slot = pairs.entry(stem.to_string()).or_default();
        match ext.to_str() {
            Some("html") => slot.0 = Some(path.clone()),
            Some("meta") => slot.1 = Some(path.clone()),
            _ => {}
        }
    }
    let mut db = AnnotationDb::new();
    for (id, files) in pairs {
        let (html, meta) = match files {
            (Some(h), Some(m)) => (h, m),
            (None, _) => bail!(DbError::IncompleteEntry { id, missing: ".html" }),
            (_, None) => bail!(DbError::IncompleteEntry { id, missing: ".meta" }),
        };
        let content = fs::read_to_string(&html).with_context(|| format!("cannot read {}", html.display()))?;
        let meta_text = fs::read_to_string(&meta).with_context(|| format!("cannot read {}", meta.display()))?;
        db.insert(&id, &content, &meta_text)?;
    }
    Ok(db)
}

/// Document id for an input file: its file stem with anything outside
/// `[A-Za-z0-9_-]` replaced by `-`.
pub fn document_id(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("document");
    let id: String =
        stem.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' }).collect();
    if id.is_empty() {
        "document".into()
    } else {
        id
    }
}

/// Builds the analysis catalog from the graph dumps in `dir`.
pub fn read_catalog(dir: &Path) -> Result<Catalog> {
    let mut catalog = Catalog::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(id) = name.strip_suffix(GRAPH_SUFFIX) else { continue };
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let dump: GraphDump =
            serde_json::from_str(&text).with_context(|| format!("invalid graph dump {}", path.display()))?;
        let graph = DocumentGraph::from_dump(dump);
        catalog.insert(id.to_string(), DocumentInfo::from_graph(&graph));
    }
    Ok(catalog)
}
