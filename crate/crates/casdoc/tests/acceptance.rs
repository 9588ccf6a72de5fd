//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use casdoc::serve::{router, AppState, EventLog, ACCEPTED_HEADER};
use casdoc_core::annotation::{extract_annotation_comments, strip_annotations, CleanCode, SourceFile};
use casdoc_core::apiref::load_index;
use casdoc_core::diag::codes;
use casdoc_core::graph::{resolve_inline, CodeAnchor, DocumentGraph, NodeKind, LABEL_EXPLANATION, LABEL_REFERENCE};
use casdoc_core::html::{to_text_blocks, TextBlock};
use casdoc_core::render::{render_baseline, render_interactive, RenderOptions};
use casdoc_core::telemetry::event::{Selection, SelectionAction, Via, Widget, HOUR, MINUTE, SECOND};
use casdoc_core::telemetry::reconstruct::OpenedVia;
use casdoc_core::telemetry::{
    chi_square_cramers_v, compute_metrics, kendall_tau, pearson_r, reconstruct, sign_test, AnalysisConfig, Detail,
    EventType, Format, InteractionEvent, IssueKind, Millis, SplitOrigin, UsageCounts,
};
use casdoc_core::{compile_document, validate_graph, Sources};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use tower::ServiceExt;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------------------
// 1. Round-trip integrity

/// A file and the number of annotation comments written into it.
fn gen_annotated_file(rng: &mut StdRng) -> (String, usize) {
    let nl = if rng.random_bool(0.2) { "\r\n" } else { "\n" };
    let mut lines: Vec<String> = vec!["class Gen {".into()];
    let n = rng.random_range(5..40);
    let mut annotations = 0;
    for i in 0..n {
        let indent = " ".repeat(rng.random_range(0..3) * 4);
        let piece = if i == n / 2 && annotations == 0 { 5 } else { rng.random_range(0..10) };
        match piece {
            0 => lines.push(format!("{indent}int x{i} = {i};")),
            1 => lines.push(format!("{indent}String s{i} = \"/*? not an annotation {i} */\";")),
            2 => lines.push(format!("{indent}char c{i} = '\\''; char d{i} = '\"';")),
            3 => lines.push(format!("{indent}// /*? line comment {i}")),
            4 => lines.push(format!("{indent}/* plain {i} */ int p{i};")),
            5 => {
                annotations += 1;
                lines.push(format!("{indent}/*? anchor: x{i}"));
                lines.push(format!("{indent}title: Entry {i}"));
                lines.push(String::new());
                lines.push(format!("{indent}Unicode é ü ✓ and `code` {i}."));
                lines.push(format!("{indent}*/"));
                lines.push(format!("{indent}int x{i} = {i};"));
            }
            6 => {
                annotations += 1;
                lines.push(format!("{indent}int y{i} = 1; /*? anchor: y{i}\n\nTrailing {i}. */"));
            }
            7 => {
                annotations += 1;
                lines.push(format!("{indent}/*? block: 1 */ int z{i} = 2;"));
            }
            8 => lines.push(format!("{indent}String t{i} = \"\"\"\n{indent}    /*? inside a text block */\n{indent}    \"\"\";")),
            _ => lines.push(String::new()),
        }
    }
    lines.push("}".into());
    let mut text = lines.join("\n").replace('\n', nl);
    if rng.random_bool(0.8) {
        text.push_str(nl);
    }
    (text, annotations)
}

fn criterion_1() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    let files: Vec<(String, usize)> = (0..200).map(|_| gen_annotated_file(&mut rng)).collect();
    let start = Instant::now();
    let mut comments = 0;
    for (i, (text, expected)) in files.iter().enumerate() {
        let src = SourceFile::java(format!("Gen{i}.java"), text.clone());
        let found = extract_annotation_comments(&src).map_err(|e| format!("file {i}: {e}"))?.len();
        ensure!(found == *expected, "file {i}: {found} annotation comments, wrote {expected}");
        comments += found;
        let clean = strip_annotations(&src).map_err(|e| format!("file {i}: {e}"))?;
        let again = extract_annotation_comments(&SourceFile::java("Clean.java", clean.code())).map_err(|e| format!("file {i}: {e}"))?;
        ensure!(again.is_empty(), "file {i}: annotation left in clean code");
        ensure!(clean.reinsert() == *text, "file {i}: reinsertion differs from the input");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    Ok(format!("{} files, {comments} annotation comments, 0 failures, {elapsed:.2?}", files.len()))
}

// ---------------------------------------------------------------------------
// 2. Anchor oracle equivalence

/// Non-overlapping left-to-right scan over code points.
fn inline_oracle(code: &str, text: &str, occurrence: u32, after: usize) -> Result<(usize, usize, usize), usize> {
    let lines: Vec<&str> = code.split('\n').collect();
    let Some((idx, line)) = lines.iter().enumerate().skip(after).find(|(_, l)| l.chars().any(|c| !c.is_whitespace())) else {
        return Err(0);
    };
    let chars: Vec<char> = line.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut i, mut count) = (0, 0);
    while i + t.len() <= chars.len() {
        if chars[i..i + t.len()] == t[..] {
            count += 1;
            if count == occurrence as usize {
                return Ok((idx + 1, i, i + t.len()));
            }
            i += t.len();
        } else {
            i += 1;
        }
    }
    Err(count)
}

fn criterion_2() -> Check {
    let mut rng = StdRng::seed_from_u64(2);
    let alphabet = ["a", "b", "ab", " ", "é", "(", "a.b"];
    let (mut cases, mut found) = (0, 0);
    for case in 0..2000 {
        let n_lines = rng.random_range(1..6);
        let lines: Vec<String> = (0..n_lines)
            .map(|_| {
                if rng.random_bool(0.2) {
                    "   ".into()
                } else {
                    (0..rng.random_range(1..12)).map(|_| *alphabet.choose(&mut rng).unwrap()).collect()
                }
            })
            .collect();
        let code = lines.join("\n");
        let text: String = loop {
            let line: Vec<char> = lines[rng.random_range(0..lines.len())].chars().collect();
            if rng.random_bool(0.5) && !line.is_empty() {
                let a = rng.random_range(0..line.len());
                let b = rng.random_range(a + 1..=line.len().min(a + 4));
                let t: String = line[a..b].iter().collect();
                if !t.trim().is_empty() {
                    break t;
                }
            }
            let t: String = (0..rng.random_range(1..4)).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
            if !t.trim().is_empty() {
                break t;
            }
        };
        let occurrence = rng.random_range(1..4);
        let after = rng.random_range(0..=n_lines);
        let clean = CleanCode::from_code(code.clone());
        let got = resolve_inline(&clean, &text, occurrence, after);
        let want = inline_oracle(&code, &text, occurrence, after);
        let agree = match (&got, &want) {
            (Ok(CodeAnchor::Inline { line, col_start, col_end, .. }), Ok((l, s, e))) => {
                found += 1;
                (line, col_start, col_end) == (l, s, e)
            }
            (Err(_), Err(_)) => true,
            _ => false,
        };
        ensure!(agree, "case {case}: code {code:?}, text {text:?}, occurrence {occurrence}, after {after}: {got:?} vs {want:?}");
        cases += 1;
    }
    Ok(format!("{cases} cases ({found} resolved), 0 mismatches"))
}

// ---------------------------------------------------------------------------
// 3. Graph invariants

struct GenDoc {
    text: String,
    /// Number of annotation entries written.
    entries: usize,
    /// (comment index, entry index) of top-level entries, in order.
    top_level: Vec<usize>,
}

/// Documents with up to `max` entries: each comment holds one or two
/// top-level entries, each followed by a chain of nested entries.
fn gen_doc(rng: &mut StdRng, max: usize, with_apiref: bool) -> GenDoc {
    let total = rng.random_range(1..=max);
    let mut out = String::new();
    if with_apiref {
        out.push_str("import java.security.SecureRandom;\n\n");
    }
    out.push_str("class Doc {\n");
    let mut entries = 0;
    let mut top_level = Vec::new();
    let mut step = 0;
    let mut k = 0;
    while entries < total {
        k += 1;
        let ty = if with_apiref && k % 3 == 0 { "SecureRandom" } else { "int" };
        let mut blocks: Vec<String> = Vec::new();
        let tops = if rng.random_bool(0.3) { 2 } else { 1 };
        for t in 0..tops {
            if entries >= total {
                break;
            }
            let anchor = match t {
                0 if ty == "SecureRandom" && rng.random_bool(0.5) => "SecureRandom".to_string(),
                0 => format!("v{k}"),
                _ => format!("a{k}"),
            };
            let id = format!("n{k}t{t}");
            let mut header = format!("anchor: {anchor}\nid: {id}\ntitle: Title {id}\n");
            if rng.random_bool(0.3) {
                step += 1;
                header.push_str(&format!("step: {step}\n"));
            }
            blocks.push(format!("{header}\nWord{id} explains alpha{id} and beta{id}."));
            top_level.push(entries);
            entries += 1;
            let mut parent = id;
            for d in 0..rng.random_range(0..=3) {
                if entries >= total {
                    break;
                }
                let child = format!("{parent}c{d}");
                blocks.push(format!("within: alpha{parent}\nid: {child}\n\nWord{child} explains alpha{child} and beta{child}."));
                entries += 1;
                parent = child;
            }
        }
        let body = blocks.join("\n---\n").replace('\n', "\n    ");
        out.push_str(&format!("    /*? {body}\n    */\n    {ty} v{k} = f{k}(a{k});\n\n"));
    }
    out.push_str("}\n");
    GenDoc { text: out, entries, top_level }
}

fn check_forest(g: &DocumentGraph) -> Result<(), String> {
    let ids: BTreeSet<&str> = g.nodes().iter().map(|n| n.id.as_str()).collect();
    ensure!(ids.len() == g.nodes().len(), "duplicate node ids");
    let mut seen_as_child = BTreeSet::new();
    for n in g.nodes() {
        for c in &n.children {
            let child = g.node(c).ok_or_else(|| format!("dangling child {c}"))?;
            ensure!(child.parent() == Some(n.id.as_str()), "child {c} does not point back to {}", n.id);
            ensure!(seen_as_child.insert(c.as_str()), "{c} has two parents");
        }
    }
    let roots: BTreeSet<&str> = g.roots().iter().map(String::as_str).collect();
    let parentless: BTreeSet<&str> = g.nodes().iter().filter(|n| n.parent().is_none()).map(|n| n.id.as_str()).collect();
    ensure!(roots == parentless, "roots differ from parentless nodes");
    let mut visited = BTreeSet::new();
    let mut stack: Vec<&str> = roots.iter().copied().collect();
    while let Some(id) = stack.pop() {
        ensure!(visited.insert(id), "cycle through {id}");
        stack.extend(g.node(id).unwrap().children.iter().map(String::as_str));
    }
    ensure!(visited.len() == g.nodes().len(), "{} of {} nodes reachable", visited.len(), g.nodes().len());
    Ok(())
}

fn compile(text: &str) -> Result<DocumentGraph, Vec<casdoc_core::Diagnostic>> {
    compile_document(&SourceFile::java("Doc.java", text), Sources::default()).map(|(g, _)| g)
}

fn criterion_3() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let (mut docs, mut dup_rejected, mut overlap_rejected, mut max_entries) = (0, 0, 0, 0);
    for case in 0..200 {
        let doc = gen_doc(&mut rng, 50, false);
        let g = compile(&doc.text).map_err(|d| format!("case {case}: {d:?}\n{}", doc.text))?;
        ensure!(g.nodes().len() == doc.entries, "case {case}: {} nodes for {} entries", g.nodes().len(), doc.entries);
        check_forest(&g).map_err(|e| format!("case {case}: {e}"))?;
        let depth = g.nodes().iter().map(|n| g.ancestors(&n.id).len() + 1).max().unwrap_or(0);
        ensure!(depth <= 4, "case {case}: depth {depth}");
        ensure!(validate_graph(&g).iter().all(|d| !d.is_error()), "case {case}: validation errors");
        max_entries = max_entries.max(doc.entries);
        docs += 1;

        // Same step on two entries.
        if doc.top_level.len() >= 2 {
            let mut n = 0;
            let dup = doc
                .text
                .lines()
                .filter(|l| !l.trim_start().starts_with("step: "))
                .map(|l| {
                    let t = l.trim_start();
                    if t.starts_with("title: Title ") && !t.contains('c') {
                        n += 1;
                        if n <= 2 {
                            return format!("{l}\n    step: 999");
                        }
                    }
                    l.to_string()
                })
                .collect::<Vec<_>>()
                .join("\n");
            let err = compile(&dup).err().ok_or_else(|| format!("case {case}: duplicate step accepted"))?;
            ensure!(err.iter().any(|d| d.code == codes::DUPLICATE_STEP), "case {case}: {err:?}");
            dup_rejected += 1;
        }

        // A second entry anchored on the same text of the same line.
        let overlap = doc.text.replacen("\n    */\n    int v1 ", "\n    ---\n    anchor: v1\n\n    Again.\n    */\n    int v1 ", 1);
        if overlap != doc.text {
            let err = compile(&overlap).err().ok_or_else(|| format!("case {case}: overlap accepted"))?;
            ensure!(err.iter().any(|d| d.code == codes::OVERLAP), "case {case}: {err:?}");
            overlap_rejected += 1;
        }
    }
    ensure!(dup_rejected > 50 && overlap_rejected > 50, "too few rejection cases: {dup_rejected}, {overlap_rejected}");
    Ok(format!(
        "{docs} documents (up to {max_entries} annotations, depth <= 4) valid; {dup_rejected} duplicate-step and {overlap_rejected} overlap variants rejected"
    ))
}

// ---------------------------------------------------------------------------
// 4. Merge semantics

const FIG_INDEX: &str = r#"{
  "java.security.SecureRandom": {"kind": "type", "summary": "<p>This class provides a cryptographically strong random number generator (RNG).</p>", "url": "https://docs.oracle.com/javase/8/docs/api/java/security/SecureRandom.html"},
  "javax.crypto.Cipher": {"kind": "type", "summary": "<p>This class provides the functionality of a cryptographic cipher for encryption and decryption.</p>", "url": "https://docs.oracle.com/javase/8/docs/api/javax/crypto/Cipher.html"}
}"#;

const FIG_SOURCE: &str = "import java.security.SecureRandom;
import javax.crypto.Cipher;

public class KeyExample {
    public static void main(String[] args) throws Exception {
        /*? anchor: SecureRandom
        title: Secure random numbers

        Use a `SecureRandom` rather than `Random` for anything related to keys.
        */
        SecureRandom random = new SecureRandom();
        Cipher cipher = null;
    }
}
";

fn criterion_4() -> Check {
    let index = load_index(FIG_INDEX).map_err(|e| e.to_string())?;
    let src = SourceFile::java("KeyExample.java", FIG_SOURCE);
    let (g, _) = compile_document(&src, Sources { db: None, index: Some(&index) }).map_err(|d| format!("{d:?}"))?;
    let merged: Vec<_> = g.nodes().iter().filter(|n| n.kind == NodeKind::Merged).collect();
    ensure!(merged.len() == 1, "{} merged nodes", merged.len());
    let m = merged[0];
    let labels: Vec<&str> = m.parts.iter().map(|p| p.label.as_str()).collect();
    ensure!(labels == [LABEL_EXPLANATION, LABEL_REFERENCE], "labels {labels:?}");
    ensure!(m.parts[1].source.as_deref().is_some_and(|u| u.ends_with("SecureRandom.html")), "no source link");
    ensure!(m.show_marker, "merged node lost its marker");
    let apiref: Vec<_> = g.nodes().iter().filter(|n| n.kind == NodeKind::Apiref).collect();
    ensure!(apiref.len() == 1 && apiref[0].title.as_deref() == Some("javax.crypto.Cipher"), "apiref nodes: {apiref:?}");
    ensure!(!apiref[0].show_marker, "apiref node shows a marker");
    ensure!(g.roots().contains(&apiref[0].id), "apiref node is not separate");
    ensure!(g.nodes().len() == 2, "{} nodes", g.nodes().len());
    let html = render_interactive(&g, &RenderOptions::new("key-example", "KeyExample.java")).map_err(|e| e.to_string())?;
    ensure!(html.matches("class=\"cd-source\"").count() == 2, "source links in HTML");
    Ok(format!("1 merged node `{}` with parts {labels:?} and source link; `{}` separate and markerless", m.id, apiref[0].id))
}

// ---------------------------------------------------------------------------
// 5. Self-containment

/// External references a browser would fetch: script/img/iframe sources,
/// stylesheet links, CSS imports and non-data `url(...)`.
fn external_refs(html: &str) -> Vec<String> {
    let lower = html.to_ascii_lowercase();
    let mut found = Vec::new();
    let mut i = 0;
    while let Some(off) = lower[i..].find('<') {
        let start = i + off;
        let end = lower[start..].find('>').map_or(lower.len(), |e| start + e + 1);
        let tag = &lower[start..end];
        let name: String = tag[1..].chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
        let has = |attr: &str| tag.contains(&format!(" {attr}="));
        let fetches = match name.as_str() {
            "script" | "img" | "iframe" | "audio" | "video" | "source" | "embed" => has("src") || has("srcset"),
            "link" => has("href") && (tag.contains("stylesheet") || tag.contains("icon") || tag.contains("preload")),
            "object" => has("data"),
            _ => false,
        };
        if fetches {
            found.push(html[start..end].to_string());
        }
        i = end;
    }
    for pat in ["@import", "url("] {
        for (pos, _) in lower.match_indices(pat) {
            let tail = &lower[pos + pat.len()..];
            let tail = tail.trim_start_matches(['"', '\'', ' ']);
            if pat == "@import" || !tail.starts_with("data:") {
                found.push(html[pos..(pos + 40).min(html.len())].to_string());
            }
        }
    }
    found
}

fn criterion_5() -> Check {
    let index = load_index(FIG_INDEX).map_err(|e| e.to_string())?;
    let (g, _) = compile_document(&SourceFile::java("KeyExample.java", FIG_SOURCE), Sources { db: None, index: Some(&index) })
        .map_err(|d| format!("{d:?}"))?;
    let mut opts = RenderOptions::new("key-example", "KeyExample.java");
    let linked = render_interactive(&g, &opts).map_err(|e| e.to_string())?;
    ensure!(!external_refs(&linked).is_empty(), "audit found nothing in the non-embedded page; audit is broken");
    opts.embed_assets = true;
    let mut pages = vec![render_interactive(&g, &opts).map_err(|e| e.to_string())?];
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..20 {
        let doc = gen_doc(&mut rng, 20, true);
        let (g, _) = compile_document(&SourceFile::java("Doc.java", doc.text), Sources { db: None, index: Some(&index) })
            .map_err(|d| format!("{d:?}"))?;
        pages.push(render_interactive(&g, &opts).map_err(|e| e.to_string())?);
    }
    for (i, p) in pages.iter().enumerate() {
        let refs = external_refs(p);
        ensure!(refs.is_empty(), "page {i}: {refs:?}");
        ensure!(p.contains("<style") && p.contains("<script"), "page {i}: assets not inlined");
    }
    Ok(format!("{} embedded pages, 0 external script/style/image references", pages.len()))
}

// ---------------------------------------------------------------------------
// 6. Baseline fidelity

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn comment_text(baseline: &str) -> String {
    let stripped: Vec<&str> = baseline
        .lines()
        .map(|l| {
            let t = l.trim_start();
            t.strip_prefix("/*").or_else(|| t.strip_prefix("*/")).or_else(|| t.strip_prefix('*')).unwrap_or(t)
        })
        .collect();
    collapse(&stripped.join(" "))
}

fn plain_text(html: &str) -> String {
    let blocks: Vec<String> = to_text_blocks(html)
        .into_iter()
        .map(|b| match b {
            TextBlock::Paragraph(p) | TextBlock::Preformatted(p) => p,
        })
        .collect();
    collapse(&blocks.join(" "))
}

fn criterion_6() -> Check {
    let index = load_index(FIG_INDEX).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(6);
    let (mut docs, mut originals, mut references) = (0, 0, 0);
    let mut sources: Vec<String> = vec![FIG_SOURCE.to_string()];
    sources.extend((0..100).map(|_| gen_doc(&mut rng, 30, true).text));
    for (i, text) in sources.iter().enumerate() {
        let (g, _) = compile_document(&SourceFile::java("Doc.java", text.clone()), Sources { db: None, index: Some(&index) })
            .map_err(|d| format!("doc {i}: {d:?}"))?;
        let baseline = render_baseline(&g);
        let flat = comment_text(&baseline);
        for n in g.nodes() {
            match n.kind {
                NodeKind::Original | NodeKind::Merged => {
                    let own = plain_text(&n.parts[0].html);
                    ensure!(flat.contains(&own), "doc {i}: text of `{}` missing: {own:?}", n.id);
                    if let Some(t) = &n.title {
                        ensure!(flat.contains(&collapse(t)), "doc {i}: title of `{}` missing", n.id);
                    }
                    originals += 1;
                }
                NodeKind::Apiref => references += 1,
            }
            for p in n.parts.iter().filter(|p| p.label == LABEL_REFERENCE) {
                let reference = plain_text(&p.html);
                ensure!(!flat.contains(&reference), "doc {i}: reference text of `{}` leaked", n.id);
            }
        }
        ensure!(!baseline.contains("cryptographic"), "doc {i}: reference text leaked");
        let again = extract_annotation_comments(&SourceFile::java("B.java", baseline)).map_err(|e| e.to_string())?;
        ensure!(again.is_empty(), "doc {i}: {} annotation comments after re-parse", again.len());
        docs += 1;
    }
    Ok(format!("{docs} documents, {originals} original texts present, {references} reference nodes absent, 0 annotation comments on re-parse"))
}

// ---------------------------------------------------------------------------
// 7. Pipeline boundaries and oracle reconstruction

fn ev(t: Millis, kind: EventType, pid: u64, sid: Option<&str>, did: Option<&str>, detail: Detail) -> InteractionEvent {
    InteractionEvent { t, kind, pid: Some(pid), sid: sid.map(String::from), did: did.map(String::from), detail }
}

fn consent(t: Millis, pid: u64) -> InteractionEvent {
    ev(t, EventType::Consent, pid, Some("s"), None, Detail::None)
}

fn open(t: Millis, pid: u64, did: &str) -> InteractionEvent {
    ev(t, EventType::OpenExample, pid, Some("s"), Some(did), Detail::Format(Format::Casdoc))
}

fn hover(t: Millis, pid: u64, marker: &str, dwell_ms: u64) -> InteractionEvent {
    ev(t, EventType::InteractMarker, pid, Some("s"), Some("A"), Detail::Marker { marker: marker.into(), dwell_ms })
}

fn boundary_matrix() -> Result<Vec<String>, String> {
    let cfg = AnalysisConfig::default();
    let late = 20 * MINUTE;
    let mut rows = Vec::new();
    for (gap, want) in [(HOUR + 59 * MINUTE, 1), (2 * HOUR + MINUTE, 2)] {
        let r = reconstruct(&[consent(0, 1), open(late, 1, "A"), open(late + gap, 1, "A")], &cfg);
        let got = r.participants[0].sessions.len();
        ensure!(got == want, "session gap {gap} ms: {got} sessions");
        rows.push(format!("gap {}m -> {got} session(s)", gap / MINUTE));
    }
    for (gap, want) in [(4900, 1), (5100, 2)] {
        let r = reconstruct(&[consent(0, 1), open(late, 1, "A"), hover(late + SECOND, 1, "x", 1500), hover(late + SECOND + gap, 1, "x", 1500)], &cfg);
        let got = r.participants[0].annotation_views[0].len();
        ensure!(got == want, "hover gap {gap} ms: {got} views");
        rows.push(format!("hover gap {:.1}s -> {got} view(s)", gap as f64 / 1000.0));
    }
    for (dwell, want) in [(900, 0), (1100, 1)] {
        let r = reconstruct(&[consent(0, 1), open(late, 1, "A"), hover(late + SECOND, 1, "x", dwell)], &cfg);
        let got = r.participants[0].annotation_views[0].len();
        ensure!(got == want, "dwell {dwell} ms: {got} views");
        rows.push(format!("dwell {:.1}s -> {got} view(s)", dwell as f64 / 1000.0));
    }
    for (last, want) in [(14 * MINUTE, false), (16 * MINUTE, true)] {
        let r = reconstruct(&[consent(0, 1), open(MINUTE, 1, "A"), open(last, 1, "A")], &cfg);
        let got = r.participants.len() == 1;
        ensure!(got == want, "last event at consent+{}m: retained {got}", last / MINUTE);
        rows.push(format!("consent+{}m -> {}", last / MINUTE, if got { "retained" } else { "excluded" }));
    }
    Ok(rows)
}

/// Straightforward re-derivation of the reconstruction rules, written
/// independently of the library.
mod naive {
    use super::*;

    pub type SessionRow = (u64, Millis, Millis, usize, SplitOrigin);
    pub type ViewRow = (u64, String, usize, Format, bool, usize);
    pub type AvRow = (u64, usize, String, Millis, Vec<(Millis, Millis, u64, usize)>, bool, bool, OpenedVia, bool);
    pub type SearchRow = (u64, usize, String, usize, Millis, Millis, Vec<(String, SelectionAction)>);

    #[derive(Debug, Default, PartialEq)]
    pub struct Out {
        pub sessions: Vec<SessionRow>,
        pub views: Vec<ViewRow>,
        pub avs: Vec<AvRow>,
        pub searches: Vec<SearchRow>,
        pub issues: BTreeMap<&'static str, usize>,
        pub excluded: BTreeSet<u64>,
    }

    pub fn issue_key(k: &IssueKind) -> &'static str {
        match k {
            IssueKind::NoConsent => "no_consent",
            IssueKind::Withdrawn => "withdrawn",
            IssueKind::Orphan { .. } => "orphan",
            IssueKind::UnpinWithoutPin { .. } => "unpin",
        }
    }

    struct View {
        did: String,
        session: usize,
        format: Format,
        synthetic: bool,
        events: Vec<InteractionEvent>,
    }

    pub fn run(events: &[InteractionEvent], cfg: &AnalysisConfig) -> Out {
        let mut out = Out::default();
        let pids: BTreeSet<u64> = events.iter().filter_map(|e| e.pid).collect();
        for pid in pids {
            let mut evs: Vec<InteractionEvent> = events.iter().filter(|e| e.pid == Some(pid)).cloned().collect();
            evs.sort_by_key(|e| e.t);
            if evs.iter().any(|e| e.kind == EventType::Withdraw) {
                *out.issues.entry("withdrawn").or_default() += 1;
                continue;
            }
            let Some(c) = evs.iter().filter(|e| e.kind == EventType::Consent).map(|e| e.t).min() else {
                *out.issues.entry("no_consent").or_default() += 1;
                continue;
            };
            if evs.iter().map(|e| e.t).max().unwrap() <= c + cfg.learning_period {
                out.excluded.insert(pid);
                continue;
            }

            // Sessions: mark each split point, then cut.
            let mut starts: Vec<(usize, SplitOrigin)> = Vec::new();
            for i in 0..evs.len() {
                let cookie_before = evs[..i].iter().rev().find_map(|e| e.sid.as_deref());
                if i == 0 {
                    starts.push((0, SplitOrigin::Cookie));
                } else if evs[i].sid.is_some() && cookie_before.is_some() && evs[i].sid.as_deref() != cookie_before {
                    starts.push((i, SplitOrigin::Cookie));
                } else if evs[i].t - evs[i - 1].t >= cfg.session_gap {
                    starts.push((i, SplitOrigin::Gap));
                }
            }
            let mut sessions: Vec<&[InteractionEvent]> = Vec::new();
            for (k, &(s, origin)) in starts.iter().enumerate() {
                let e = starts.get(k + 1).map_or(evs.len(), |x| x.0);
                let slice = &evs[s..e];
                sessions.push(slice);
                out.sessions.push((pid, slice[0].t, slice[slice.len() - 1].t, slice.len(), origin));
            }

            // Views: the latest view of the same document in the same session.
            let mut views: Vec<View> = Vec::new();
            let mut opened: BTreeMap<String, Format> = BTreeMap::new();
            for (si, session) in sessions.iter().enumerate() {
                for e in session.iter() {
                    let Some(did) = e.did.clone() else { continue };
                    if matches!(e.kind, EventType::OpenExample | EventType::ChangeFormat) {
                        let f = match e.detail {
                            Detail::Format(f) => f,
                            _ => Format::Casdoc,
                        };
                        opened.insert(did.clone(), f);
                        views.push(View { did, session: si, format: f, synthetic: false, events: vec![e.clone()] });
                    } else if e.kind.is_client() {
                        if let Some(v) = views.iter_mut().rev().find(|v| v.session == si && v.did == did) {
                            v.events.push(e.clone());
                        } else if let Some(&f) = opened.get(&did) {
                            views.push(View { did, session: si, format: f, synthetic: true, events: vec![e.clone()] });
                        } else {
                            *out.issues.entry("orphan").or_default() += 1;
                        }
                    }
                }
            }

            for (vi, v) in views.iter().enumerate() {
                out.views.push((pid, v.did.clone(), v.session, v.format, v.synthetic, v.events.len()));
                annotation_views(pid, vi, v, cfg, &mut out);
                searches(pid, vi, v, cfg, &mut out);
            }
        }
        out
    }

    fn annotation_views(pid: u64, vi: usize, v: &View, cfg: &AnalysisConfig, out: &mut Out) {
        let ids: BTreeSet<&str> = v
            .events
            .iter()
            .filter_map(|e| match &e.detail {
                Detail::Marker { marker, .. } => Some(marker.as_str()),
                Detail::Annotation { annotation, .. } => Some(annotation.as_str()),
                _ => None,
            })
            .collect();
        // (index of first event, row)
        let mut rows: Vec<(usize, AvRow)> = Vec::new();
        for id in ids {
            let mut cur: Option<usize> = None;
            let mut last_hover: Option<Millis> = None;
            for (idx, e) in v.events.iter().enumerate() {
                match &e.detail {
                    Detail::Marker { marker, dwell_ms } if marker == id => {
                        if (*dwell_ms as i64) < cfg.hover_min {
                            continue;
                        }
                        if let Some(c) = cur {
                            let near = last_hover.is_some_and(|h| e.t - h < cfg.hover_merge);
                            let row = &mut rows[c].1;
                            if row.5 || near {
                                if near && !row.4.is_empty() {
                                    let seg = row.4.last_mut().unwrap();
                                    seg.1 = e.t;
                                    seg.2 += dwell_ms;
                                    seg.3 += 1;
                                } else {
                                    row.4.push((e.t, e.t, *dwell_ms, 1));
                                }
                                last_hover = Some(e.t);
                                continue;
                            }
                        }
                        rows.push((idx, (pid, vi, id.to_string(), e.t, vec![(e.t, e.t, *dwell_ms, 1)], false, false, OpenedVia::Anchor, false)));
                        cur = Some(rows.len() - 1);
                        last_hover = Some(e.t);
                    }
                    Detail::Annotation { annotation, action, via } if annotation == id => {
                        let nav = !matches!(via, Via::Anchor);
                        let opened_via = if nav { OpenedVia::Navigation } else { OpenedVia::Anchor };
                        match action {
                            casdoc_core::telemetry::event::OpenClose::Open => {
                                if let Some(c) = cur.filter(|&c| !nav && !rows[c].1 .5) {
                                    rows[c].1 .5 = true;
                                    continue;
                                }
                                rows.push((idx, (pid, vi, id.to_string(), e.t, vec![], true, false, opened_via, false)));
                                cur = Some(rows.len() - 1);
                                last_hover = None;
                            }
                            casdoc_core::telemetry::event::OpenClose::Close => {
                                if cur.is_none_or(|c| !rows[c].1 .5) {
                                    *out.issues.entry("unpin").or_default() += 1;
                                }
                                match cur.take() {
                                    Some(c) => {
                                        let row = &mut rows[c].1;
                                        row.8 |= !row.5;
                                        row.5 = true;
                                        row.6 = true;
                                    }
                                    None => rows.push((idx, (pid, vi, id.to_string(), e.t, vec![], true, true, opened_via, true))),
                                }
                                last_hover = None;
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        rows.sort_by_key(|r| r.0);
        out.avs.extend(rows.into_iter().map(|r| r.1));
    }

    fn searches(pid: u64, vi: usize, v: &View, cfg: &AnalysisConfig, out: &mut Out) {
        let mut acts: Vec<SearchRow> = Vec::new();
        for e in &v.events {
            let Detail::Search { query, selections } = &e.detail else { continue };
            let q = query.trim().to_string();
            if !selections.is_empty() {
                let i = match acts.iter().rposition(|a| a.2 == q) {
                    Some(i) => i,
                    None => {
                        acts.push((pid, vi, q.clone(), 0, e.t, e.t, vec![]));
                        acts.len() - 1
                    }
                };
                acts[i].5 = acts[i].5.max(e.t);
                acts[i].6.extend(selections.iter().map(|s| (s.annotation.clone(), s.action)));
                continue;
            }
            if q.is_empty() {
                continue;
            }
            let first = |s: &str| s.chars().next().map(|c| c.to_lowercase().to_string());
            let same_start = |a: &str| first(a).is_some() && first(a) == first(&q);
            match acts.last_mut() {
                Some(a) if e.t - a.5 < cfg.hover_merge && same_start(&a.2) => {
                    a.2 = q;
                    a.3 += 1;
                    a.5 = e.t;
                }
                _ => acts.push((pid, vi, q, 1, e.t, e.t, vec![])),
            }
        }
        out.searches.extend(acts);
    }
}

fn library_rows(events: &[InteractionEvent], cfg: &AnalysisConfig) -> naive::Out {
    let r = reconstruct(events, cfg);
    let mut out = naive::Out { excluded: r.excluded_learning_only.clone(), ..naive::Out::default() };
    for i in &r.issues {
        *out.issues.entry(naive::issue_key(&i.kind)).or_default() += 1;
    }
    for p in &r.participants {
        for s in &p.sessions {
            out.sessions.push((p.pid, s.start, s.end, s.events.len(), s.split_origin));
        }
        for (vi, v) in p.views.iter().enumerate() {
            out.views.push((p.pid, v.did.clone(), v.session, v.format, v.synthetic, v.actions.len()));
            for a in &p.annotation_views[vi] {
                let segs = a.hovers.iter().map(|h| (h.first, h.last, h.dwell_ms, h.events)).collect();
                out.avs.push((p.pid, vi, a.annotation.clone(), a.start, segs, a.pinned, a.unpinned, a.opened_via, a.coerced));
            }
            for s in &p.searches[vi] {
                let inter = s.interactions.iter().map(|i| (i.annotation.clone(), i.action)).collect();
                out.searches.push((p.pid, vi, s.final_query.clone(), s.keystrokes, s.start, s.end, inter));
            }
        }
    }
    out
}

fn random_stream(rng: &mut StdRng) -> Vec<InteractionEvent> {
    let mut events = Vec::new();
    let docs = ["A", "B", "C"];
    let ids = ["x", "y", "z"];
    let queries = ["e", "en", "enc", "key", "k", " ", "Enc"];
    let vias = [Via::Anchor, Via::Anchor, Via::Anchor, Via::Search, Via::Breadcrumb, Via::Walkthrough];
    for pid in 1..=rng.random_range(1..=4u64) {
        let mut t: Millis = rng.random_range(0..HOUR);
        let mut sid = format!("s{pid}0");
        if rng.random_bool(0.9) {
            events.push(ev(t, EventType::Consent, pid, Some(&sid), None, Detail::None));
        }
        for _ in 0..rng.random_range(5..110) {
            if events.len() >= 480 {
                break;
            }
            t += match rng.random_range(0..100) {
                0..=59 => rng.random_range(0..7000),
                60..=84 => rng.random_range(0..20 * MINUTE),
                85..=94 => rng.random_range(HOUR..3 * HOUR),
                _ => *[5000, 4999, 2 * HOUR, 2 * HOUR - 1, -3000].choose(rng).unwrap(),
            };
            if rng.random_bool(0.04) {
                sid = format!("s{pid}{}", rng.random_range(1..9));
            }
            let did = if rng.random_bool(0.03) { "Z" } else { *docs.choose(rng).unwrap() };
            let sid_opt = if rng.random_bool(0.05) { None } else { Some(sid.as_str()) };
            let id = *ids.choose(rng).unwrap();
            let (kind, detail) = match rng.random_range(0..100) {
                0..=11 => (EventType::OpenExample, Detail::Format(if rng.random_bool(0.8) { Format::Casdoc } else { Format::Baseline })),
                12..=15 => (EventType::ChangeFormat, Detail::Format(if rng.random_bool(0.5) { Format::Casdoc } else { Format::Baseline })),
                16..=50 => (EventType::InteractMarker, Detail::Marker { marker: id.into(), dwell_ms: rng.random_range(500..4000) }),
                51..=70 => (
                    EventType::OpenCloseAnnotation,
                    Detail::Annotation {
                        annotation: id.into(),
                        action: if rng.random_bool(0.55) {
                            casdoc_core::telemetry::event::OpenClose::Open
                        } else {
                            casdoc_core::telemetry::event::OpenClose::Close
                        },
                        via: *vias.choose(rng).unwrap(),
                    },
                ),
                71..=90 => {
                    let selections = if rng.random_bool(0.3) {
                        vec![Selection {
                            annotation: id.into(),
                            action: if rng.random_bool(0.5) { SelectionAction::Hover } else { SelectionAction::Select },
                        }]
                    } else {
                        vec![]
                    };
                    (EventType::Search, Detail::Search { query: (*queries.choose(rng).unwrap()).into(), selections })
                }
                91..=95 => (EventType::NavigationWidget, Detail::Navigation { widget: Widget::Undo, result: id.into() }),
                _ => (EventType::VisitPage, Detail::None),
            };
            if kind == EventType::VisitPage {
                events.push(InteractionEvent { t, kind, pid: None, sid: None, did: Some(did.into()), detail });
                continue;
            }
            // Client events need a session id; keep the generated gaps in them.
            let sid_opt = if kind.is_client() || kind == EventType::OpenExample { sid_opt.or(Some(sid.as_str())) } else { sid_opt };
            events.push(ev(t, kind, pid, sid_opt, Some(did), detail));
        }
        if rng.random_bool(0.05) {
            events.push(ev(t + SECOND, EventType::Withdraw, pid, None, None, Detail::None));
        }
    }
    events
}

fn criterion_7() -> Check {
    let rows = boundary_matrix()?;
    let cfg = AnalysisConfig::default();
    let mut rng = StdRng::seed_from_u64(7);
    let (mut streams, mut events, mut avs, mut sessions) = (0, 0, 0, 0);
    for case in 0..300 {
        let stream = random_stream(&mut rng);
        ensure!(stream.len() <= 500, "stream too long");
        let want = naive::run(&stream, &cfg);
        let got = library_rows(&stream, &cfg);
        ensure!(got.sessions == want.sessions, "stream {case}: sessions differ\n{:?}\n{:?}", got.sessions, want.sessions);
        ensure!(got.views == want.views, "stream {case}: views differ\n{:?}\n{:?}", got.views, want.views);
        ensure!(got.avs == want.avs, "stream {case}: annotation views differ\n{:?}\n{:?}", got.avs, want.avs);
        ensure!(got.searches == want.searches, "stream {case}: search actions differ\n{:?}\n{:?}", got.searches, want.searches);
        ensure!(got.excluded == want.excluded, "stream {case}: learning-only exclusions differ");
        ensure!(got.issues == want.issues, "stream {case}: issues differ {:?} vs {:?}", got.issues, want.issues);
        streams += 1;
        events += stream.len();
        avs += got.avs.len();
        sessions += got.sessions.len();
    }
    Ok(format!("{}; {streams} random streams ({events} events, {sessions} sessions, {avs} annotation views) equal to the oracle", rows.join(", ")))
}

// ---------------------------------------------------------------------------
// 8. Published arithmetic

fn criterion_8() -> Check {
    let counts = UsageCounts {
        annotation_views: 2245,
        hover_only_views: 1943,
        clicked_views: 270,
        navigation_views: 32,
        nested_views: 172,
        top_level_views: 1441,
        javadoc_only_views: 613,
        ..UsageCounts::default()
    };
    let r = compute_metrics(&counts);
    let floating = r.value("fragments.floating_only").ok_or("floating-only missing")? * 100.0;
    let nested = r.value("fragments.nested_to_top_level").ok_or("nested ratio missing")?;
    let javadoc = r.value("external.javadoc_only_views").ok_or("javadoc share missing")? * 100.0;
    ensure!((floating - 87.8).abs() <= 0.05, "floating-only {floating:.3}%");
    ensure!((nested * 100.0 - 11.9).abs() <= 0.05, "nested/top-level {nested:.4}");
    ensure!((javadoc - 27.3).abs() <= 0.05, "javadoc share {javadoc:.3}%");
    Ok(format!("floating-only {floating:.2}%, nested/top-level {nested:.4}, reference-only views {javadoc:.2}%"))
}

// ---------------------------------------------------------------------------
// 9. Statistical kernels

fn binom(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

fn tau_b_brute(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let (mut c, mut d, mut tx, mut ty) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (xs[i] - xs[j], ys[i] - ys[j]);
            if dx == 0.0 {
                tx += 1.0;
            }
            if dy == 0.0 {
                ty += 1.0;
            }
            if dx * dy > 0.0 {
                c += 1.0;
            } else if dx * dy < 0.0 {
                d += 1.0;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    (c - d) / ((pairs - tx) * (pairs - ty)).sqrt()
}

fn criterion_9() -> Check {
    let mut rng = StdRng::seed_from_u64(9);
    let mut worst_r: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..30);
        // Sums are evaluated exactly in integers, so the only rounding in
        // the closed form is the final square root and division.
        let xi: Vec<i128> = (0..n).map(|_| rng.random_range(-1000..=1000)).collect();
        let yi: Vec<i128> = (0..n).map(|_| rng.random_range(-1000..=1000)).collect();
        let ni = n as i128;
        let (sx, sy): (i128, i128) = (xi.iter().sum(), yi.iter().sum());
        let sxy: i128 = xi.iter().zip(&yi).map(|(x, y)| x * y).sum();
        let sxx: i128 = xi.iter().map(|x| x * x).sum();
        let syy: i128 = yi.iter().map(|y| y * y).sum();
        let (vx, vy) = (ni * sxx - sx * sx, ni * syy - sy * sy);
        if vx == 0 || vy == 0 {
            continue;
        }
        let closed = (ni * sxy - sx * sy) as f64 / ((vx as f64) * (vy as f64)).sqrt();
        let xs: Vec<f64> = xi.iter().map(|&x| x as f64 / 8.0).collect();
        let ys: Vec<f64> = yi.iter().map(|&y| y as f64 / 8.0).collect();
        let r = pearson_r(&xs, &ys).map_err(|e| e.to_string())?;
        worst_r = worst_r.max((r - closed).abs());
    }
    ensure!(worst_r < 1e-12, "pearson deviation {worst_r:e}");
    let closed = (3.0 * 31.0 - 6.0 * 13.0) / ((3.0f64 * 14.0 - 36.0) * (3.0 * 69.0 - 169.0)).sqrt();
    ensure!((pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap() - closed).abs() < 1e-12, "pearson fixture");

    for t in [vec![vec![10, 20], vec![30, 60]], vec![vec![5, 10, 15], vec![1, 2, 3], vec![2, 4, 6]]] {
        let v = chi_square_cramers_v(&t).map_err(|e| e.to_string())?.cramers_v;
        ensure!(v.abs() < 1e-12, "V = {v} on independent table {t:?}");
    }
    let perfect = chi_square_cramers_v(&[vec![10, 0], vec![0, 10]]).map_err(|e| e.to_string())?.cramers_v;
    ensure!((perfect - 1.0).abs() < 1e-12, "V = {perfect} on [[10,0],[0,10]]");

    let mut worst_p: f64 = 0.0;
    let mut sign_cases = 0;
    for n in 1..=120u64 {
        for k in 0..=n {
            let m = k.max(n - k);
            let oracle = (2.0 * (m..=n).map(|i| binom(n, i)).sum::<u128>() as f64 / 2f64.powi(n as i32)).min(1.0);
            worst_p = worst_p.max((sign_test(k, n).unwrap() - oracle).abs());
            sign_cases += 1;
        }
    }
    ensure!(worst_p < 1e-12, "sign test deviation {worst_p:e}");

    let inc: Vec<f64> = (0..8).map(f64::from).collect();
    let dec: Vec<f64> = inc.iter().rev().copied().collect();
    ensure!(kendall_tau(&inc, &inc).unwrap().tau == 1.0, "tau on increasing");
    ensure!(kendall_tau(&inc, &dec).unwrap().tau == -1.0, "tau on decreasing");
    let mut worst_tau: f64 = 0.0;
    let mut tau_cases = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let xs: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect();
        let ys: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect();
        if let Ok(k) = kendall_tau(&xs, &ys) {
            worst_tau = worst_tau.max((k.tau - tau_b_brute(&xs, &ys)).abs());
            tau_cases += 1;
        }
    }
    ensure!(worst_tau < 1e-12, "tau deviation {worst_tau:e}");
    Ok(format!(
        "pearson max err {worst_r:.1e}; V 0/1 fixtures exact; sign test {sign_cases} cases max err {worst_p:.1e}; tau ±1 and {tau_cases} brute-force cases max err {worst_tau:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 10. Ingest durability

fn batch_json(batch: usize, size: usize) -> String {
    let events: Vec<serde_json::Value> = (0..size)
        .map(|i| {
            let e = InteractionEvent {
                t: 1_630_000_000_000 + (batch * 1000 + i) as i64,
                kind: EventType::Search,
                pid: Some(batch as u64 + 1),
                sid: Some(format!("b{batch}")),
                did: Some("doc".into()),
                detail: Detail::Search { query: format!("b{batch}-{i:03}"), selections: vec![] },
            };
            e.to_value()
        })
        .collect();
    serde_json::to_string(&events).unwrap()
}

async fn post(app: &axum::Router, body: String) -> (StatusCode, Option<String>) {
    let req = Request::builder().method("POST").uri("/events").body(Body::from(body)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let accepted = resp.headers().get(ACCEPTED_HEADER).map(|v| v.to_str().unwrap().to_string());
    (resp.status(), accepted)
}

fn malformed(i: usize) -> String {
    let valid = batch_json(9000 + i, 2);
    match i % 4 {
        0 => "{not json".into(),
        1 => valid.replacen("\"search\"", "\"teleport\"", 1),
        2 => valid.replacen("\"search\"", "\"consent\"", 1),
        _ => valid.replacen("\"pid\":", "\"pid_\":", 1),
    }
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log_path = dir.path().join("events.ndjson");
    let log = Arc::new(EventLog::open(&log_path).map_err(|e| e.to_string())?);
    let app = router(AppState { root: Arc::new(dir.path().to_path_buf()), log });
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(8).enable_all().build().unwrap();
    let (batches, size, bad) = (100, 100, 40);

    let unchanged = rt.block_on(async {
        let before = std::fs::read(&log_path).unwrap();
        for i in 0..4 {
            let (s, _) = post(&app, malformed(i)).await;
            assert_eq!(s, StatusCode::BAD_REQUEST);
        }
        std::fs::read(&log_path).unwrap() == before
    });
    ensure!(unchanged, "malformed batches changed the log");

    let results = rt.block_on(async {
        let mut set = tokio::task::JoinSet::new();
        for b in 0..batches + bad {
            let app = app.clone();
            let body = if b < batches { batch_json(b, size) } else { malformed(b - batches) };
            set.spawn(async move { (b, post(&app, body).await) });
        }
        let mut out = Vec::new();
        while let Some(r) = set.join_next().await {
            out.push(r.unwrap());
        }
        out
    });
    for (b, (status, accepted)) in &results {
        if *b < batches {
            ensure!(*status == StatusCode::NO_CONTENT && accepted.as_deref() == Some("100"), "batch {b}: {status} {accepted:?}");
        } else {
            ensure!(*status == StatusCode::BAD_REQUEST, "malformed batch {b}: {status}");
        }
    }

    let text = std::fs::read_to_string(&log_path).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    ensure!(lines.len() == batches * size, "{} log lines", lines.len());
    let mut positions: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (pos, line) in lines.iter().enumerate() {
        let e = InteractionEvent::parse_line(line).map_err(|e| format!("line {}: {e}", pos + 1))?;
        let Detail::Search { query, .. } = &e.detail else { return Err(format!("line {}: unexpected event", pos + 1)) };
        let (b, i) = query[1..].split_once('-').ok_or("bad marker")?;
        let (b, i): (usize, usize) = (b.parse().unwrap(), i.parse().unwrap());
        ensure!(b < batches, "line {}: event from a rejected batch", pos + 1);
        positions.entry(b).or_default().push((pos, i));
    }
    for (b, pos) in &positions {
        ensure!(pos.len() == size, "batch {b}: {} lines", pos.len());
        let contiguous = pos.windows(2).all(|w| w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1);
        ensure!(contiguous, "batch {b} interleaved");
    }
    Ok(format!("{} valid lines from {batches} concurrent batches, each contiguous; {} malformed batches rejected, log unchanged", lines.len(), bad + 4))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "round-trip integrity", criterion_1),
        (2, "anchor oracle equivalence", criterion_2),
        (3, "graph invariants", criterion_3),
        (4, "merge semantics", criterion_4),
        (5, "self-containment", criterion_5),
        (6, "baseline fidelity", criterion_6),
        (7, "pipeline boundaries and oracle", criterion_7),
        (8, "published arithmetic", criterion_8),
        (9, "statistical kernels", criterion_9),
        (10, "ingest durability", criterion_10),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({why})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
