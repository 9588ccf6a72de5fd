use std::fs;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use casdoc::config::FileConfig;
use casdoc::convert::{convert, report_exit_code, ConvertOptions};
use casdoc::files::{read_catalog, read_db, read_index};
use casdoc::{analyze, exit, lint, serve};
use casdoc_core::telemetry::Catalog;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "casdoc", version, about = "Interactive annotated code examples")]
struct Cli {
    /// TOML configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert annotated files to interactive HTML and baseline source.
    Convert {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// API reference index (JSON).
        #[arg(long)]
        index: Option<PathBuf>,
        /// Directory of reusable annotations.
        #[arg(long)]
        db: Option<PathBuf>,
        /// Inline the viewer's CSS and script into each page.
        #[arg(long)]
        embed_assets: bool,
        /// Absolute URL that receives interaction events.
        #[arg(long)]
        telemetry: Option<String>,
        /// Also write `<id>.graph.json`, needed by `analyze --docs`.
        #[arg(long)]
        graph_dump: bool,
    },
    /// Report diagnostics as `file:line: CODE message`.
    Lint {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Serve converted documents and collect interaction events.
    Serve {
        dir: PathBuf,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Reconstruct reading behavior from an event log and report metrics.
    Analyze {
        log: PathBuf,
        /// Directory with `<id>.graph.json` dumps of the served documents.
        #[arg(long)]
        docs: Option<PathBuf>,
        /// Write the full report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Convert { inputs, out, index, db, embed_assets, telemetry, graph_dump } => {
            let c = file.convert;
            let opts = ConvertOptions {
                out: out.or(c.out).unwrap_or_else(|| PathBuf::from("out")),
                index: index.or(c.index),
                db: db.or(c.db),
                embed_assets: embed_assets || c.embed_assets.unwrap_or(false),
                telemetry: telemetry.or(c.telemetry),
                graph_dump: graph_dump || c.graph_dump.unwrap_or(false),
            };
            if inputs.is_empty() {
                eprintln!("warning: no input files");
                return Ok(exit::OK);
            }
            let reports = match convert(&inputs, &opts) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return Ok(exit::FATAL);
                }
            };
            Ok(report_exit_code(&reports, &mut std::io::stdout().lock()))
        }
        Command::Lint { inputs, index, db } => {
            let c = file.convert;
            let db = db.or(c.db).as_deref().map(read_db).transpose();
            let index = index.or(c.index).as_deref().map(read_index).transpose();
            let (db, index) = match (db, index) {
                (Ok(d), Ok(i)) => (d, i),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e:#}");
                    return Ok(exit::FATAL);
                }
            };
            let results = lint::lint(&inputs, db.as_ref(), index.as_ref());
            Ok(lint::print(&results, &mut std::io::stdout().lock()))
        }
        Command::Serve { dir, port, log } => {
            let s = file.serve;
            let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port.or(s.port).unwrap_or(8080)));
            let log = log.or(s.log).unwrap_or_else(|| PathBuf::from("events.ndjson"));
            let rt = tokio::runtime::Runtime::new()?;
            match rt.block_on(serve::run(dir, addr, log)) {
                Ok(()) => Ok(exit::OK),
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(exit::FATAL)
                }
            }
        }
        Command::Analyze { log, docs, json } => {
            let cfg = file.analysis_config()?;
            let text = fs::read_to_string(&log).with_context(|| format!("cannot read {}", log.display()))?;
            let catalog = match docs {
                Some(d) => read_catalog(&d)?,
                None => Catalog::new(),
            };
            let a = analyze::analyze(&text, &catalog, &cfg);
            print!("{}", a.to_table());
            for d in &a.diagnostics {
                eprintln!("note: {d}");
            }
            for s in &a.skipped_lines {
                eprintln!("{}:{}: skipped: {}", log.display(), s.line, s.message);
            }
            if let Some(path) = json {
                fs::write(&path, a.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
            }
            if !a.skipped_lines.is_empty() {
                eprintln!("{} corrupt line(s) skipped", a.skipped_lines.len());
                return Ok(exit::FAILURES);
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FATAL as u8)
        }
    }
}
