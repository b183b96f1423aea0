//! Command line for the decision engine: decide sentences, dump theory
//! tables, and enumerate or check coarse types, with an optional
//! persistent cache of computed theories.

mod cache;
mod coarse_io;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mtorder::coarse::{construction_value, satisfiable_coarse};
use mtorder::decide::{
    computed_theories, decide_sentence_limited, seed_theory, theory_hit_count, theory_of,
    Structure, DEFAULT_MAX_SET_DEPTH,
};
use mtorder::json::Json;
use mtorder::shape::Shape;
use mtorder::syntax::parse_formula;
use mtorder::value::{to_json, SIGNATURE_VERSION};
use mtorder::EngineError;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mtorder", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a sentence on a structure (exit 0 true, 1 false, 2 error).
    Decide(DecideArgs),
    /// Dump the theory of a structure at a shape as canonical JSON.
    Tables(TablesArgs),
    /// Coarse-type utilities.
    Coarse {
        #[command(subcommand)]
        command: CoarseCommand,
    },
}

#[derive(Args)]
struct DecideArgs {
    /// Target structure: R, N, Ndual, Z, or finite:<n>.
    #[arg(long)]
    structure: String,
    /// Path to the sentence, or `-` for standard input.
    #[arg(long)]
    formula: String,
    /// Cap on set-quantifier layers.
    #[arg(long, default_value_t = DEFAULT_MAX_SET_DEPTH)]
    max_depth: usize,
    /// Cache directory (also via MTORDER_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Emit a JSON result object instead of plain text.
    #[arg(long)]
    json: bool,
    /// Stream shape and fixpoint progress to standard error.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct TablesArgs {
    /// Target structure: R, N, Ndual, Z, or finite:<n>.
    #[arg(long)]
    structure: String,
    /// Quantifier shape, e.g. `(1)` or `2;(1,1)`.
    #[arg(long)]
    shape: String,
    /// Cache directory (also via MTORDER_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CoarseCommand {
    /// Enumerate the satisfiable coarse types at a level over a color set.
    Enumerate {
        #[arg(long)]
        level: usize,
        #[arg(long)]
        colors: usize,
        /// Pair every type with a witnessing construction.
        #[arg(long)]
        constructions: bool,
    },
    /// Validate a serialized coarse type or construction.
    Check { file: PathBuf },
}

/// Machine-readable error category.
fn kind_of(e: &EngineError) -> &'static str {
    match e {
        EngineError::Syntax { .. }
        | EngineError::Sort { .. }
        | EngineError::Unbound { .. }
        | EngineError::Malformed(_) => "parse",
        EngineError::Budget(_) | EngineError::Depth(_) => "budget",
        _ => "engine",
    }
}

fn fail(json: bool, kind: &str, msg: &str) -> ExitCode {
    if json {
        let obj = Json::Obj(vec![
            ("error".into(), Json::Str(msg.into())),
            ("kind".into(), Json::Str(kind.into())),
        ]);
        println!("{}", obj.to_string());
    }
    eprintln!("error ({kind}): {msg}");
    ExitCode::from(2)
}

fn cache_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os("MTORDER_CACHE_DIR").map(PathBuf::from))
}

/// Stores every theory computed this run that is not already on disk.
fn flush_theories(dir: &std::path::Path, wall_ms: u64) {
    for (structure, shape, value) in computed_theories() {
        let e = cache::Entry { structure, shape, value };
        let _ = cache::put(dir, &e, wall_ms);
    }
}

fn cmd_decide(args: DecideArgs) -> ExitCode {
    if args.trace {
        // The engine streams closure sizes and fixpoint rounds when this
        // variable is set.
        std::env::set_var("MTORDER_TRACE", "1");
    }
    let structure = match Structure::parse(&args.structure) {
        Ok(s) => s,
        Err(e) => return fail(args.json, kind_of(&e), &e.to_string()),
    };
    let text = match read_formula(&args.formula) {
        Ok(t) => t,
        Err(e) => return fail(args.json, "io", &format!("{e:#}")),
    };
    let f = match parse_formula(&text) {
        Ok(f) => f,
        Err(e) => return fail(args.json, kind_of(&e), &e.to_string()),
    };
    let dir = cache_dir(args.cache_dir);
    if let Some(dir) = &dir {
        for e in cache::entries(dir) {
            if e.structure == args.structure {
                seed_theory(structure, e.shape, e.value);
            }
        }
    }
    let start = Instant::now();
    let (verdict, info) = match decide_sentence_limited(&f, structure, args.max_depth) {
        Ok(r) => r,
        Err(e) => return fail(args.json, kind_of(&e), &e.to_string()),
    };
    let wall_ms = start.elapsed().as_millis() as u64;
    if args.trace {
        eprintln!(
            "shape {}, {} constituents, {} theory cache hits",
            info.shape,
            info.constituents,
            theory_hit_count()
        );
    }
    if let Some(dir) = &dir {
        flush_theories(dir, wall_ms);
    }
    if args.json {
        let obj = Json::Obj(vec![
            ("cache_hits".into(), Json::Int(theory_hit_count() as i64)),
            ("shape".into(), Json::Str(info.shape.to_string())),
            ("verdict".into(), Json::Bool(verdict)),
            ("wall_ms".into(), Json::Int(wall_ms as i64)),
        ]);
        println!("{}", obj.to_string());
    } else {
        println!("{verdict}");
    }
    ExitCode::from(if verdict { 0 } else { 1 })
}

fn read_formula(source: &str) -> Result<String> {
    if source == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).context("reading standard input")?;
        Ok(text)
    } else {
        std::fs::read_to_string(source).with_context(|| format!("reading {source}"))
    }
}

fn cmd_tables(args: TablesArgs) -> ExitCode {
    let structure = match Structure::parse(&args.structure) {
        Ok(s) => s,
        Err(e) => return fail(false, kind_of(&e), &e.to_string()),
    };
    let shape = match Shape::parse(&args.shape) {
        Ok(s) => s,
        Err(e) => return fail(false, kind_of(&e), &e.to_string()),
    };
    let dir = cache_dir(args.cache_dir);
    let start = Instant::now();
    let value = match dir.as_ref().and_then(|d| cache::get(d, &args.structure, &shape)) {
        Some(e) => {
            seed_theory(structure, shape.clone(), e.value);
            e.value
        }
        None => match theory_of(structure, &shape) {
            Ok(v) => v,
            Err(e) => return fail(false, kind_of(&e), &e.to_string()),
        },
    };
    if let Some(dir) = &dir {
        flush_theories(dir, start.elapsed().as_millis() as u64);
    }
    let obj = Json::Obj(vec![
        ("shape".into(), Json::Str(shape.to_string())),
        ("sig".into(), Json::Str(SIGNATURE_VERSION.into())),
        ("structure".into(), Json::Str(structure.to_string())),
        ("value".into(), to_json(value, shape.depth())),
    ]);
    print!("{}", obj.to_pretty_string());
    ExitCode::from(0)
}

fn cmd_coarse_enumerate(level: usize, colors: usize, constructions: bool) -> ExitCode {
    let entries = if constructions {
        match mtorder::coarse::satisfiable_with_constructions(level, colors) {
            Ok(mut pairs) => {
                pairs.sort_by(|a, b| a.0.cmp(&b.0));
                Json::Arr(
                    pairs
                        .iter()
                        .map(|(t, c)| {
                            Json::Obj(vec![
                                ("construction".into(), coarse_io::construction_to_json(c)),
                                ("type".into(), coarse_io::coarse_to_json(t)),
                            ])
                        })
                        .collect(),
                )
            }
            Err(e) => return fail(false, kind_of(&e), &e.to_string()),
        }
    } else {
        match satisfiable_coarse(level, colors) {
            Ok(mut types) => {
                types.sort();
                Json::Arr(types.iter().map(coarse_io::coarse_to_json).collect())
            }
            Err(e) => return fail(false, kind_of(&e), &e.to_string()),
        }
    };
    let count = match &entries {
        Json::Arr(a) => a.len(),
        _ => unreachable!(),
    };
    let obj = Json::Obj(vec![
        ("colors".into(), Json::Int(colors as i64)),
        ("count".into(), Json::Int(count as i64)),
        ("entries".into(), entries),
        ("level".into(), Json::Int(level as i64)),
        ("schema".into(), Json::Str(coarse_io::SCHEMA.into())),
        ("sig".into(), Json::Str(SIGNATURE_VERSION.into())),
    ]);
    print!("{}", obj.to_pretty_string());
    ExitCode::from(0)
}

fn cmd_coarse_check(file: &PathBuf) -> ExitCode {
    let run = || -> Result<String> {
        let text = std::fs::read_to_string(file).with_context(|| format!("reading {file:?}"))?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        if v.get("t0").is_some() {
            let c = coarse_io::construction_from_json(&v)?;
            let t = construction_value(&c, c.rank()).map_err(|e| anyhow::anyhow!("{e}"))?;
            t.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
            Ok(format!("valid construction of a level-{} type", t.level))
        } else if let Some(entries) = v.get("entries").and_then(serde_json::Value::as_array) {
            for entry in entries {
                let t = coarse_io::coarse_from_json(entry)?;
                t.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
            }
            Ok(format!("valid dump of {} types", entries.len()))
        } else {
            let t = coarse_io::coarse_from_json(&v)?;
            t.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
            Ok(format!("valid level-{} type", t.level))
        }
    };
    match run() {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::from(0)
        }
        Err(e) => fail(false, "parse", &format!("{e:#}")),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Decide(args) => cmd_decide(args),
        Command::Tables(args) => cmd_tables(args),
        Command::Coarse { command: CoarseCommand::Enumerate { level, colors, constructions } } => {
            cmd_coarse_enumerate(level, colors, constructions)
        }
        Command::Coarse { command: CoarseCommand::Check { file } } => cmd_coarse_check(&file),
    }
}
