//! `splice`: index a corpus, inspect search results, complete drafts, and
//! measure retrieval precision.
//!
//! Exit codes: 0 success with solutions, 1 no solution, 2 usage/parse error,
//! 3 timeout with partial results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use splice_core::draft::parse_draft;
use splice_core::engine::{measure_precision, splice, SpliceConfig, ValidationCtx};
use splice_core::index::{build_index, knn_query, CorpusIndex, QueryWeights};
use splice_core::interp::{ApiTable, Limits, VirtualFs};
use splice_core::pretty::pretty_print;
use splice_core::{Draft, FeatureConfig};

const EXIT_OK: u8 = 0;
const EXIT_NO_SOLUTION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "splice",
    about = "Complete draft programs by splicing code retrieved from an indexed corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a feature index from a directory of .spl corpus files.
    Index {
        /// Directory containing corpus .spl files.
        corpus_dir: PathBuf,
        /// Output index file.
        out: PathBuf,
    },
    /// Show the k nearest corpus functions for a draft.
    Search {
        index: PathBuf,
        draft: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long = "w-nl", default_value_t = 0.8)]
        w_nl: f64,
        #[arg(long = "w-names", default_value_t = 0.2)]
        w_names: f64,
    },
    /// Complete a draft against an indexed corpus.
    Splice(SpliceArgs),
    /// Fraction of retrieved donors that can complete the draft at all.
    Precision {
        index: PathBuf,
        draft: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long = "w-nl", default_value_t = 0.8)]
        w_nl: f64,
        #[arg(long = "w-names", default_value_t = 0.2)]
        w_names: f64,
        #[arg(long = "fs-manifest")]
        fs_manifest: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpliceArgs {
    index: PathBuf,
    draft: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long = "w-nl", default_value_t = 0.8)]
    w_nl: f64,
    #[arg(long = "w-names", default_value_t = 0.2)]
    w_names: f64,
    #[arg(long = "max-solutions", default_value_t = 3)]
    max_solutions: usize,
    /// Overall search budget in seconds.
    #[arg(long = "time-limit", default_value_t = 300.0)]
    time_limit: f64,
    /// Step fuel per candidate execution.
    #[arg(long = "test-fuel", default_value_t = 10_000_000)]
    test_fuel: u64,
    /// Wall-clock limit per candidate execution, in seconds.
    #[arg(long = "test-time", default_value_t = 1.0)]
    test_time: f64,
    /// Disable the type-matching heuristic.
    #[arg(long = "no-types")]
    no_types: bool,
    /// Disable the role-matching heuristic.
    #[arg(long = "no-roles")]
    no_roles: bool,
    /// Adapt integer constants of codelets to draft literals and variables.
    #[arg(long = "adapt-constants")]
    adapt_constants: bool,
    #[arg(long = "adapt-budget", default_value_t = 16)]
    adapt_budget: usize,
    /// Longest donor statement window considered.
    #[arg(long = "max-window", default_value_t = 8)]
    max_window: usize,
    /// Worker threads (0 = machine parallelism). SPLICE_WORKERS overrides.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Virtual filesystem manifest (JSON object: path -> file content).
    #[arg(long = "fs-manifest")]
    fs_manifest: Option<PathBuf>,
    /// Emit a machine-readable JSON record instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct JsonOutput {
    solutions: Vec<JsonSolution>,
    stats: JsonStats,
    timed_out: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct JsonSolution {
    donor: u32,
    donor_rank: usize,
    discovery_order: usize,
    renamings: BTreeMap<String, String>,
    program: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct JsonStats {
    candidates_evaluated: u64,
    tests_run: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Index { corpus_dir, out } => cmd_index(&corpus_dir, &out),
        Command::Search {
            index,
            draft,
            k,
            w_nl,
            w_names,
        } => cmd_search(&index, &draft, k, w_nl, w_names),
        Command::Splice(args) => cmd_splice(args),
        Command::Precision {
            index,
            draft,
            k,
            w_nl,
            w_names,
            fs_manifest,
        } => cmd_precision(&index, &draft, k, w_nl, w_names, fs_manifest.as_deref()),
    }
}

fn load_index(path: &Path) -> Result<CorpusIndex> {
    CorpusIndex::load(path, FeatureConfig::bundled())
        .with_context(|| format!("loading index `{}`", path.display()))
}

fn load_draft(path: &Path, api: &ApiTable) -> Result<Draft> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading draft `{}`", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_draft(&text, api.sigs(), base)
        .with_context(|| format!("parsing draft `{}`", path.display()))
}

fn load_fs_manifest(path: Option<&Path>) -> Result<VirtualFs> {
    let mut fs = VirtualFs::new();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading fs manifest `{}`", path.display()))?;
        let map: BTreeMap<String, String> =
            serde_json::from_str(&text).context("fs manifest must be a JSON object of path -> content")?;
        for (k, v) in map {
            fs.insert(&k, &v);
        }
    }
    Ok(fs)
}

fn weights(w_nl: f64, w_names: f64) -> Result<QueryWeights> {
    QueryWeights::new(w_nl, w_names).context("bad feature weights")
}

fn cmd_index(corpus_dir: &Path, out: &Path) -> Result<u8> {
    let api = ApiTable::with_builtins();
    let (index, diagnostics) = build_index(corpus_dir, api.sigs(), FeatureConfig::bundled())
        .with_context(|| format!("indexing `{}`", corpus_dir.display()))?;
    index
        .save(out)
        .with_context(|| format!("writing index `{}`", out.display()))?;
    println!("indexed {} functions", index.len());
    for d in &diagnostics {
        println!("skipped {}: {}", d.file.display(), d.reason);
    }
    Ok(EXIT_OK)
}

fn cmd_search(index: &Path, draft: &Path, k: usize, w_nl: f64, w_names: f64) -> Result<u8> {
    let api = ApiTable::with_builtins();
    let index = load_index(index)?;
    let draft = load_draft(draft, &api)?;
    let ranked = knn_query(&index, &draft, k, &weights(w_nl, w_names)?)?;
    for (rank, (source, score)) in ranked.iter().enumerate() {
        let path = index
            .get(*source)
            .map(|e| e.path.display().to_string())
            .unwrap_or_default();
        println!("{} {:.4} {} {}", rank + 1, score, source, path);
    }
    Ok(EXIT_OK)
}

fn cmd_splice(args: SpliceArgs) -> Result<u8> {
    let api = ApiTable::with_builtins();
    let index = load_index(&args.index)?;
    let draft = load_draft(&args.draft, &api)?;
    let fs = load_fs_manifest(args.fs_manifest.as_deref())?;
    let workers = match std::env::var("SPLICE_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .context("SPLICE_WORKERS must be a number")?,
        Err(_) => args.workers,
    };
    let cfg = SpliceConfig {
        k: args.k,
        weights: weights(args.w_nl, args.w_names)?,
        max_solutions: args.max_solutions,
        search_time_limit: Duration::from_secs_f64(args.time_limit),
        test_limits: Limits::new(args.test_fuel, Duration::from_secs_f64(args.test_time)),
        type_matching: !args.no_types,
        role_matching: !args.no_roles,
        constant_adaptation: args.adapt_constants,
        adapt_budget: args.adapt_budget,
        max_window: args.max_window,
        workers,
    };
    let vc = ValidationCtx { api: &api, fs: &fs };
    let outcome = splice(&draft, &index, &cfg, &vc)?;

    if args.json {
        let record = JsonOutput {
            solutions: outcome
                .solutions
                .iter()
                .map(|s| JsonSolution {
                    donor: s.donor.0,
                    donor_rank: s.donor_rank,
                    discovery_order: s.discovery_order,
                    renamings: s.renamings.clone(),
                    program: pretty_print(&s.program),
                })
                .collect(),
            stats: JsonStats {
                candidates_evaluated: outcome.stats.candidates_evaluated,
                tests_run: outcome.stats.tests_run,
            },
            timed_out: outcome.timed_out,
        };
        println!("{}", serde_json::to_string_pretty(&record)?);
    } else {
        for (i, s) in outcome.solutions.iter().enumerate() {
            println!("--- solution {} (donor {}) ---", i + 1, s.donor);
            print!("{}", pretty_print(&s.program));
        }
        println!(
            "{} solution(s); {} candidates evaluated, {} validations",
            outcome.solutions.len(),
            outcome.stats.candidates_evaluated,
            outcome.stats.tests_run
        );
        if outcome.timed_out {
            println!("search timed out; results may be partial");
        }
    }

    Ok(if outcome.timed_out {
        EXIT_TIMEOUT
    } else if outcome.solutions.is_empty() {
        EXIT_NO_SOLUTION
    } else {
        EXIT_OK
    })
}

fn cmd_precision(
    index: &Path,
    draft: &Path,
    k: usize,
    w_nl: f64,
    w_names: f64,
    fs_manifest: Option<&Path>,
) -> Result<u8> {
    let api = ApiTable::with_builtins();
    let index = load_index(index)?;
    let draft = load_draft(draft, &api)?;
    let fs = load_fs_manifest(fs_manifest)?;
    let vc = ValidationCtx { api: &api, fs: &fs };
    let w = weights(w_nl, w_names)?;
    let fraction = measure_precision(&draft, &index, k, &w, &vc)?;
    let retrieved = k.min(index.len());
    let high = (fraction * retrieved as f64).round() as usize;
    println!("precision: {high}/{retrieved} = {fraction:.2}");
    Ok(EXIT_OK)
}
