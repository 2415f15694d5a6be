//! Command-line interface: `analyze`, `oracle` and `corpus`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analyzer::AnalyzerConfig;
use crate::financial::{Lexicon, RecognitionConfig, RecognitionMode};
use crate::frontend::{parse, ParseError};
use crate::graphs::build_facts;
use crate::oracle::{check_theorems_with, OracleConfig};
use crate::report::{render_text, run_pipeline, Analysis, PipelineOptions, RiskReport};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_RISKY: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "janus-lite",
    version,
    about = "Privileged-account risk analysis for MiniSol contracts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analyze contracts and report financial centralization risks.
    Analyze(AnalyzeArgs),
    /// Compare the analyzer against exhaustive concrete enumeration.
    Oracle(OracleArgs),
    /// Analyze every `.msol` file under a directory.
    Corpus(CorpusArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Maximum analysis rounds (call-sequence depth).
    #[arg(long, value_name = "N")]
    pub depth_budget: Option<usize>,
    /// Comma-separated financial variables; disables automatic recognition.
    #[arg(long, value_delimiter = ',', value_name = "VARS")]
    pub financial_vars: Option<Vec<String>>,
    /// Word list (one per line) replacing the built-in financial lexicon.
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    /// Recognize financial variables by name similarity only.
    #[arg(long)]
    pub name_only: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Emit JSON reports.
    #[arg(long, conflicts_with = "text")]
    pub json: bool,
    /// Emit text reports (default).
    #[arg(long)]
    pub text: bool,
    /// Print per-round difference counts to stderr.
    #[arg(long)]
    pub log_convergence: bool,
    /// Print symbolic execution traces to stderr.
    #[arg(long)]
    pub trace: bool,
    /// Write dependence facts and the variable property graph as JSON into this directory.
    #[arg(long, value_name = "DIR")]
    pub dump_facts: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    pub file: PathBuf,
    /// Call-sequence depth to enumerate (at most 4).
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long)]
    pub json: bool,
    /// Comma-separated numeric domain.
    #[arg(long, value_delimiter = ',', value_name = "NUMS")]
    pub domain: Option<Vec<u128>>,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// `file:line:col: message` diagnostic for a parse error.
pub fn diagnostic(file: &Path, e: &ParseError) -> String {
    format!("{}:{}: error: {}", file.display(), e.span, e.message)
}

fn options(common: &CommonArgs) -> Result<PipelineOptions, String> {
    let mut analyzer = AnalyzerConfig::default();
    if let Some(d) = common.depth_budget {
        if d == 0 {
            return Err("--depth-budget must be at least 1".into());
        }
        analyzer.max_rounds = d;
    }
    let mut recognition = RecognitionConfig::default();
    if let Some(p) = &common.lexicon {
        recognition.lexicon =
            Lexicon::from_file(p).map_err(|e| format!("{}: error: {e}", p.display()))?;
    }
    if common.name_only {
        recognition.mode = RecognitionMode::NameOnly;
    }
    if let Some(vars) = &common.financial_vars {
        recognition.overrides = Some(
            vars.iter()
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect(),
        );
    }
    Ok(PipelineOptions {
        analyzer,
        recognition,
    })
}

/// Parse and analyze one file; errors are rendered diagnostics.
pub fn analyze_file(path: &Path, opts: &PipelineOptions) -> Result<Analysis, String> {
    let src =
        std::fs::read_to_string(path).map_err(|e| format!("{}: error: {e}", path.display()))?;
    let ast = parse(&src).map_err(|e| diagnostic(path, &e))?;
    if let Some(over) = &opts.recognition.overrides {
        let known: BTreeSet<&str> = ast.state_vars.iter().map(|v| v.name.as_str()).collect();
        if let Some(bad) = over.iter().find(|v| !known.contains(v.as_str())) {
            return Err(format!(
                "{}: error: --financial-vars names unknown state variable `{bad}`",
                path.display()
            ));
        }
    }
    let file = path.display().to_string();
    run_pipeline(&ast, Some(&file), opts).map_err(|e| format!("{}: error: {e}", path.display()))
}

fn dump_facts(dir: &Path, path: &Path) -> Result<(), String> {
    let src = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let ast = parse(&src).map_err(|e| diagnostic(path, &e))?;
    let facts = build_facts(&ast);
    let graph = crate::financial::build_vpg(&ast, &facts);
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("contract");
    let doc = serde_json::json!({ "contract": ast.name, "facts": facts, "graph": graph });
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: error: {e}", dir.display()))?;
    let out = dir.join(format!("{stem}.facts.json"));
    std::fs::write(
        &out,
        serde_json::to_string_pretty(&doc).expect("serializable"),
    )
    .map_err(|e| format!("{}: error: {e}", out.display()))
}

fn exit_code(reports: &[RiskReport], errors: usize) -> i32 {
    if errors > 0 {
        EXIT_ERROR
    } else if reports.iter().any(RiskReport::is_risky) {
        EXIT_RISKY
    } else {
        EXIT_CLEAN
    }
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut opts = match options(&a.common) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_ERROR;
        }
    };
    opts.analyzer.trace = a.trace;
    let mut reports = vec![];
    let mut errors = 0;
    for f in &a.files {
        if let Some(dir) = &a.dump_facts {
            if let Err(e) = dump_facts(dir, f) {
                let _ = writeln!(err, "{e}");
                errors += 1;
                continue;
            }
        }
        match analyze_file(f, &opts) {
            Ok(an) => {
                if a.log_convergence {
                    for r in &an.differences.log {
                        let _ = writeln!(
                            err,
                            "{}: round {}: {} new difference(s), {} execution(s)",
                            f.display(),
                            r.round,
                            r.new_differences,
                            r.executions
                        );
                    }
                    let _ = writeln!(
                        err,
                        "{}: converged after {} round(s) (lattice bound {}){}",
                        f.display(),
                        an.differences.rounds,
                        an.differences.lattice_bound,
                        an.differences
                            .partial_reason
                            .as_deref()
                            .map(|r| format!("; partial: {r}"))
                            .unwrap_or_default()
                    );
                }
                for line in &an.differences.trace {
                    let _ = writeln!(err, "{}: {line}", f.display());
                }
                if let Some(r) = &an.differences.partial_reason {
                    let _ = writeln!(err, "{}: warning: partial result: {r}", f.display());
                }
                reports.push(an.report);
            }
            Err(e) => {
                let _ = writeln!(err, "{e}");
                errors += 1;
            }
        }
    }
    if a.json {
        let doc = if a.files.len() == 1 && reports.len() == 1 {
            serde_json::to_string_pretty(&reports[0])
        } else {
            serde_json::to_string_pretty(&reports)
        };
        let _ = writeln!(out, "{}", doc.expect("serializable"));
    } else {
        for r in &reports {
            let _ = write!(out, "{}", render_text(r));
        }
    }
    exit_code(&reports, errors)
}

fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let src = match std::fs::read_to_string(&a.file) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: error: {e}", a.file.display());
            return EXIT_ERROR;
        }
    };
    let ast = match parse(&src) {
        Ok(ast) => ast,
        Err(e) => {
            let _ = writeln!(err, "{}", diagnostic(&a.file, &e));
            return EXIT_ERROR;
        }
    };
    let mut cfg = OracleConfig::default();
    if let Some(d) = &a.domain {
        cfg.numeric_domain = d.clone();
    }
    let report = match check_theorems_with(&ast, a.depth, &AnalyzerConfig::default(), &cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "{}: error: {e}", a.file.display());
            return EXIT_ERROR;
        }
    };
    if a.json {
        let _ = writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&report).expect("serializable")
        );
    } else {
        let _ = writeln!(
            out,
            "{}: depth {}: {} oracle pair class(es), {} difference(s), {} violation(s)",
            report.contract,
            report.depth,
            report.oracle_pairs,
            report.analyzer_differences,
            report.violations.len()
        );
        let _ = writeln!(
            out,
            "  executions: oracle tree {} (merged {}), analyzer {}",
            report.oracle_tree_executions, report.oracle_executions, report.analyzer_executions
        );
        for v in &report.violations {
            let _ = writeln!(
                out,
                "  {}: {}\n    witness: {}",
                v.theorem, v.message, v.counterexample
            );
        }
    }
    if report.ok() {
        EXIT_CLEAN
    } else {
        EXIT_RISKY
    }
}

/// All `.msol` files below `dir`, sorted.
pub fn collect_sources(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = vec![];
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "msol") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn cmd_corpus(a: &CorpusArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let opts = match options(&a.common) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_ERROR;
        }
    };
    let files = match collect_sources(&a.dir) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "{}: error: {e}", a.dir.display());
            return EXIT_ERROR;
        }
    };
    let results: Vec<Result<RiskReport, String>> = files
        .par_iter()
        .map(|f| analyze_file(f, &opts).map(|a| a.report))
        .collect();
    let mut reports = vec![];
    let mut errors = 0;
    for r in results {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => {
                let _ = writeln!(err, "{e}");
                errors += 1;
            }
        }
    }
    if a.json {
        let _ = writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&reports).expect("serializable")
        );
    } else {
        let w = reports
            .iter()
            .filter_map(|r| r.file.as_ref())
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(4);
        let _ = writeln!(
            out,
            "{:<w$} {:<6} {:>8} {:>7}  categories",
            "file", "risky", "time_ms", "rounds"
        );
        for r in &reports {
            let cats: Vec<String> = r.categories().iter().map(|c| c.to_string()).collect();
            let _ = writeln!(
                out,
                "{:<w$} {:<6} {:>8.1} {:>7}  {}",
                r.file.as_deref().unwrap_or("-"),
                if r.is_risky() { "yes" } else { "no" },
                r.stats.wall_time_ms,
                r.stats.rounds,
                if cats.is_empty() {
                    "-".into()
                } else {
                    cats.join(",")
                }
            );
        }
        let risky = reports.iter().filter(|r| r.is_risky()).count();
        let _ = writeln!(
            out,
            "{} contract(s): {} risky, {} clean, {} error(s)",
            reports.len() + errors,
            risky,
            reports.len() - risky,
            errors
        );
    }
    exit_code(&reports, errors)
}

/// Run the CLI and return the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, out, err),
        Command::Oracle(a) => cmd_oracle(a, out, err),
        Command::Corpus(a) => cmd_corpus(a, out, err),
    }
}
