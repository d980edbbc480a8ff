//! Command-line runner. Exit codes: 0 converges/in/yes, 1 diverges/out/no,
//! 2 freezes, 3 unknown (including semantic violations, whose detail goes to
//! the trace and stderr), 64 usage, 65 parse/corpus errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::analysis;
use crate::feedback::{eval_feedback, SubTree, Verdict};
use crate::fixpoint::{self, OraclePair};
use crate::frontend::store::{corpus_dir, load_corpus, ProgramStore};
use crate::frontend::trace::{build_trace, trace_json, tree_dot, verdict_text};
use crate::frontend::parse::print_program;
use crate::machine::OracleCall;
use crate::ordinal::{decode_ordinal, parse_ordinal, Ordinal};
use crate::tape::TapeRep;
use crate::variants::{
    self, build_flip_program, Budgets, JumpResult, ParallelVerdict,
};

const EX_USAGE: u8 = 64;
const EX_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "tittm", version, about = "Transfinite Turing machine simulator with feedback oracles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// Successor steps per oracle-free block (and macro-steps per era)
    #[arg(long, default_value_t = Budgets::default().max_steps_per_block)]
    max_steps: u64,
    /// Limit stages per node
    #[arg(long, default_value_t = Budgets::default().max_limit_stages)]
    max_limits: u64,
    /// Subcomputation depth
    #[arg(long, default_value_t = Budgets::default().max_depth)]
    max_depth: u64,
    /// Clock cap as an ordinal literal, e.g. w^3
    #[arg(long, default_value = "w^3")]
    clock_cap: String,
    /// Integers substituted on the blank tape by parallel calls
    #[arg(long, default_value_t = Budgets::default().max_parallel)]
    max_parallel: u64,
    /// Operator applications before the fixed-point search gives up
    #[arg(long, default_value_t = Budgets::default().max_lfp_iters)]
    max_lfp_iters: u64,
}

impl BudgetArgs {
    fn build(&self) -> Result<Budgets, String> {
        let clock_cap = parse_ordinal(&self.clock_cap).map_err(|e| e.to_string())?;
        let b = Budgets {
            max_steps_per_block: self.max_steps,
            max_limit_stages: self.max_limits,
            max_depth: self.max_depth,
            clock_cap,
            max_parallel: self.max_parallel,
            max_lfp_iters: self.max_lfp_iters,
        };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Program file (.fit assembly)
    file: PathBuf,
    /// Input tape as a 01-word loaded at cell 0
    #[arg(long, default_value = "")]
    input: String,
    /// Write the JSON trace here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the subcomputation tree in DOT format here
    #[arg(long)]
    dot: Option<PathBuf>,
    #[command(flatten)]
    budgets: BudgetArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a program under the feedback semantics
    Run(RunArgs),
    /// Run under the ordinal oracle discipline with a given α
    RunOrdinal {
        /// The ordinal α carried on the third tape
        #[arg(long)]
        alpha: String,
        /// Parameter tape as a 01-word
        #[arg(long, default_value = "")]
        param: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run as an iterated machine: the root may write any ordinal at all
    RunIitm(RunArgs),
    /// Parallel oracle call: substitute all integers below the budget
    RunParallel(RunArgs),
    /// Strong jump membership for (program, input)
    Jump(RunArgs),
    /// Least fixed point of the oracle-pair operator over a universe of calls
    Lfp {
        /// Universe file: one `program-name [01-word]` per line
        #[arg(long)]
        universe: PathBuf,
        /// Write the fate table as JSON here
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Analyses of certified loops and the output-stabilization transform
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCmd,
    },
    /// Corpus inspection
    Corpus {
        #[command(subcommand)]
        what: CorpusCmd,
    },
    /// Synthesize the converge/diverge interchange gadget for a program
    Flip(RunArgs),
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// First looping snapshot of a certified diverger
    Loop(RunArgs),
    /// Bounded/cofinal classification of the cells changing in the loop
    Cells(RunArgs),
    /// Mark a stage sequence inside one loop and decode its order type
    Ordinal(RunArgs),
    /// Build and evaluate the eventually-writable-to-writable transform
    Transform {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the synthesized assembly here
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// List the programs in the corpus directory
    List,
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EX_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_cmd(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(CliError { code, message }) => {
            eprintln!("tittm: {message}");
            ExitCode::from(code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EX_USAGE,
        message: message.into(),
    }
}

fn data(message: impl Into<String>) -> CliError {
    CliError {
        code: EX_DATA,
        message: message.into(),
    }
}

fn parse_word(word: &str) -> Result<TapeRep, CliError> {
    TapeRep::from_word(word).ok_or_else(|| usage(format!("input must be a 01-word, got `{word}`")))
}

fn load_store() -> Result<ProgramStore, CliError> {
    let dir = corpus_dir();
    if dir.is_dir() {
        load_corpus(&dir).map_err(|e| data(e.to_string()))
    } else {
        Ok(ProgramStore::new())
    }
}

/// Parse the program file and register it in the store (reusing the corpus
/// entry when the file is the corpus program itself).
fn resolve_program(store: &mut ProgramStore, file: &Path) -> Result<u64, CliError> {
    let name = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| usage(format!("bad program path {}", file.display())))?;
    let src = std::fs::read_to_string(file)
        .map_err(|e| data(format!("cannot read {}: {e}", file.display())))?;
    let parsed = crate::frontend::parse::parse_program(&src, &name)
        .map_err(|e| data(format!("{}: {e}", file.display())))?;
    if let Some(id) = store.id_of(&name) {
        if store.get(id) == Some(&parsed) {
            return Ok(id);
        }
        return Err(data(format!(
            "program `{name}` differs from the corpus program of the same name"
        )));
    }
    store.add_program(parsed).map_err(|e| data(e.to_string()))
}

fn emit_outputs(
    verdict: &Verdict,
    tree: &SubTree,
    store: &ProgramStore,
    budgets: &Budgets,
    args: &RunArgs,
) -> Result<(), CliError> {
    if let Some(path) = &args.trace {
        let t = build_trace(verdict, tree, store, budgets);
        std::fs::write(path, trace_json(&t))
            .map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = &args.dot {
        std::fs::write(path, tree_dot(tree, store))
            .map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn report_verdict(verdict: &Verdict, tree: &SubTree) -> u8 {
    println!("verdict: {}", verdict_text(verdict));
    if let Some(snap) = &tree.nodes[0].final_snapshot {
        println!("clock: {}", snap.clock);
    }
    match verdict {
        Verdict::Converges(out) => println!("output: {out}"),
        Verdict::Freezes(witness) => {
            println!("witness chain ({} calls):", witness.len());
            for c in witness {
                println!("  {}", c.digest());
            }
        }
        _ => {}
    }
    verdict.exit_code() as u8
}

fn run_cmd(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Run(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let input = parse_word(&args.input)?;
            let (verdict, tree) = eval_feedback(&store, id, &input, &budgets);
            emit_outputs(&verdict, &tree, &store, &budgets, &args)?;
            Ok(report_verdict(&verdict, &tree))
        }
        Cmd::RunOrdinal { alpha, param, run } => {
            let budgets = run.budgets.build().map_err(usage)?;
            let alpha: Ordinal = parse_ordinal(&alpha).map_err(|e| usage(e.to_string()))?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &run.file)?;
            let input = parse_word(&run.input)?;
            let y = parse_word(&param)?;
            let (verdict, tree) =
                variants::ordinal_oracle_run(&store, id, &alpha, &input, &y, &budgets);
            emit_outputs(&verdict, &tree, &store, &budgets, &run)?;
            Ok(report_verdict(&verdict, &tree))
        }
        Cmd::RunIitm(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let input = parse_word(&args.input)?;
            let (verdict, tree) = variants::iitm_run(&store, id, &input, &budgets);
            emit_outputs(&verdict, &tree, &store, &budgets, &args)?;
            Ok(report_verdict(&verdict, &tree))
        }
        Cmd::RunParallel(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let param = parse_word(&args.input)?;
            let verdict = variants::parallel_call(&store, id, &param, &budgets);
            match &verdict {
                ParallelVerdict::Yes { witness } => println!("verdict: yes({witness})"),
                ParallelVerdict::No { budget_relative } => println!(
                    "verdict: no{}",
                    if *budget_relative { " (budget-relative)" } else { "" }
                ),
                ParallelVerdict::Freezes { witness } => println!("verdict: freezes({witness})"),
                ParallelVerdict::Unknown => println!("verdict: unknown"),
            }
            Ok(verdict.exit_code() as u8)
        }
        Cmd::Jump(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let input = parse_word(&args.input)?;
            let jump = variants::strong_jump(&store, id, &input, &budgets);
            println!("strong jump: {}", jump.result.name());
            if let Some(v) = &jump.depth_violation {
                println!("depth violation: {v}");
            }
            emit_outputs(&jump.verdict, &jump.tree, &store, &budgets, &args)?;
            Ok(match jump.result {
                JumpResult::In => 0,
                JumpResult::Out => 1,
                JumpResult::Unknown => 3,
            })
        }
        Cmd::Lfp {
            universe,
            trace,
            budgets,
        } => {
            let budgets = budgets.build().map_err(usage)?;
            let store = load_store()?;
            let calls = read_universe(&store, &universe)?;
            let (pair, iters) = fixpoint::lfp(&store, &calls, &budgets)
                .map_err(|e| data(e.to_string()))?;
            print_lfp_table(&store, &pair, &calls, iters);
            if let Some(path) = trace {
                let rows: Vec<serde_json::Value> = calls
                    .iter()
                    .map(|c| {
                        serde_json::json!({
                            "call": c.digest(),
                            "fate": fixpoint::fate_of(&pair, c).name(),
                        })
                    })
                    .collect();
                let doc = serde_json::json!({ "iterations": iters, "table": rows });
                std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
                    .map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(0)
        }
        Cmd::Analyze { what } => run_analyze(what),
        Cmd::Corpus { what } => match what {
            CorpusCmd::List => {
                let store = load_store()?;
                if store.is_empty() {
                    println!("(corpus directory {} is empty)", corpus_dir().display());
                }
                for (id, p) in store.iter() {
                    println!("{id:>4}  {}", p.name);
                }
                Ok(0)
            }
        },
        Cmd::Flip(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let flip_id = build_flip_program(&mut store, id).map_err(|e| data(e.to_string()))?;
            let input = parse_word(&args.input)?;
            let (verdict, tree) = eval_feedback(&store, flip_id, &input, &budgets);
            println!("flip program id: {flip_id}");
            emit_outputs(&verdict, &tree, &store, &budgets, &args)?;
            Ok(report_verdict(&verdict, &tree))
        }
    }
}

fn run_analyze(what: AnalyzeCmd) -> Result<u8, CliError> {
    match what {
        AnalyzeCmd::Loop(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let input = parse_word(&args.input)?;
            let p = store.get(id).unwrap();
            match analysis::first_looping_snapshot(p, &input, &budgets) {
                Ok(cert) => {
                    println!("entry clock: {}", cert.entry.clock);
                    println!("entry state: {}", p.states[cert.entry.config.state]);
                    println!("period: {} shift: {}", cert.period, cert.shift);
                    println!("reappearance: {}", cert.reappearance);
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("tittm: {e}");
                    Ok(3)
                }
            }
        }
        AnalyzeCmd::Cells(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let input = parse_word(&args.input)?;
            let p = store.get(id).unwrap();
            let cert = match analysis::first_looping_snapshot(p, &input, &budgets) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("tittm: {e}");
                    return Ok(3);
                }
            };
            let class = analysis::classify_cells(p, &cert).map_err(|e| data(e.to_string()))?;
            println!("cells changing within the loop (horizon {} steps):", class.horizon_steps);
            for ((track, cell), tag) in &class.tags {
                let shadow = class.shadow.get(&(*track, *cell)).copied().unwrap_or(false);
                println!(
                    "  {}[{}]: {}  toggle-shadow {}",
                    crate::machine::TAPE_ROLES[*track].short_name(),
                    cell,
                    match tag {
                        analysis::CellTag::Bounded => "bounded",
                        analysis::CellTag::Cofinal => "cofinal",
                    },
                    if shadow { 1 } else { 0 },
                );
            }
            Ok(0)
        }
        AnalyzeCmd::Ordinal(args) => {
            let budgets = args.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &args.file)?;
            let input = parse_word(&args.input)?;
            let p = store.get(id).unwrap();
            match analysis::loop_ordinal_writer_report(p, &input, &budgets) {
                Ok((code, report)) => {
                    println!("marks: {}", report.marks.len());
                    for m in &report.marks {
                        println!("  label {} at entry+{} ({:?})", m.label, m.offset, m.kind);
                    }
                    match decode_ordinal(&code) {
                        Ok(o) => println!("decoded order type: {o}"),
                        Err(e) => println!("decoded order type: error {e}"),
                    }
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("tittm: {e}");
                    Ok(3)
                }
            }
        }
        AnalyzeCmd::Transform { run, emit } => {
            let budgets = run.budgets.build().map_err(usage)?;
            let mut store = load_store()?;
            let id = resolve_program(&mut store, &run.file)?;
            let t_id = match analysis::ev_to_writable_transform(&mut store, id) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("tittm: {e}");
                    return Ok(3);
                }
            };
            if let Some(path) = emit {
                let src = print_program(store.get(t_id).unwrap());
                std::fs::write(&path, src)
                    .map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
            }
            let input = parse_word(&run.input)?;
            let (verdict, tree) = eval_feedback(&store, t_id, &input, &budgets);
            println!("transform program id: {t_id}");
            emit_outputs(&verdict, &tree, &store, &budgets, &run)?;
            Ok(report_verdict(&verdict, &tree))
        }
    }
}

fn read_universe(store: &ProgramStore, path: &Path) -> Result<std::collections::BTreeSet<OracleCall>, CliError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| data(format!("cannot read {}: {e}", path.display())))?;
    let mut calls = std::collections::BTreeSet::new();
    for (idx, raw) in src.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut parts = text.split_whitespace();
        let name = parts.next().unwrap();
        let word = parts.next().unwrap_or("");
        if parts.next().is_some() {
            return Err(data(format!(
                "{}:{}: expected `name [01-word]`",
                path.display(),
                idx + 1
            )));
        }
        let id = store.id_of(name).ok_or_else(|| {
            data(format!(
                "{}:{}: unknown program `{name}`",
                path.display(),
                idx + 1
            ))
        })?;
        let input = TapeRep::from_word(word).ok_or_else(|| {
            data(format!("{}:{}: bad 01-word `{word}`", path.display(), idx + 1))
        })?;
        calls.insert(OracleCall::plain(id, input));
    }
    if calls.is_empty() {
        return Err(data(format!("{}: empty universe", path.display())));
    }
    Ok(calls)
}

fn print_lfp_table(
    store: &ProgramStore,
    pair: &OraclePair,
    calls: &std::collections::BTreeSet<OracleCall>,
    iters: u64,
) {
    println!("least fixed point after {iters} applications:");
    for c in calls {
        let name = store
            .get(c.index)
            .map(|p| p.name.clone())
            .unwrap_or_else(|| format!("p{}", c.index));
        println!("  {:<28} {:<10} {}", name, fixpoint::fate_of(pair, c).name(), c.digest());
    }
}
