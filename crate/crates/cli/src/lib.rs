//! The `ipcf` command-line tool. [`run`] does all the work and hands back
//! the exit code and both output streams, so it can be driven in-process.

pub mod examples;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ipcf::confluence::{local_confluence, triangle_check};
use ipcf::corpus;
use ipcf::reduction::{reachable, reduce, CondCongruence, Registry, RegistryConfig, Strategy, Verdict, DEFAULT_FUEL};
use ipcf::syntax::{Source, WithAliases};
use ipcf::typing::{Checker, Judgement, System};

/// Version of the JSON output layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FUEL: i32 = 2;
pub const EXIT_CONFLUENCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ipcf", version, about = "Intensional PCF: typecheck, reduce and inspect programs; play with the S/K algebra")]
pub struct Cli {
    /// Registry configuration (default: ./ipcf.toml if it exists)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print one JSON document instead of text
    #[arg(long, global = true)]
    pub json: bool,

    /// Which parts of `if` may reduce; overrides the configuration
    #[arg(long, global = true, value_enum)]
    pub cond_congruence: Option<CondArg>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CondArg {
    All,
    ScrutineeOnly,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum JudgementArg {
    Int,
    Ext,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Infer the type of a program
    Check {
        /// Source file, or corpus:NAME for a shipped example
        file: String,
        /// Use the restricted v2 system
        #[arg(long)]
        v2: bool,
        /// v2 judgement form
        #[arg(long, value_enum, requires = "v2")]
        judgement: Option<JudgementArg>,
        /// Drop the A_fix side condition on fix (v2 only)
        #[arg(long, requires = "v2")]
        no_afix: bool,
    },
    /// Reduce a program and print where it ends up
    Eval {
        file: String,
        #[arg(long, default_value = "normal-order")]
        strategy: Strategy,
        #[arg(long, env = "IPCF_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Skip the v1 typecheck
        #[arg(long)]
        no_check: bool,
    },
    /// Reduce a program and print every step
    Trace {
        file: String,
        #[arg(long, default_value = "normal-order")]
        strategy: Strategy,
        #[arg(long, env = "IPCF_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        #[arg(long)]
        no_check: bool,
    },
    /// Check the triangle property and one-step joinability around a program
    Confluence {
        file: String,
        /// Steps allowed to join a peak, and how far to explore from the program
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Stop exploring after this many terms
        #[arg(long, default_value_t = 200)]
        max_terms: usize,
    },
    /// The S/K partial combinatory algebra
    Pca {
        #[command(subcommand)]
        command: PcaCommand,
    },
    /// The shipped example programs
    Examples {
        #[command(subcommand)]
        command: ExamplesCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum PcaCommand {
    /// Evaluate an expression: S, K, juxtaposition, \*x. e, #n, 'tag, named encodings
    Eval {
        expr: String,
        #[arg(long, env = "IPCF_FUEL", default_value_t = pca::DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Second recursion theorem demos
    Srt {
        #[arg(long, value_enum)]
        demo: SrtDemo,
        #[arg(long, env = "IPCF_FUEL", default_value_t = pca::DEFAULT_FUEL)]
        fuel: usize,
    },
    /// First recursion theorem: least fixed points by dovetailing
    Frt {
        #[arg(long, value_enum)]
        demo: FrtDemo,
        #[arg(long, default_value_t = 4)]
        input: u64,
        #[arg(long, default_value_t = 64)]
        rounds: usize,
        /// Round i grants i * slice steps to each simulation
        #[arg(long, default_value_t = 1)]
        slice: usize,
        /// Cap on any one simulation's total budget
        #[arg(long, env = "IPCF_FUEL", default_value_t = pca::DEFAULT_FUEL)]
        fuel: usize,
        /// Print the schedule round by round
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SrtDemo {
    /// Kleene, f = \e x. x
    Ignore,
    /// Kleene, f = \e x. e
    SelfReturning,
    /// Kleene, f = \e x. if (iszero x) 0 (e (pred x))
    Countdown,
    /// Rogers, g = K (K 0)
    RogersZero,
    /// Rogers, g = I
    RogersIdentity,
    /// Rogers, g = \c x. succ (c x)
    RogersSucc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FrtDemo {
    Factorial,
    Identity,
    Constant,
}

#[derive(Subcommand, Debug)]
pub enum ExamplesCommand {
    /// List the corpus
    List {
        /// Also write every entry to DIR/NAME.ipcf
        #[arg(long, value_name = "DIR")]
        export: Option<PathBuf>,
    },
    /// Re-derive an entry's expected behaviour
    Run {
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
    },
}

#[derive(Debug, Default)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn fail(code: i32, msg: impl std::fmt::Display) -> Output {
        Output { code, stdout: String::new(), stderr: format!("{msg}\n") }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Output { code: EXIT_INPUT, stdout: String::new(), stderr: text }
            } else {
                Output { code: EXIT_OK, stdout: text, stderr: String::new() }
            }
        }
    }
}

pub fn load_config(path: Option<&Path>) -> anyhow::Result<RegistryConfig> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None if Path::new("ipcf.toml").exists() => PathBuf::from("ipcf.toml"),
        None => return Ok(RegistryConfig::default()),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn registry(cli: &Cli) -> anyhow::Result<Registry> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(c) = cli.cond_congruence {
        cfg.cond_congruence = match c {
            CondArg::All => CondCongruence::All,
            CondArg::ScrutineeOnly => CondCongruence::ScrutineeOnly,
        };
    }
    Ok(Registry::from_config(&cfg))
}

fn read_source(file: &str) -> Result<Source, Output> {
    let text = match file.strip_prefix("corpus:") {
        Some(name) => match corpus::get(name) {
            Some(e) => e.text.to_string(),
            None => return Err(Output::fail(EXIT_INPUT, unknown_example(name))),
        },
        None => std::fs::read_to_string(file).map_err(|e| Output::fail(EXIT_INPUT, format!("{file}: {e}")))?,
    };
    Source::parse(&text).map_err(|e| Output::fail(EXIT_INPUT, format!("{file}:{e}")))
}

fn unknown_example(name: &str) -> String {
    let names: Vec<&str> = corpus::entries().iter().map(|e| e.name).collect();
    format!("unknown example `{name}`; available: {}", names.join(", "))
}

fn envelope(command: &str, body: Value) -> String {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    format!("{doc}\n")
}

pub fn run(cli: &Cli) -> Output {
    let reg = match registry(cli) {
        Ok(r) => r,
        Err(e) => return Output::fail(EXIT_INPUT, format!("config: {e}")),
    };
    let result = match &cli.command {
        Command::Check { file, v2, judgement, no_afix } => check(cli, &reg, file, *v2, *judgement, *no_afix),
        Command::Eval { file, strategy, fuel, no_check } => reduce_cmd(cli, &reg, file, *strategy, *fuel, *no_check, false),
        Command::Trace { file, strategy, fuel, no_check } => reduce_cmd(cli, &reg, file, *strategy, *fuel, *no_check, true),
        Command::Confluence { file, depth, max_terms } => confluence(cli, &reg, file, *depth, *max_terms),
        Command::Pca { command } => Ok(pca_cmd(cli, command)),
        Command::Examples { command } => Ok(examples_cmd(cli, command)),
    };
    result.unwrap_or_else(|o| o)
}

fn check(
    cli: &Cli,
    reg: &Registry,
    file: &str,
    v2: bool,
    judgement: Option<JudgementArg>,
    no_afix: bool,
) -> Result<Output, Output> {
    let src = read_source(file)?;
    let sys = match (v2, judgement) {
        (false, _) => System::V1,
        (true, Some(JudgementArg::Int)) => System::V2(Judgement::Int),
        (true, _) => System::V2(Judgement::Ext),
    };
    let checker = Checker::for_registry(reg).with_afix(!no_afix);
    match checker.check(sys, &src.context, &src.term) {
        Ok(ty) => {
            let shown = WithAliases(&ty, &src.types).to_string();
            let stdout = if cli.json {
                envelope("check", json!({ "ok": true, "system": sys.to_string(), "type": ty.to_string(), "display": shown }))
            } else {
                format!("{shown}\n")
            };
            Ok(Output { code: EXIT_OK, stdout, stderr: String::new() })
        }
        Err(e) => {
            let stdout = if cli.json {
                envelope("check", json!({ "ok": false, "system": sys.to_string(), "error": e }))
            } else {
                String::new()
            };
            Ok(Output { code: EXIT_INPUT, stdout, stderr: format!("type error ({sys}): {e}\n") })
        }
    }
}

fn reduce_cmd(
    cli: &Cli,
    reg: &Registry,
    file: &str,
    strategy: Strategy,
    fuel: usize,
    no_check: bool,
    full: bool,
) -> Result<Output, Output> {
    let src = read_source(file)?;
    if !no_check {
        if let Err(e) = Checker::for_registry(reg).check_v1(&src.context, &src.term) {
            return Err(Output::fail(EXIT_INPUT, format!("type error (v1): {e}")));
        }
    }
    let trace = reduce(&src.term, strategy, fuel, reg);
    let code = if trace.verdict == Verdict::FuelExhausted { EXIT_FUEL } else { EXIT_OK };
    let stdout = match (cli.json, full) {
        (true, true) => envelope("trace", json!({ "strategy": strategy.to_string(), "fuel": fuel, "trace": trace })),
        (true, false) => envelope(
            "eval",
            json!({
                "strategy": strategy.to_string(),
                "fuel": fuel,
                "steps": trace.steps.len(),
                "result": trace.last().to_string(),
                "verdict": trace.verdict,
            }),
        ),
        (false, true) => format!("{trace}\n"),
        (false, false) => format!("{}\n", trace.last()),
    };
    let mut stderr = String::new();
    if !full && !cli.json && trace.verdict != Verdict::NormalForm {
        let _ = writeln!(stderr, "{} after {} steps", trace.verdict, trace.steps.len());
    }
    Ok(Output { code, stdout, stderr })
}

fn confluence(cli: &Cli, reg: &Registry, file: &str, depth: usize, max_terms: usize) -> Result<Output, Output> {
    let src = read_source(file)?;
    let terms: Vec<_> = reachable(&src.term, depth, reg).into_vec().into_iter().take(max_terms).collect();
    let mut peaks = 0;
    let mut problems = Vec::new();
    for t in &terms {
        let tri = triangle_check(t, reg);
        if !tri.passed() {
            problems.push(tri.to_string());
        }
        match local_confluence(t, depth, reg) {
            Ok(n) => peaks += n,
            Err(p) => problems.push(format!("peak from {}\n  left:  {}\n  right: {}\n  no common reduct within {depth} steps", p.source, p.left, p.right)),
        }
    }
    let code = if problems.is_empty() { EXIT_OK } else { EXIT_CONFLUENCE };
    let stdout = if cli.json {
        envelope("confluence", json!({ "ok": problems.is_empty(), "terms": terms.len(), "peaks": peaks, "violations": problems }))
    } else if problems.is_empty() {
        format!("ok: {} terms, {peaks} one-step peaks joined within {depth} steps, triangle holds\n", terms.len())
    } else {
        format!("{}\n", problems.join("\n\n"))
    };
    Ok(Output { code, stdout, stderr: String::new() })
}

fn pca_cmd(cli: &Cli, cmd: &PcaCommand) -> Output {
    use pca::*;
    let show = |t: &PcaTerm, fuel: usize| match decode_num(t, fuel) {
        Ok(n) => format!("#{n}"),
        Err(_) => t.to_string(),
    };
    match cmd {
        PcaCommand::Eval { expr, fuel } => {
            let t = match syntax::parse(expr) {
                Ok(t) => t,
                Err(e) => return Output::fail(EXIT_INPUT, format!("parse error: {e}")),
            };
            let out = eval(&t, *fuel);
            let code = if out.is_diverged() { EXIT_FUEL } else { EXIT_OK };
            let stdout = if cli.json {
                let body = match &out {
                    EvalOutcome::Value { term, steps } => json!({
                        "value": term.to_string(), "steps": steps, "numeral": decode_num(term, *fuel).ok()
                    }),
                    EvalOutcome::Diverged { fuel_spent } => json!({ "diverged": true, "fuel_spent": fuel_spent }),
                };
                envelope("pca-eval", body)
            } else {
                match &out {
                    EvalOutcome::Value { term, .. } => format!("{}\n", show(term, *fuel)),
                    EvalOutcome::Diverged { .. } => format!("{out}\n"),
                }
            };
            Output { code, stdout, stderr: String::new() }
        }
        PcaCommand::Srt { demo, fuel } => srt_demo(cli, *demo, *fuel),
        PcaCommand::Frt { demo, input, rounds, slice, fuel, trace } => {
            let five = encode_num(5);
            let transformer: Box<dyn Fn(&PcaTerm) -> PcaTerm> = match demo {
                FrtDemo::Factorial => Box::new(factorial_step),
                FrtDemo::Identity => Box::new(|p: &PcaTerm| p.clone()),
                FrtDemo::Constant => Box::new(move |_: &PcaTerm| PcaTerm::K.app(five.clone())),
            };
            let cfg = FrtConfig { rounds: *rounds, slice: *slice, fuel: *fuel };
            let (out, log) = frt_lfp_with(&*transformer, &bottom(), &encode_num(*input), &cfg);
            let code = if out.is_diverged() { EXIT_FUEL } else { EXIT_OK };
            let value = out.value().map(|v| decode_num(v, *fuel));
            let stdout = if cli.json {
                envelope(
                    "pca-frt",
                    json!({
                        "rounds_used": log.len(),
                        "produced_by": log.last().and_then(|r| r.produced),
                        "numeral": value.clone().and_then(|v| v.ok()),
                        "value": out.value().map(|v| v.to_string()),
                    }),
                )
            } else {
                let mut s = String::new();
                if *trace {
                    for r in &log {
                        let _ = writeln!(s, "round {:>3}: +{} steps each, budgets {:?}", r.round, r.grant, r.budgets);
                    }
                }
                match (&out, log.last().and_then(|r| r.produced)) {
                    (EvalOutcome::Value { .. }, Some(j)) => {
                        let shown = match value {
                            Some(Ok(n)) => format!("#{n}"),
                            _ => out.value().map(|v| v.to_string()).unwrap_or_default(),
                        };
                        let _ = writeln!(s, "p_{j} produced {shown} in round {}", log.len());
                    }
                    _ => {
                        let _ = writeln!(s, "diverged: no approximant produced a value in {} rounds", log.len());
                    }
                }
                s
            };
            Output { code, stdout, stderr: String::new() }
        }
    }
}

fn srt_demo(cli: &Cli, demo: SrtDemo, fuel: usize) -> Output {
    use pca::*;
    let p = |s: &str| syntax::parse(s).expect("demo parses");
    let (kind, blueprint, e) = match demo {
        SrtDemo::Ignore => ("kleene", r"\*e. \*x. x", None),
        SrtDemo::SelfReturning => ("kleene", r"\*e. \*x. e", None),
        SrtDemo::Countdown => ("kleene", r"\*e. \*x. if (iszero x) #0 (e (pred x))", None),
        SrtDemo::RogersZero => ("rogers", "K (K #0)", None),
        SrtDemo::RogersIdentity => ("rogers", "S K K", None),
        SrtDemo::RogersSucc => ("rogers", r"\*c. \*x. succ (c x)", None::<PcaTerm>),
    };
    let f = p(blueprint);
    let e = e.unwrap_or_else(|| if kind == "kleene" { kleene_fixed_point(&f) } else { rogers_fixed_point(&f) });
    let mut rows = Vec::new();
    for a in ["#0", "#3", "'a"] {
        let arg = p(a);
        let lhs = pca_apply(&e, &arg, fuel);
        let rhs_term = if kind == "kleene" { f.clone().apps([e.clone(), arg.clone()]) } else { f.clone().app(e.clone()).app(arg.clone()) };
        let rhs = eval(&rhs_term, fuel);
        let agree = match (lhs.value(), rhs.value()) {
            (Some(l), Some(r)) => equiv(l, r, 12, fuel),
            (None, None) => Some(true),
            _ => Some(false),
        };
        let shown = match lhs.value() {
            Some(v) => match decode_num(v, fuel) {
                Ok(n) => format!("#{n}"),
                Err(PcaError::Diverged(_)) => "a value whose numeral never ends".to_string(),
                Err(_) => format!("{} nodes", v.size()),
            },
            None => "diverged".to_string(),
        };
        rows.push((a, shown, agree));
    }
    let ok = rows.iter().all(|r| r.2 == Some(true));
    let code = if ok { EXIT_OK } else { EXIT_INPUT };
    let stdout = if cli.json {
        let rows: Vec<Value> = rows.iter().map(|(a, s, g)| json!({ "arg": a, "result": s, "agrees": g })).collect();
        envelope("pca-srt", json!({ "construction": kind, "blueprint": blueprint, "fixed_point_size": e.size(), "rows": rows }))
    } else {
        let eq = if kind == "kleene" { "f e a" } else { "(g e) a" };
        let mut s = format!("{kind} fixed point of {blueprint}: {} nodes\n", e.size());
        for (a, shown, agree) in rows {
            let mark = match agree {
                Some(true) => "=",
                Some(false) => "≠",
                None => "?",
            };
            let _ = writeln!(s, "  e {a:<3} -> {shown}   (e a {mark} {eq})");
        }
        s
    };
    Output { code, stdout, stderr: String::new() }
}

fn examples_cmd(cli: &Cli, cmd: &ExamplesCommand) -> Output {
    match cmd {
        ExamplesCommand::List { export } => {
            if let Some(dir) = export {
                if let Err(e) = std::fs::create_dir_all(dir) {
                    return Output::fail(EXIT_INPUT, format!("{}: {e}", dir.display()));
                }
                for e in corpus::entries() {
                    let path = dir.join(format!("{}.ipcf", e.name));
                    if let Err(err) = std::fs::write(&path, e.text) {
                        return Output::fail(EXIT_INPUT, format!("{}: {err}", path.display()));
                    }
                }
            }
            let stdout = if cli.json {
                let list: Vec<Value> = corpus::entries()
                    .iter()
                    .map(|e| json!({ "name": e.name, "type": e.ty, "unsafe": e.unsafe_ops, "source": e.text }))
                    .collect();
                envelope("examples-list", json!({ "entries": list }))
            } else {
                let mut s = String::new();
                for e in corpus::entries() {
                    let note = if e.unsafe_ops { "   (unsafe registry)" } else { "" };
                    let _ = writeln!(s, "{:<6} : {}{note}", e.name, e.ty);
                }
                s
            };
            Output { code: EXIT_OK, stdout, stderr: String::new() }
        }
        ExamplesCommand::Run { name, all } => {
            let entries: Vec<_> = match (name, all) {
                (Some(n), _) => match corpus::get(n) {
                    Some(e) => vec![e],
                    None => return Output::fail(EXIT_INPUT, unknown_example(n)),
                },
                (None, true) => corpus::entries().iter().collect(),
                (None, false) => return Output::fail(EXIT_INPUT, "give an example name or --all"),
            };
            let mut all_ok = true;
            let mut text = String::new();
            let mut docs = Vec::new();
            for e in entries {
                let checks = examples::run(e);
                all_ok &= checks.iter().all(|c| c.ok);
                let _ = writeln!(text, "{}", e.name);
                for c in &checks {
                    let _ = writeln!(text, "  {} {}", if c.ok { "ok  " } else { "FAIL" }, c.what);
                }
                docs.push(json!({ "name": e.name, "checks": checks.iter().map(|c| json!({ "what": c.what, "ok": c.ok })).collect::<Vec<_>>() }));
            }
            let stdout = if cli.json { envelope("examples-run", json!({ "ok": all_ok, "entries": docs })) } else { text };
            Output { code: if all_ok { EXIT_OK } else { EXIT_INPUT }, stdout, stderr: String::new() }
        }
    }
}
