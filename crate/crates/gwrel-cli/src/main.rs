mod report;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gwrel::bigphase::{Field, TargetKind};
use gwrel::equations::{self, FREE_SYMBOL};
use gwrel::p1_gw::Insertion;
use gwrel::relations::{self, InstanceSpec, PipelineError, Targets, VerifyReport};
use gwrel::sym::{parse_manifest, SymExpr};
use gwrel::{LinearSystem, Rational};
use serde_json::{json, Value};

use store::Store;

#[derive(Parser)]
#[command(name = "gwrel", version, about = "Exact genus-3 relation pipeline for the point and P1")]
struct Cli {
    /// Directory holding the persisted invariant tables.
    #[arg(long, global = true, env = "GWREL_CACHE_DIR", default_value = ".gwrel-cache")]
    cache_dir: PathBuf,
    /// Highest genus the targets evaluate.
    #[arg(long, global = true, env = "GWREL_MAX_GENUS", default_value_t = 3)]
    max_genus: u32,
    /// Highest P1 degree the targets evaluate.
    #[arg(long, global = true, env = "GWREL_MAX_DEGREE", default_value_t = 2)]
    max_degree: u32,
    /// Worker threads (default: logical CPUs).
    #[arg(long, global = true, env = "GWREL_WORKERS")]
    workers: Option<usize>,
    /// Write a JSON report to this path.
    #[arg(long, global = true, env = "GWREL_OUT")]
    out: Option<PathBuf>,
    /// Leave timing out of the JSON report so runs can be diffed.
    #[arg(long, global = true, env = "GWREL_COMPARE_MODE")]
    compare_mode: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print one intersection number.
    #[command(subcommand)]
    Invariant(InvariantCmd),
    /// Evaluate an expression on one instance.
    Eval(EvalArgs),
    /// Regenerate the printed relations and compare them exactly.
    Relations,
    /// Solve the relation system with a2 free and compare with the table.
    Solve {
        /// Use only the printed relations.
        #[arg(long)]
        printed_only: bool,
    },
    /// Run an identity check over its instance suite.
    Verify {
        check: Check,
        /// Value of a2 for the main identity.
        #[arg(long, default_value = "0", value_parser = parse_rational)]
        a2: Rational,
    },
    /// Inspect or reset the cache directory.
    Cache {
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum InvariantCmd {
    /// ⟨τ_n1 ... τ_nk⟩_g of the point.
    Point { genus: u32, levels: Vec<u32> },
    /// ⟨τ_n1(γ_q1) ... ⟩_{g,d} of P1, insertions written `n:q`.
    P1 {
        genus: u32,
        degree: u32,
        #[arg(value_parser = parse_insertion)]
        insertions: Vec<Insertion>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Q,
    Phi,
    PhiSolved,
    Omega,
    ThmRhs,
    Skew,
    Main,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Point,
    P1,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long, default_value_t = 0)]
    degree: u32,
    /// First argument, `n` or `n:q`.
    #[arg(long, value_parser = parse_field)]
    w1: Option<Field>,
    /// Second argument, `n` or `n:q`.
    #[arg(long, value_parser = parse_field)]
    w2: Option<Field>,
    /// Derivative direction, `n` or `n:q`; repeatable.
    #[arg(long = "deriv", value_parser = parse_field)]
    derivs: Vec<Field>,
    /// Value of a2 in builtins that use it.
    #[arg(long, default_value = "0", value_parser = parse_rational)]
    a2: Rational,
    #[arg(long, value_enum, conflicts_with_all = ["expr", "file"])]
    builtin: Option<Builtin>,
    /// Expression in the term-manifest grammar, terms separated by `;`.
    #[arg(long, conflicts_with = "file")]
    expr: Option<String>,
    /// File in the term-manifest grammar.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Skew,
    Omega,
    Main,
    Engine,
    Relations,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum CacheAction {
    Stats,
    Clear,
    Export,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_insertion(s: &str) -> Result<Insertion, String> {
    let (n, q) = s.split_once(':').ok_or_else(|| format!("expected `n:q`, got {s:?}"))?;
    let level = n.parse().map_err(|_| format!("bad level in {s:?}"))?;
    let class = q.parse().map_err(|_| format!("bad class in {s:?}"))?;
    if class > 1 {
        return Err(format!("class must be 0 or 1 in {s:?}"));
    }
    Ok(Insertion::new(level, class))
}

fn parse_field(s: &str) -> Result<Field, String> {
    let (n, q) = s.split_once(':').unwrap_or((s, "0"));
    let level = n.parse().map_err(|_| format!("bad level in {s:?}"))?;
    let class = q.parse().map_err(|_| format!("bad class in {s:?}"))?;
    Ok(Field::new(level, class))
}

/// Outcome of one command: whether its checks passed, plus the JSON body.
struct Outcome {
    passed: bool,
    body: Value,
}

impl Outcome {
    fn pass(body: Value) -> Self {
        Outcome { passed: true, body }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().context("starting worker pool")?;

    let start = Instant::now();
    let store = Store::open(&cli.cache_dir)?;
    let targets = Targets::new(store.point.clone(), store.p1.clone(), cli.max_genus, cli.max_degree);
    let outcome = dispatch(cli, &store, &targets)?;
    if !matches!(cli.command, Command::Cache { action: CacheAction::Clear }) {
        store.save()?;
    }

    if let Some(path) = &cli.out {
        let mut body = outcome.body;
        body["passed"] = json!(outcome.passed);
        body["config"] = json!({ "max_genus": cli.max_genus, "max_degree": cli.max_degree });
        if !cli.compare_mode {
            body["perf"] = json!({ "wall_time_ms": start.elapsed().as_millis() as u64, "workers": workers });
        }
        let text = serde_json::to_string_pretty(&body)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(outcome.passed)
}

fn dispatch(cli: &Cli, store: &Store, targets: &Targets) -> Result<Outcome> {
    let compare = cli.compare_mode;
    match &cli.command {
        Command::Invariant(cmd) => invariant(cmd, store),
        Command::Eval(args) => eval(args, targets),
        Command::Relations => Ok(relations_cmd(targets, compare)),
        Command::Solve { printed_only } => solve(*printed_only, targets),
        Command::Verify { check, a2 } => Ok(verify(*check, a2, cli.max_degree, targets, compare)),
        Command::Cache { action } => cache(*action, store),
    }
}

fn invariant(cmd: &InvariantCmd, store: &Store) -> Result<Outcome> {
    let (key, value) = match cmd {
        InvariantCmd::Point { genus, levels } => {
            let v = store.point.intersection_number(*genus, levels);
            let lv: Vec<String> = levels.iter().map(u32::to_string).collect();
            (format!("point g={genus} [{}]", lv.join(",")), v)
        }
        InvariantCmd::P1 { genus, degree, insertions } => {
            let v = store.p1.invariant(*genus, *degree, insertions);
            let ins: Vec<String> = insertions.iter().map(|i| format!("{}:{}", i.level, i.class)).collect();
            (format!("P1 g={genus} d={degree} [{}]", ins.join(",")), v)
        }
    };
    println!("{value}");
    Ok(Outcome::pass(json!({ "command": "invariant", "key": key, "value": value.to_string() })))
}

fn eval(args: &EvalArgs, targets: &Targets) -> Result<Outcome> {
    let w1 = args.w1.unwrap_or(Field::new(0, 0));
    let w2 = args.w2.unwrap_or(Field::new(0, 0));
    let (name, expr) = match (&args.builtin, &args.expr, &args.file) {
        (Some(b), _, _) => {
            let e = match b {
                Builtin::Q => equations::q_sym(w1, w2),
                Builtin::Phi => equations::phi_sym(w1, w2),
                Builtin::PhiSolved => equations::phi_solved_sym(w1, w2),
                Builtin::Omega => equations::omega_sym(w1, w2),
                Builtin::ThmRhs => equations::thm_rhs_sym(w1, w2, &args.a2),
                Builtin::Skew => equations::skew_sym(w1, w2),
                Builtin::Main => equations::main_identity_sym(w1, w2, &args.a2),
            };
            (b.to_possible_value().unwrap().get_name().to_string(), e)
        }
        (None, Some(text), None) => ("expr".to_string(), user_expr(&text.replace(';', "\n"), w1, w2)?),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            (path.display().to_string(), user_expr(&text, w1, w2)?)
        }
        _ => bail!("give one of --builtin, --expr or --file"),
    };
    let target = match args.target {
        Target::Point => TargetKind::Point,
        Target::P1 => TargetKind::P1,
    };
    let spec = InstanceSpec::new("eval", target, args.degree, args.derivs.clone(), (w1, w2));
    let value = relations::evaluate_instance(&expr, &spec, targets)?;
    println!("{value}");
    Ok(Outcome::pass(json!({
        "command": "eval",
        "instance": spec.describe(&name),
        "value": report::form(&value),
    })))
}

fn user_expr(text: &str, w1: Field, w2: Field) -> Result<SymExpr> {
    let e = parse_manifest(text).context("parsing expression")?;
    let e = e.instantiate(&gwrel::sym::Arg::Fixed(w1), &gwrel::sym::Arg::Fixed(w2));
    if e.has_placeholders() {
        bail!("expression still contains W placeholders");
    }
    Ok(e)
}

fn relations_cmd(targets: &Targets, compare: bool) -> Outcome {
    let outcomes = relations::regenerate(relations::printed_relations(), targets);
    let mut matched = 0;
    for o in &outcomes {
        let status = match &o.extracted {
            Ok(_) if o.matched() => {
                matched += 1;
                "ok".to_string()
            }
            Ok(f) => format!("MISMATCH extracted {f}"),
            Err(e) => format!("ERROR {e}"),
        };
        println!("{}: {status}", o.printed.spec);
    }
    println!("{matched}/{} relations reproduced exactly", outcomes.len());
    Outcome {
        passed: matched == outcomes.len(),
        body: json!({
            "command": "relations",
            "matched": matched,
            "total": outcomes.len(),
            "relations": outcomes.iter().map(|o| report::relation(o, compare)).collect::<Vec<_>>(),
        }),
    }
}

fn extract_all(specs: &[InstanceSpec], targets: &Targets) -> Result<Vec<gwrel::AffineForm>> {
    use rayon::prelude::*;
    let forms: Result<Vec<_>, PipelineError> =
        specs.par_iter().map(|s| relations::extract_relation(s, targets).map(|r| r.form)).collect();
    Ok(forms?)
}

fn solve(printed_only: bool, targets: &Targets) -> Result<Outcome> {
    let mut specs = relations::appendix_schedule();
    let printed = specs.len();
    if !printed_only {
        specs.extend(relations::supplementary_schedule());
    }
    let forms = extract_all(&specs, targets)?;
    let printed_rank = LinearSystem::new(forms[..printed].to_vec()).rank();
    println!("printed relations: rank {printed_rank} over {printed}");
    let expected = gwrel::equations::SYMBOL_COUNT as usize - 1;
    let report = match relations::solve_and_compare(&forms, expected) {
        Ok(r) => r,
        Err(PipelineError::RankMismatch { expected, found }) => {
            println!("rank {found} over {} relations, expected {expected}", forms.len());
            return Ok(Outcome {
                passed: false,
                body: json!({
                    "command": "solve",
                    "printed_only": printed_only,
                    "relations": forms.len(),
                    "rank": found,
                    "expected_rank": expected,
                    "printed_rank": printed_rank,
                }),
            });
        }
        Err(e) => return Err(e.into()),
    };
    println!("rank {} over {} relations", report.rank, forms.len());
    for (sym, value) in &report.solution.values {
        println!("a{sym} = {value}");
    }
    for sym in &report.solution.free {
        println!("a{sym} free");
    }
    for m in &report.mismatches {
        let show = |f: &Option<gwrel::AffineForm>| f.as_ref().map_or("-".to_string(), ToString::to_string);
        println!("MISMATCH a{}: solved {} expected {}", m.symbol, show(&m.solved), show(&m.expected));
    }
    let passed = report.passed() && report.solution.free == [FREE_SYMBOL];
    println!("{}", if passed { "coefficient table reproduced" } else { "coefficient table NOT reproduced" });
    let values: serde_json::Map<String, Value> =
        report.solution.values.iter().map(|(s, v)| (format!("a{s}"), report::form(v))).collect();
    Ok(Outcome {
        passed,
        body: json!({
            "command": "solve",
            "printed_only": printed_only,
            "relations": forms.len(),
            "rank": report.rank,
            "expected_rank": expected,
            "printed_rank": printed_rank,
            "free": report.solution.free.iter().map(|s| format!("a{s}")).collect::<Vec<_>>(),
            "values": values,
            "mismatches": report.mismatches.iter().map(|m| format!("a{}", m.symbol)).collect::<Vec<_>>(),
        }),
    })
}

fn print_verify(r: &VerifyReport) {
    for o in r.failures() {
        match &o.value {
            Ok(v) => println!("FAIL {}: {}: {v}", o.spec.id, o.spec.describe(r.name)),
            Err(e) => println!("FAIL {}: {}: {e}", o.spec.id, o.spec.describe(r.name)),
        }
    }
    let ok = r.outcomes.len() - r.failures().count();
    println!("{}: {ok}/{} instances vanish", r.name, r.outcomes.len());
}

fn verify(check: Check, a2: &Rational, max_degree: u32, targets: &Targets, compare: bool) -> Outcome {
    let all = matches!(check, Check::All);
    let mut passed = true;
    let mut body = serde_json::Map::new();
    let mut record = |r: VerifyReport| {
        print_verify(&r);
        passed &= r.passed();
        body.insert(r.name.to_string(), report::verify(&r, r.name, compare));
    };
    let suite = relations::theorem_suite(max_degree);
    if all || matches!(check, Check::Skew) {
        record(relations::verify_skew(&suite, targets));
    }
    if all || matches!(check, Check::Omega) {
        record(relations::verify_omega_symmetrization(&relations::omega_suite(), targets));
    }
    if all || matches!(check, Check::Main) {
        record(relations::verify_main_identity(&suite, targets, a2));
    }
    if all || matches!(check, Check::Engine) {
        record(relations::verify_engine_equivalence(&relations::appendix_schedule(), targets));
    }
    if all || matches!(check, Check::Relations) {
        let out = relations_cmd(targets, compare);
        passed &= out.passed;
        body.insert("relations".into(), out.body);
    }
    body.insert("command".into(), json!("verify"));
    Outcome { passed, body: Value::Object(body) }
}

fn cache(action: CacheAction, store: &Store) -> Result<Outcome> {
    match action {
        CacheAction::Stats => {
            let mut body = serde_json::Map::new();
            for (name, n) in store.stats() {
                println!("{name}: {n} entries");
                body.insert(name.to_string(), json!(n));
            }
            Ok(Outcome::pass(json!({ "command": "cache stats", "entries": body })))
        }
        CacheAction::Clear => {
            store.clear()?;
            println!("cache cleared");
            Ok(Outcome::pass(json!({ "command": "cache clear" })))
        }
        CacheAction::Export => {
            print!("{}", store.export());
            Ok(Outcome::pass(json!({ "command": "cache export" })))
        }
    }
}
