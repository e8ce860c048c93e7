use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use caspr::engine::{find_winning_move_with, EngineError, EngineOptions, Outcome};
use caspr::generate::{gen_cc_text, gen_qbf, IllFormedQbf, Qbf2};
use caspr::optimize::{solve_lower_with, solve_upper_with, OptError, OptOptions, OptOutcome};
use caspr::oracle::{probe, OracleError};
use caspr::parser::{emit_quantified, parse_quantified, ParseError};
use caspr::reference::{Reference, ReferenceError, ReferenceOptions};
use caspr::validate::validate;
use caspr::{CostVector, Interpretation, QuantifiedProgram, Quantifier, SolverConfig};

mod bench;

/// Enumeration cap for the `--paranoid` re-check.
const PARANOID_CAP: usize = 1000;

#[derive(Parser, Debug)]
#[command(
    name = "caspr",
    version,
    about = "CEGAR solver for quantified answer set programs with weak constraints"
)]
struct Cli {
    /// Solver command, e.g. "clingo" or "python3 -m clingo" (default: $CASPR_SOLVER, then clingo).
    #[arg(long, global = true, value_name = "CMD")]
    solver: Option<String>,
    /// Time limit in seconds, applied to each solver call and to the whole run.
    #[arg(long, global = true, value_name = "SECS")]
    timeout: Option<f64>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Re-check negative engine answers with the reference evaluator.
    #[arg(long, global = true)]
    paranoid: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Decide coherence with the CEGAR engine.
    Solve { file: PathBuf },
    /// Compute an optimal quantified answer set.
    Optimize {
        #[arg(long, value_enum, default_value_t = Strategy::Upper)]
        strategy: Strategy,
        file: PathBuf,
    },
    /// Decide coherence and enumerate quantified answer sets by brute force.
    Reference { file: PathBuf },
    /// Print the universal-universal encoding of a 2-QBF.
    GenQbf(GenQbfArgs),
    /// Print a clique coloring instance on a random G(n, p) graph.
    GenCc { n: usize, density: f64, seed: u64 },
    /// Run a batch of instances and print one CSV row per instance.
    Bench {
        #[arg(long, value_enum, default_value_t = bench::Mode::Engine)]
        mode: bench::Mode,
        /// Number of instances solved in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Check that the solver can be started and speaks the expected protocol.
    Probe,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    Upper,
    Lower,
}

#[derive(clap::Args, Debug)]
struct GenQbfArgs {
    /// Universal variables, comma separated.
    #[arg(long, value_delimiter = ',')]
    forall: Vec<String>,
    /// Existential variables, comma separated.
    #[arg(long, value_delimiter = ',')]
    exists: Vec<String>,
    /// A clause as space-separated literals, `-` for negation. Repeatable.
    #[arg(long = "clause", allow_hyphen_values = true)]
    clauses: Vec<String>,
    /// Generate a random formula instead.
    #[arg(long, conflicts_with_all = ["forall", "exists", "clauses"])]
    seed: Option<u64>,
    #[arg(long, default_value_t = 3, requires = "seed")]
    x: usize,
    #[arg(long, default_value_t = 3, requires = "seed")]
    y: usize,
    #[arg(long = "clauses", default_value_t = 6, requires = "seed")]
    n_clauses: usize,
}

/// A failed run: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

pub const EXIT_INPUT: u8 = 10;
pub const EXIT_SOLVER: u8 = 20;
pub const EXIT_UNKNOWN: u8 = 30;

impl Failure {
    fn input(msg: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            msg: msg.into(),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Failure {
        Failure::input(e.to_string())
    }
}

impl From<IllFormedQbf> for Failure {
    fn from(e: IllFormedQbf) -> Failure {
        Failure::input(e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Failure {
        Failure {
            code: EXIT_SOLVER,
            msg: e.to_string(),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Failure {
        let code = match e {
            EngineError::Transform(_) | EngineError::Cost(_) => EXIT_INPUT,
            EngineError::Oracle(_) | EngineError::RepeatedCountermove(_) => EXIT_SOLVER,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<OptError> for Failure {
    fn from(e: OptError) -> Failure {
        match e {
            OptError::Engine(e) => e.into(),
            OptError::Cost(_) | OptError::NotExistential => Failure::input(e.to_string()),
            OptError::BoundNotImproved { .. } => Failure {
                code: EXIT_SOLVER,
                msg: e.to_string(),
            },
        }
    }
}

impl From<ReferenceError> for Failure {
    fn from(e: ReferenceError) -> Failure {
        let code = match e {
            ReferenceError::Oracle(_) => EXIT_SOLVER,
            ReferenceError::Unknown(_) | ReferenceError::TooManyMoves(_) => EXIT_UNKNOWN,
            ReferenceError::Transform(_) | ReferenceError::Cost(_) | ReferenceError::NotExistential => EXIT_INPUT,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

/// Solver settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub timeout: Option<Duration>,
    pub paranoid: bool,
}

impl RunConfig {
    pub fn deadline(&self) -> Option<Instant> {
        self.timeout.map(|t| Instant::now() + t)
    }

    fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            deadline: self.deadline(),
            paranoid: self.paranoid.then_some(PARANOID_CAP),
            ..EngineOptions::default()
        }
    }
}

pub fn load(path: &Path) -> Result<QuantifiedProgram, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let qp = parse_quantified(&text).map_err(|e| e.with_file(&path.display().to_string()))?;
    for d in validate(&qp) {
        if d.is_warning() {
            log::warn!("{}: {d}", path.display());
        }
    }
    Ok(qp)
}

/// Coherence status of the whole program given whether the first player
/// has a winning move.
fn status(qp: &QuantifiedProgram, winning: bool) -> &'static str {
    match (qp.q1, winning) {
        (Quantifier::Exists, true) | (Quantifier::Forall, false) => "COHERENT",
        _ => "INCOHERENT",
    }
}

fn cost_json(c: &CostVector) -> Value {
    let mut m = Map::new();
    for (l, v) in c.entries.iter().rev() {
        m.insert(l.to_string(), json!(v));
    }
    Value::Object(m)
}

fn move_json(m: Option<&Interpretation>) -> Value {
    match m {
        Some(m) => json!(m.to_strings()),
        None => Value::Null,
    }
}

/// Result of one subcommand, printed as text or JSON.
pub struct Report {
    pub status: String,
    pub mv: Option<Interpretation>,
    pub cost: Option<CostVector>,
    pub stats: Map<String, Value>,
    /// Extra text lines.
    pub notes: Vec<String>,
}

impl Report {
    fn new(status: &str) -> Report {
        Report {
            status: status.to_string(),
            mv: None,
            cost: None,
            stats: Map::new(),
            notes: Vec::new(),
        }
    }

    fn stat(&mut self, key: &str, v: impl Into<Value>) {
        self.stats.insert(key.to_string(), v.into());
    }

    fn print(&self, as_json: bool) {
        if as_json {
            let v = json!({
                "status": self.status,
                "move": move_json(self.mv.as_ref()),
                "cost": self.cost.as_ref().map(cost_json).unwrap_or(Value::Null),
                "stats": self.stats,
            });
            println!("{v}");
            return;
        }
        println!("{}", self.status);
        if let Some(m) = &self.mv {
            println!("move: {m}");
        }
        if let Some(c) = self.cost.as_ref().filter(|c| !c.entries.is_empty()) {
            println!("cost: {c}");
        }
        for n in &self.notes {
            println!("{n}");
        }
    }

    fn exit_code(&self) -> u8 {
        if self.status == "UNKNOWN" {
            EXIT_UNKNOWN
        } else {
            0
        }
    }
}

pub fn run_solve(qp: &QuantifiedProgram, rc: &RunConfig) -> Result<Report, Failure> {
    let start = Instant::now();
    if !qp.is_alternating() {
        log::info!("quantifiers do not alternate, using the reference evaluator");
        let mut r = Reference::new(qp, &rc.solver, ReferenceOptions::default());
        let coherent = r.coherent()?;
        let mut rep = Report::new(if coherent { "COHERENT" } else { "INCOHERENT" });
        rep.stat("evaluator", "reference");
        rep.stat("oracle_calls", r.calls);
        rep.stat("time_s", start.elapsed().as_secs_f64());
        return Ok(rep);
    }
    let res = find_winning_move_with(qp, &rc.solver, rc.engine_options())?;
    let mut rep = match &res.outcome {
        Outcome::Winning(m) => {
            let mut rep = Report::new(status(qp, true));
            rep.mv = Some(m.clone());
            rep
        }
        Outcome::NoWinningMove => Report::new(status(qp, false)),
        Outcome::Unknown(why) => {
            let mut rep = Report::new("UNKNOWN");
            rep.notes.push(format!("reason: {why}"));
            rep.stat("reason", why.as_str());
            rep
        }
    };
    rep.stat("evaluator", "engine");
    rep.stat("iterations", res.stats.iterations);
    rep.stat("oracle_calls", res.stats.oracle_calls);
    rep.stat("countermoves", res.stats.countermoves.len());
    rep.stat("overturned_defeats", res.stats.overturned_defeats);
    rep.stat("time_s", start.elapsed().as_secs_f64());
    if let Some(d) = &res.stats.discrepancy {
        rep.stat("discrepancy", d.as_str());
        rep.notes.push(format!("discrepancy: {d}"));
    }
    Ok(rep)
}

pub fn run_optimize(qp: &QuantifiedProgram, rc: &RunConfig, upper: bool) -> Result<Report, Failure> {
    let start = Instant::now();
    let opts = OptOptions {
        deadline: rc.deadline(),
    };
    let res = if upper {
        solve_upper_with(qp, &rc.solver, &opts)?
    } else {
        solve_lower_with(qp, &rc.solver, &opts)?
    };
    let mut rep = match res.outcome {
        OptOutcome::Optimal { mv, cost } => {
            let mut rep = Report::new("OPTIMUM");
            rep.mv = Some(mv);
            rep.cost = Some(cost);
            rep
        }
        OptOutcome::NoQas => Report::new("INCOHERENT"),
        OptOutcome::Unknown(why) => {
            let mut rep = Report::new("UNKNOWN");
            rep.notes.push(format!("reason: {why}"));
            rep.stat("reason", why);
            rep
        }
    };
    rep.stat("strategy", if upper { "upper" } else { "lower" });
    rep.stat("iterations", res.stats.iterations);
    rep.stat("oracle_calls", res.stats.oracle_calls);
    rep.stat("countermoves", res.stats.countermoves);
    rep.stat("qas_found", res.stats.qas_found);
    rep.stat("bounds", res.stats.bounds.iter().map(cost_json).collect::<Vec<_>>());
    rep.stat("time_s", start.elapsed().as_secs_f64());
    Ok(rep)
}

pub fn run_reference(qp: &QuantifiedProgram, rc: &RunConfig) -> Result<Report, Failure> {
    let start = Instant::now();
    let mut r = Reference::new(qp, &rc.solver, ReferenceOptions::default());
    let report = r.report()?;
    let mut rep = Report::new(if report.coherent { "COHERENT" } else { "INCOHERENT" });
    rep.mv = report.opt_qas.first().cloned();
    rep.cost = report.opt_cost.clone();
    rep.stat("oracle_calls", report.oracle_calls);
    rep.stat("qas", report.qas.len());
    rep.stat(
        "optimal_qas",
        report.opt_qas.iter().map(|m| move_json(Some(m))).collect::<Vec<_>>(),
    );
    rep.stat("time_s", start.elapsed().as_secs_f64());
    if qp.q1 == Quantifier::Exists {
        rep.notes.push(format!("quantified answer sets: {}", report.qas.len()));
        for m in &report.opt_qas {
            rep.notes.push(format!("optimal: {m}"));
        }
    }
    Ok(rep)
}

fn parse_clause(s: &str) -> Vec<(bool, String)> {
    s.split_whitespace()
        .map(|l| match l.strip_prefix('-') {
            Some(v) => (false, v.to_string()),
            None => (true, l.to_string()),
        })
        .collect()
}

fn describe(phi: &Qbf2) -> String {
    let clauses: Vec<String> = phi
        .clauses
        .iter()
        .map(|c| {
            let lits: Vec<String> = c
                .iter()
                .map(|(pos, v)| if *pos { v.clone() } else { format!("-{v}") })
                .collect();
            format!("({})", lits.join(" | "))
        })
        .collect();
    format!(
        "% forall {} exists {}: {}\n% truth: {}\n",
        phi.x_vars.join(" "),
        phi.y_vars.join(" "),
        clauses.join(" & "),
        phi.is_true()
    )
}

fn gen_qbf_text(args: &GenQbfArgs) -> Result<String, Failure> {
    let phi = match args.seed {
        Some(seed) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            Qbf2::random(&mut rng, args.x, args.y, args.n_clauses)
        }
        None => Qbf2 {
            x_vars: args.forall.clone(),
            y_vars: args.exists.clone(),
            clauses: args.clauses.iter().map(|c| parse_clause(c)).collect(),
        },
    };
    let qp = gen_qbf(&phi)?;
    Ok(format!("{}{}", describe(&phi), emit_quantified(&qp)))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut solver = SolverConfig::from_env();
    if let Some(cmd) = &cli.solver {
        solver = solver.with_command(cmd);
    }
    let timeout = match cli.timeout {
        Some(t) if !(t > 0.0 && t.is_finite()) => return Err(Failure::input("--timeout must be positive")),
        Some(t) => Some(Duration::from_secs_f64(t)),
        None => None,
    };
    if let Some(t) = timeout {
        solver = solver.with_timeout(t);
    }
    let rc = RunConfig {
        solver,
        timeout,
        paranoid: cli.paranoid,
    };
    let report = match &cli.cmd {
        Cmd::Solve { file } => run_solve(&load(file)?, &rc)?,
        Cmd::Optimize { strategy, file } => run_optimize(&load(file)?, &rc, matches!(strategy, Strategy::Upper))?,
        Cmd::Reference { file } => run_reference(&load(file)?, &rc)?,
        Cmd::GenQbf(args) => {
            print!("{}", gen_qbf_text(args)?);
            return Ok(0);
        }
        Cmd::GenCc { n, density, seed } => {
            if *n < 2 {
                return Err(Failure::input("gen-cc needs at least two vertices"));
            }
            if !(0.0..=1.0).contains(density) {
                return Err(Failure::input("density must lie in [0, 1]"));
            }
            print!("{}", gen_cc_text(*n, *density, *seed));
            return Ok(0);
        }
        Cmd::Bench { mode, jobs, files } => {
            let rows = bench::run_bench(files, *mode, &rc, *jobs);
            bench::write_csv(std::io::stdout().lock(), &rows).map_err(|e| Failure {
                code: 1,
                msg: format!("cannot write CSV: {e}"),
            })?;
            return Ok(0);
        }
        Cmd::Probe => {
            let version = probe(&rc.solver)?;
            if cli.json {
                println!("{}", json!({"status": "OK", "solver": version}));
            } else {
                println!("OK {version}");
            }
            return Ok(0);
        }
    };
    report.print(cli.json);
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
