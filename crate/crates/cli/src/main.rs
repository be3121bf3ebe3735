//! `mbsync`: command-line front end for the decision procedures.
//!
//! Exit codes: 0 yes/holds/ok, 1 no/violated/blocked, 2 input or usage
//! error, 3 budget exceeded.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mbsync_core::automata::{parse_nfa, Limits, NfaFile, SearchError};
use mbsync_core::decide::{self, Answer, DecideError, Gadget, Options, Verdict};
use mbsync_core::model::{self, parse_cfm, parse_trace, render_cfm, ParseError};
use mbsync_core::{commgraph, msc, Cfm, Network, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mbsync", version, about = "Synchronizability checks for communicating finite-state machines")]
struct Cli {
    /// Print one JSON report on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Maximum number of automaton states a search may visit.
    #[arg(long, global = true, value_name = "N")]
    budget: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a property of a system.
    #[command(subcommand)]
    Check(Check),
    /// Decide whether a global control state is reachable.
    Reach {
        file: PathBuf,
        /// Target states, as `p=s,q=t,...` covering every process.
        #[arg(long)]
        goal: String,
        /// Refuse to answer unless the system is synchronizable.
        #[arg(long)]
        verify_sync: bool,
    },
    /// Smallest k such that the system is k-synchronizable.
    InferK { file: PathBuf },
    /// Check a regular property of the synchronous behaviours.
    ModelCheck {
        file: PathBuf,
        #[arg(long, value_name = "NFAFILE")]
        property: PathBuf,
    },
    /// Run the system randomly, or replay a trace file.
    Simulate(Simulate),
    /// Render a trace as a graph.
    Export {
        file: PathBuf,
        #[arg(long, value_name = "TRACEFILE")]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        #[arg(long, value_enum, default_value_t = Graph::Msc)]
        graph: Graph,
        #[arg(long, value_enum, default_value_t = Semantics::Mb)]
        semantics: Semantics,
    },
    /// Generate benchmark systems.
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Subcommand)]
enum Check {
    /// Mailbox synchronizability.
    Sync {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::Exact)]
        engine: Engine,
        /// Largest exchange (in actions) the bounded engine considers.
        #[arg(long, default_value_t = 6)]
        max_exchange: usize,
        /// Largest number of sends along a bounded-engine witness.
        #[arg(long, default_value_t = 12)]
        max_sends: usize,
    },
    /// k-synchronizability.
    Ksync {
        file: PathBuf,
        #[arg(long)]
        k: u64,
    },
    /// Mailbox-similarity of a synchronizable system.
    Mbsim { file: PathBuf },
}

#[derive(Args)]
struct Simulate {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Semantics::Mb)]
    semantics: Semantics,
    #[arg(long, default_value_t = 20)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replay this trace file instead of choosing actions at random.
    #[arg(long, value_name = "TRACEFILE")]
    replay: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Gen {
    /// The ring of processes whose synchronous runs intersect NFA languages.
    Intersection {
        #[arg(required = true, num_args = 2..)]
        nfas: Vec<PathBuf>,
        #[arg(long, value_enum)]
        gadget: Option<GadgetArg>,
        #[arg(short, long, value_name = "OUT")]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Exact,
    Bounded,
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    Mb,
    P2p,
}

impl Semantics {
    fn network(self) -> Network {
        match self {
            Semantics::Mb => Network::Mailbox,
            Semantics::P2p => Network::P2p,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Graph {
    Msc,
    Commgraph,
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetArg {
    Nonsync,
    Nonsim,
}

#[derive(Serialize, Default)]
struct Stats {
    states: usize,
    millis: u128,
}

/// The JSON report shared by every command.
#[derive(Serialize)]
struct Report {
    command: String,
    verdict: String,
    witness: Option<Vec<String>>,
    k: Option<u64>,
    stats: Stats,
    detail: Option<String>,
}

enum Failure {
    Input(anyhow::Error),
    Budget(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<DecideError> for Failure {
    fn from(e: DecideError) -> Self {
        match e {
            DecideError::Search(SearchError::BudgetExceeded(_)) => Failure::Budget(e.to_string()),
            e => Failure::Input(e.into()),
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

fn located(path: &Path, e: ParseError) -> anyhow::Error {
    anyhow!("{}:{}: {}", path.display(), e.line, e.message)
}

fn load_cfm(path: &Path) -> anyhow::Result<Cfm> {
    parse_cfm(&read(path)?).map_err(|e| located(path, e))
}

fn load_nfa(path: &Path) -> anyhow::Result<NfaFile> {
    parse_nfa(&read(path)?).map_err(|e| located(path, e))
}

/// A trace over the symbols of `cfm`. Names the system does not know are
/// rejected, since such actions could never occur in it.
fn load_trace(path: &Path, cfm: &Cfm) -> anyhow::Result<Trace> {
    let mut symbols = cfm.symbols.clone();
    let t = parse_trace(&read(path)?, &mut symbols).map_err(|e| located(path, e))?;
    if symbols.num_processes() != cfm.symbols.num_processes() {
        return Err(anyhow!("{}: mentions a process that is not in {}", path.display(), cfm.name));
    }
    Ok(t)
}

fn options(budget: Option<usize>) -> Options {
    match budget {
        Some(n) => Options { limits: Limits::with_max_states(n) },
        None => Options::default(),
    }
}

fn report(command: &str, v: &Verdict, cfm: &Cfm) -> Report {
    Report {
        command: command.to_string(),
        verdict: v.answer.to_string(),
        witness: v.witness.as_ref().map(|w| cfm.symbols.trace(w)),
        k: v.k,
        stats: Stats { states: v.stats.states, millis: v.stats.millis },
        detail: (!v.exhaustive).then(|| "bounded search; a yes only covers the explored behaviours".to_string()),
    }
}

fn run(cli: Cli) -> Result<(Report, bool), Failure> {
    let opts = options(cli.budget);
    let verdict = |command: &str, v: Verdict, cfm: &Cfm| {
        let yes = v.answer == Answer::Yes;
        (report(command, &v, cfm), yes)
    };
    Ok(match cli.command {
        Command::Check(Check::Sync { file, engine, max_exchange, max_sends }) => {
            let cfm = load_cfm(&file)?;
            let v = match engine {
                Engine::Exact => decide::check_sync(&cfm, &opts)?,
                Engine::Bounded => decide::check_sync_bounded(&cfm, max_exchange, max_sends, &opts)?,
            };
            verdict("check sync", v, &cfm)
        }
        Command::Check(Check::Ksync { file, k }) => {
            let cfm = load_cfm(&file)?;
            verdict("check ksync", decide::check_ksync(&cfm, k, &opts)?, &cfm)
        }
        Command::Check(Check::Mbsim { file }) => {
            let cfm = load_cfm(&file)?;
            verdict("check mbsim", decide::check_mbsim(&cfm, &opts)?, &cfm)
        }
        Command::Reach { file, goal, verify_sync } => {
            let cfm = load_cfm(&file)?;
            let g = cfm.parse_global(&goal).map_err(|e| anyhow!("--goal: {e}"))?;
            if verify_sync {
                let s = decide::check_sync(&cfm, &opts)?;
                if s.answer == Answer::No {
                    let mut r = report("reach", &s, &cfm);
                    r.detail = Some("the system is not synchronizable; the witness is a non-synchronizable trace".into());
                    return Ok((r, false));
                }
            }
            verdict("reach", decide::reachable(&cfm, &g, &opts)?, &cfm)
        }
        Command::InferK { file } => {
            let cfm = load_cfm(&file)?;
            verdict("infer-k", decide::infer_k(&cfm, &opts)?, &cfm)
        }
        Command::ModelCheck { file, property } => {
            let cfm = load_cfm(&file)?;
            let prop = load_nfa(&property)?;
            verdict("model-check", decide::model_check(&cfm, &prop, &opts)?, &cfm)
        }
        Command::Simulate(s) => simulate(s)?,
        Command::Export { file, trace, format: Format::Dot, graph, semantics } => {
            let cfm = load_cfm(&file)?;
            let t = load_trace(&trace, &cfm)?;
            let dot = match graph {
                Graph::Msc => msc::msc_of(&t).map(|m| m.to_dot(&cfm.symbols)),
                Graph::Commgraph => commgraph::comm_graph(&t, &semantics.network()).map(|g| g.to_dot(&cfm.symbols)),
            }
            .map_err(|e| anyhow!("{}: {e}", trace.display()))?;
            let r = Report {
                command: "export".into(),
                verdict: "ok".into(),
                witness: None,
                k: None,
                stats: Stats::default(),
                detail: Some(dot),
            };
            (r, true)
        }
        Command::Gen(Gen::Intersection { nfas, gadget, output }) => {
            let started = Instant::now();
            let nfas = nfas.iter().map(|p| load_nfa(p)).collect::<anyhow::Result<Vec<_>>>()?;
            let gadget = match gadget {
                None => Gadget::None,
                Some(GadgetArg::Nonsync) => Gadget::NonSync,
                Some(GadgetArg::Nonsim) => Gadget::NonSim,
            };
            let cfm = decide::gen_benchmark(&nfas, gadget)?;
            std::fs::write(&output, render_cfm(&cfm)).with_context(|| format!("{}: cannot write", output.display()))?;
            let states = cfm.processes.iter().map(|l| l.num_states()).sum();
            let r = Report {
                command: "gen intersection".into(),
                verdict: "ok".into(),
                witness: None,
                k: None,
                stats: Stats { states, millis: started.elapsed().as_millis() },
                detail: Some(format!("wrote {} ({} processes)", output.display(), cfm.num_processes())),
            };
            (r, true)
        }
    })
}

fn simulate(s: Simulate) -> Result<(Report, bool), Failure> {
    let started = Instant::now();
    let cfm = load_cfm(&s.file)?;
    let net = s.semantics.network();
    let (trace, ok, detail) = match &s.replay {
        Some(path) => {
            let t = load_trace(path, &cfm)?;
            match model::run(&cfm, &net, &t) {
                Ok(confs) => {
                    let ends: Vec<String> = confs.iter().map(|c| cfm.render_global(&c.global)).collect();
                    (t, true, format!("replayed; control states {}", ends.join(" or ")))
                }
                Err(i) => {
                    let a = cfm.symbols.action(&t[i]);
                    (t[..i].to_vec(), false, format!("blocked at action {} (`{a}`)", i + 1))
                }
            }
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let (t, conf) = model::random_run(&cfm, &net, s.max_len, &mut |n| rng.random_range(0..n));
            let detail = format!("{} actions; control state {}", t.len(), cfm.render_global(&conf.global));
            (t, true, detail)
        }
    };
    let r = Report {
        command: "simulate".into(),
        verdict: if ok { "ok" } else { "blocked" }.into(),
        witness: Some(cfm.symbols.trace(&trace)),
        k: None,
        stats: Stats { states: trace.len(), millis: started.elapsed().as_millis() },
        detail: Some(detail),
    };
    Ok((r, ok))
}

/// Text form: `#` lines for the verdict and details, then the witness one
/// action per line, so the output is itself a valid trace file.
fn print_text(r: &Report) {
    if r.command == "export" {
        print!("{}", r.detail.as_deref().unwrap_or_default());
        return;
    }
    println!("# {}: {}", r.command, r.verdict);
    if let Some(k) = r.k {
        println!("# k = {k}");
    }
    if let Some(d) = &r.detail {
        println!("# {d}");
    }
    println!("# {} states, {} ms", r.stats.states, r.stats.millis);
    if let Some(w) = &r.witness {
        for a in w {
            println!("{a}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok((r, positive)) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            } else {
                print_text(&r);
            }
            ExitCode::from(if positive { 0 } else { 1 })
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
