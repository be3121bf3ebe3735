//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod common;

use common::{cfm, compare, corpus, structure, nfa, opts, r_closed_cases, stratified_corpus, trace, Class, CORPUS_SHAPE};
use mbsync_core::automata::{parse_nfa, NfaFile};
use mbsync_core::commgraph::{self, find_well_labeling};
use mbsync_core::decide::{self, Answer, Gadget};
use mbsync_core::model::{self, Action, Cfm, Network};
use mbsync_core::{msc, oracle};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

const FIXTURE_BUDGET: Duration = Duration::from_secs(5);
const CORPUS_SIZE: usize = 500;
const CORPUS_SEED: u64 = 2024;
const ORACLE_BOUND: usize = 8;
const NOT_SYNC_PERCENT: usize = 20;
const NOT_SIM_PERCENT: usize = 10;
const MAX_K: u64 = 3;
const CORPUS_BUDGET: Duration = Duration::from_secs(600);
const STRUCTURE_MAX_ACTIONS: usize = 8;
const SCALING_PROCESSES: usize = 4;
const SCALING_SIZES: [usize; 5] = [4, 8, 16, 32, 64];
const SCALING_REPEATS: usize = 3;
const MAX_SLOPE: f64 = 3.0;
const RUN_BUDGET: Duration = Duration::from_secs(60);
const R_CLOSED_CASES: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// A witness must replay on the machine and break the property it refutes.
#[derive(Default)]
struct Witnesses {
    checked: usize,
    failures: Vec<String>,
}

impl Witnesses {
    fn record(&mut self, ok: bool, what: &str) {
        if ok {
            self.checked += 1;
        } else {
            self.failures.push(what.to_string());
        }
    }
}

fn sync_witness_ok(c: &Cfm, w: &[Action]) -> bool {
    model::run(c, &Network::Mailbox, w).is_ok() && !oracle::is_synchronizable_bf(w)
}

fn fixture_suite(wit: &mut Witnesses) -> Vec<(&'static str, bool)> {
    let mut out = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut(&mut Witnesses) -> bool| {
        let ok = catch_unwind(AssertUnwindSafe(|| f(wit))).unwrap_or(false);
        out.push((name, ok));
    };
    run("crossing_triangle check_sync = no", &mut |wit| {
        let c = cfm("crossing_triangle.cfm");
        let v = decide::check_sync(&c, &opts()).unwrap();
        let w = v.witness.unwrap();
        wit.record(sync_witness_ok(&c, &w), "crossing_triangle");
        v.answer == Answer::No
    });
    run("unmatched_send viable and synchronizable", &mut |_| {
        let c = cfm("unmatched_send.cfm");
        let (t, _) = trace("unmatched_send.trace", Some(&c));
        model::is_viable(&Network::Mailbox, &t)
            && model::run(&c, &Network::Mailbox, &t).is_ok()
            && decide::check_sync(&c, &opts()).unwrap().is_yes()
    });
    run("similarity_gadget check_mbsim = no", &mut |wit| {
        let c = cfm("similarity_gadget.cfm");
        let v = decide::check_mbsim(&c, &opts()).unwrap();
        let w = v.witness.unwrap();
        wit.record(model::run(&c, &Network::P2p, &w).is_ok() && !oracle::is_mbsim_bf(&w), "similarity_gadget");
        v.answer == Answer::No
    });
    run("relay_gadget check_sync = no", &mut |wit| {
        let c = cfm("relay_gadget.cfm");
        let v = decide::check_sync(&c, &opts()).unwrap();
        wit.record(sync_witness_ok(&c, &v.witness.unwrap()), "relay_gadget");
        v.answer == Answer::No
    });
    run("two_components two components, ordered under mb only", &mut |_| {
        let (t, _) = trace("two_components.trace", None);
        let mb = commgraph::skeleton(&t, &Network::Mailbox).unwrap();
        let p2p = commgraph::skeleton(&t, &Network::P2p).unwrap();
        mb.len() == 2
            && mb.precedes(0, 1)
            && !mb.precedes(1, 0)
            && p2p.len() == 2
            && !p2p.precedes(0, 1)
            && !p2p.precedes(1, 0)
    });
    run("well_labeled well-labeling order", &mut |_| {
        let (t, _) = trace("well_labeled.ms", None);
        let ms: Vec<msc::MarkedLetter> = t.iter().map(|&a| msc::MarkedLetter::matched(a)).collect();
        let w = find_well_labeling(&ms, 2, 1).unwrap();
        // Labels 0,1,2,3 are carried by the third, fourth, first and second letter.
        w.labels(ms.len()) == vec![Some(2), Some(3), Some(0), Some(1)]
    });
    run("crossing_chain not synchronizable", &mut |wit| {
        let (t, _) = trace("crossing_chain.trace", None);
        let c = cfm("crossing_chain.cfm");
        let v = decide::check_sync(&c, &opts()).unwrap();
        wit.record(sync_witness_ok(&c, &v.witness.unwrap()), "crossing_chain");
        !oracle::is_synchronizable_bf(&t) && v.answer == Answer::No
    });
    run("two_round not 1-sync, 2-sync", &mut |wit| {
        let c = cfm("two_round.cfm");
        let one = decide::check_ksync(&c, 1, &opts()).unwrap();
        let w = one.witness.clone().unwrap();
        wit.record(model::run(&c, &Network::Mailbox, &w).is_ok() && oracle::min_k_bf(&w) > 1, "two_round");
        one.answer == Answer::No && decide::check_ksync(&c, 2, &opts()).unwrap().is_yes()
    });
    out
}

fn criterion_fixtures(wit: &mut Witnesses) -> Outcome {
    let started = Instant::now();
    let results = fixture_suite(wit);
    let elapsed = started.elapsed();
    let failed: Vec<_> = results.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    outcome(
        failed.is_empty() && elapsed < FIXTURE_BUDGET,
        format!("{}/{} fixtures in {:.2?} (budget {:?}) {}", results.len() - failed.len(), results.len(), elapsed, FIXTURE_BUDGET, failed.join("; ")),
    )
}

fn criterion_corpus(wit: &mut Witnesses) -> Outcome {
    let started = Instant::now();
    let machines = stratified_corpus(CORPUS_SEED, CORPUS_SIZE, ORACLE_BOUND, NOT_SYNC_PERCENT, NOT_SIM_PERCENT);
    let generated = started.elapsed();
    let mut disagreements = Vec::new();
    let (mut exhaustive, mut states, mut transitions) = (0, 0, 0);
    let mut processes = [0usize; 4];
    let count = |k: Class| machines.iter().filter(|m| m.2 == k).count();
    for (c, rep, _) in &machines {
        let cmp = compare(c, rep, MAX_K);
        exhaustive += cmp.exhaustive as usize;
        processes[c.processes.len().min(3)] += 1;
        states += c.processes.iter().map(|l| l.num_states()).sum::<usize>();
        transitions += c.processes.iter().map(|l| l.transitions.len()).sum::<usize>();
        disagreements.extend(cmp.disagreements);
        wit.checked += cmp.witnesses_checked;
        wit.failures.extend(cmp.witness_failures);
    }
    let elapsed = started.elapsed();
    println!(
        "      corpus: {} machines (|P|<={}, <={} states, <={} messages), by |P| 2/3 = {}/{}, \
         {:.1} states and {:.1} transitions on average",
        machines.len(),
        CORPUS_SHAPE.max_processes,
        CORPUS_SHAPE.max_states,
        CORPUS_SHAPE.max_messages,
        processes[2],
        processes[3],
        states as f64 / machines.len() as f64,
        transitions as f64 / machines.len() as f64,
    );
    println!(
        "      oracle classes at bound {ORACLE_BOUND}: {} not synchronizable, {} synchronizable but not mailbox-similar, {} both; \
         {exhaustive} fully enumerated; generated in {generated:.1?}",
        count(Class::NotSync),
        count(Class::SyncNotSim),
        count(Class::Sync),
    );
    for d in disagreements.iter().take(5) {
        println!("      disagreement: {d}");
    }
    outcome(
        disagreements.is_empty() && machines.len() >= CORPUS_SIZE && elapsed <= CORPUS_BUDGET,
        format!("{} disagreements over {} machines in {:.1?}", disagreements.len(), machines.len(), elapsed),
    )
}

fn criterion_structure() -> Outcome {
    let started = Instant::now();
    let (iff, size) = structure::well_labelings(STRUCTURE_MAX_ACTIONS);
    let checks = [
        ("ms-equality", {
            let mut t = structure::ms_equality(STRUCTURE_MAX_ACTIONS, 1);
            let two = structure::ms_equality(6, 2);
            t.objects += two.objects;
            t.violations.extend(two.violations);
            t
        }),
        ("sync-lift", structure::sync_lift(&corpus(CORPUS_SEED + 1, 100), STRUCTURE_MAX_ACTIONS / 2)),
        ("atomic-mb", structure::atomicity(STRUCTURE_MAX_ACTIONS, &Network::Mailbox)),
        ("atomic-p2p", structure::atomicity(STRUCTURE_MAX_ACTIONS, &Network::P2p)),
        ("well-label", iff),
        ("well-label-size", size),
        ("append-receive", structure::append_receive(STRUCTURE_MAX_ACTIONS)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, t) in &checks {
        pass &= t.ok() && t.objects > 0;
        parts.push(format!("{name} {}/{}", t.violations.len(), t.objects));
        for v in t.violations.iter().take(3) {
            println!("      {name}: {v}");
        }
    }
    outcome(pass, format!("violations/objects: {} in {:.1?}", parts.join(", "), started.elapsed()))
}

/// A word automaton over {a, b} with `n` states: `a` rotates, `b` doubles
/// modulo `n` after a shift, and state 0 is both initial and final.
pub fn family_member(n: usize, shift: usize) -> NfaFile {
    let mut text = format!("nfa m{n}_{shift}\ninit q0\nfinal q0\n");
    for i in 0..n {
        text.push_str(&format!("q{i} -> q{} : a\n", (i + 1) % n));
        text.push_str(&format!("q{i} -> q{} : b\n", (2 * i + shift) % n));
    }
    parse_nfa(&text).unwrap()
}

fn criterion_scaling() -> Outcome {
    let mut points = Vec::new();
    let mut slowest = Duration::ZERO;
    for &n in &SCALING_SIZES {
        let nfas: Vec<NfaFile> = (0..SCALING_PROCESSES).map(|s| family_member(n, s)).collect();
        let c = decide::gen_benchmark(&nfas, Gadget::None).unwrap();
        let mut best = Duration::MAX;
        let mut yes = true;
        for _ in 0..SCALING_REPEATS {
            let started = Instant::now();
            yes &= decide::check_sync(&c, &opts()).unwrap().is_yes();
            best = best.min(started.elapsed());
        }
        slowest = slowest.max(best);
        println!("      n={n:>3}: {:>10.3?} synchronizable={yes}", best);
        if !yes {
            return outcome(false, format!("ring of size {n} reported not synchronizable"));
        }
        points.push(((n as f64).ln(), best.as_secs_f64().max(1e-6).ln()));
    }
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = num / den;
    outcome(
        slope <= MAX_SLOPE && slowest <= RUN_BUDGET,
        format!("log-log slope {slope:.2} (max {MAX_SLOPE}), slowest run {slowest:.2?} (budget {RUN_BUDGET:?})"),
    )
}

fn criterion_witnesses(wit: &Witnesses) -> Outcome {
    for f in wit.failures.iter().take(5) {
        println!("      witness: {f}");
    }
    outcome(wit.failures.is_empty() && wit.checked > 0, format!("{} witnesses confirmed, {} failed", wit.checked, wit.failures.len()))
}

fn criterion_r_closed() -> Outcome {
    let cases = r_closed_cases();
    let mut wrong = Vec::new();
    for (name, body, expect) in &cases {
        let p = common::parse_case(name, body);
        let got = decide::check_r_closed(&p, &opts()).unwrap().is_none();
        if got != *expect {
            wrong.push(*name);
        }
    }
    let closed = cases.iter().filter(|c| c.2).count();
    let lockstep = decide::check_r_closed(&nfa("lockstep_pairs.nfa"), &opts()).unwrap().is_some();
    outcome(
        wrong.is_empty() && cases.len() == R_CLOSED_CASES && lockstep,
        format!("{}/{} correct ({closed} closed, {} not) {}", cases.len() - wrong.len(), cases.len(), cases.len() - closed, wrong.join(", ")),
    )
}

fn main() -> ExitCode {
    let mut wit = Witnesses::default();
    let mut all = true;
    let mut report = |n: usize, name: &str, o: Outcome| {
        all &= o.pass;
        println!("[{}] criterion {n} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "fixture verdicts", criterion_fixtures(&mut wit));
    report(2, "oracle equivalence", criterion_corpus(&mut wit));
    report(3, "structural checks", criterion_structure());
    report(4, "scaling", criterion_scaling());
    report(5, "witness integrity", criterion_witnesses(&wit));
    report(6, "R-closedness", criterion_r_closed());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
