#![allow(dead_code)]

pub mod structure;

use mbsync_core::automata::{parse_nfa, NfaFile};
use mbsync_core::decide::{self, Options};
use mbsync_core::model::{self, parse_cfm, parse_trace, Action, Cfm, Lts, Network, ProcessId, Symbols, Trace, Transition};
use mbsync_core::oracle::{self, Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn cfm(name: &str) -> Cfm {
    parse_cfm(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn nfa(name: &str) -> NfaFile {
    parse_nfa(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// A trace over the symbols of `cfm`, or over fresh symbols.
pub fn trace(name: &str, cfm: Option<&Cfm>) -> (Trace, Symbols) {
    let mut sym = cfm.map(|c| c.symbols.clone()).unwrap_or_default();
    let t = parse_trace(&fixture(name), &mut sym).unwrap_or_else(|e| panic!("{name}: {e}"));
    (t, sym)
}

pub fn opts() -> Options {
    Options::default()
}

/// Shape of the generated corpus.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_processes: usize,
    pub max_states: usize,
    pub max_messages: usize,
    pub max_transitions: usize,
}

pub const CORPUS_SHAPE: Shape = Shape { max_processes: 3, max_states: 4, max_messages: 3, max_transitions: 5 };

/// A random machine. Each process has a spine through all of its states plus
/// a few extra edges, and receives mostly pick a message that some process
/// actually sends to the receiver.
pub fn random_cfm(rng: &mut ChaCha8Rng, shape: Shape, name: &str) -> Cfm {
    // Larger shapes are favoured: small machines are almost always synchronizable.
    let big = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| {
        if hi > lo && rng.random_bool(0.7) {
            hi
        } else {
            rng.random_range(lo..=hi)
        }
    };
    let n = big(rng, 2, shape.max_processes);
    let msgs = rng.random_range(1..=shape.max_messages);
    let mut sym = Symbols::new();
    let procs: Vec<ProcessId> = (0..n).map(|i| sym.intern_process(&format!("p{i}"))).collect();
    let messages: Vec<_> = (0..msgs).map(|i| sym.intern_message(["a", "b", "c"][i])).collect();
    // Edges first, with a send or receive flag; actions are filled in below.
    let mut edges: Vec<Vec<(u32, u32, bool)>> = Vec::new();
    let mut sizes = Vec::new();
    for _ in 0..n {
        let states = big(rng, 1, shape.max_states);
        let mut e = Vec::new();
        for i in 1..states {
            let src = rng.random_range(0..i) as u32;
            e.push((src, i as u32, rng.random_bool(0.5)));
        }
        let extra = rng.random_range(0..=shape.max_transitions.saturating_sub(e.len()).min(2));
        for _ in 0..extra {
            let src = rng.random_range(0..states) as u32;
            e.push((src, rng.random_range(0..states) as u32, rng.random_bool(0.5)));
        }
        sizes.push(states);
        edges.push(e);
    }
    let peer_of = |rng: &mut ChaCha8Rng, p: usize| loop {
        let q = rng.random_range(0..n);
        if q != p {
            return q;
        }
    };
    let mut actions: Vec<Vec<Option<Action>>> = edges.iter().map(|e| vec![None; e.len()]).collect();
    let mut sent: Vec<Vec<(ProcessId, _)>> = vec![Vec::new(); n];
    for p in 0..n {
        for (k, &(_, _, is_send)) in edges[p].iter().enumerate() {
            if is_send {
                let q = peer_of(rng, p);
                let m = messages[rng.random_range(0..msgs)];
                actions[p][k] = Some(Action::send(procs[p], procs[q], m));
                sent[q].push((procs[p], m));
            }
        }
    }
    let mut ltss = Vec::new();
    for p in 0..n {
        let mut transitions = Vec::new();
        for (k, &(src, dst, _)) in edges[p].iter().enumerate() {
            let action = actions[p][k].unwrap_or_else(|| {
                if !sent[p].is_empty() && rng.random_bool(0.85) {
                    let (from, m) = sent[p][rng.random_range(0..sent[p].len())];
                    Action::receive(procs[p], from, m)
                } else {
                    Action::receive(procs[p], procs[peer_of(rng, p)], messages[rng.random_range(0..msgs)])
                }
            });
            let t = Transition { src, action, dst };
            if !transitions.contains(&t) {
                transitions.push(t);
            }
        }
        ltss.push(Lts::new((0..sizes[p]).map(|i| format!("s{i}")).collect(), 0, transitions));
    }
    Cfm::new(name, sym, ltss).expect("generated machine is well formed")
}

/// A machine whose processes are the projections of a random mailbox trace,
/// sometimes with one extra edge. At most `max_states - 1` actions per process.
pub fn projected_cfm(rng: &mut ChaCha8Rng, shape: Shape, name: &str) -> Cfm {
    let n = shape.max_processes;
    let msgs = rng.random_range(1..=shape.max_messages);
    let mut sym = Symbols::new();
    let procs: Vec<ProcessId> = (0..n).map(|i| sym.intern_process(&format!("p{i}"))).collect();
    let messages: Vec<_> = (0..msgs).map(|i| sym.intern_message(["a", "b", "c"][i])).collect();
    let cap = shape.max_states - 1;
    let mut lanes: Vec<Vec<Action>> = vec![Vec::new(); n];
    let mut trace: Vec<Action> = Vec::new();
    for _ in 0..rng.random_range(4..=n * cap) {
        let mut options = Vec::new();
        for p in (0..n).filter(|&p| lanes[p].len() < cap) {
            for q in (0..n).filter(|&q| q != p) {
                for &m in &messages {
                    options.push(Action::send(procs[p], procs[q], m));
                    options.push(Action::receive(procs[p], procs[q], m));
                }
            }
        }
        options.retain(|a| {
            let mut t = trace.clone();
            t.push(*a);
            model::is_viable(&Network::Mailbox, &t)
        });
        if options.is_empty() {
            break;
        }
        // Receives are few among the options; favour them so that sends and
        // receives interleave.
        let receives: Vec<Action> = options.iter().copied().filter(|a| a.is_receive()).collect();
        let a = if !receives.is_empty() && rng.random_bool(0.7) {
            receives[rng.random_range(0..receives.len())]
        } else {
            options[rng.random_range(0..options.len())]
        };
        trace.push(a);
        lanes[procs.iter().position(|&p| p == a.actor).unwrap()].push(a);
    }
    let ltss = lanes
        .iter()
        .map(|lane| {
            let mut transitions: Vec<Transition> =
                lane.iter().enumerate().map(|(i, &action)| Transition { src: i as u32, action, dst: i as u32 + 1 }).collect();
            // Closing the lane into a loop gives repeated rounds, where most
            // non-synchronizable behaviour shows up.
            if lane.len() > 1 && rng.random_bool(0.5) {
                transitions.last_mut().unwrap().dst = 0;
            } else if !lane.is_empty() && rng.random_bool(0.3) {
                let k = rng.random_range(0..lane.len());
                let src = rng.random_range(0..=lane.len()) as u32;
                let t = Transition { src, action: lane[k], dst: rng.random_range(0..=lane.len()) as u32 };
                if !transitions.contains(&t) {
                    transitions.push(t);
                }
            }
            Lts::new((0..=lane.len()).map(|i| format!("s{i}")).collect(), 0, transitions)
        })
        .collect();
    Cfm::new(name, sym, ltss).expect("generated machine is well formed")
}

/// Alternates random machines and projected traces.
pub fn corpus(seed: u64, count: usize) -> Vec<Cfm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| candidate(&mut rng, seed, i)).collect()
}

fn candidate(rng: &mut ChaCha8Rng, seed: u64, i: usize) -> Cfm {
    let name = format!("c{seed}_{i}");
    if i % 2 == 0 {
        random_cfm(rng, CORPUS_SHAPE, &name)
    } else {
        projected_cfm(rng, CORPUS_SHAPE, &name)
    }
}

/// Oracle class of a machine within the trace bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    NotSync,
    SyncNotSim,
    Sync,
}

/// Corpus with at least `not_sync` and `not_sim` percent of machines in the
/// two negative classes, classified by the bounded oracle. Candidates are
/// drawn until the quotas are met or `count * 200` draws are spent.
pub fn stratified_corpus(seed: u64, count: usize, bound: usize, not_sync: usize, not_sim: usize) -> Vec<(Cfm, Report, Class)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quota = |c: Class| match c {
        Class::NotSync => count * not_sync / 100,
        Class::SyncNotSim => count * not_sim / 100,
        Class::Sync => count - count * not_sync / 100 - count * not_sim / 100,
    };
    let mut out: Vec<(Cfm, Report, Class)> = Vec::new();
    let mut spare = Vec::new();
    for i in 0..count * 200 {
        if out.len() == count {
            break;
        }
        let c = candidate(&mut rng, seed, i);
        let rep = oracle::exhaustive_verdicts(&c, bound).expect("oracle");
        let class = match (rep.synchronizable(), rep.mbsim()) {
            (false, _) => Class::NotSync,
            (true, false) => Class::SyncNotSim,
            _ => Class::Sync,
        };
        if out.iter().filter(|x| x.2 == class).count() < quota(class) {
            out.push((c, rep, class));
        } else if spare.len() < count {
            spare.push((c, rep, class));
        }
    }
    let missing = count - out.len();
    out.extend(spare.into_iter().take(missing));
    out
}

/// Result of checking one machine against the oracle.
#[derive(Debug, Default)]
pub struct Comparison {
    pub disagreements: Vec<String>,
    /// Negative verdicts whose witness was replayed and confirmed.
    pub witnesses_checked: usize,
    pub witness_failures: Vec<String>,
    pub exhaustive: bool,
}

fn shown(cfm: &Cfm, t: &[Action]) -> String {
    cfm.symbols.trace(t).join(" ")
}

/// Runs every engine on `cfm` and compares with the bounded oracle. When the
/// oracle's enumeration was cut by the bound, only the one-sided implications
/// are checked: an oracle counterexample must be found by the engine, and an
/// engine counterexample must be confirmed on its own witness.
pub fn compare(cfm: &Cfm, rep: &Report, max_k: u64) -> Comparison {
    let o = opts();
    let mut c = Comparison { exhaustive: !rep.truncated, ..Comparison::default() };
    let name = &cfm.name;
    let mut disagree = |what: String| c.disagreements.push(format!("{name}: {what}"));

    let sync = decide::check_sync(cfm, &o).expect("check_sync");
    let mut wit_ok = 0;
    let mut wit_bad = Vec::new();
    match (&sync.witness, sync.is_yes()) {
        (Some(w), false) => {
            let ok = model::run(cfm, &Network::Mailbox, w).is_ok() && !oracle::is_synchronizable_bf(w);
            if ok {
                wit_ok += 1;
            } else {
                wit_bad.push(format!("{name}: sync witness {}", shown(cfm, w)));
            }
        }
        (None, false) => wit_bad.push(format!("{name}: sync no without witness")),
        _ => {}
    }
    if rep.synchronizable() != sync.is_yes() && (c.exhaustive || !rep.synchronizable()) {
        disagree(format!("check_sync={} oracle={}", sync.answer, rep.synchronizable()));
    }
    if sync.is_yes() {
        // Reachability of every global state.
        let sizes: Vec<u32> = cfm.processes.iter().map(|l| l.num_states() as u32).collect();
        let mut g = vec![0u32; sizes.len()];
        loop {
            let v = decide::reachable(cfm, &g, &o).expect("reachable");
            let oracle_yes = rep.reachable.contains(&g);
            if v.is_yes() {
                let w = v.witness.clone().unwrap_or_default();
                let ends = model::run(cfm, &Network::Mailbox, &w).map(|cs| cs.iter().any(|x| x.global == g)).unwrap_or(false);
                if !ends || !mbsync_core::msc::is_synchronous(&Network::Mailbox, &w) {
                    wit_bad.push(format!("{name}: reach witness {}", shown(cfm, &w)));
                } else {
                    wit_ok += 1;
                }
            }
            if v.is_yes() != oracle_yes && (c.exhaustive || oracle_yes) {
                disagree(format!("reachable {}: engine={} oracle={}", cfm.render_global(&g), v.answer, oracle_yes));
            }
            let mut i = 0;
            while i < g.len() {
                g[i] += 1;
                if g[i] < sizes[i] {
                    break;
                }
                g[i] = 0;
                i += 1;
            }
            if i == g.len() {
                break;
            }
        }
        let sim = decide::check_mbsim(cfm, &o).expect("check_mbsim");
        if let Some(w) = &sim.witness {
            if model::run(cfm, &Network::P2p, w).is_ok() && !oracle::is_mbsim_bf(w) {
                wit_ok += 1;
            } else {
                wit_bad.push(format!("{name}: mbsim witness {}", shown(cfm, w)));
            }
        }
        if rep.mbsim() != sim.is_yes() && (c.exhaustive || !rep.mbsim()) {
            disagree(format!("check_mbsim={} oracle={}", sim.answer, rep.mbsim()));
        }
    }
    for k in 1..=max_k {
        let v = decide::check_ksync(cfm, k, &o).expect("check_ksync");
        let expect = rep.ksync(k as usize);
        if !v.is_yes() {
            match &v.witness {
                Some(w) if model::run(cfm, &Network::Mailbox, w).is_ok()
                    && (!oracle::is_synchronizable_bf(w) || oracle::min_k_bf(w) > k as usize) =>
                {
                    wit_ok += 1
                }
                _ => wit_bad.push(format!("{name}: ksync({k}) witness {:?}", v.witness.as_ref().map(|w| shown(cfm, w)))),
            }
        }
        if v.is_yes() != expect && (c.exhaustive || !expect) {
            disagree(format!("check_ksync({k})={} oracle={}", v.answer, expect));
        }
    }
    c.witnesses_checked = wit_ok;
    c.witness_failures = wit_bad;
    c
}

/// Handcrafted properties with their expected R-closedness.
pub fn r_closed_cases() -> Vec<(&'static str, String, bool)> {
    let mut v: Vec<(&'static str, String, bool)> = vec![
        ("all_sends", "init s\nfinal s\ns -> s : p!q(a)\ns -> s : q!p(b)\n".into(), true),
        ("empty", "init s\n".into(), true),
        ("epsilon_only", "init s\nfinal s\n".into(), true),
        ("single_receive", "init s\nfinal t\ns -> t : q?p(a)\n".into(), true),
        ("same_process_order", "init s\nfinal u\ns -> t : q?p(a)\nt -> u : q?r(b)\n".into(), true),
        (
            "both_orders",
            "init s\nfinal u\ns -> t : p?r(a)\nt -> u : q?r(a)\ns -> v : q?r(a)\nv -> u : p?r(a)\n".into(),
            true,
        ),
        ("receives_star", "init s\nfinal s\ns -> s : p?r(a)\ns -> s : q?r(a)\n".into(), true),
        (
            "send_separates",
            "init s\nfinal w\ns -> t : p?r(a)\nt -> u : r!p(b)\nu -> w : q?r(a)\n".into(),
            true,
        ),
        (
            "count_parity",
            "init e\nfinal e\ne -> o : p?r(a)\no -> e : p?r(a)\ne -> e : q?r(a)\no -> o : q?r(a)\n".into(),
            true,
        ),
        (
            "sends_then_any_receives",
            "init s\nfinal s t\ns -> s : r!p(a)\ns -> s : r!q(a)\ns -> t : p?r(a)\ns -> t : q?r(a)\nt -> t : p?r(a)\nt -> t : q?r(a)\n".into(),
            true,
        ),
        ("one_order", "init s\nfinal u\ns -> t : p?r(a)\nt -> u : q?r(a)\n".into(), false),
        ("lockstep_star", "init s\nfinal s\ns -> t : p?r(a)\nt -> s : q?r(a)\n".into(), false),
        (
            "p_before_q_prefix",
            "init s\nfinal s t\ns -> t : p?r(a)\nt -> t : q?r(a)\nt -> t : p?r(a)\n".into(),
            false,
        ),
        (
            "q_must_wait",
            "init s\nfinal s t\ns -> s : p?r(a)\ns -> t : q?r(b)\n".into(),
            false,
        ),
        (
            "alternate_messages",
            "init s\nfinal s\ns -> t : p?r(a)\nt -> s : q?r(b)\ns -> u : p?r(b)\nu -> s : q?r(a)\n".into(),
            false,
        ),
        (
            "p_receives_first",
            "init s\nfinal s t\ns -> s : p?r(a)\ns -> t : q?r(a)\nt -> t : q?r(a)\n".into(),
            false,
        ),
        (
            "swap_changes_count",
            "init s\nfinal v\ns -> t : p?r(a)\nt -> u : q?r(a)\nu -> v : q?r(a)\n".into(),
            false,
        ),
        (
            "after_send_only",
            "init s\nfinal u\ns -> t : r!p(a)\nt -> u : p?r(a)\nu -> u : q?r(b)\ns -> s : q?r(b)\n".into(),
            false,
        ),
        (
            "three_way",
            "init s\nfinal v\ns -> t : p?s(a)\nt -> u : q?s(a)\nu -> v : r?s(a)\ns -> x : q?s(a)\nx -> u : p?s(a)\n".into(),
            false,
        ),
    ];
    v.push(("lockstep_pairs", fixture("lockstep_pairs.nfa"), false));
    v
}

pub fn parse_case(name: &str, body: &str) -> NfaFile {
    if body.trim_start().starts_with("nfa") || body.trim_start().starts_with('#') {
        parse_nfa(body).unwrap()
    } else {
        parse_nfa(&format!("nfa {name}\n{body}")).unwrap()
    }
}
