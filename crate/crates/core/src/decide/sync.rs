//! Exact synchronizability check.
//!
//! The search reads a synchronous execution as a sequence of atomic
//! exchanges and looks for a receive `r = q?p(m)` that, appended at the end,
//! consumes an unmatched send `s = p!q(m)` and makes the execution
//! non-synchronizable. The state combines:
//!
//! * the exchange in progress ([`Frame`]) and its atomicity tracker;
//! * a chain of exchanges, each with a direct arc to the next, that starts at
//!   an exchange with an unmatched send to `q`, ends at one containing `s` or
//!   an action of `q`, and has some process receive in one link and send in
//!   the next;
//! * per sender `p'`, a subset state of the hashed causality automaton that
//!   watches for a path from the first unmatched `p'!q` send into `s`, which
//!   would make `u·r` unrealisable under mailbox semantics.

use super::{mb_linearization, split_blocks, trace_of_blocks, DecideError, Options, Verdict};
use crate::automata::causality::MAX_CAUSAL_PROCESSES;
use crate::automata::exchange::MAX_ATOM_PROCESSES;
use crate::automata::{find_accepting, AtomState, CausalityNfa, CfmTables, Frame, HashedLetter, Nfa, Tag, TaggedLetter};
use crate::model::{self, Action, Cfm, MessageId, Network, ProcSet, ProcessId, Trace};
use crate::msc::MarkedLetter;
use std::time::Instant;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
struct Block {
    senders: ProcSet,
    matched_targets: ProcSet,
    targets: ProcSet,
    active: ProcSet,
    unmatched_to_q: bool,
    has_s: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Chain {
    NotStarted,
    Open { active: ProcSet, matched_targets: ProcSet, cond4: bool },
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct State {
    q: ProcessId,
    frame: Frame,
    atom: AtomState,
    block: Block,
    chain: Chain,
    s: Option<(ProcessId, MessageId)>,
    /// Senders that already did an unmatched send to `q`.
    seen: ProcSet,
    /// One causality subset per sender; emptied once `s` is read.
    copies: Vec<u64>,
}

struct Search<'a> {
    tables: &'a CfmTables,
    causal: CausalityNfa,
    starts: Vec<State>,
}

impl Search<'_> {
    fn step_copies(&self, copies: &[u64], tag_for: impl Fn(usize) -> Tag, l: &MarkedLetter) -> Vec<u64> {
        copies
            .iter()
            .enumerate()
            .map(|(i, &m)| if m == 0 { 0 } else { self.causal.step_set(m, &HashedLetter::Sym(TaggedLetter { letter: *l, tag: tag_for(i) })) })
            .collect()
    }

    fn chain_options(chain: &Chain, b: &Block, q: ProcessId) -> Vec<Chain> {
        match chain {
            Chain::Done => vec![Chain::Done],
            Chain::NotStarted => {
                let mut v = vec![Chain::NotStarted];
                if b.unmatched_to_q {
                    v.push(Chain::Open { active: b.active, matched_targets: b.matched_targets, cond4: false });
                }
                v
            }
            Chain::Open { active, matched_targets, cond4 } => {
                let mut v = vec![chain.clone()];
                if active.intersects(b.active) || matched_targets.intersects(b.targets) {
                    let c4 = *cond4 || matched_targets.intersects(b.senders);
                    v.push(Chain::Open { active: b.active, matched_targets: b.matched_targets, cond4: c4 });
                    if c4 && (b.has_s || b.active.contains(q)) {
                        v.push(Chain::Done);
                    }
                }
                v
            }
        }
    }
}

impl Nfa for Search<'_> {
    type State = State;
    type Letter = MarkedLetter;

    fn initial_states(&self) -> Vec<State> {
        self.starts.clone()
    }

    fn is_final(&self, s: &State) -> bool {
        match (s.s, &s.chain) {
            (Some((p, m)), Chain::Done) if s.atom.is_empty() => self.tables.enables(&s.frame.cur, &Action::receive(s.q, p, m)),
            _ => false,
        }
    }

    fn successors(&self, st: &State, out: &mut Vec<(Option<MarkedLetter>, State)>) {
        let q = st.q;
        if st.atom.accepts() {
            if let Some(g) = st.frame.close() {
                let copies = if st.s.is_none() { st.copies.iter().map(|&m| self.causal.step_set(m, &HashedLetter::Hash)).collect() } else { Vec::new() };
                for chain in Self::chain_options(&st.chain, &st.block, q) {
                    out.push((
                        None,
                        State {
                            q,
                            frame: Frame::open(&g, st.frame.deaf),
                            atom: AtomState::new(self.tables.n),
                            block: Block::default(),
                            chain,
                            s: st.s,
                            seen: st.seen,
                            copies: copies.clone(),
                        },
                    ));
                }
            }
        }
        let mut moves = Vec::new();
        st.frame.send_moves(self.tables, &mut moves);
        for (l, frame) in moves {
            let a = l.action;
            let atom = st.atom.push(a.actor, a.peer, !l.barred);
            let mut block = st.block.clone();
            block.senders.insert(a.actor);
            block.targets.insert(a.peer);
            block.active.insert(a.actor);
            if !l.barred {
                block.matched_targets.insert(a.peer);
                block.active.insert(a.peer);
            }
            let to_q = l.barred && a.peer == q;
            if to_q {
                block.unmatched_to_q = true;
            }
            let base = State { q, frame, atom, block, chain: st.chain.clone(), s: st.s, seen: st.seen, copies: Vec::new() };
            if st.s.is_some() {
                out.push((Some(l), base));
                continue;
            }
            if to_q {
                let first = !st.seen.contains(a.actor);
                if first {
                    let copies = self.step_copies(&st.copies, |_| Tag::Dot, &l);
                    if copies.iter().all(|&m| !CausalityNfa::accepts_set(m)) {
                        let mut chosen = base.clone();
                        chosen.s = Some((a.actor, a.msg));
                        chosen.block.has_s = true;
                        out.push((Some(l), chosen));
                    }
                }
                let mut other = base;
                other.seen.insert(a.actor);
                other.copies = self.step_copies(&st.copies, |i| if first && i == a.actor.index() { Tag::Dot } else { Tag::Open }, &l);
                out.push((Some(l), other));
            } else {
                let mut next = base;
                next.copies = self.step_copies(&st.copies, |_| Tag::Open, &l);
                out.push((Some(l), next));
            }
        }
    }
}

/// A decoded counterexample: a synchronous execution and the receive that
/// makes it non-synchronizable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncWitness {
    pub blocks: Vec<Vec<MarkedLetter>>,
    pub receive: Action,
    /// A mailbox-viable ordering of the execution followed by the receive.
    pub trace: Trace,
}

/// Is every mailbox execution of `cfm` equivalent to a synchronous one?
pub fn check_sync(cfm: &Cfm, opts: &Options) -> Result<Verdict, DecideError> {
    Ok(check_sync_with(cfm, opts)?.0)
}

pub fn check_sync_with(cfm: &Cfm, opts: &Options) -> Result<(Verdict, Option<SyncWitness>), DecideError> {
    let started = Instant::now();
    let n = cfm.num_processes();
    let max = MAX_ATOM_PROCESSES.min(MAX_CAUSAL_PROCESSES);
    if n > max {
        return Err(DecideError::TooManyProcesses { n, max });
    }
    let tables = CfmTables::new(cfm);
    let causal = CausalityNfa::hashed(n, Vec::new());
    let g0 = cfm.initial_global();
    let starts = (0..n)
        .filter(|&q| tables.has_receives(q))
        .map(|q| {
            let mut copies = vec![CausalityNfa::INIT; n];
            copies[q] = 0;
            State {
                q: ProcessId(q as u16),
                frame: Frame::open(&g0, ProcSet::EMPTY),
                atom: AtomState::new(n),
                block: Block::default(),
                chain: Chain::NotStarted,
                s: None,
                seen: ProcSet::EMPTY,
                copies,
            }
        })
        .collect();
    let search = Search { tables: &tables, causal, starts };
    let out = find_accepting(&search, &opts.limits)?;
    let Some(run) = out.run else {
        return Ok((Verdict::yes(out.states, started), None));
    };
    let last = run.last().clone();
    let (p, m) = last.s.expect("final states have chosen s");
    let receive = Action::receive(last.q, p, m);
    let blocks = split_blocks(&run, |s: &State| s.atom.is_empty());
    let mut u = trace_of_blocks(&blocks);
    u.push(receive);
    let trace = mb_linearization(&u).ok_or_else(|| DecideError::Witness("no mailbox ordering of the counterexample".into()))?;
    model::run(cfm, &Network::Mailbox, &trace).map_err(|i| DecideError::Witness(format!("blocked at action {i}")))?;
    let w = SyncWitness { blocks, receive, trace: trace.clone() };
    Ok((Verdict::no(Some(trace), out.states, started), Some(w)))
}
