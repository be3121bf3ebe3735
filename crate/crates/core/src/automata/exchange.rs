//! Exchange-level machines specialised to a concrete machine.
//!
//! A [`Frame`] follows one exchange in progress: the sends performed so far,
//! and for each process that receives, the guessed state reached after its
//! sends (`middle`) and the state reached by the receives matched so far.
//! [`AtomState`] recognises ms-sequences of atomic exchanges by tracking
//! reachability between classes of events of the communication graph.

use super::Nfa;
use crate::model::{Action, Cfm, Global, ProcSet, ProcessId};
use crate::msc::MarkedLetter;

pub const NONE: u32 = u32::MAX;

/// Per-process transition tables of a machine.
#[derive(Clone, Debug)]
pub struct CfmTables {
    pub n: usize,
    /// `sends[p][s]`: send transitions of `p` from `s`.
    pub sends: Vec<Vec<Vec<(Action, u32)>>>,
    /// `recvs[p][s]`: receive transitions of `p` from `s`.
    pub recvs: Vec<Vec<Vec<(Action, u32)>>>,
    /// `closure[p][s]`: states reachable from `s` by sends only, `s` first.
    pub closure: Vec<Vec<Vec<u32>>>,
    closure_bits: Vec<Vec<Vec<u64>>>,
}

impl CfmTables {
    pub fn new(cfm: &Cfm) -> Self {
        let n = cfm.num_processes();
        let mut sends = Vec::with_capacity(n);
        let mut recvs = Vec::with_capacity(n);
        let mut closure = Vec::with_capacity(n);
        let mut closure_bits = Vec::with_capacity(n);
        for p in cfm.process_ids() {
            let lts = cfm.lts(p);
            let k = lts.num_states();
            let mut s = vec![Vec::new(); k];
            let mut r = vec![Vec::new(); k];
            for t in &lts.transitions {
                if t.action.is_send() {
                    s[t.src as usize].push((t.action, t.dst));
                } else {
                    r[t.src as usize].push((t.action, t.dst));
                }
            }
            let words = k.div_ceil(64);
            let mut cl = Vec::with_capacity(k);
            let mut bits = Vec::with_capacity(k);
            for start in 0..k as u32 {
                let mut seen = vec![0u64; words];
                seen[start as usize / 64] |= 1 << (start % 64);
                let mut order = vec![start];
                let mut i = 0;
                while i < order.len() {
                    let x = order[i];
                    i += 1;
                    for &(_, y) in &s[x as usize] {
                        if seen[y as usize / 64] >> (y % 64) & 1 == 0 {
                            seen[y as usize / 64] |= 1 << (y % 64);
                            order.push(y);
                        }
                    }
                }
                cl.push(order);
                bits.push(seen);
            }
            sends.push(s);
            recvs.push(r);
            closure.push(cl);
            closure_bits.push(bits);
        }
        CfmTables { n, sends, recvs, closure, closure_bits }
    }

    /// Is `to` reachable from `from` by sends of `p` only?
    pub fn in_closure(&self, p: usize, from: u32, to: u32) -> bool {
        self.closure_bits[p][from as usize][to as usize / 64] >> (to % 64) & 1 == 1
    }

    pub fn recv_targets(&self, p: usize, s: u32, a: &Action) -> impl Iterator<Item = u32> + '_ {
        let a = *a;
        self.recvs[p][s as usize].iter().filter(move |(b, _)| *b == a).map(|&(_, d)| d)
    }

    pub fn enables(&self, g: &[u32], r: &Action) -> bool {
        let p = r.actor.index();
        self.recvs[p][g[p] as usize].iter().any(|(b, _)| b == r)
    }

    pub fn has_receives(&self, p: usize) -> bool {
        self.recvs[p].iter().any(|r| !r.is_empty())
    }
}

/// One exchange in progress.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    /// Local states after the sends read so far.
    pub cur: Vec<u32>,
    /// Local states after matched receives, or [`NONE`] if no receive yet.
    pub recv: Vec<u32>,
    /// Guessed end of the send phase, or [`NONE`] if no receive yet.
    pub middle: Vec<u32>,
    pub deaf: ProcSet,
}

impl Frame {
    pub fn open(g: &[u32], deaf: ProcSet) -> Frame {
        let n = g.len();
        Frame { cur: g.to_vec(), recv: vec![NONE; n], middle: vec![NONE; n], deaf }
    }

    /// All moves reading one send letter.
    pub fn send_moves(&self, t: &CfmTables, out: &mut Vec<(MarkedLetter, Frame)>) {
        for p in 0..t.n {
            for &(a, dst) in &t.sends[p][self.cur[p] as usize] {
                if self.middle[p] != NONE && !t.in_closure(p, dst, self.middle[p]) {
                    continue;
                }
                let q = a.peer;
                let mut base = self.clone();
                base.cur[p] = dst;
                let mut barred = base.clone();
                barred.deaf.insert(q);
                out.push((MarkedLetter::unmatched(a), barred));
                if self.deaf.contains(q) {
                    continue;
                }
                let qi = q.index();
                let r = a.dual();
                if self.recv[qi] == NONE {
                    for &m in &t.closure[qi][base.cur[qi] as usize] {
                        for d in t.recv_targets(qi, m, &r) {
                            let mut f = base.clone();
                            f.middle[qi] = m;
                            f.recv[qi] = d;
                            out.push((MarkedLetter::matched(a), f));
                        }
                    }
                } else {
                    for d in t.recv_targets(qi, self.recv[qi], &r) {
                        let mut f = base.clone();
                        f.recv[qi] = d;
                        out.push((MarkedLetter::matched(a), f));
                    }
                }
            }
        }
    }

    /// The boundary reached if the exchange can end here.
    pub fn close(&self) -> Option<Global> {
        let mut g = self.cur.clone();
        for p in 0..g.len() {
            if self.middle[p] != NONE {
                if self.cur[p] != self.middle[p] {
                    return None;
                }
                g[p] = self.recv[p];
            }
        }
        Some(g)
    }
}

/// Reachability between event classes of a partially read exchange.
///
/// Classes, for each process `p`: `S` sends by `p`, `T` matched sends to
/// `p`, and the first and last element of each (`FS`, `FT`, `LS`, `LT`).
/// `rows[i]` has bit `j` set when some event of class `i` reaches some event
/// of class `j` (reflexively, so a class reaches itself iff it is non-empty).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomState {
    n: u8,
    rows: Vec<u64>,
}

pub const MAX_ATOM_PROCESSES: usize = 10;

impl AtomState {
    pub fn new(n: usize) -> Self {
        assert!(n <= MAX_ATOM_PROCESSES, "atomicity tracking supports at most {MAX_ATOM_PROCESSES} processes");
        AtomState { n: n as u8, rows: vec![0; 6 * n] }
    }

    fn s(&self, p: usize) -> usize {
        p
    }
    fn t(&self, p: usize) -> usize {
        self.n as usize + p
    }
    fn fs(&self, p: usize) -> usize {
        2 * self.n as usize + p
    }
    fn ft(&self, p: usize) -> usize {
        3 * self.n as usize + p
    }
    fn ls(&self, p: usize) -> usize {
        4 * self.n as usize + p
    }
    fn lt(&self, p: usize) -> usize {
        5 * self.n as usize + p
    }

    fn nonempty(&self, c: usize) -> bool {
        self.rows[c] >> c & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        (0..self.n as usize).all(|p| !self.nonempty(self.s(p)))
    }

    /// Reads the send `sender → target`, matched or not.
    pub fn push(&self, sender: ProcessId, target: ProcessId, matched: bool) -> AtomState {
        let (p, q) = (sender.index(), target.index());
        let mut newmask = 1u64 << self.s(p) | 1 << self.ls(p);
        if !self.nonempty(self.s(p)) {
            newmask |= 1 << self.fs(p);
        }
        let mut replaced = 1u64 << self.ls(p);
        if matched {
            newmask |= 1 << self.t(q) | 1 << self.lt(q);
            if !self.nonempty(self.t(q)) {
                newmask |= 1 << self.ft(q);
            }
            replaced |= 1 << self.lt(q);
        }
        let mut cleared = self.rows.clone();
        for (i, row) in cleared.iter_mut().enumerate() {
            if replaced >> i & 1 == 1 {
                *row = 0;
            } else {
                *row &= !replaced;
            }
        }
        let mut inmask = 1u64 << self.s(p) | 1 << self.t(q);
        if matched {
            inmask |= 1 << self.s(q);
        }
        let from = newmask | cleared[self.t(p)];
        let rows = (0..cleared.len())
            .map(|i| {
                let to = newmask >> i & 1 == 1 || cleared[i] & inmask != 0;
                cleared[i] | if to { from } else { 0 }
            })
            .collect();
        AtomState { n: self.n, rows }
    }

    /// Is the exchange read so far non-empty with a strongly connected
    /// communication graph?
    pub fn accepts(&self) -> bool {
        let n = self.n as usize;
        let active: Vec<usize> = (0..n).filter(|&p| self.nonempty(self.s(p)) || self.nonempty(self.t(p))).collect();
        if active.is_empty() {
            return false;
        }
        let first = |p: usize| if self.nonempty(self.fs(p)) { self.fs(p) } else { self.ft(p) };
        let last = |p: usize| if self.nonempty(self.lt(p)) { self.lt(p) } else { self.ls(p) };
        active.iter().all(|&p| active.iter().all(|&p2| self.rows[last(p)] >> first(p2) & 1 == 1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExchangeState {
    Boundary(Global, ProcSet),
    Open(Frame),
}

/// Any number of exchanges from `(g, deaf)`, accepting at boundaries
/// satisfying `accept`. Reads ms-sequences.
pub struct ExchangeNfa<'a> {
    pub tables: &'a CfmTables,
    pub start: (Global, ProcSet),
    pub accept: Box<dyn Fn(&Global, ProcSet) -> bool + 'a>,
}

impl Nfa for ExchangeNfa<'_> {
    type State = ExchangeState;
    type Letter = MarkedLetter;

    fn initial_states(&self) -> Vec<ExchangeState> {
        vec![ExchangeState::Boundary(self.start.0.clone(), self.start.1)]
    }

    fn is_final(&self, s: &ExchangeState) -> bool {
        matches!(s, ExchangeState::Boundary(g, d) if (self.accept)(g, *d))
    }

    fn successors(&self, s: &ExchangeState, out: &mut Vec<(Option<MarkedLetter>, ExchangeState)>) {
        match s {
            ExchangeState::Boundary(g, d) => out.push((None, ExchangeState::Open(Frame::open(g, *d)))),
            ExchangeState::Open(f) => {
                if let Some(g) = f.close() {
                    out.push((None, ExchangeState::Boundary(g, f.deaf)));
                }
                let mut buf = Vec::new();
                f.send_moves(self.tables, &mut buf);
                out.extend(buf.into_iter().map(|(l, f)| (Some(l), ExchangeState::Open(f))));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomicState {
    Start,
    In(Frame, AtomState),
    End(Global, ProcSet),
}

/// ms-images of atomic exchanges executable from `(g, deaf)`; accepting at
/// `target` if given, at any end state otherwise.
pub struct AtomicExchangeNfa<'a> {
    pub tables: &'a CfmTables,
    pub start: (Global, ProcSet),
    pub target: Option<(Global, ProcSet)>,
}

impl Nfa for AtomicExchangeNfa<'_> {
    type State = AtomicState;
    type Letter = MarkedLetter;

    fn initial_states(&self) -> Vec<AtomicState> {
        vec![AtomicState::Start]
    }

    fn is_final(&self, s: &AtomicState) -> bool {
        match s {
            AtomicState::End(g, d) => self.target.as_ref().is_none_or(|(h, e)| h == g && e == d),
            _ => false,
        }
    }

    fn successors(&self, s: &AtomicState, out: &mut Vec<(Option<MarkedLetter>, AtomicState)>) {
        match s {
            AtomicState::Start => {
                out.push((None, AtomicState::In(Frame::open(&self.start.0, self.start.1), AtomState::new(self.tables.n))))
            }
            AtomicState::In(f, a) => {
                if a.accepts() {
                    if let Some(g) = f.close() {
                        out.push((None, AtomicState::End(g, f.deaf)));
                    }
                }
                let mut buf = Vec::new();
                f.send_moves(self.tables, &mut buf);
                for (l, f2) in buf {
                    let a2 = a.push(l.action.actor, l.action.peer, !l.barred);
                    out.push((Some(l), AtomicState::In(f2, a2)));
                }
            }
            AtomicState::End(..) => {}
        }
    }
}
