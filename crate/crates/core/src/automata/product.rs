//! Asynchronous product of a machine, synchronous products, and the lift of
//! an R-diamond automaton to ms-sequences of synchronous executions.

use super::{check_r_diamond, DiamondViolation, Limits, Nfa, SearchError};
use crate::model::{Action, Cfm, Global, ProcSet};
use crate::msc::MarkedLetter;
use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::rc::Rc;

/// The product of the process LTSs over marked letters: every send
/// transition is present both matched and barred.
#[derive(Clone)]
pub struct AsyncProduct<'a> {
    pub cfm: &'a Cfm,
    start: Global,
    enabling: Option<Action>,
}

impl<'a> AsyncProduct<'a> {
    /// Every state accepting.
    pub fn new(cfm: &'a Cfm) -> Self {
        AsyncProduct { cfm, start: cfm.initial_global(), enabling: None }
    }

    pub fn from_global(cfm: &'a Cfm, start: Global) -> Self {
        AsyncProduct { cfm, start, enabling: None }
    }

    /// Accepting exactly in global states where `r` is enabled locally.
    pub fn enabling(cfm: &'a Cfm, r: Action) -> Self {
        AsyncProduct { cfm, start: cfm.initial_global(), enabling: Some(r) }
    }

    /// Every marked letter the machine can read.
    pub fn alphabet(&self) -> Vec<MarkedLetter> {
        marked_alphabet(self.cfm)
    }
}

pub fn marked_alphabet(cfm: &Cfm) -> Vec<MarkedLetter> {
    let mut out = Vec::new();
    for a in cfm.alphabet() {
        out.push(MarkedLetter::matched(a));
        if a.is_send() {
            out.push(MarkedLetter::unmatched(a));
        }
    }
    out.sort();
    out.dedup();
    out
}

pub(crate) fn enables(cfm: &Cfm, g: &[u32], r: &Action) -> bool {
    cfm.lts(r.actor).successors(g[r.actor.index()], r).next().is_some()
}

impl Nfa for AsyncProduct<'_> {
    type State = Global;
    type Letter = MarkedLetter;

    fn initial_states(&self) -> Vec<Global> {
        vec![self.start.clone()]
    }

    fn is_final(&self, g: &Global) -> bool {
        match &self.enabling {
            None => true,
            Some(r) => enables(self.cfm, g, r),
        }
    }

    fn successors(&self, g: &Global, out: &mut Vec<(Option<MarkedLetter>, Global)>) {
        for p in self.cfm.process_ids() {
            for t in self.cfm.lts(p).outgoing(g[p.index()]) {
                let mut h = g.clone();
                h[p.index()] = t.dst;
                if t.action.is_send() {
                    out.push((Some(MarkedLetter::unmatched(t.action)), h.clone()));
                }
                out.push((Some(MarkedLetter::matched(t.action)), h));
            }
        }
    }
}

/// Synchronous product on shared letters; ε-moves interleave.
pub struct Product<A, B> {
    pub left: A,
    pub right: B,
}

impl<A: Nfa, B: Nfa<Letter = A::Letter>> Nfa for Product<A, B> {
    type State = (A::State, B::State);
    type Letter = A::Letter;

    fn initial_states(&self) -> Vec<Self::State> {
        let rs = self.right.initial_states();
        self.left.initial_states().into_iter().flat_map(|l| rs.iter().map(move |r| (l.clone(), r.clone()))).collect()
    }

    fn is_final(&self, (a, b): &Self::State) -> bool {
        self.left.is_final(a) && self.right.is_final(b)
    }

    fn successors(&self, (a, b): &Self::State, out: &mut Vec<(Option<Self::Letter>, Self::State)>) {
        let mut la = Vec::new();
        let mut lb = Vec::new();
        self.left.successors(a, &mut la);
        self.right.successors(b, &mut lb);
        for (l, a2) in &la {
            match l {
                None => out.push((None, (a2.clone(), b.clone()))),
                Some(x) => {
                    for (m, b2) in &lb {
                        if m.as_ref() == Some(x) {
                            out.push((Some(x.clone()), (a2.clone(), b2.clone())));
                        }
                    }
                }
            }
        }
        for (m, b2) in lb {
            if m.is_none() {
                out.push((None, (a.clone(), b2)));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyncState<S> {
    /// Between exchanges. `closed` marks the end state of a single-exchange
    /// machine, kept apart from the start state even when they coincide.
    Boundary { at: S, deaf: ProcSet, closed: bool },
    /// Inside an exchange: `cur` tracks sends, `recv` tracks the receives of
    /// matched sends from the guessed `middle` state.
    Exchange { cur: S, recv: S, middle: S, deaf: ProcSet },
}

enum Accept<'a, S> {
    Inner,
    Custom(Box<dyn Fn(&S, ProcSet) -> bool + 'a>),
}

/// Lift of an R-diamond automaton over marked letters to ms-sequences of
/// synchronous executions. It reads only send letters (matched or barred).
pub struct SyncLift<'a, N: Nfa<Letter = MarkedLetter>> {
    pub inner: N,
    starts: Vec<(N::State, ProcSet)>,
    accept: Accept<'a, N::State>,
    single: bool,
    reach: RefCell<HashMap<N::State, Rc<Vec<N::State>>>>,
}

impl<'a, N: Nfa<Letter = MarkedLetter>> SyncLift<'a, N> {
    /// Any number of exchanges from `starts`, accepting at boundaries
    /// satisfying `accept`.
    pub fn new(inner: N, starts: Vec<(N::State, ProcSet)>, accept: impl Fn(&N::State, ProcSet) -> bool + 'a) -> Self {
        SyncLift { inner, starts, accept: Accept::Custom(Box::new(accept)), single: false, reach: RefCell::default() }
    }

    /// Exactly one exchange.
    pub fn single(inner: N, starts: Vec<(N::State, ProcSet)>, accept: impl Fn(&N::State, ProcSet) -> bool + 'a) -> Self {
        SyncLift { inner, starts, accept: Accept::Custom(Box::new(accept)), single: true, reach: RefCell::default() }
    }

    /// Refuses inputs that are not R-diamond on their reachable part.
    pub fn checked(
        inner: N,
        starts: Vec<(N::State, ProcSet)>,
        accept: impl Fn(&N::State, ProcSet) -> bool + 'a,
        limits: &Limits,
    ) -> Result<Result<Self, DiamondViolation<N::State, MarkedLetter>>, SearchError> {
        if let Some(v) = check_r_diamond(&inner, |l: &MarkedLetter| (!l.is_send()).then_some(l.action.actor), limits)? {
            return Ok(Err(v));
        }
        Ok(Ok(Self::new(inner, starts, accept)))
    }

    fn accepts_boundary(&self, at: &N::State, deaf: ProcSet) -> bool {
        match &self.accept {
            Accept::Inner => self.inner.is_final(at),
            Accept::Custom(f) => f(at, deaf),
        }
    }

    /// States reachable from `s` by send letters only, `s` included.
    fn send_reach(&self, s: &N::State) -> Rc<Vec<N::State>> {
        if let Some(r) = self.reach.borrow().get(s) {
            return r.clone();
        }
        let mut seen: HashSet<N::State> = HashSet::from([s.clone()]);
        let mut order = vec![s.clone()];
        let mut stack = vec![s.clone()];
        let mut buf = Vec::new();
        while let Some(x) = stack.pop() {
            buf.clear();
            self.inner.successors(&x, &mut buf);
            for (l, t) in buf.drain(..) {
                let ok = match &l {
                    None => true,
                    Some(l) => l.is_send(),
                };
                if ok && seen.insert(t.clone()) {
                    order.push(t.clone());
                    stack.push(t);
                }
            }
        }
        let r = Rc::new(order);
        self.reach.borrow_mut().insert(s.clone(), r.clone());
        r
    }
}

impl<N: Nfa<Letter = MarkedLetter>> Nfa for SyncLift<'_, N> {
    type State = SyncState<N::State>;
    type Letter = MarkedLetter;

    fn initial_states(&self) -> Vec<Self::State> {
        self.starts.iter().map(|(s, d)| SyncState::Boundary { at: s.clone(), deaf: *d, closed: false }).collect()
    }

    fn is_final(&self, s: &Self::State) -> bool {
        match s {
            SyncState::Boundary { at, deaf, closed } => (!self.single || *closed) && self.accepts_boundary(at, *deaf),
            SyncState::Exchange { .. } => false,
        }
    }

    fn successors(&self, s: &Self::State, out: &mut Vec<(Option<MarkedLetter>, Self::State)>) {
        match s {
            SyncState::Boundary { at, deaf, closed } => {
                if *closed {
                    return;
                }
                for m in self.send_reach(at).iter() {
                    out.push((None, SyncState::Exchange { cur: at.clone(), recv: m.clone(), middle: m.clone(), deaf: *deaf }));
                }
            }
            SyncState::Exchange { cur, recv, middle, deaf } => {
                if cur == middle {
                    out.push((None, SyncState::Boundary { at: recv.clone(), deaf: *deaf, closed: self.single }));
                }
                let mut buf = Vec::new();
                self.inner.successors(cur, &mut buf);
                let mut rbuf = Vec::new();
                for (l, c2) in buf {
                    let Some(l) = l else {
                        out.push((None, SyncState::Exchange { cur: c2, recv: recv.clone(), middle: middle.clone(), deaf: *deaf }));
                        continue;
                    };
                    if !l.is_send() {
                        continue;
                    }
                    let q = l.action.peer;
                    if l.barred {
                        out.push((Some(l), SyncState::Exchange { cur: c2, recv: recv.clone(), middle: middle.clone(), deaf: deaf.with(q) }));
                        continue;
                    }
                    if deaf.contains(q) {
                        continue;
                    }
                    let want = MarkedLetter::matched(l.action.dual());
                    if rbuf.is_empty() {
                        self.inner.successors(recv, &mut rbuf);
                    }
                    for (rl, r2) in &rbuf {
                        if rl.as_ref() == Some(&want) {
                            out.push((
                                Some(l),
                                SyncState::Exchange { cur: c2.clone(), recv: r2.clone(), middle: middle.clone(), deaf: *deaf },
                            ));
                        }
                    }
                }
            }
        }
    }
}

/// The single-exchange machine B and the synchronous machine C between two
/// boundary pairs `(g, deaf)` and `(g2, deaf2)`.
#[allow(clippy::type_complexity)]
pub fn exchange_automata<'a>(
    cfm: &'a Cfm,
    g: Global,
    deaf: ProcSet,
    g2: Global,
    deaf2: ProcSet,
) -> (SyncLift<'a, AsyncProduct<'a>>, SyncLift<'a, AsyncProduct<'a>>) {
    let (h, d) = (g2.clone(), deaf2);
    let b = SyncLift::single(AsyncProduct::from_global(cfm, g.clone()), vec![(g.clone(), deaf)], move |s: &Global, e| *s == h && e == d);
    let c = SyncLift::new(AsyncProduct::from_global(cfm, g.clone()), vec![(g, deaf)], move |s: &Global, e| *s == g2 && e == deaf2);
    (b, c)
}

/// The lift of a property automaton: ms-sequences of synchronous executions
/// whose marked trace the property accepts.
pub fn sync_of_property<'a, N: Nfa<Letter = MarkedLetter>>(p: N) -> SyncLift<'a, N> {
    let starts = p.initial_states().into_iter().map(|s| (s, ProcSet::EMPTY)).collect();
    SyncLift { inner: p, starts, accept: Accept::Inner, single: false, reach: RefCell::default() }
}
