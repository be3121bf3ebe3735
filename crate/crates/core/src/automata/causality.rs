//! Detection of causal paths between two tagged sends.
//!
//! [`CausalityNfa`] reads a tagged word and accepts when a non-empty path of
//! process order, message and mailbox-order edges links the two sends tagged
//! with [`Tag::Dot`]. In marked mode the input is a full marked trace of a
//! synchronous execution; in hashed mode it is a sequence of ms-images of
//! exchanges separated by `#`.
//!
//! The state set has `4n + 2` elements, encoded as bits of a `u64`:
//! `Init`, `Final`, then blocks of `n` for `Po`, `Mb`, `MsgS` and `MsgR`.

use super::Nfa;
use crate::model::{Action, ProcessId};
use crate::msc::MarkedLetter;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Open,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaggedLetter {
    pub letter: MarkedLetter,
    pub tag: Tag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HashedLetter {
    Sym(TaggedLetter),
    Hash,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CausalState {
    Init,
    Final,
    /// Some event of the process has been reached.
    Po(ProcessId),
    /// A matched send to the process has been reached.
    Mb(ProcessId),
    /// A matched send to the process whose exchange is still open.
    MsgS(ProcessId),
    /// The receive of such a send has happened.
    MsgR(ProcessId),
}

pub const MAX_CAUSAL_PROCESSES: usize = 15;

#[derive(Clone, Debug)]
pub struct CausalityNfa {
    n: usize,
    hashed: bool,
    letters: Vec<MarkedLetter>,
}

impl CausalityNfa {
    /// `letters` is the alphabet offered by the `Nfa` interface; in hashed
    /// mode receive letters are ignored.
    pub fn new(n: usize, letters: Vec<MarkedLetter>, hashed: bool) -> Self {
        assert!(n <= MAX_CAUSAL_PROCESSES, "at most {MAX_CAUSAL_PROCESSES} processes");
        let letters = letters.into_iter().filter(|l| !hashed || l.is_send()).collect();
        CausalityNfa { n, hashed, letters }
    }

    pub fn marked(n: usize, letters: Vec<MarkedLetter>) -> Self {
        Self::new(n, letters, false)
    }

    pub fn hashed(n: usize, letters: Vec<MarkedLetter>) -> Self {
        Self::new(n, letters, true)
    }

    pub fn num_processes(&self) -> usize {
        self.n
    }

    pub const INIT: u64 = 1;
    pub const FINAL: u64 = 2;

    pub fn bit(&self, s: CausalState) -> u64 {
        let n = self.n;
        1u64 << match s {
            CausalState::Init => 0,
            CausalState::Final => 1,
            CausalState::Po(p) => 2 + p.index(),
            CausalState::Mb(p) => 2 + n + p.index(),
            CausalState::MsgS(p) => 2 + 2 * n + p.index(),
            CausalState::MsgR(p) => 2 + 3 * n + p.index(),
        }
    }

    pub fn states_of(&self, mask: u64) -> Vec<CausalState> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..4 * n + 2 {
            if mask >> i & 1 == 1 {
                let p = || ProcessId(((i - 2) % n) as u16);
                out.push(match i {
                    0 => CausalState::Init,
                    1 => CausalState::Final,
                    _ if i < 2 + n => CausalState::Po(p()),
                    _ if i < 2 + 2 * n => CausalState::Mb(p()),
                    _ if i < 2 + 3 * n => CausalState::MsgS(p()),
                    _ => CausalState::MsgR(p()),
                });
            }
        }
        out
    }

    fn block(&self, k: usize) -> u64 {
        ((1u64 << self.n) - 1) << (2 + k * self.n)
    }

    fn start(&self, a: &MarkedLetter) -> u64 {
        let mut m = self.bit(CausalState::Po(a.action.actor));
        if !a.barred {
            m |= self.bit(CausalState::Mb(a.action.peer)) | self.bit(CausalState::MsgS(a.action.peer));
        }
        m
    }

    /// Successor set of a set of states.
    pub fn step_set(&self, mask: u64, l: &HashedLetter) -> u64 {
        let n = self.n;
        let msgs = self.block(2);
        let to_recv = |m: u64| (m & !msgs) | ((m & msgs) << n);
        match l {
            HashedLetter::Hash => {
                if self.hashed {
                    to_recv(mask)
                } else {
                    0
                }
            }
            HashedLetter::Sym(t) if !t.letter.is_send() => {
                if self.hashed || t.tag == Tag::Dot {
                    0
                } else {
                    to_recv(mask)
                }
            }
            HashedLetter::Sym(t) => {
                let a: &Action = &t.letter.action;
                let from_sender = mask & (self.bit(CausalState::Po(a.actor)) | self.bit(CausalState::MsgR(a.actor))) != 0
                    || mask & self.bit(CausalState::Mb(a.peer)) != 0;
                match t.tag {
                    Tag::Open => {
                        let mut out = mask;
                        if from_sender {
                            out |= self.start(&t.letter);
                        }
                        out
                    }
                    Tag::Dot => {
                        let mut out = 0;
                        if mask & Self::INIT != 0 {
                            out |= self.start(&t.letter);
                        }
                        if from_sender {
                            out |= Self::FINAL;
                        }
                        out
                    }
                }
            }
        }
    }

    pub fn accepts_set(mask: u64) -> bool {
        mask & Self::FINAL != 0
    }

    fn alphabet(&self) -> Vec<HashedLetter> {
        let mut out = Vec::new();
        for l in &self.letters {
            for tag in [Tag::Open, Tag::Dot] {
                if !l.is_send() && tag == Tag::Dot {
                    continue;
                }
                out.push(HashedLetter::Sym(TaggedLetter { letter: *l, tag }));
            }
        }
        if self.hashed {
            out.push(HashedLetter::Hash);
        }
        out
    }
}

impl Nfa for CausalityNfa {
    type State = CausalState;
    type Letter = HashedLetter;

    fn initial_states(&self) -> Vec<CausalState> {
        vec![CausalState::Init]
    }

    fn is_final(&self, s: &CausalState) -> bool {
        *s == CausalState::Final
    }

    fn successors(&self, s: &CausalState, out: &mut Vec<(Option<HashedLetter>, CausalState)>) {
        let m = self.bit(*s);
        for l in self.alphabet() {
            for t in self.states_of(self.step_set(m, &l)) {
                out.push((Some(l), t));
            }
        }
    }
}

/// Progress of the two tagged positions for a receive `q?p(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Witness {
    W0,
    W1,
    W2,
}

/// Accepts `marked(u)` for a synchronous `u` exactly when `u·r` is p2p-viable
/// but no mailbox-viable sequence is equivalent to it. The tags are guessed,
/// so the machine reads untagged marked letters.
#[derive(Clone, Debug)]
pub struct SimilarityNfa {
    r: Action,
    causal: CausalityNfa,
    letters: Vec<MarkedLetter>,
}

impl SimilarityNfa {
    /// `letters` is the alphabet enumerated by the `Nfa` interface.
    pub fn new(n: usize, r: Action, letters: Vec<MarkedLetter>) -> Self {
        assert!(r.is_receive(), "similarity automaton needs a receive");
        SimilarityNfa { r, causal: CausalityNfa::marked(n, Vec::new()), letters }
    }

    pub fn receive(&self) -> Action {
        self.r
    }

    fn step_w(&self, w: Witness, l: &MarkedLetter, tag: Tag) -> Option<Witness> {
        let (q, p) = (self.r.actor, self.r.peer);
        let a = &l.action;
        let unmatched_to_q = l.barred && a.peer == q;
        let is_target = unmatched_to_q && a.actor == p;
        match (w, tag) {
            (_, Tag::Dot) if !l.is_send() => None,
            (Witness::W0, Tag::Dot) => (unmatched_to_q && a.actor != p).then_some(Witness::W1),
            (Witness::W1, Tag::Dot) => (is_target && a.msg == self.r.msg).then_some(Witness::W2),
            (Witness::W2, Tag::Dot) => None,
            (Witness::W0 | Witness::W1, Tag::Open) if is_target => None,
            (w, Tag::Open) => Some(w),
        }
    }
}

impl Nfa for SimilarityNfa {
    type State = (Witness, u64);
    type Letter = MarkedLetter;

    fn initial_states(&self) -> Vec<Self::State> {
        vec![(Witness::W0, CausalityNfa::INIT)]
    }

    fn is_final(&self, (w, m): &Self::State) -> bool {
        *w == Witness::W2 && CausalityNfa::accepts_set(*m)
    }

    /// The causality component is kept as a state set for each tag choice.
    fn successors(&self, s: &Self::State, out: &mut Vec<(Option<MarkedLetter>, Self::State)>) {
        for l in &self.letters {
            for t in self.step(s, l) {
                out.push((Some(*l), t));
            }
        }
    }
}

impl SimilarityNfa {
    /// Successors on `l`, guessing the tag. The causality component is
    /// tracked as a state set per tag choice.
    pub fn step(&self, (w, m): &(Witness, u64), l: &MarkedLetter) -> Vec<(Witness, u64)> {
        let mut out = Vec::new();
        for tag in [Tag::Open, Tag::Dot] {
            if let Some(w2) = self.step_w(*w, l, tag) {
                let m2 = self.causal.step_set(*m, &HashedLetter::Sym(TaggedLetter { letter: *l, tag }));
                if m2 != 0 {
                    out.push((w2, m2));
                }
            }
        }
        out
    }
}
