//! On-the-fly automata.
//!
//! Every construction implements [`Nfa`]: states are generated lazily by a
//! successor function, so machines whose full state space is exponential are
//! only ever explored on their reachable part. Generic services here are
//! membership, breadth-first emptiness with shortest witnesses, explicit
//! exploration, subset-construction complement, and determinization plus
//! minimization for explicitly given automata.

pub mod causality;
pub mod exchange;
pub mod nfa_file;
pub mod product;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::hash::Hash;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

pub use causality::{CausalState, CausalityNfa, HashedLetter, SimilarityNfa, Tag, TaggedLetter, Witness};
pub use exchange::{AtomState, AtomicExchangeNfa, AtomicState, CfmTables, ExchangeNfa, ExchangeState, Frame};
pub use nfa_file::{parse_nfa, Label, NfaFile};
pub use product::{exchange_automata, marked_alphabet, sync_of_property, AsyncProduct, Product, SyncLift, SyncState};

/// A lazily generated nondeterministic automaton. `None` letters are ε-moves.
pub trait Nfa {
    type State: Clone + Eq + Hash;
    type Letter: Clone + Eq + Hash;

    fn initial_states(&self) -> Vec<Self::State>;
    fn is_final(&self, s: &Self::State) -> bool;
    fn successors(&self, s: &Self::State, out: &mut Vec<(Option<Self::Letter>, Self::State)>);
}

impl<N: Nfa + ?Sized> Nfa for &N {
    type State = N::State;
    type Letter = N::Letter;

    fn initial_states(&self) -> Vec<Self::State> {
        (**self).initial_states()
    }

    fn is_final(&self, s: &Self::State) -> bool {
        (**self).is_final(s)
    }

    fn successors(&self, s: &Self::State, out: &mut Vec<(Option<Self::Letter>, Self::State)>) {
        (**self).successors(s, out)
    }
}

/// Cooperative cancellation flag shared with a running search.
pub type CancelToken = Arc<AtomicBool>;

#[derive(Clone, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub cancel: Option<CancelToken>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 5_000_000, cancel: None }
    }
}

impl Limits {
    pub fn with_max_states(max_states: usize) -> Self {
        Limits { max_states, cancel: None }
    }

    pub(crate) fn check(&self, states: usize) -> Result<(), SearchError> {
        if states > self.max_states {
            return Err(SearchError::BudgetExceeded(self.max_states));
        }
        if states % 1024 == 0 {
            if let Some(c) = &self.cancel {
                if c.load(Ordering::Relaxed) {
                    return Err(SearchError::Cancelled);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("state budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error("search cancelled")]
    Cancelled,
}

/// An accepting run: the initial state and every move taken from it.
#[derive(Clone, Debug)]
pub struct Run<L, S> {
    pub start: S,
    pub steps: Vec<(Option<L>, S)>,
}

impl<L: Clone, S> Run<L, S> {
    pub fn word(&self) -> Vec<L> {
        self.steps.iter().filter_map(|(l, _)| l.clone()).collect()
    }

    pub fn last(&self) -> &S {
        self.steps.last().map(|(_, s)| s).unwrap_or(&self.start)
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<L, S> {
    pub run: Option<Run<L, S>>,
    pub states: usize,
}

/// Emptiness check. Explores states in order of the number of letters read
/// (ε-moves are free), so the returned run reads a shortest accepted word.
pub fn find_accepting<N: Nfa>(nfa: &N, limits: &Limits) -> Result<SearchOutcome<N::Letter, N::State>, SearchError> {
    let mut states: Vec<N::State> = Vec::new();
    let mut index: HashMap<N::State, usize> = HashMap::new();
    let mut dist: Vec<usize> = Vec::new();
    let mut parent: Vec<Option<(usize, Option<N::Letter>)>> = Vec::new();
    let mut done: Vec<bool> = Vec::new();
    let mut deque = VecDeque::new();
    for s in nfa.initial_states() {
        if !index.contains_key(&s) {
            index.insert(s.clone(), states.len());
            states.push(s);
            dist.push(0);
            parent.push(None);
            done.push(false);
            deque.push_back(states.len() - 1);
        }
    }
    let mut buf = Vec::new();
    while let Some(x) = deque.pop_front() {
        if done[x] {
            continue;
        }
        done[x] = true;
        if nfa.is_final(&states[x]) {
            let mut steps = Vec::new();
            let mut cur = x;
            while let Some((p, l)) = parent[cur].clone() {
                steps.push((l, states[cur].clone()));
                cur = p;
            }
            steps.reverse();
            return Ok(SearchOutcome { run: Some(Run { start: states[cur].clone(), steps }), states: states.len() });
        }
        buf.clear();
        nfa.successors(&states[x], &mut buf);
        for (l, t) in buf.drain(..) {
            let w = if l.is_some() { 1 } else { 0 };
            let nd = dist[x] + w;
            match index.get(&t) {
                Some(&y) => {
                    if !done[y] && nd < dist[y] {
                        dist[y] = nd;
                        parent[y] = Some((x, l));
                        if w == 0 {
                            deque.push_front(y);
                        } else {
                            deque.push_back(y);
                        }
                    }
                }
                None => {
                    let y = states.len();
                    limits.check(y + 1)?;
                    index.insert(t.clone(), y);
                    states.push(t);
                    dist.push(nd);
                    parent.push(Some((x, l)));
                    done.push(false);
                    if w == 0 {
                        deque.push_front(y);
                    } else {
                        deque.push_back(y);
                    }
                }
            }
        }
    }
    Ok(SearchOutcome { run: None, states: states.len() })
}

pub fn is_empty<N: Nfa>(nfa: &N, limits: &Limits) -> Result<bool, SearchError> {
    Ok(find_accepting(nfa, limits)?.run.is_none())
}

fn eps_closure<N: Nfa>(nfa: &N, set: &mut HashSet<N::State>) {
    let mut stack: Vec<N::State> = set.iter().cloned().collect();
    let mut buf = Vec::new();
    while let Some(s) = stack.pop() {
        buf.clear();
        nfa.successors(&s, &mut buf);
        for (l, t) in buf.drain(..) {
            if l.is_none() && set.insert(t.clone()) {
                stack.push(t);
            }
        }
    }
}

/// The ε-closed set of states reached after reading `word`.
pub fn states_after<N: Nfa>(nfa: &N, word: &[N::Letter]) -> HashSet<N::State> {
    let mut cur: HashSet<N::State> = nfa.initial_states().into_iter().collect();
    eps_closure(nfa, &mut cur);
    let mut buf = Vec::new();
    for a in word {
        let mut next = HashSet::new();
        for s in &cur {
            buf.clear();
            nfa.successors(s, &mut buf);
            for (l, t) in buf.drain(..) {
                if l.as_ref() == Some(a) {
                    next.insert(t);
                }
            }
        }
        eps_closure(nfa, &mut next);
        cur = next;
        if cur.is_empty() {
            break;
        }
    }
    cur
}

/// Membership by set simulation.
pub fn accepts<N: Nfa>(nfa: &N, word: &[N::Letter]) -> bool {
    states_after(nfa, word).iter().any(|s| nfa.is_final(s))
}

/// The reachable part of a machine, materialized.
#[derive(Clone, Debug)]
pub struct Explored<L, S> {
    pub states: Vec<S>,
    pub index: HashMap<S, usize>,
    pub edges: Vec<Vec<(Option<L>, usize)>>,
    pub initial: Vec<usize>,
}

pub fn explore<N: Nfa>(nfa: &N, limits: &Limits) -> Result<Explored<N::Letter, N::State>, SearchError> {
    let mut ex = Explored { states: Vec::new(), index: HashMap::new(), edges: Vec::new(), initial: Vec::new() };
    let mut stack = Vec::new();
    for s in nfa.initial_states() {
        let i = intern(&mut ex, s, &mut stack);
        ex.initial.push(i);
    }
    let mut buf = Vec::new();
    while let Some(x) = stack.pop() {
        limits.check(ex.states.len())?;
        buf.clear();
        nfa.successors(&ex.states[x], &mut buf);
        let mut out = Vec::with_capacity(buf.len());
        for (l, t) in buf.drain(..) {
            let y = intern(&mut ex, t, &mut stack);
            out.push((l, y));
        }
        ex.edges[x] = out;
    }
    Ok(ex)
}

impl<L, S> Explored<L, S> {
    /// Graphviz rendering; accepting states are drawn with a double circle.
    pub fn to_dot(&self, name: &str, is_final: impl Fn(&S) -> bool, state: impl Fn(&S) -> String, letter: impl Fn(&L) -> String) -> String {
        let mut out = format!("digraph \"{}\" {{\n  rankdir=LR;\n  node [shape=circle];\n", name.replace('"', "'"));
        for (i, s) in self.states.iter().enumerate() {
            let shape = if is_final(s) { "doublecircle" } else { "circle" };
            out.push_str(&format!("  n{i} [shape={shape}, label=\"{}\"];\n", state(s).replace('"', "'")));
        }
        for &i in &self.initial {
            out.push_str(&format!("  start{i} [shape=point];\n  start{i} -> n{i};\n"));
        }
        for (i, row) in self.edges.iter().enumerate() {
            for (l, j) in row {
                let text = l.as_ref().map(&letter).unwrap_or_else(|| "ε".to_string());
                out.push_str(&format!("  n{i} -> n{j} [label=\"{}\"];\n", text.replace('"', "'")));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn intern<L, S: Clone + Eq + Hash>(ex: &mut Explored<L, S>, s: S, stack: &mut Vec<usize>) -> usize {
    if let Some(&i) = ex.index.get(&s) {
        return i;
    }
    let i = ex.states.len();
    ex.index.insert(s.clone(), i);
    ex.states.push(s);
    ex.edges.push(Vec::new());
    stack.push(i);
    i
}

/// Complement of an NFA over a fixed alphabet, by subset construction
/// performed on the fly. States are ε-closed sets of inner states.
pub struct Complement<N: Nfa> {
    pub inner: N,
    pub alphabet: Vec<N::Letter>,
}

impl<N: Nfa> Complement<N>
where
    N::State: Ord,
{
    pub fn new(inner: N, alphabet: Vec<N::Letter>) -> Self {
        Complement { inner, alphabet }
    }

    fn close(&self, set: HashSet<N::State>) -> BTreeSet<N::State> {
        let mut set = set;
        eps_closure(&self.inner, &mut set);
        set.into_iter().collect()
    }
}

impl<N: Nfa> Nfa for Complement<N>
where
    N::State: Ord,
{
    type State = BTreeSet<N::State>;
    type Letter = N::Letter;

    fn initial_states(&self) -> Vec<Self::State> {
        vec![self.close(self.inner.initial_states().into_iter().collect())]
    }

    fn is_final(&self, s: &Self::State) -> bool {
        !s.iter().any(|x| self.inner.is_final(x))
    }

    fn successors(&self, s: &Self::State, out: &mut Vec<(Option<Self::Letter>, Self::State)>) {
        let mut buf = Vec::new();
        for a in &self.alphabet {
            let mut next = HashSet::new();
            for x in s {
                buf.clear();
                self.inner.successors(x, &mut buf);
                for (l, t) in buf.drain(..) {
                    if l.as_ref() == Some(a) {
                        next.insert(t);
                    }
                }
            }
            out.push((Some(a.clone()), self.close(next)));
        }
    }
}

/// An explicitly stored NFA with integer states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitNfa<L> {
    pub initial: Vec<u32>,
    pub finals: Vec<bool>,
    pub delta: Vec<Vec<(Option<L>, u32)>>,
}

impl<L: Clone + Eq + Hash> ExplicitNfa<L> {
    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    /// Letters occurring on transitions, in first-occurrence order.
    pub fn letters(&self) -> Vec<L> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for row in &self.delta {
            for (l, _) in row {
                if let Some(l) = l {
                    if seen.insert(l.clone()) {
                        out.push(l.clone());
                    }
                }
            }
        }
        out
    }

    /// Materializes any machine whose reachable part fits the limits.
    pub fn from_nfa<N: Nfa<Letter = L>>(nfa: &N, limits: &Limits) -> Result<Self, SearchError> {
        let ex = explore(nfa, limits)?;
        Ok(ExplicitNfa {
            initial: ex.initial.iter().map(|&i| i as u32).collect(),
            finals: ex.states.iter().map(|s| nfa.is_final(s)).collect(),
            delta: ex.edges.into_iter().map(|row| row.into_iter().map(|(l, t)| (l, t as u32)).collect()).collect(),
        })
    }
}

impl<L: Clone + Eq + Hash> Nfa for ExplicitNfa<L> {
    type State = u32;
    type Letter = L;

    fn initial_states(&self) -> Vec<u32> {
        self.initial.clone()
    }

    fn is_final(&self, s: &u32) -> bool {
        self.finals[*s as usize]
    }

    fn successors(&self, s: &u32, out: &mut Vec<(Option<L>, u32)>) {
        out.extend(self.delta[*s as usize].iter().cloned());
    }
}

/// A complete deterministic automaton over an explicit alphabet.
#[derive(Clone, Debug)]
pub struct Dfa<L> {
    pub alphabet: Vec<L>,
    pub initial: u32,
    pub finals: Vec<bool>,
    /// `delta[s][i]`: successor of `s` on `alphabet[i]`.
    pub delta: Vec<Vec<u32>>,
    letter_index: HashMap<L, usize>,
}

impl<L: Clone + Eq + Hash> Dfa<L> {
    pub fn new(alphabet: Vec<L>, initial: u32, finals: Vec<bool>, delta: Vec<Vec<u32>>) -> Self {
        let letter_index = alphabet.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        Dfa { alphabet, initial, finals, delta, letter_index }
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn letter_index(&self, l: &L) -> Option<usize> {
        self.letter_index.get(l).copied()
    }

    pub fn step(&self, s: u32, l: &L) -> Option<u32> {
        self.letter_index(l).map(|i| self.delta[s as usize][i])
    }

    /// Subset construction over `alphabet`; the result is complete.
    pub fn determinize<N: Nfa<Letter = L>>(nfa: &N, alphabet: Vec<L>, limits: &Limits) -> Result<Self, SearchError>
    where
        N::State: Ord,
    {
        let comp = Complement::new(nfa, alphabet.clone());
        let ex = explore(&comp, limits)?;
        let mut delta = vec![vec![0u32; alphabet.len()]; ex.states.len()];
        for (s, row) in ex.edges.iter().enumerate() {
            for (l, t) in row {
                let i = alphabet.iter().position(|a| Some(a) == l.as_ref()).expect("alphabet letter");
                delta[s][i] = *t as u32;
            }
        }
        let finals = ex.states.iter().map(|s| !comp.is_final(s)).collect();
        Ok(Dfa::new(alphabet, ex.initial[0] as u32, finals, delta))
    }

    /// Moore partition refinement on the reachable part.
    pub fn minimize(&self) -> Self {
        let n = self.num_states();
        let k = self.alphabet.len();
        let mut reach = vec![false; n];
        let mut stack = vec![self.initial as usize];
        reach[self.initial as usize] = true;
        while let Some(x) = stack.pop() {
            for &y in &self.delta[x] {
                if !reach[y as usize] {
                    reach[y as usize] = true;
                    stack.push(y as usize);
                }
            }
        }
        let live: Vec<usize> = (0..n).filter(|&i| reach[i]).collect();
        let mut class = vec![0usize; n];
        for &s in &live {
            class[s] = self.finals[s] as usize;
        }
        let mut count = 0;
        loop {
            let mut sig_index: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next = vec![0usize; n];
            for &s in &live {
                let mut sig = Vec::with_capacity(k + 1);
                sig.push(class[s]);
                sig.extend(self.delta[s].iter().map(|&t| class[t as usize]));
                let len = sig_index.len();
                next[s] = *sig_index.entry(sig).or_insert(len);
            }
            let new_count = sig_index.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        // Renumber classes in order of first reachable visit from the initial state.
        let mut order: HashMap<usize, u32> = HashMap::new();
        let mut queue = VecDeque::from([self.initial as usize]);
        let mut visited = vec![false; n];
        visited[self.initial as usize] = true;
        let mut reps: Vec<usize> = Vec::new();
        while let Some(x) = queue.pop_front() {
            if let std::collections::hash_map::Entry::Vacant(e) = order.entry(class[x]) {
                e.insert(reps.len() as u32);
                reps.push(x);
            }
            for &y in &self.delta[x] {
                if !visited[y as usize] {
                    visited[y as usize] = true;
                    queue.push_back(y as usize);
                }
            }
        }
        let delta = reps.iter().map(|&r| self.delta[r].iter().map(|&t| order[&class[t as usize]]).collect()).collect();
        let finals = reps.iter().map(|&r| self.finals[r]).collect();
        Dfa::new(self.alphabet.clone(), 0, finals, delta)
    }

    pub fn complement(&self) -> Self {
        Dfa::new(self.alphabet.clone(), self.initial, self.finals.iter().map(|f| !f).collect(), self.delta.clone())
    }

    pub fn accepts(&self, word: &[L]) -> bool {
        let mut s = self.initial;
        for l in word {
            match self.step(s, l) {
                Some(t) => s = t,
                None => return false,
            }
        }
        self.finals[s as usize]
    }
}

impl<L: Clone + Eq + Hash> Nfa for Dfa<L> {
    type State = u32;
    type Letter = L;

    fn initial_states(&self) -> Vec<u32> {
        vec![self.initial]
    }

    fn is_final(&self, s: &u32) -> bool {
        self.finals[*s as usize]
    }

    fn successors(&self, s: &u32, out: &mut Vec<(Option<L>, u32)>) {
        for (i, l) in self.alphabet.iter().enumerate() {
            out.push((Some(l.clone()), self.delta[*s as usize][i]));
        }
    }
}

/// A failure of the diamond property: from `state`, reading `first` then
/// `second` and reading them in the other order lead to different state sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiamondViolation<S, L> {
    pub state: S,
    pub first: L,
    pub second: L,
}

/// Checks the diamond property for receive letters of distinct processes on
/// the reachable part of an ε-free machine. `actor` returns the performing
/// process of a receive letter and `None` for other letters.
pub fn check_r_diamond<N, K>(
    nfa: &N,
    actor: impl Fn(&N::Letter) -> Option<K>,
    limits: &Limits,
) -> Result<Option<DiamondViolation<N::State, N::Letter>>, SearchError>
where
    N: Nfa,
    K: Eq,
{
    let ex = explore(nfa, limits)?;
    let mut receives: Vec<N::Letter> = Vec::new();
    for row in &ex.edges {
        for (l, _) in row {
            if let Some(l) = l {
                if actor(l).is_some() && !receives.contains(l) {
                    receives.push(l.clone());
                }
            }
        }
    }
    let post = |s: usize, a: &N::Letter| -> BTreeSet<usize> {
        ex.edges[s].iter().filter(|(l, _)| l.as_ref() == Some(a)).map(|(_, t)| *t).collect()
    };
    for s in 0..ex.states.len() {
        for (i, a) in receives.iter().enumerate() {
            for b in receives.iter().skip(i + 1) {
                if actor(a) == actor(b) {
                    continue;
                }
                let ab: BTreeSet<usize> = post(s, a).into_iter().flat_map(|x| post(x, b)).collect();
                let ba: BTreeSet<usize> = post(s, b).into_iter().flat_map(|x| post(x, a)).collect();
                if ab != ba {
                    return Ok(Some(DiamondViolation { state: ex.states[s].clone(), first: a.clone(), second: b.clone() }));
                }
            }
        }
    }
    Ok(None)
}
