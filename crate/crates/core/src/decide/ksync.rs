use super::{check_sync, reachable_boundaries, trace_of_blocks, DecideError, Options, Verdict};
use crate::automata::exchange::MAX_ATOM_PROCESSES;
use crate::automata::{explore, AtomicExchangeNfa, AtomicState, CfmTables};
use crate::model::{self, Cfm, Network, Trace};
use crate::msc::MarkedLetter;
use std::collections::VecDeque;
use std::time::Instant;

/// Witnesses are only built for bounds up to this size.
pub const MAX_WITNESS_K: u64 = 10_000;

/// Size of the largest atomic exchange over all reachable boundaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicProfile {
    /// `None` when atomic exchanges of unbounded size exist.
    pub max_sends: Option<usize>,
    /// Synchronous execution leading to the boundary of the extreme exchange.
    pub prefix: Vec<Vec<MarkedLetter>>,
    /// A longest atomic exchange, or for the unbounded case a pumpable one
    /// split as `(before, cycle, after)`.
    pub longest: Vec<MarkedLetter>,
    pub pump: Option<(Vec<MarkedLetter>, Vec<MarkedLetter>, Vec<MarkedLetter>)>,
    pub states: usize,
}

impl AtomicProfile {
    /// An atomic exchange with more than `k` sends, if one exists.
    pub fn exchange_larger_than(&self, k: usize) -> Option<Vec<MarkedLetter>> {
        if let Some((a, c, b)) = &self.pump {
            let mut w = a.clone();
            while w.len() + b.len() <= k {
                w.extend_from_slice(c);
            }
            w.extend_from_slice(b);
            return Some(w);
        }
        (self.longest.len() > k).then(|| self.longest.clone())
    }
}

/// Explores the atomic-exchange machine from every reachable boundary.
pub fn atomic_profile(cfm: &Cfm, opts: &Options) -> Result<AtomicProfile, DecideError> {
    let n = cfm.num_processes();
    if n > MAX_ATOM_PROCESSES {
        return Err(DecideError::TooManyProcesses { n, max: MAX_ATOM_PROCESSES });
    }
    let (boundaries, mut states) = reachable_boundaries(cfm, opts)?;
    let tables = CfmTables::new(cfm);
    let mut best = AtomicProfile { max_sends: Some(0), prefix: Vec::new(), longest: Vec::new(), pump: None, states: 0 };
    for b in &boundaries {
        let nfa = AtomicExchangeNfa { tables: &tables, start: (b.global.clone(), b.deaf), target: None };
        let ex = explore(&nfa, &opts.limits)?;
        states += ex.states.len();
        let k = ex.states.len();
        // Keep states that reach an end state.
        let mut rev = vec![Vec::new(); k];
        for (x, row) in ex.edges.iter().enumerate() {
            for (_, y) in row {
                rev[*y].push(x);
            }
        }
        let mut live = vec![false; k];
        let mut queue: VecDeque<usize> = (0..k).filter(|&x| matches!(ex.states[x], AtomicState::End(..))).collect();
        for &x in &queue {
            live[x] = true;
        }
        while let Some(y) = queue.pop_front() {
            for &x in &rev[y] {
                if !live[x] {
                    live[x] = true;
                    queue.push_back(x);
                }
            }
        }
        let root = ex.initial[0];
        if !live[root] {
            continue;
        }
        if let Some(pump) = find_pump(&ex.edges, &live, root, |x| matches!(ex.states[x], AtomicState::End(..))) {
            best = AtomicProfile { max_sends: None, prefix: b.blocks.clone(), longest: Vec::new(), pump: Some(pump), states };
            return Ok(best);
        }
        let word = longest_word(&ex.edges, &live, root);
        if best.max_sends.is_some_and(|m| word.len() > m) {
            best.max_sends = Some(word.len());
            best.prefix = b.blocks.clone();
            best.longest = word;
        }
    }
    best.states = states;
    Ok(best)
}

type Edges = Vec<Vec<(Option<MarkedLetter>, usize)>>;

/// A cycle through live states as `(path to cycle, cycle, path to end)`.
fn find_pump(
    edges: &Edges,
    live: &[bool],
    root: usize,
    is_end: impl Fn(usize) -> bool,
) -> Option<(Vec<MarkedLetter>, Vec<MarkedLetter>, Vec<MarkedLetter>)> {
    // Iterative DFS with colours; a back edge closes a cycle.
    let k = edges.len();
    let mut colour = vec![0u8; k];
    let mut parent: Vec<Option<(usize, Option<MarkedLetter>)>> = vec![None; k];
    let mut stack = vec![(root, 0usize)];
    colour[root] = 1;
    while let Some(&mut (x, ref mut i)) = stack.last_mut() {
        if *i < edges[x].len() {
            let (l, y) = edges[x][*i];
            *i += 1;
            if !live[y] {
                continue;
            }
            if colour[y] == 1 {
                // Cycle y -> ... -> x -> y.
                let mut cycle = vec![l];
                let mut c = x;
                while c != y {
                    let (p, pl) = parent[c].expect("on stack");
                    cycle.push(pl);
                    c = p;
                }
                cycle.reverse();
                let before = path_letters(&parent, y);
                let after = shortest_to(edges, live, y, &is_end)?;
                return Some((before, cycle.into_iter().flatten().collect(), after));
            }
            if colour[y] == 0 {
                colour[y] = 1;
                parent[y] = Some((x, l));
                stack.push((y, 0));
            }
        } else {
            colour[x] = 2;
            stack.pop();
        }
    }
    None
}

fn path_letters(parent: &[Option<(usize, Option<MarkedLetter>)>], mut x: usize) -> Vec<MarkedLetter> {
    let mut out = Vec::new();
    while let Some((p, l)) = parent[x] {
        if let Some(l) = l {
            out.push(l);
        }
        x = p;
    }
    out.reverse();
    out
}

fn shortest_to(edges: &Edges, live: &[bool], from: usize, is_end: impl Fn(usize) -> bool) -> Option<Vec<MarkedLetter>> {
    let mut parent: Vec<Option<(usize, Option<MarkedLetter>)>> = vec![None; edges.len()];
    let mut seen = vec![false; edges.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        if is_end(x) {
            let mut out = Vec::new();
            let mut c = x;
            while c != from {
                let (p, l) = parent[c].expect("visited");
                if let Some(l) = l {
                    out.push(l);
                }
                c = p;
            }
            out.reverse();
            return Some(out);
        }
        for &(l, y) in &edges[x] {
            if live[y] && !seen[y] {
                seen[y] = true;
                parent[y] = Some((x, l));
                queue.push_back(y);
            }
        }
    }
    None
}

/// Longest word from `root` to an end state in an acyclic live part.
fn longest_word(edges: &Edges, live: &[bool], root: usize) -> Vec<MarkedLetter> {
    let k = edges.len();
    let mut best: Vec<Option<(usize, Option<(Option<MarkedLetter>, usize)>)>> = vec![None; k];
    // Post-order over live states reachable from root.
    let mut order = Vec::new();
    let mut visited = vec![false; k];
    let mut stack = vec![(root, 0usize)];
    visited[root] = true;
    while let Some(&mut (x, ref mut i)) = stack.last_mut() {
        if *i < edges[x].len() {
            let y = edges[x][*i].1;
            *i += 1;
            if live[y] && !visited[y] {
                visited[y] = true;
                stack.push((y, 0));
            }
        } else {
            order.push(x);
            stack.pop();
        }
    }
    for &x in &order {
        let mut here: Option<(usize, Option<(Option<MarkedLetter>, usize)>)> = if edges[x].is_empty() { Some((0, None)) } else { None };
        for &(l, y) in &edges[x] {
            if let Some((v, _)) = best[y] {
                let v = v + l.is_some() as usize;
                if here.is_none_or(|(h, _)| v > h) {
                    here = Some((v, Some((l, y))));
                }
            }
        }
        best[x] = here;
    }
    let mut out = Vec::new();
    let mut x = root;
    while let Some((_, Some((l, y)))) = best[x] {
        if let Some(l) = l {
            out.push(l);
        }
        x = y;
    }
    out
}

fn witness_trace(cfm: &Cfm, prefix: &[Vec<MarkedLetter>], exchange: Vec<MarkedLetter>) -> Result<Trace, DecideError> {
    let mut blocks = prefix.to_vec();
    blocks.push(exchange);
    let t = trace_of_blocks(&blocks);
    model::run(cfm, &Network::Mailbox, &t).map_err(|i| DecideError::Witness(format!("blocked at action {i}")))?;
    Ok(t)
}

/// Is the system synchronizable with atomic exchanges of at most `k` sends?
pub fn check_ksync(cfm: &Cfm, k: u64, opts: &Options) -> Result<Verdict, DecideError> {
    let started = Instant::now();
    if k == 0 {
        return Err(DecideError::Input("k must be positive".into()));
    }
    let sync = check_sync(cfm, opts)?;
    if !sync.is_yes() {
        let mut v = sync;
        v.stats.millis = started.elapsed().as_millis();
        return Ok(v);
    }
    let prof = atomic_profile(cfm, opts)?;
    let states = sync.stats.states + prof.states;
    match prof.max_sends {
        Some(m) if m as u64 <= k => {
            let mut v = Verdict::yes(states, started);
            v.k = Some(k);
            Ok(v)
        }
        _ => {
            let witness = if k <= MAX_WITNESS_K {
                let ex = prof.exchange_larger_than(k as usize).expect("an exchange above k exists");
                Some(witness_trace(cfm, &prof.prefix, ex)?)
            } else {
                None
            };
            let mut v = Verdict::no(witness, states, started);
            v.k = Some(k);
            Ok(v)
        }
    }
}

/// The least `k` for which the system is k-synchronizable, if any.
pub fn infer_k(cfm: &Cfm, opts: &Options) -> Result<Verdict, DecideError> {
    let started = Instant::now();
    let sync = check_sync(cfm, opts)?;
    if !sync.is_yes() {
        let mut v = sync;
        v.stats.millis = started.elapsed().as_millis();
        return Ok(v);
    }
    let prof = atomic_profile(cfm, opts)?;
    let states = sync.stats.states + prof.states;
    match prof.max_sends {
        Some(m) => {
            let mut v = Verdict::yes(states, started);
            v.k = Some(m.max(1) as u64);
            Ok(v)
        }
        None => {
            let (a, c, b) = prof.pump.clone().expect("unbounded profile has a cycle");
            let ex: Vec<MarkedLetter> = a.into_iter().chain(c.iter().copied()).chain(c.iter().copied()).chain(b).collect();
            Ok(Verdict::no(Some(witness_trace(cfm, &prof.prefix, ex)?), states, started))
        }
    }
}
