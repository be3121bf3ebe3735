//! Message sequence charts and the operations on sequences that are defined
//! through them: buffer order, validity, equivalence, linearization, marked
//! and ms projections, products and exchanges.
//!
//! Events of an [`Msc`] are the positions of the sequence it was built from,
//! so "position i of u" and "event i of msc(u)" are the same index.

use crate::model::{self, Action, Network, ProcSet, ProcessId, Symbols, Trace};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MscError {
    #[error("the sequence is not p2p-viable (first offending position {0})")]
    NotP2pViable(usize),
    #[error("the sequence is not viable over the {0} network")]
    NotViable(&'static str),
    #[error("the network is not many-to-one")]
    NotManyToOne,
    #[error("the sequence is not an exchange")]
    NotExchange,
    #[error("linearization budget of {0} exceeded")]
    BudgetExceeded(usize),
}

/// A send, possibly marked as unmatched (overlined), or a receive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkedLetter {
    pub action: Action,
    /// Only ever set on sends.
    pub barred: bool,
}

impl MarkedLetter {
    pub fn matched(action: Action) -> Self {
        MarkedLetter { action, barred: false }
    }

    pub fn unmatched(action: Action) -> Self {
        debug_assert!(action.is_send());
        MarkedLetter { action, barred: true }
    }

    pub fn is_send(&self) -> bool {
        self.action.is_send()
    }

    pub fn render(&self, symbols: &Symbols) -> String {
        if self.barred {
            let a = &self.action;
            format!("{}!!{}({})", symbols.process_name(a.actor), symbols.process_name(a.peer), symbols.message_name(a.msg))
        } else {
            symbols.action(&self.action)
        }
    }
}

pub type MarkedTrace = Vec<MarkedLetter>;
pub type MsSequence = Vec<MarkedLetter>;

/// A message sequence chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Msc {
    /// Event labels; index = position in the source sequence.
    pub labels: Vec<Action>,
    /// `mate[e]` is the matching receive of a send or the matching send of a receive.
    pub mate: Vec<Option<usize>>,
    /// Events of each process in process order.
    pub lines: BTreeMap<ProcessId, Vec<usize>>,
}

impl Msc {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_matched(&self, e: usize) -> bool {
        self.mate[e].is_some()
    }

    /// Immediate process-order successor pairs and message pairs (send, receive).
    pub fn hb_edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for line in self.lines.values() {
            for w in line.windows(2) {
                e.push((w[0], w[1]));
            }
        }
        for (s, m) in self.mate.iter().enumerate() {
            if let Some(r) = m {
                if self.labels[s].is_send() {
                    e.push((s, *r));
                }
            }
        }
        e
    }

    /// The buffer order `<_N`: pairs of sends to the same buffer where the
    /// first is matched and the second unmatched, or both are matched and
    /// received in that order.
    pub fn buffer_order(&self, net: &Network) -> Result<Vec<(usize, usize)>, MscError> {
        if !net.is_many_to_one() {
            return Err(MscError::NotManyToOne);
        }
        let mut by_buffer: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, a) in self.labels.iter().enumerate() {
            if a.is_send() {
                by_buffer.entry(net.buffer(a.actor, a.peer)).or_default().push(i);
            }
        }
        let mut pos_in_line = vec![0usize; self.len()];
        for line in self.lines.values() {
            for (k, &e) in line.iter().enumerate() {
                pos_in_line[e] = k;
            }
        }
        let mut out = Vec::new();
        for sends in by_buffer.values() {
            for &e in sends {
                for &f in sends {
                    if e == f {
                        continue;
                    }
                    match (self.mate[e], self.mate[f]) {
                        (Some(_), None) => out.push((e, f)),
                        // Same buffer means same receiver, so the receives share a line.
                        (Some(re), Some(rf)) if pos_in_line[re] < pos_in_line[rf] => out.push((e, f)),
                        _ => {}
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    fn adjacency(&self, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b) in edges {
            adj[a].push(b);
        }
        adj
    }

    /// Edges of `<_hb ∪ <_N` (generators, not closed).
    pub fn causal_edges(&self, net: &Network) -> Result<Vec<(usize, usize)>, MscError> {
        let mut e = self.hb_edges();
        e.extend(self.buffer_order(net)?);
        Ok(e)
    }

    /// An MSC is valid for `net` when `<_hb ∪ <_N` is acyclic.
    pub fn is_valid(&self, net: &Network) -> Result<bool, MscError> {
        let e = self.causal_edges(net)?;
        Ok(topological(self.len(), &self.adjacency(&e)).is_some())
    }

    /// Nodes reachable from `from` along `<_hb ∪ <_N` (including `from`).
    pub fn reachable_from(&self, net: &Network, from: usize) -> Result<Vec<bool>, MscError> {
        let adj = self.adjacency(&self.causal_edges(net)?);
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        Ok(seen)
    }

    /// One linear extension of `<_hb ∪ <_N`, preferring smaller positions.
    /// `None` if the MSC is not valid for `net`.
    pub fn linearize(&self, net: &Network) -> Result<Option<Trace>, MscError> {
        let adj = self.adjacency(&self.causal_edges(net)?);
        Ok(topological(self.len(), &adj).map(|order| order.into_iter().map(|e| self.labels[e]).collect()))
    }

    /// Every linear extension of `<_hb ∪ <_N`, up to `budget` of them.
    pub fn linearizations(&self, net: &Network, budget: usize) -> Result<Vec<Trace>, MscError> {
        let adj = self.adjacency(&self.causal_edges(net)?);
        let mut indeg = vec![0usize; self.len()];
        for succ in &adj {
            for &b in succ {
                indeg[b] += 1;
            }
        }
        let mut out = Vec::new();
        let mut cur = Vec::new();
        let mut used = vec![false; self.len()];
        fn rec(
            msc: &Msc,
            adj: &[Vec<usize>],
            indeg: &mut [usize],
            used: &mut [bool],
            cur: &mut Vec<usize>,
            out: &mut Vec<Trace>,
            budget: usize,
        ) -> Result<(), MscError> {
            if cur.len() == msc.len() {
                if out.len() == budget {
                    return Err(MscError::BudgetExceeded(budget));
                }
                out.push(cur.iter().map(|&e| msc.labels[e]).collect());
                return Ok(());
            }
            for e in 0..msc.len() {
                if used[e] || indeg[e] != 0 {
                    continue;
                }
                used[e] = true;
                cur.push(e);
                for &b in &adj[e] {
                    indeg[b] -= 1;
                }
                let r = rec(msc, adj, indeg, used, cur, out, budget);
                for &b in &adj[e] {
                    indeg[b] += 1;
                }
                cur.pop();
                used[e] = false;
                r?;
            }
            Ok(())
        }
        rec(self, &adj, &mut indeg, &mut used, &mut cur, &mut out, budget)?;
        Ok(out)
    }

    /// Graphviz rendering: one column per process, solid arrows for message
    /// pairs, open arrowheads into a point for unmatched sends.
    pub fn to_dot(&self, symbols: &Symbols) -> String {
        let mut s = String::from("digraph msc {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n");
        for (p, line) in &self.lines {
            let _ = writeln!(s, "  subgraph cluster_{} {{\n    label=\"{}\";\n    style=dashed;", p.0, symbols.process_name(*p));
            for &e in line {
                let _ = writeln!(s, "    e{e} [label=\"{}: {}\"];", e, symbols.action(&self.labels[e]));
            }
            for w in line.windows(2) {
                let _ = writeln!(s, "    e{} -> e{} [style=dotted, arrowhead=none];", w[0], w[1]);
            }
            s.push_str("  }\n");
        }
        for (e, a) in self.labels.iter().enumerate() {
            if !a.is_send() {
                continue;
            }
            match self.mate[e] {
                Some(r) => {
                    let _ = writeln!(s, "  e{e} -> e{r} [label=\"{}\", constraint=false];", symbols.message_name(a.msg));
                }
                None => {
                    let _ = writeln!(s, "  u{e} [shape=point];\n  e{e} -> u{e} [label=\"{}\", arrowhead=empty, style=bold];", symbols.message_name(a.msg));
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Kahn's algorithm with smallest-index preference; `None` on a cycle.
pub(crate) fn topological(n: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    for succ in adj {
        for &b in succ {
            indeg[b] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(&x) = ready.iter().next() {
        ready.remove(&x);
        out.push(x);
        for &y in &adj[x] {
            indeg[y] -= 1;
            if indeg[y] == 0 {
                ready.insert(y);
            }
        }
    }
    (out.len() == n).then_some(out)
}

/// Per-position matching over `net` (FIFO per buffer), or the first position
/// where viability fails.
pub fn matching(net: &Network, u: &[Action]) -> Result<Vec<Option<usize>>, usize> {
    let mut queues: HashMap<u32, std::collections::VecDeque<usize>> = HashMap::new();
    let mut mate = vec![None; u.len()];
    for (i, a) in u.iter().enumerate() {
        let b = net.buffer(a.channel().0, a.channel().1);
        if a.is_send() {
            queues.entry(b).or_default().push_back(i);
        } else {
            let q = queues.get_mut(&b).ok_or(i)?;
            let &j = q.front().ok_or(i)?;
            if u[j] != a.dual() {
                return Err(i);
            }
            q.pop_front();
            mate[i] = Some(j);
            mate[j] = Some(i);
        }
    }
    Ok(mate)
}

/// The MSC of a p2p-viable sequence.
pub fn msc_of(u: &[Action]) -> Result<Msc, MscError> {
    let mate = matching(&Network::P2p, u).map_err(MscError::NotP2pViable)?;
    let mut lines: BTreeMap<ProcessId, Vec<usize>> = BTreeMap::new();
    for (i, a) in u.iter().enumerate() {
        lines.entry(a.actor).or_default().push(i);
    }
    Ok(Msc { labels: u.to_vec(), mate, lines })
}

/// `u ≡ v`: equal projections on every process.
pub fn equivalent(u: &[Action], v: &[Action]) -> bool {
    if u.len() != v.len() {
        return false;
    }
    let procs: BTreeSet<ProcessId> = u.iter().chain(v).map(|a| a.actor).collect();
    procs.into_iter().all(|p| model::projection(u, p) == model::projection(v, p))
}

/// Annotates unmatched sends of an mb-viable sequence.
pub fn mark(u: &[Action]) -> Result<MarkedTrace, MscError> {
    let mate = matching(&Network::Mailbox, u).map_err(|_| MscError::NotViable("mb"))?;
    Ok(u.iter().enumerate().map(|(i, &a)| MarkedLetter { action: a, barred: a.is_send() && mate[i].is_none() }).collect())
}

/// The projection of [`mark`] onto (possibly overlined) sends.
pub fn ms(u: &[Action]) -> Result<MsSequence, MscError> {
    Ok(mark(u)?.into_iter().filter(|l| l.is_send()).collect())
}

/// Buffers with an unmatched send in the viable sequence `u`.
pub fn unmatched_buffers(net: &Network, u: &[Action]) -> Result<BTreeSet<u32>, MscError> {
    let mate = matching(net, u).map_err(|_| MscError::NotViable(net.name()))?;
    Ok((0..u.len()).filter(|&i| u[i].is_send() && mate[i].is_none()).map(|i| net.buffer(u[i].actor, u[i].peer)).collect())
}

fn received_buffers(net: &Network, u: &[Action]) -> BTreeSet<u32> {
    u.iter().filter(|a| a.is_receive()).map(|a| net.buffer(a.peer, a.actor)).collect()
}

/// The product `u ∗_N v`: `uv` when no buffer with an unmatched send in `u`
/// is received from in `v`, `None` otherwise.
pub fn product(net: &Network, u: &[Action], v: &[Action]) -> Result<Option<Trace>, MscError> {
    let deaf = unmatched_buffers(net, u)?;
    matching(net, v).map_err(|_| MscError::NotViable(net.name()))?;
    if deaf.is_disjoint(&received_buffers(net, v)) {
        Ok(Some(u.iter().chain(v).copied().collect()))
    } else {
        Ok(None)
    }
}

fn has_sr_shape(u: &[Action]) -> bool {
    u.windows(2).all(|w| !(w[0].is_receive() && w[1].is_send()))
}

/// Viable and in `S*R*`.
pub fn is_exchange(net: &Network, u: &[Action]) -> bool {
    has_sr_shape(u) && model::is_viable(net, u)
}

/// Maximal `S*R*` blocks of `u` (cuts at every receive followed by a send).
pub fn greedy_blocks(u: &[Action]) -> Vec<&[Action]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..u.len() {
        if u[i - 1].is_receive() && u[i].is_send() {
            out.push(&u[start..i]);
            start = i;
        }
    }
    if start < u.len() {
        out.push(&u[start..]);
    }
    out
}

/// Whether `u` is a defined `∗_N`-product of exchanges. Every factorization
/// into exchanges refines the greedy cut at receive-to-send boundaries, and
/// merging adjacent factors of a defined product keeps it defined, so the
/// greedy blocks decide the question.
pub fn is_synchronous(net: &Network, u: &[Action]) -> bool {
    let blocks = greedy_blocks(u);
    if !blocks.iter().all(|b| model::is_viable(net, b)) {
        return false;
    }
    let mut deaf: BTreeSet<u32> = BTreeSet::new();
    for b in blocks {
        if !deaf.is_disjoint(&received_buffers(net, b)) {
            return false;
        }
        deaf.extend(unmatched_buffers(net, b).expect("checked viable"));
    }
    true
}

/// Reorders the receives of a p2p exchange to follow their sends. The result
/// is equivalent to the input; it is an error if it is not mb-viable.
pub fn normalize_exchange(u: &[Action]) -> Result<Trace, MscError> {
    if !has_sr_shape(u) {
        return Err(MscError::NotExchange);
    }
    let mate = matching(&Network::P2p, u).map_err(|_| MscError::NotExchange)?;
    let mut out: Trace = u.iter().filter(|a| a.is_send()).copied().collect();
    out.extend((0..u.len()).filter(|&i| u[i].is_send()).filter_map(|i| mate[i].map(|r| u[r])));
    if !model::is_viable(&Network::Mailbox, &out) {
        return Err(MscError::NotViable("mb"));
    }
    Ok(out)
}

/// Rebuilds the normalized exchange of an ms-sequence: sends in order, then
/// the receive of every matched send in the same order.
pub fn exchange_of_ms(ms: &[MarkedLetter]) -> Trace {
    let mut out: Trace = ms.iter().map(|l| l.action).collect();
    out.extend(ms.iter().filter(|l| !l.barred).map(|l| l.action.dual()));
    out
}

/// Processes with an unmatched send addressed to them.
pub fn deaf_targets(ms: &[MarkedLetter]) -> ProcSet {
    let mut d = ProcSet::EMPTY;
    for l in ms.iter().filter(|l| l.barred) {
        d.insert(l.action.peer);
    }
    d
}
