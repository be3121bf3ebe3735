//! Communication graphs, atomicity and the decomposition of a sequence into
//! atomic factors.
//!
//! The communication graph of a viable sequence has its events as vertices
//! and an edge for process order, buffer order, and message pairs in both
//! directions. A sequence is atomic iff this graph is strongly connected.

use crate::model::{Action, Network, ProcessId, Symbols, Trace};
use crate::msc::{self, MarkedLetter, MscError};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Process,
    Buffer,
    Message,
}

#[derive(Clone, Debug)]
pub struct CommGraph {
    pub labels: Vec<Action>,
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

pub fn comm_graph(u: &[Action], net: &Network) -> Result<CommGraph, MscError> {
    if !net.is_many_to_one() {
        return Err(MscError::NotManyToOne);
    }
    if msc::matching(net, u).is_err() {
        return Err(MscError::NotViable(net.name()));
    }
    let m = msc::msc_of(u)?;
    let mut edges = Vec::new();
    for line in m.lines.values() {
        for w in line.windows(2) {
            edges.push((w[0], w[1], EdgeKind::Process));
        }
    }
    for (a, b) in m.buffer_order(net)? {
        edges.push((a, b, EdgeKind::Buffer));
    }
    for (s, r) in m.mate.iter().enumerate() {
        if let Some(r) = *r {
            if u[s].is_send() {
                edges.push((s, r, EdgeKind::Message));
                edges.push((r, s, EdgeKind::Message));
            }
        }
    }
    Ok(CommGraph { labels: u.to_vec(), edges })
}

impl CommGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn petgraph(&self) -> DiGraph<usize, EdgeKind> {
        let mut g = DiGraph::new();
        let nodes: Vec<_> = (0..self.len()).map(|i| g.add_node(i)).collect();
        for &(a, b, k) in &self.edges {
            g.add_edge(nodes[a], nodes[b], k);
        }
        g
    }

    /// Strongly connected components in a topological order of the
    /// condensation; ties are broken by smallest event position. Each
    /// component is sorted.
    pub fn sccs(&self) -> Vec<Vec<usize>> {
        let g = self.petgraph();
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&g).into_iter().map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
            v.sort_unstable();
            v
        }).collect();
        let mut comp_of = vec![0usize; self.len()];
        for (ci, c) in comps.iter().enumerate() {
            for &e in c {
                comp_of[e] = ci;
            }
        }
        let n = comps.len();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut indeg = vec![0usize; n];
        for &(a, b, _) in &self.edges {
            let (ca, cb) = (comp_of[a], comp_of[b]);
            if ca != cb && succ[ca].insert(cb) {
                indeg[cb] += 1;
            }
        }
        let mut ready: BTreeSet<(usize, usize)> = (0..n).filter(|&c| indeg[c] == 0).map(|c| (comps[c][0], c)).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&(k, c)) = ready.iter().next() {
            ready.remove(&(k, c));
            order.push(c);
            for &d in &succ[c] {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    ready.insert((comps[d][0], d));
                }
            }
        }
        order.into_iter().map(|c| std::mem::take(&mut comps[c])).collect()
    }

    /// Reachability from `from` (inclusive).
    pub fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b, _) in &self.edges {
            adj[a].push(b);
        }
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
        seen
    }

    pub fn to_dot(&self, symbols: &Symbols) -> String {
        let mut s = String::from("digraph comm {\n  node [shape=box, fontsize=10];\n");
        for (i, a) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "  e{i} [label=\"{i}: {}\"];", symbols.action(a));
        }
        for &(a, b, k) in &self.edges {
            let style = match k {
                EdgeKind::Process => "solid",
                EdgeKind::Buffer => "dashed",
                EdgeKind::Message => "bold",
            };
            let _ = writeln!(s, "  e{a} -> e{b} [style={style}];");
        }
        s.push_str("}\n");
        s
    }

    /// The condensation: one node per component, labelled with its events.
    pub fn condensation_dot(&self, symbols: &Symbols) -> String {
        let comps = self.sccs();
        let mut comp_of = vec![0usize; self.len()];
        for (ci, c) in comps.iter().enumerate() {
            for &e in c {
                comp_of[e] = ci;
            }
        }
        let mut s = String::from("digraph condensation {\n  node [shape=box, fontsize=10];\n");
        for (ci, c) in comps.iter().enumerate() {
            let body: Vec<String> = c.iter().map(|&e| symbols.action(&self.labels[e])).collect();
            let _ = writeln!(s, "  c{} [label=\"{}: {}\"];", ci + 1, ci + 1, body.join("\\n"));
        }
        let mut seen = BTreeSet::new();
        for &(a, b, _) in &self.edges {
            let (x, y) = (comp_of[a], comp_of[b]);
            if x != y && seen.insert((x, y)) {
                let _ = writeln!(s, "  c{} -> c{};", x + 1, y + 1);
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Strong connectivity of the communication graph. The empty sequence counts as atomic.
pub fn is_atomic(u: &[Action], net: &Network) -> Result<bool, MscError> {
    Ok(comm_graph(u, net)?.sccs().len() <= 1)
}

/// An atomic factor: its events (positions of the input) and the induced subsequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub events: Vec<usize>,
    pub trace: Trace,
}

/// Splits a viable sequence into its atomic factors in topological order.
/// Their product is defined and equivalent to the input.
pub fn decompose(u: &[Action], net: &Network) -> Result<Vec<Factor>, MscError> {
    let g = comm_graph(u, net)?;
    Ok(g.sccs().into_iter().map(|events| Factor { trace: events.iter().map(|&e| u[e]).collect(), events }).collect())
}

/// The partial order between atomic factors generated by process-order and
/// buffer-order arcs between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub factors: Vec<Factor>,
    /// `before[i][j]`: factor `i` strictly precedes factor `j`.
    pub before: Vec<Vec<bool>>,
}

impl Skeleton {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn precedes(&self, i: usize, j: usize) -> bool {
        self.before[i][j]
    }
}

pub fn skeleton(u: &[Action], net: &Network) -> Result<Skeleton, MscError> {
    let g = comm_graph(u, net)?;
    let factors: Vec<Factor> = g.sccs().into_iter().map(|events| Factor { trace: events.iter().map(|&e| u[e]).collect(), events }).collect();
    let n = factors.len();
    let mut of = vec![0usize; u.len()];
    for (i, f) in factors.iter().enumerate() {
        for &e in &f.events {
            of[e] = i;
        }
    }
    let mut before = vec![vec![false; n]; n];
    for &(a, b, k) in &g.edges {
        if k != EdgeKind::Message && of[a] != of[b] {
            before[of[a]][of[b]] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if before[i][k] {
                for j in 0..n {
                    if before[k][j] {
                        before[i][j] = true;
                    }
                }
            }
        }
    }
    Ok(Skeleton { factors, before })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArcKind {
    /// Same sender and increasing position, or same target with the earlier send matched.
    Direct,
    /// From a send by p to a matched send addressed to p, in either direction of positions.
    Indirect,
}

/// A path through an ms-sequence: `positions[k]` carries label `k`; `arcs[k]`
/// justifies the step from label `k` to label `k+1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WellLabeling {
    pub positions: Vec<usize>,
    pub arcs: Vec<ArcKind>,
}

impl WellLabeling {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Label at each position of the sequence, `None` for unlabelled positions.
    pub fn labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (k, &p) in self.positions.iter().enumerate() {
            out[p] = Some(k);
        }
        out
    }
}

/// The arc from position `i` to position `j` of `ms`, if any.
pub fn arc(ms: &[MarkedLetter], i: usize, j: usize) -> Option<ArcKind> {
    if i == j {
        return None;
    }
    let (a, b) = (ms[i].action, ms[j].action);
    if i < j && (a.actor == b.actor || (a.peer == b.peer && !ms[i].barred)) {
        return Some(ArcKind::Direct);
    }
    if !ms[j].barred && b.peer == a.actor {
        return Some(ArcKind::Indirect);
    }
    None
}

/// A shortest well-labeling from `from` to `to`, found by breadth-first
/// search over direct and indirect arcs.
pub fn find_well_labeling(ms: &[MarkedLetter], from: usize, to: usize) -> Option<WellLabeling> {
    let n = ms.len();
    if from >= n || to >= n {
        return None;
    }
    let mut parent: Vec<Option<(usize, ArcKind)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(x) = queue.pop_front() {
        if x == to {
            break;
        }
        for y in 0..n {
            if !seen[y] {
                if let Some(k) = arc(ms, x, y) {
                    seen[y] = true;
                    parent[y] = Some((x, k));
                    queue.push_back(y);
                }
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut positions = vec![to];
    let mut arcs = Vec::new();
    let mut cur = to;
    while let Some((p, k)) = parent[cur] {
        positions.push(p);
        arcs.push(k);
        cur = p;
    }
    positions.reverse();
    arcs.reverse();
    Some(WellLabeling { positions, arcs })
}

/// The largest size a shortest well-labeling can have over `num_processes` processes.
pub fn well_labeling_bound(num_processes: usize) -> usize {
    num_processes * num_processes + num_processes
}

/// Processes that act in `u`.
pub fn active_processes(u: &[Action]) -> BTreeSet<ProcessId> {
    u.iter().map(|a| a.actor).collect()
}
