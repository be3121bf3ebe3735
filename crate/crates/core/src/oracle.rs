//! Brute-force reference implementations.
//!
//! Nothing here depends on the engine modules: matching, happens-before,
//! buffer order, closures and strongly connected components are recomputed
//! from scratch with quadratic or cubic algorithms. Everything is meant for
//! traces of a handful of actions.

use crate::model::{self, Action, Cfm, Configuration, Global, Network, ProcSet, Trace, DEFAULT_NODE_CAP};
use std::collections::{BTreeSet, HashMap};

/// For each position, the matching position (send to receive and back), by
/// FIFO matching per buffer. `None` if the sequence is not viable over `net`.
pub fn matching(net: &Network, u: &[Action]) -> Option<Vec<Option<usize>>> {
    let mut pending: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut heads: HashMap<u32, usize> = HashMap::new();
    let mut mate = vec![None; u.len()];
    for (i, a) in u.iter().enumerate() {
        let (from, to) = a.channel();
        let b = net.buffer(from, to);
        if a.is_send() {
            pending.entry(b).or_default().push(i);
        } else {
            let h = heads.entry(b).or_insert(0);
            let j = *pending.get(&b)?.get(*h)?;
            let s = u[j];
            if s.actor != a.peer || s.peer != a.actor || s.msg != a.msg {
                return None;
            }
            *h += 1;
            mate[i] = Some(j);
            mate[j] = Some(i);
        }
    }
    Some(mate)
}

/// Reflexive-transitive closure by Warshall's algorithm.
pub fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Edges of `<_P`, `msg` and the buffer order of `net` over the positions of
/// `u`, where `mate` is its matching. Message edges are added in both
/// directions when `symmetric_msg` holds (communication graph), forward only
/// otherwise (happens-before).
fn edges(net: &Network, u: &[Action], mate: &[Option<usize>], symmetric_msg: bool) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    let n = u.len();
    for i in 0..n {
        for j in i + 1..n {
            if u[i].actor == u[j].actor {
                e.push((i, j));
            }
        }
        if u[i].is_send() {
            if let Some(r) = mate[i] {
                e.push((i, r));
                if symmetric_msg {
                    e.push((r, i));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !u[i].is_send() || !u[j].is_send() {
                continue;
            }
            if net.buffer(u[i].actor, u[i].peer) != net.buffer(u[j].actor, u[j].peer) {
                continue;
            }
            match (mate[i], mate[j]) {
                (Some(_), None) => e.push((i, j)),
                (Some(f), Some(g)) if u[f].actor == u[g].actor && f < g => e.push((i, j)),
                _ => {}
            }
        }
    }
    e
}

/// Is there a `(<_hb ∪ <_N)`-path from position `i` to position `j` of the
/// p2p-viable sequence `u`? Message pairing follows p2p matching.
pub fn path_exists(net: &Network, u: &[Action], i: usize, j: usize) -> bool {
    let mate = matching(&Network::P2p, u).expect("path_exists needs a p2p-viable sequence");
    let c = closure(u.len(), &edges(net, u, &mate, false));
    c[i][j]
}

/// Same as [`path_exists`] but for a non-empty path (`i == j` needs a cycle).
pub fn nonempty_path_exists(net: &Network, u: &[Action], i: usize, j: usize) -> bool {
    let mate = matching(&Network::P2p, u).expect("needs a p2p-viable sequence");
    let e = edges(net, u, &mate, false);
    let c = closure(u.len(), &e);
    e.iter().any(|&(a, b)| a == i && c[b][j])
}

/// Strongly connected components of the communication graph of `u` over
/// `net`, as sorted position lists ordered by their minimal position.
pub fn sccs(net: &Network, u: &[Action]) -> Vec<Vec<usize>> {
    let mate = matching(net, u).expect("needs a viable sequence");
    let c = closure(u.len(), &edges(net, u, &mate, true));
    let mut seen = vec![false; u.len()];
    let mut out = Vec::new();
    for i in 0..u.len() {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = (0..u.len()).filter(|&j| c[i][j] && c[j][i]).collect();
        for &j in &comp {
            seen[j] = true;
        }
        out.push(comp);
    }
    out
}

/// True when no process receives and later sends within `events` (positions of `u`).
fn projections_in_s_star_r_star(u: &[Action], events: &[usize]) -> bool {
    let mut received = ProcSet::EMPTY;
    for &i in events {
        let a = u[i];
        if a.is_receive() {
            received.insert(a.actor);
        } else if received.contains(a.actor) {
            return false;
        }
    }
    true
}

/// Synchronizability of an mb-viable sequence: every strongly connected
/// component of its communication graph has all per-process projections in
/// `S*R*`.
pub fn is_synchronizable_bf(u: &[Action]) -> bool {
    sccs(&Network::Mailbox, u).iter().all(|c| projections_in_s_star_r_star(u, c))
}

/// Minimal `k` such that the mb-viable and synchronizable `u` is
/// k-synchronizable: the largest number of sends in one atomic factor.
pub fn min_k_bf(u: &[Action]) -> usize {
    sccs(&Network::Mailbox, u).iter().map(|c| c.iter().filter(|&&i| u[i].is_send()).count()).max().unwrap_or(0)
}

/// `u` is an exchange over `net`: viable and of shape `S*R*`.
pub fn is_exchange_bf(net: &Network, u: &[Action]) -> bool {
    let shape = u.windows(2).all(|w| !(w[0].is_receive() && w[1].is_send()));
    shape && matching(net, u).is_some()
}

/// Sends in `u` left unmatched, per buffer.
fn unmatched_buffers(net: &Network, u: &[Action]) -> BTreeSet<u32> {
    let mate = matching(net, u).expect("viable factor");
    (0..u.len()).filter(|&i| u[i].is_send() && mate[i].is_none()).map(|i| net.buffer(u[i].actor, u[i].peer)).collect()
}

fn received_buffers(net: &Network, u: &[Action]) -> BTreeSet<u32> {
    u.iter().filter(|a| a.is_receive()).map(|a| net.buffer(a.peer, a.actor)).collect()
}

/// Whether `u` splits into exchanges whose product is defined, by trying
/// every set of cut points.
pub fn is_synchronous_exhaustive(net: &Network, u: &[Action]) -> bool {
    if u.is_empty() {
        return true;
    }
    let n = u.len();
    (0u64..1 << (n - 1)).any(|cuts| {
        let mut factors: Vec<&[Action]> = Vec::new();
        let mut start = 0;
        for i in 1..n {
            if cuts >> (i - 1) & 1 == 1 {
                factors.push(&u[start..i]);
                start = i;
            }
        }
        factors.push(&u[start..]);
        if !factors.iter().all(|f| is_exchange_bf(net, f)) {
            return false;
        }
        let deaf: Vec<BTreeSet<u32>> = factors.iter().map(|f| unmatched_buffers(net, f)).collect();
        let recv: Vec<BTreeSet<u32>> = factors.iter().map(|f| received_buffers(net, f)).collect();
        (0..factors.len()).all(|i| (i + 1..factors.len()).all(|j| deaf[i].is_disjoint(&recv[j])))
    })
}

/// All interleavings of the per-process projections of `u` (the sequences
/// equivalent to `u`) that are viable over `net`. Calls `f` on each until it
/// returns true.
pub fn any_equivalent(net: &Network, u: &[Action], f: &mut dyn FnMut(&[Action]) -> bool) -> bool {
    let mut lanes: Vec<Vec<Action>> = Vec::new();
    let mut lane_of: HashMap<u16, usize> = HashMap::new();
    for a in u {
        let l = *lane_of.entry(a.actor.0).or_insert_with(|| {
            lanes.push(Vec::new());
            lanes.len() - 1
        });
        lanes[l].push(*a);
    }
    let mut idx = vec![0; lanes.len()];
    let mut cur = Vec::with_capacity(u.len());
    fn rec(
        net: &Network,
        lanes: &[Vec<Action>],
        idx: &mut Vec<usize>,
        cur: &mut Vec<Action>,
        total: usize,
        f: &mut dyn FnMut(&[Action]) -> bool,
    ) -> bool {
        if cur.len() == total {
            return f(cur);
        }
        for l in 0..lanes.len() {
            if idx[l] < lanes[l].len() {
                cur.push(lanes[l][idx[l]]);
                idx[l] += 1;
                let ok = model::is_viable(net, cur) && rec(net, lanes, idx, cur, total, f);
                idx[l] -= 1;
                cur.pop();
                if ok {
                    return true;
                }
            }
        }
        false
    }
    rec(net, &lanes, &mut idx, &mut cur, u.len(), f)
}

/// Definitional synchronizability: some mb-viable reordering of `u` with the
/// same projections is a product of exchanges.
pub fn is_synchronizable_by_reordering(u: &[Action]) -> bool {
    let net = Network::Mailbox;
    any_equivalent(&net, u, &mut |v| is_synchronous_exhaustive(&net, v))
}

/// Mailbox-similarity of a p2p-viable sequence: its MSC admits no cycle of
/// happens-before and mailbox order.
pub fn is_mbsim_bf(u: &[Action]) -> bool {
    let mate = matching(&Network::P2p, u).expect("needs a p2p-viable sequence");
    let c = closure(u.len(), &edges(&Network::Mailbox, u, &mate, false));
    let e = edges(&Network::Mailbox, u, &mate, false);
    !e.iter().any(|&(a, b)| c[b][a])
}

/// Definitional mailbox-similarity: some mb-viable sequence is equivalent to `u`.
pub fn is_mbsim_by_reordering(u: &[Action]) -> bool {
    any_equivalent(&Network::Mailbox, u, &mut |_| true)
}

/// For mb-viable `u` and a receive `r` with `u·r` p2p-viable: is `u·r`
/// equivalent to an mb-viable sequence? Decided by the path criterion: no
/// non-empty `(<_hb ∪ <_mb)`-path from an earlier unmatched send to the
/// receiver of `r` into the send matched by `r`.
pub fn append_receive_viable(u: &[Action], r: Action) -> bool {
    let mut ur = u.to_vec();
    ur.push(r);
    let mate = matching(&Network::P2p, &ur).expect("u·r must be p2p-viable");
    let j = mate[u.len()].expect("r is matched");
    let q = r.actor;
    let inner = matching(&Network::Mailbox, u).expect("u must be mb-viable");
    !(0..j).any(|i| u[i].is_send() && u[i].peer == q && inner[i].is_none() && nonempty_path_exists(&Network::Mailbox, u, i, j))
}

/// Results of exhaustive enumeration up to a trace-length bound.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub bound: usize,
    /// Number of mb traces enumerated.
    pub mb_traces: usize,
    /// Number of p2p traces enumerated.
    pub p2p_traces: usize,
    /// A shortest mb trace that is not synchronizable, if any.
    pub non_synchronizable: Option<Trace>,
    /// Global states reached by some mb trace.
    pub reachable: BTreeSet<Global>,
    /// A shortest p2p trace that is not mailbox-similar, if any.
    pub non_mbsim: Option<Trace>,
    /// Largest per-trace minimal k over synchronizable mb traces.
    pub max_k: usize,
    /// A trace attaining `max_k`.
    pub max_k_trace: Option<Trace>,
    /// Whether some trace of maximal length could still be extended.
    pub truncated: bool,
}

impl Report {
    pub fn synchronizable(&self) -> bool {
        self.non_synchronizable.is_none()
    }

    pub fn mbsim(&self) -> bool {
        self.non_mbsim.is_none()
    }

    /// k-synchronizable up to the bound.
    pub fn ksync(&self, k: usize) -> bool {
        self.synchronizable() && self.max_k <= k
    }
}

fn better(slot: &mut Option<Trace>, t: &[Action]) {
    if slot.as_ref().is_none_or(|s| t.len() < s.len()) {
        *slot = Some(t.to_vec());
    }
}

fn can_extend(cfm: &Cfm, net: &Network, confs: &[Configuration]) -> bool {
    confs.iter().any(|c| {
        cfm.process_ids().any(|p| cfm.lts(p).outgoing(c.global[p.index()]).any(|t| !model::step(cfm, net, c, &t.action).is_empty()))
    })
}

fn projections(cfm: &Cfm, t: &[Action]) -> Vec<Vec<Action>> {
    let mut out = vec![Vec::new(); cfm.processes.len()];
    for a in t {
        out[a.actor.index()].push(*a);
    }
    out
}

/// Enumerates all mb and p2p traces of `cfm` with at most `bound` actions and
/// records synchronizability, reachable global states, mailbox-similarity and
/// the per-trace minimal k.
pub fn exhaustive_verdicts(cfm: &Cfm, bound: usize) -> Result<Report, model::ModelError> {
    let mut rep = Report { bound, ..Report::default() };
    // Verdicts depend on the chart only, so equivalent traces share them.
    let mut sync_memo: HashMap<Vec<Vec<Action>>, Option<usize>> = HashMap::new();
    let mut sim_memo: HashMap<Vec<Vec<Action>>, bool> = HashMap::new();
    let mb = Network::Mailbox;
    model::for_each_trace(cfm, &mb, bound, DEFAULT_NODE_CAP, &mut |t, confs| {
        rep.mb_traces += 1;
        for c in confs {
            rep.reachable.insert(c.global.clone());
        }
        if t.len() == bound && can_extend(cfm, &mb, confs) {
            rep.truncated = true;
        }
        let k = *sync_memo
            .entry(projections(cfm, t))
            .or_insert_with(|| is_synchronizable_bf(t).then(|| min_k_bf(t)));
        if let Some(k) = k {
            if k > rep.max_k {
                rep.max_k = k;
                rep.max_k_trace = Some(t.to_vec());
            }
        } else {
            better(&mut rep.non_synchronizable, t);
        }
    })?;
    let p2p = Network::P2p;
    model::for_each_trace(cfm, &p2p, bound, DEFAULT_NODE_CAP, &mut |t, confs| {
        rep.p2p_traces += 1;
        if t.len() == bound && can_extend(cfm, &p2p, confs) {
            rep.truncated = true;
        }
        if !*sim_memo.entry(projections(cfm, t)).or_insert_with(|| is_mbsim_bf(t)) {
            better(&mut rep.non_mbsim, t);
        }
    })?;
    Ok(rep)
}
