//! Brute-force checks of the structural facts on small objects.

use mbsync_core::automata::{sync_of_property, AsyncProduct, Nfa, SyncState};
use mbsync_core::commgraph;
use mbsync_core::model::{self, Action, Cfm, MessageId, Network, ProcSet, ProcessId};
use mbsync_core::msc::{self, MarkedLetter};
use mbsync_core::oracle;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

/// Objects examined and the violations found.
#[derive(Debug, Default)]
pub struct Tally {
    pub objects: usize,
    pub violations: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.objects += 1;
        if !ok && self.violations.len() < 20 {
            self.violations.push(what());
        }
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const P: usize = 3;

fn pid(i: usize) -> ProcessId {
    ProcessId(i as u16)
}

fn letters_of(p: usize, msgs: usize) -> Vec<Action> {
    let mut v = Vec::new();
    for q in (0..P).filter(|&q| q != p) {
        for m in 0..msgs {
            v.push(Action::send(pid(p), pid(q), MessageId(m as u16)));
            v.push(Action::receive(pid(p), pid(q), MessageId(m as u16)));
        }
    }
    v
}

/// One viable linearization of the given projections, if any.
fn linearize(lanes: &[Vec<Action>], net: &Network) -> Option<Vec<Action>> {
    let total: usize = lanes.iter().map(Vec::len).sum();
    let mut seen: HashSet<(Vec<usize>, Vec<Action>)> = HashSet::new();
    fn go(
        lanes: &[Vec<Action>],
        net: &Network,
        idx: &mut Vec<usize>,
        cur: &mut Vec<Action>,
        total: usize,
        seen: &mut HashSet<(Vec<usize>, Vec<Action>)>,
    ) -> bool {
        if cur.len() == total {
            return true;
        }
        // Pending messages determine the future; memoise on them.
        let pending: Vec<Action> = {
            let mate = oracle::matching(net, cur).expect("viable prefix");
            (0..cur.len()).filter(|&i| cur[i].is_send() && mate[i].is_none()).map(|i| cur[i]).collect()
        };
        if !seen.insert((idx.clone(), pending)) {
            return false;
        }
        for l in 0..lanes.len() {
            if idx[l] < lanes[l].len() {
                cur.push(lanes[l][idx[l]]);
                if model::is_viable(net, cur) {
                    idx[l] += 1;
                    if go(lanes, net, idx, cur, total, seen) {
                        return true;
                    }
                    idx[l] -= 1;
                }
                cur.pop();
            }
        }
        false
    }
    let mut idx = vec![0; lanes.len()];
    let mut cur = Vec::new();
    go(lanes, net, &mut idx, &mut cur, total, &mut seen).then_some(cur)
}

/// Calls `f` on one viable linearization of every message sequence chart
/// over three processes and a single message with at most `max` events.
/// Process names are canonical: a process acts only if all lower ones do.
fn for_each_msc(max: usize, net: &Network, f: &mut dyn FnMut(&[Action])) {
    let alpha: Vec<Vec<Action>> = (0..P).map(|p| letters_of(p, 1)).collect();
    let mut lanes: Vec<Vec<Action>> = vec![Vec::new(); P];
    fn words(alpha: &[Action], len: usize, out: &mut Vec<Vec<Action>>) {
        let mut w = vec![0usize; len];
        loop {
            out.push(w.iter().map(|&i| alpha[i]).collect());
            let mut i = 0;
            while i < len {
                w[i] += 1;
                if w[i] < alpha.len() {
                    break;
                }
                w[i] = 0;
                i += 1;
            }
            if i == len {
                return;
            }
        }
    }
    let mut by_len: Vec<Vec<Vec<Vec<Action>>>> = Vec::new();
    for p in 0..P {
        let mut per = Vec::new();
        for len in 0..=max {
            let mut out = Vec::new();
            words(&alpha[p], len, &mut out);
            per.push(out);
        }
        by_len.push(per);
    }
    for a in 0..=max {
        for b in 0..=max - a {
            for c in 0..=max - a - b {
                if (a == 0 && (b > 0 || c > 0)) || (b == 0 && c > 0) {
                    continue;
                }
                for w0 in &by_len[0][a] {
                    lanes[0] = w0.clone();
                    for w1 in &by_len[1][b] {
                        lanes[1] = w1.clone();
                        for w2 in &by_len[2][c] {
                            lanes[2] = w2.clone();
                            if !counts_ok(&lanes) {
                                continue;
                            }
                            if let Some(u) = linearize(&lanes, net) {
                                f(&u);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Every channel has at least as many sends as receives.
fn counts_ok(lanes: &[Vec<Action>]) -> bool {
    let mut bal: HashMap<(ProcessId, ProcessId), i32> = HashMap::new();
    for a in lanes.iter().flatten() {
        let (s, r) = a.channel();
        *bal.entry((s, r)).or_default() += if a.is_send() { 1 } else { -1 };
    }
    bal.values().all(|&v| v >= 0)
}

/// Atomicity by definition: no split of the events into per-process prefixes
/// `u1` and suffixes `u2` with `u ≡ u1 * u2` and both non-empty.
fn atomic_by_splitting(net: &Network, u: &[Action]) -> bool {
    let n = u.len();
    if n == 0 {
        return false;
    }
    let mut pos_in_lane = vec![0usize; n];
    let mut count: HashMap<ProcessId, usize> = HashMap::new();
    for (i, a) in u.iter().enumerate() {
        let c = count.entry(a.actor).or_default();
        pos_in_lane[i] = *c;
        *c += 1;
    }
    for set in 1u32..(1 << n) - 1 {
        // Per-process prefix closure.
        let closed = (0..n).all(|i| {
            set >> i & 1 == 0 || (0..i).all(|j| u[j].actor != u[i].actor || set >> j & 1 == 1)
        });
        if !closed {
            continue;
        }
        let u1: Vec<Action> = (0..n).filter(|&i| set >> i & 1 == 1).map(|i| u[i]).collect();
        let u2: Vec<Action> = (0..n).filter(|&i| set >> i & 1 == 0).map(|i| u[i]).collect();
        if !model::is_viable(net, &u1) || !model::is_viable(net, &u2) {
            continue;
        }
        let mate = oracle::matching(net, &u1).unwrap();
        let deaf: BTreeSet<u32> =
            (0..u1.len()).filter(|&i| u1[i].is_send() && mate[i].is_none()).map(|i| net.buffer(u1[i].actor, u1[i].peer)).collect();
        if u2.iter().any(|a| a.is_receive() && deaf.contains(&net.buffer(a.peer, a.actor))) {
            continue;
        }
        return false;
    }
    true
}

/// Reflexive reachability in the communication graph of an mb-viable `u`:
/// process order, buffer order, and message edges in both directions.
fn comm_reach(u: &[Action]) -> Vec<Vec<bool>> {
    let net = Network::Mailbox;
    let mate = oracle::matching(&net, u).unwrap();
    let n = u.len();
    let mut e = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i < j && u[i].actor == u[j].actor {
                e.push((i, j));
            }
            if u[i].is_send() && mate[i] == Some(j) {
                e.push((i, j));
                e.push((j, i));
            }
            if i != j && u[i].is_send() && u[j].is_send() && u[i].peer == u[j].peer {
                match (mate[i], mate[j]) {
                    (Some(_), None) => e.push((i, j)),
                    (Some(a), Some(b)) if a < b => e.push((i, j)),
                    _ => {}
                }
            }
        }
    }
    oracle::closure(n, &e)
}

/// Every mailbox exchange with at most `max` actions over `msgs` message
/// kinds, as `(sends, receives)`. Processes are canonical in the sends.
fn for_each_exchange(max: usize, msgs: usize, f: &mut dyn FnMut(&[Action], &[Action])) {
    let sends: Vec<Action> = (0..P).flat_map(|p| letters_of(p, msgs)).filter(|a| a.is_send()).collect();
    let recvs: Vec<Action> = (0..P).flat_map(|p| letters_of(p, msgs)).filter(|a| a.is_receive()).collect();
    let mut s = Vec::new();
    fn canonical(s: &[Action]) -> bool {
        let mut next = 0u16;
        for a in s {
            for p in [a.actor, a.peer] {
                if p.0 > next {
                    return false;
                }
                if p.0 == next {
                    next += 1;
                }
            }
        }
        true
    }
    fn recv_rec(s: &[Action], recvs: &[Action], r: &mut Vec<Action>, left: usize, f: &mut dyn FnMut(&[Action], &[Action])) {
        f(s, r);
        if left == 0 {
            return;
        }
        for &a in recvs {
            r.push(a);
            let mut u = s.to_vec();
            u.extend_from_slice(r);
            if model::is_viable(&Network::Mailbox, &u) {
                recv_rec(s, recvs, r, left - 1, f);
            }
            r.pop();
        }
    }
    fn send_rec(
        sends: &[Action],
        recvs: &[Action],
        s: &mut Vec<Action>,
        max: usize,
        f: &mut dyn FnMut(&[Action], &[Action]),
    ) {
        if canonical(s) {
            let mut r = Vec::new();
            recv_rec(s, recvs, &mut r, max - s.len(), f);
        } else {
            return;
        }
        if s.len() == max {
            return;
        }
        for &a in sends {
            s.push(a);
            send_rec(sends, recvs, s, max, f);
            s.pop();
        }
    }
    send_rec(&sends, &recvs, &mut s, max, f);
}

/// Marked ms-images of synchronous traces of `cfm` up to `max` letters with
/// the reached global state and deaf set, by enumeration.
fn sync_images_by_enumeration(cfm: &Cfm, max: usize) -> BTreeSet<(Vec<MarkedLetter>, Vec<u32>, ProcSet)> {
    let mut out = BTreeSet::new();
    model::for_each_trace(cfm, &Network::Mailbox, 2 * max, 1 << 22, &mut |t, confs| {
        if !oracle::is_synchronous_exhaustive(&Network::Mailbox, t) {
            return;
        }
        let ms = msc::ms(t).unwrap();
        if ms.len() > max {
            return;
        }
        let mut deaf = ProcSet::EMPTY;
        for l in &ms {
            if l.barred {
                deaf.insert(l.action.peer);
            }
        }
        for c in confs {
            out.insert((ms.clone(), c.global.clone(), deaf));
        }
    })
    .unwrap();
    out
}

fn sync_images_by_automaton(cfm: &Cfm, max: usize) -> BTreeSet<(Vec<MarkedLetter>, Vec<u32>, ProcSet)> {
    let lift = sync_of_property(AsyncProduct::new(cfm));
    let mut out = BTreeSet::new();
    let mut seen = HashSet::new();
    let mut queue: VecDeque<_> = lift.initial_states().into_iter().map(|s| (s, Vec::new())).collect();
    let mut buf = Vec::new();
    while let Some((s, w)) = queue.pop_front() {
        if !seen.insert((s.clone(), w.clone())) {
            continue;
        }
        if let SyncState::Boundary { at, deaf, .. } = &s {
            out.insert((w.clone(), at.clone(), *deaf));
        }
        buf.clear();
        lift.successors(&s, &mut buf);
        for (l, t) in buf.drain(..) {
            match l {
                None => queue.push_back((t, w.clone())),
                Some(l) if w.len() < max => {
                    let mut w2 = w.clone();
                    w2.push(l);
                    queue.push_back((t, w2));
                }
                Some(_) => {}
            }
        }
    }
    out
}


/// Mailbox exchanges with equal ms-images are equivalent, and normalizing an
/// exchange keeps it viable and equivalent.
pub fn ms_equality(max: usize, msgs: usize) -> Tally {
    let mut tally = Tally::default();
    let mut by_sends: HashMap<Vec<Action>, HashMap<Vec<bool>, Vec<Action>>> = HashMap::new();
    for_each_exchange(max, msgs, &mut |s, r| {
        let mut u = s.to_vec();
        u.extend_from_slice(r);
        let ms = msc::ms(&u).unwrap();
        let flags: Vec<bool> = ms.iter().map(|l| l.barred).collect();
        let groups = by_sends.entry(s.to_vec()).or_default();
        match groups.get(&flags) {
            Some(first) => tally.check(msc::equivalent(first, &u), || format!("{u:?} vs {first:?}")),
            None => {
                groups.insert(flags, u.clone());
            }
        }
        let hat = msc::normalize_exchange(&u).unwrap();
        tally.check(model::is_viable(&Network::Mailbox, &hat) && msc::equivalent(&hat, &u), || format!("normalize {u:?}"));
        if s.len() == max {
            by_sends.remove(s);
        }
    });
    tally
}

/// Strong connectivity of the communication graph against the splitting
/// definition of atomicity, on every non-empty chart.
pub fn atomicity(max: usize, net: &Network) -> Tally {
    let mut tally = Tally::default();
    for_each_msc(max, net, &mut |u| {
        if u.is_empty() {
            return;
        }
        let scc = commgraph::is_atomic(u, net).unwrap();
        tally.check(scc == atomic_by_splitting(net, u), || format!("{net:?} {u:?}: scc={scc}"));
    });
    tally
}

/// Well-labelings exist exactly for graph paths between sends, and the one
/// found respects the size bound. Returns the iff tally and the size tally.
pub fn well_labelings(max: usize) -> (Tally, Tally) {
    let bound = commgraph::well_labeling_bound(P);
    let mut iff = Tally::default();
    let mut size = Tally::default();
    let mut seen: HashSet<Vec<MarkedLetter>> = HashSet::new();
    for_each_exchange(max, 1, &mut |s, r| {
        let mut u = s.to_vec();
        u.extend_from_slice(r);
        let ms = msc::ms(&u).unwrap();
        if !seen.insert(ms.clone()) {
            return;
        }
        let reach = comm_reach(&u);
        // Sends come first, so position i of ms is event i of u.
        for i in 0..ms.len() {
            for j in (0..ms.len()).filter(|&j| j != i) {
                let w = commgraph::find_well_labeling(&ms, i, j);
                iff.check(reach[i][j] == w.is_some(), || format!("{u:?} {i}->{j}"));
                if let Some(w) = w {
                    size.check(w.len() <= bound, || format!("{u:?} {i}->{j}: size {}", w.len()));
                }
            }
        }
    });
    (iff, size)
}

/// The path criterion for appending a receive against the existence of an
/// mb-viable reordering.
pub fn append_receive(max: usize) -> Tally {
    let mut tally = Tally::default();
    for_each_msc(max - 1, &Network::Mailbox, &mut |v| {
        let mate = oracle::matching(&Network::Mailbox, v).unwrap();
        let mut done: HashSet<(ProcessId, ProcessId)> = HashSet::new();
        for i in 0..v.len() {
            let a = v[i];
            if !a.is_send() || mate[i].is_some() || !done.insert((a.actor, a.peer)) {
                continue;
            }
            let mut vr = v.to_vec();
            vr.push(a.dual());
            let criterion = oracle::append_receive_viable(v, a.dual());
            tally.check(criterion == oracle::is_mbsim_by_reordering(&vr), || format!("{vr:?}"));
        }
    });
    tally
}

/// The synchronous lift of each machine accepts exactly the marked
/// ms-images of its synchronous traces, with reached state and deaf set.
pub fn sync_lift(machines: &[Cfm], max_sends: usize) -> Tally {
    let mut tally = Tally::default();
    for c in machines {
        let a = sync_images_by_enumeration(c, max_sends);
        let b = sync_images_by_automaton(c, max_sends);
        tally.check(a == b, || model::render_cfm(c));
    }
    tally
}
