use super::{split_blocks, trace_of_blocks, DecideError, Options, Verdict};
use crate::automata::{find_accepting, CfmTables, ExchangeNfa, ExchangeState, Frame};
use crate::model::{Cfm, Global, ProcSet, Trace};
use crate::msc::MarkedLetter;
use std::collections::{HashMap, VecDeque};
use std::time::Instant;

/// Global-state reachability through synchronous executions. Complete for
/// systems whose every execution is synchronizable; otherwise a `no` only
/// covers synchronous executions.
pub fn reachable(cfm: &Cfm, goal: &[u32], opts: &Options) -> Result<Verdict, DecideError> {
    let started = Instant::now();
    if goal.len() != cfm.num_processes() {
        return Err(DecideError::Input(format!("goal names {} local states for {} processes", goal.len(), cfm.num_processes())));
    }
    let tables = CfmTables::new(cfm);
    let goal = goal.to_vec();
    let nfa = ExchangeNfa {
        tables: &tables,
        start: (cfm.initial_global(), ProcSet::EMPTY),
        accept: Box::new(move |g: &Global, _| *g == goal),
    };
    let out = find_accepting(&nfa, &opts.limits)?;
    Ok(match out.run {
        Some(run) => {
            let blocks = split_blocks(&run, |s| matches!(s, ExchangeState::Boundary(..)));
            let mut v = Verdict::yes(out.states, started);
            v.witness = Some(trace_of_blocks(&blocks));
            v
        }
        None => Verdict::no(None, out.states, started),
    })
}

/// A boundary pair reachable by a synchronous execution, with one such
/// execution given as ms-images of its exchanges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Boundary {
    pub global: Global,
    pub deaf: ProcSet,
    pub blocks: Vec<Vec<MarkedLetter>>,
}

impl Boundary {
    pub fn trace(&self) -> Trace {
        trace_of_blocks(&self.blocks)
    }
}

/// Every reachable boundary pair, in breadth-first order of exchanges.
/// The second component counts explored frames.
pub fn reachable_boundaries(cfm: &Cfm, opts: &Options) -> Result<(Vec<Boundary>, usize), DecideError> {
    let tables = CfmTables::new(cfm);
    let mut out: Vec<Boundary> = Vec::new();
    let mut index: HashMap<(Global, ProcSet), usize> = HashMap::new();
    let start = (cfm.initial_global(), ProcSet::EMPTY);
    index.insert(start.clone(), 0);
    out.push(Boundary { global: start.0, deaf: start.1, blocks: Vec::new() });
    let mut explored = 0usize;
    let mut queue = VecDeque::from([0usize]);
    let mut buf = Vec::new();
    while let Some(b) = queue.pop_front() {
        // Exchanges from this boundary, breadth-first over frames.
        let root = Frame::open(&out[b].global, out[b].deaf);
        let mut frames: Vec<(Frame, usize, Option<MarkedLetter>)> = vec![(root.clone(), usize::MAX, None)];
        let mut seen: HashMap<Frame, ()> = HashMap::from([(root, ())]);
        let mut i = 0;
        while i < frames.len() {
            explored += 1;
            opts.limits.check(explored)?;
            let f = frames[i].0.clone();
            if i > 0 {
                if let Some(g) = f.close() {
                    let key = (g, f.deaf);
                    if !index.contains_key(&key) {
                        let mut block = Vec::new();
                        let mut j = i;
                        while let Some(l) = frames[j].2 {
                            block.push(l);
                            j = frames[j].1;
                        }
                        block.reverse();
                        let mut blocks = out[b].blocks.clone();
                        blocks.push(block);
                        index.insert(key.clone(), out.len());
                        queue.push_back(out.len());
                        out.push(Boundary { global: key.0, deaf: key.1, blocks });
                    }
                }
            }
            buf.clear();
            f.send_moves(&tables, &mut buf);
            for (l, f2) in buf.drain(..) {
                if seen.insert(f2.clone(), ()).is_none() {
                    frames.push((f2, i, Some(l)));
                }
            }
            i += 1;
        }
    }
    Ok((out, explored))
}
