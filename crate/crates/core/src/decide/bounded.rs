use super::{mb_linearization, trace_of_blocks, DecideError, Options, Verdict};
use crate::automata::{CfmTables, Frame};
use crate::commgraph;
use crate::model::{Action, Cfm, Global, Network, ProcSet, Trace};
use crate::msc::MarkedLetter;
use std::time::Instant;

/// Explicit counterexample search over synchronous executions with at most
/// `max_exchange` sends per exchange and `max_sends` sends in total. Each
/// execution is extended by every enabled receive of an unmatched message;
/// the result is a witness when it is mailbox-realisable and one of its
/// atomic factors is not equivalent to an exchange. A `yes` is exhaustive
/// only when no execution hit the bounds.
pub fn check_sync_bounded(cfm: &Cfm, max_exchange: usize, max_sends: usize, opts: &Options) -> Result<Verdict, DecideError> {
    let started = Instant::now();
    let tables = CfmTables::new(cfm);
    let mut ctx = Ctx { cfm, tables: &tables, max_exchange, max_sends, opts, nodes: 0, hit_bound: false, witness: None };
    let mut blocks = Vec::new();
    ctx.visit(&cfm.initial_global(), ProcSet::EMPTY, &mut blocks, 0)?;
    let mut v = match ctx.witness.take() {
        Some(w) => Verdict::no(Some(w), ctx.nodes, started),
        None => Verdict::yes(ctx.nodes, started),
    };
    v.exhaustive = !ctx.hit_bound || !v.is_yes();
    Ok(v)
}

struct Ctx<'a> {
    cfm: &'a Cfm,
    tables: &'a CfmTables,
    max_exchange: usize,
    max_sends: usize,
    opts: &'a Options,
    nodes: usize,
    hit_bound: bool,
    witness: Option<Trace>,
}

impl Ctx<'_> {
    fn visit(&mut self, g: &Global, deaf: ProcSet, blocks: &mut Vec<Vec<MarkedLetter>>, sends: usize) -> Result<(), DecideError> {
        self.nodes += 1;
        self.opts.limits.check(self.nodes).map_err(DecideError::Search)?;
        self.try_receives(g, blocks);
        if self.witness.is_some() {
            return Ok(());
        }
        // Enumerate exchanges from this boundary depth-first.
        let mut stack: Vec<(Frame, Vec<MarkedLetter>)> = vec![(Frame::open(g, deaf), Vec::new())];
        let mut buf = Vec::new();
        while let Some((f, word)) = stack.pop() {
            if !word.is_empty() {
                if let Some(g2) = f.close() {
                    blocks.push(word.clone());
                    self.visit(&g2, f.deaf, blocks, sends + word.len())?;
                    blocks.pop();
                    if self.witness.is_some() {
                        return Ok(());
                    }
                }
            }
            buf.clear();
            f.send_moves(self.tables, &mut buf);
            if buf.is_empty() {
                continue;
            }
            if word.len() >= self.max_exchange || sends + word.len() >= self.max_sends {
                self.hit_bound = true;
                continue;
            }
            for (l, f2) in buf.drain(..) {
                let mut w = word.clone();
                w.push(l);
                stack.push((f2, w));
            }
        }
        Ok(())
    }

    fn try_receives(&mut self, g: &Global, blocks: &[Vec<MarkedLetter>]) {
        let u = trace_of_blocks(blocks);
        let unmatched: Vec<MarkedLetter> = blocks.iter().flatten().filter(|l| l.barred).copied().collect();
        for q in self.cfm.process_ids() {
            for &(r, _) in &self.tables.recvs[q.index()][g[q.index()] as usize] {
                // The p2p buffer from r's sender must offer r's message first.
                let first = unmatched.iter().find(|l| l.action.actor == r.peer && l.action.peer == q);
                if first.map(|l| l.action.msg) != Some(r.msg) {
                    continue;
                }
                let mut v = u.clone();
                v.push(r);
                if let Some(w) = witness_for(&v) {
                    if self.witness.as_ref().is_none_or(|old| w.len() < old.len()) {
                        self.witness = Some(w);
                    }
                }
            }
        }
    }
}

fn witness_for(v: &[Action]) -> Option<Trace> {
    let w = mb_linearization(v)?;
    let factors = commgraph::decompose(&w, &Network::Mailbox).ok()?;
    let bad = factors.iter().any(|f| {
        let procs = commgraph::active_processes(&f.trace);
        procs.into_iter().any(|p| {
            let mut seen_receive = false;
            f.trace.iter().filter(|a| a.actor == p).any(|a| {
                if a.is_receive() {
                    seen_receive = true;
                    false
                } else {
                    seen_receive
                }
            })
        })
    });
    bad.then_some(w)
}
