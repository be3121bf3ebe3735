use super::{split_blocks, trace_of_blocks, DecideError, Options, Verdict};
use crate::automata::causality::MAX_CAUSAL_PROCESSES;
use crate::automata::{find_accepting, marked_alphabet, sync_of_property, AsyncProduct, Product, SimilarityNfa, SyncState};
use crate::model::{self, Cfm, Network};
use std::time::Instant;

/// Is every p2p execution equivalent to a mailbox execution? Complete for
/// mailbox-synchronizable systems: a counterexample is then a synchronous
/// execution followed by one receive.
pub fn check_mbsim(cfm: &Cfm, opts: &Options) -> Result<Verdict, DecideError> {
    let started = Instant::now();
    let n = cfm.num_processes();
    if n > MAX_CAUSAL_PROCESSES {
        return Err(DecideError::TooManyProcesses { n, max: MAX_CAUSAL_PROCESSES });
    }
    let letters = marked_alphabet(cfm);
    let mut states = 0;
    let mut receives: Vec<_> = cfm.alphabet().into_iter().filter(|a| a.is_receive()).collect();
    receives.sort();
    receives.dedup();
    let mut best: Option<model::Trace> = None;
    for r in receives {
        let product = Product { left: AsyncProduct::enabling(cfm, r), right: SimilarityNfa::new(n, r, letters.clone()) };
        let lifted = sync_of_property(product);
        let out = find_accepting(&lifted, &opts.limits)?;
        states += out.states;
        if let Some(run) = out.run {
            let blocks = split_blocks(&run, |s| matches!(s, SyncState::Boundary { .. }));
            let mut t = trace_of_blocks(&blocks);
            t.push(r);
            model::run(cfm, &Network::P2p, &t).map_err(|i| DecideError::Witness(format!("blocked at action {i}")))?;
            if best.as_ref().is_none_or(|b| t.len() < b.len()) {
                best = Some(t);
            }
        }
    }
    Ok(match best {
        Some(t) => Verdict::no(Some(t), states, started),
        None => Verdict::yes(states, started),
    })
}
