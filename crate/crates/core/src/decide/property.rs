use super::{split_blocks, trace_of_blocks, DecideError, Options, Verdict};
use crate::automata::{check_r_diamond, find_accepting, marked_alphabet, sync_of_property, AsyncProduct, Dfa, Label, Limits, NfaFile, Product, SyncState};
use crate::model::{self, Cfm, Network};
use std::collections::VecDeque;
use std::fmt;
use std::time::Instant;

/// Two receives of distinct processes that do not commute after `prefix`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RClosedViolation {
    /// A shortest word reaching the offending state of the minimal automaton.
    pub prefix: Vec<Label>,
    pub first: Label,
    pub second: Label,
}

impl fmt::Display for RClosedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prefix.is_empty() {
            f.write_str("the initial state")
        } else {
            let w: Vec<String> = self.prefix.iter().map(Label::to_string).collect();
            write!(f, "the state after `{}`", w.join(" "))
        }
    }
}

impl From<RClosedViolation> for DecideError {
    fn from(v: RClosedViolation) -> Self {
        DecideError::NotRClosed { state: v.to_string(), first: v.first.to_string(), second: v.second.to_string() }
    }
}

fn minimal_dfa(prop: &NfaFile, limits: &Limits) -> Result<Dfa<Label>, DecideError> {
    let nfa = prop.to_explicit();
    let alphabet = nfa.letters();
    Ok(Dfa::determinize(&nfa, alphabet, limits)?.minimize())
}

/// Is the language closed under swapping adjacent receives of distinct
/// processes? Decided on the minimal automaton, which has the diamond
/// property exactly when the language is closed.
pub fn check_r_closed(prop: &NfaFile, opts: &Options) -> Result<Option<RClosedViolation>, DecideError> {
    let dfa = minimal_dfa(prop, &opts.limits)?;
    let actor = |l: &Label| l.receiver().map(str::to_string);
    Ok(check_r_diamond(&dfa, actor, &opts.limits)?.map(|v| RClosedViolation {
        prefix: access_word(&dfa, v.state),
        first: v.first,
        second: v.second,
    }))
}

fn access_word(dfa: &Dfa<Label>, target: u32) -> Vec<Label> {
    let n = dfa.num_states();
    let mut parent: Vec<Option<(u32, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[dfa.initial as usize] = true;
    let mut queue = VecDeque::from([dfa.initial]);
    while let Some(s) = queue.pop_front() {
        if s == target {
            break;
        }
        for (i, &t) in dfa.delta[s as usize].iter().enumerate() {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = Some((s, i));
                queue.push_back(t);
            }
        }
    }
    let mut word = Vec::new();
    let mut c = target;
    while let Some((p, i)) = parent[c as usize] {
        word.push(dfa.alphabet[i].clone());
        c = p;
    }
    word.reverse();
    word
}

/// Does the marked trace of every synchronous execution belong to the
/// property? For synchronizable systems this covers every mailbox execution.
/// The property must be closed under swapping receives of distinct processes.
pub fn model_check(cfm: &Cfm, prop: &NfaFile, opts: &Options) -> Result<Verdict, DecideError> {
    let started = Instant::now();
    if prop.is_word_automaton() && !prop.transitions.is_empty() {
        return Err(DecideError::Input(format!("property `{}` has no send or receive labels", prop.name)));
    }
    if let Some(v) = check_r_closed(prop, opts)? {
        return Err(v.into());
    }
    let resolved = prop.resolve(&cfm.symbols);
    let bad = Dfa::determinize(&resolved, marked_alphabet(cfm), &opts.limits)?.minimize().complement();
    let lifted = sync_of_property(Product { left: AsyncProduct::new(cfm), right: bad });
    let out = find_accepting(&lifted, &opts.limits)?;
    Ok(match out.run {
        None => Verdict::yes(out.states, started),
        Some(run) => {
            let blocks = split_blocks(&run, |s| matches!(s, SyncState::Boundary { .. }));
            let t = trace_of_blocks(&blocks);
            model::run(cfm, &Network::Mailbox, &t).map_err(|i| DecideError::Witness(format!("blocked at action {i}")))?;
            Verdict::no(Some(t), out.states, started)
        }
    })
}
