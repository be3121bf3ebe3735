//! Decision procedures over mailbox semantics, each returning a [`Verdict`]
//! with a replayable witness where one exists.

mod bounded;
mod generate;
mod ksync;
mod mbsim;
mod property;
mod reach;
mod sync;

pub use bounded::check_sync_bounded;
pub use generate::{gen_benchmark, Gadget};
pub use ksync::{atomic_profile, check_ksync, infer_k, AtomicProfile};
pub use mbsim::check_mbsim;
pub use property::{check_r_closed, model_check, RClosedViolation};
pub use reach::{reachable, reachable_boundaries, Boundary};
pub use sync::{check_sync, check_sync_with, SyncWitness};

use crate::automata::{Limits, Run, SearchError};
use crate::model::{Action, ModelError, Network, Trace};
use crate::msc::{self, MarkedLetter};
use std::fmt;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub states: usize,
    pub millis: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub answer: Answer,
    pub witness: Option<Trace>,
    pub k: Option<u64>,
    pub stats: Stats,
    /// False when the answer only covers a bounded part of the behaviours.
    pub exhaustive: bool,
}

impl Verdict {
    pub fn yes(states: usize, started: Instant) -> Self {
        Verdict { answer: Answer::Yes, witness: None, k: None, stats: stats(states, started), exhaustive: true }
    }

    pub fn no(witness: Option<Trace>, states: usize, started: Instant) -> Self {
        Verdict { answer: Answer::No, witness, k: None, stats: stats(states, started), exhaustive: true }
    }

    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }
}

fn stats(states: usize, started: Instant) -> Stats {
    Stats { states, millis: started.elapsed().as_millis() }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecideError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("this procedure supports at most {max} processes, the system has {n}")]
    TooManyProcesses { n: usize, max: usize },
    #[error("the property is not closed under reordering receives of distinct processes: from state {state}, `{first}` and `{second}` do not commute")]
    NotRClosed { state: String, first: String, second: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("internal error: witness does not replay ({0})")]
    Witness(String),
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub limits: Limits,
}

/// Splits the letters of a run into exchanges. `closes` tells whether a
/// state is reached by ending an exchange.
pub(crate) fn split_blocks<S>(run: &Run<MarkedLetter, S>, closes: impl Fn(&S) -> bool) -> Vec<Vec<MarkedLetter>> {
    let mut blocks = Vec::new();
    let mut cur = Vec::new();
    for (l, s) in &run.steps {
        match l {
            Some(l) => cur.push(*l),
            None if closes(s)
                && !cur.is_empty() => {
                    blocks.push(std::mem::take(&mut cur));
                }
            None => {}
        }
    }
    if !cur.is_empty() {
        blocks.push(cur);
    }
    blocks
}

/// The synchronous trace whose exchanges have the given ms-images.
pub fn trace_of_blocks(blocks: &[Vec<MarkedLetter>]) -> Trace {
    blocks.iter().flat_map(|b| msc::exchange_of_ms(b)).collect()
}

/// A mailbox-viable sequence equivalent to `u`, if any.
pub fn mb_linearization(u: &[Action]) -> Option<Trace> {
    let m = msc::msc_of(u).ok()?;
    m.linearize(&Network::Mailbox).ok().flatten()
}
