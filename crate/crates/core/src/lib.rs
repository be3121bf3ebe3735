//! Synchronizability analysis for communicating finite-state machines under
//! mailbox and peer-to-peer FIFO semantics.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: processes, actions, machines, networks and their step semantics.
//! * [`msc`]: message sequence charts, buffer order, equivalence, products, exchanges.
//! * [`commgraph`]: communication graphs, atomic decomposition, well-labelings.
//! * [`automata`]: lazily generated automata and the constructions built on them.
//! * [`decide`]: the decision procedures with witness extraction.
//! * [`oracle`]: brute-force reference implementations used to validate the engines.

pub mod automata;
pub mod commgraph;
pub mod decide;
pub mod model;
pub mod msc;
pub mod oracle;

pub use model::{
    Action, ActionKind, Cfm, Configuration, Global, Lts, MessageId, Network, ProcSet, ProcessId,
    Symbols, Trace,
};
