//! Processes, actions, machines, process networks and the global transition
//! system.
//!
//! A [`Cfm`] is one finite labelled transition system per process. Executions
//! are interpreted over a [`Network`], which assigns a FIFO buffer to every
//! channel. Buffers store `(sender, receiver, message)` triples so that a
//! mailbox receive can check who sent the head message.

pub(crate) mod format;

pub use format::{parse_action, parse_cfm, parse_trace, render_cfm, render_trace, ParseError};

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

/// Upper bound on the number of processes of a system (processes are stored in a `u64` bitset).
pub const MAX_PROCESSES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcessId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageId(pub u16);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl MessageId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned process and message names. Ids are assigned in order of first
/// appearance, so iteration order is stable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    processes: Vec<String>,
    messages: Vec<String>,
    process_ids: HashMap<String, ProcessId>,
    message_ids: HashMap<String, MessageId>,
}

impl Symbols {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_process(&mut self, name: &str) -> ProcessId {
        if let Some(&id) = self.process_ids.get(name) {
            return id;
        }
        let id = ProcessId(self.processes.len() as u16);
        self.processes.push(name.to_string());
        self.process_ids.insert(name.to_string(), id);
        id
    }

    pub fn intern_message(&mut self, name: &str) -> MessageId {
        if let Some(&id) = self.message_ids.get(name) {
            return id;
        }
        let id = MessageId(self.messages.len() as u16);
        self.messages.push(name.to_string());
        self.message_ids.insert(name.to_string(), id);
        id
    }

    pub fn process(&self, name: &str) -> Option<ProcessId> {
        self.process_ids.get(name).copied()
    }

    pub fn message(&self, name: &str) -> Option<MessageId> {
        self.message_ids.get(name).copied()
    }

    pub fn process_name(&self, p: ProcessId) -> &str {
        &self.processes[p.index()]
    }

    pub fn message_name(&self, m: MessageId) -> &str {
        &self.messages[m.index()]
    }

    pub fn num_processes(&self) -> usize {
        self.processes.len()
    }

    pub fn num_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> + '_ {
        (0..self.processes.len()).map(|i| ProcessId(i as u16))
    }

    pub fn messages(&self) -> impl Iterator<Item = MessageId> + '_ {
        (0..self.messages.len()).map(|i| MessageId(i as u16))
    }

    /// Renders an action as `p!q(m)` or `p?q(m)`.
    pub fn action(&self, a: &Action) -> String {
        let op = match a.kind {
            ActionKind::Send => '!',
            ActionKind::Receive => '?',
        };
        format!(
            "{}{}{}({})",
            self.process_name(a.actor),
            op,
            self.process_name(a.peer),
            self.message_name(a.msg)
        )
    }

    pub fn trace(&self, t: &[Action]) -> Vec<String> {
        t.iter().map(|a| self.action(a)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Send,
    Receive,
}

/// `actor!peer(msg)` or `actor?peer(msg)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub kind: ActionKind,
    pub actor: ProcessId,
    pub peer: ProcessId,
    pub msg: MessageId,
}

impl Action {
    pub fn send(actor: ProcessId, peer: ProcessId, msg: MessageId) -> Self {
        Action { kind: ActionKind::Send, actor, peer, msg }
    }

    pub fn receive(actor: ProcessId, peer: ProcessId, msg: MessageId) -> Self {
        Action { kind: ActionKind::Receive, actor, peer, msg }
    }

    pub fn is_send(&self) -> bool {
        self.kind == ActionKind::Send
    }

    pub fn is_receive(&self) -> bool {
        self.kind == ActionKind::Receive
    }

    /// The channel `(sender, receiver)` the action uses.
    pub fn channel(&self) -> (ProcessId, ProcessId) {
        match self.kind {
            ActionKind::Send => (self.actor, self.peer),
            ActionKind::Receive => (self.peer, self.actor),
        }
    }

    /// The receive matching this send, or the send matching this receive.
    pub fn dual(&self) -> Action {
        Action {
            kind: match self.kind {
                ActionKind::Send => ActionKind::Receive,
                ActionKind::Receive => ActionKind::Send,
            },
            actor: self.peer,
            peer: self.actor,
            msg: self.msg,
        }
    }
}

pub type Trace = Vec<Action>;

/// One local state index per process.
pub type Global = Vec<u32>;

/// A set of processes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcSet(pub u64);

impl ProcSet {
    pub const EMPTY: ProcSet = ProcSet(0);

    pub fn contains(self, p: ProcessId) -> bool {
        self.0 >> p.0 & 1 == 1
    }

    pub fn with(self, p: ProcessId) -> ProcSet {
        ProcSet(self.0 | 1 << p.0)
    }

    pub fn insert(&mut self, p: ProcessId) {
        self.0 |= 1 << p.0;
    }

    pub fn union(self, o: ProcSet) -> ProcSet {
        ProcSet(self.0 | o.0)
    }

    pub fn intersects(self, o: ProcSet) -> bool {
        self.0 & o.0 != 0
    }

    pub fn is_subset(self, o: ProcSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = ProcessId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros();
            bits &= bits - 1;
            Some(ProcessId(i as u16))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub src: u32,
    pub action: Action,
    pub dst: u32,
}

/// The labelled transition system of one process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub states: Vec<String>,
    pub initial: u32,
    pub transitions: Vec<Transition>,
    out: Vec<Vec<usize>>,
}

impl Lts {
    pub fn new(states: Vec<String>, initial: u32, transitions: Vec<Transition>) -> Self {
        let mut out = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            out[t.src as usize].push(i);
        }
        Lts { states, initial, transitions, out }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<u32> {
        self.states.iter().position(|s| s == name).map(|i| i as u32)
    }

    /// Outgoing transitions of local state `s`.
    pub fn outgoing(&self, s: u32) -> impl Iterator<Item = &Transition> + '_ {
        self.out[s as usize].iter().map(move |&i| &self.transitions[i])
    }

    /// Local successors of `s` under `a`.
    pub fn successors(&self, s: u32, a: &Action) -> impl Iterator<Item = u32> + '_ {
        let a = *a;
        self.outgoing(s).filter(move |t| t.action == a).map(|t| t.dst)
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.states.len() as u32).all(|s| {
            let mut seen = HashSet::new();
            self.outgoing(s).all(|t| seen.insert(t.action))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("process `{process}`: transition label `{label}` is not an action of this process")]
    ActorMismatch { process: String, label: String },
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("too many processes ({0}); at most {MAX_PROCESSES} are supported")]
    TooManyProcesses(usize),
    #[error("a system needs at least one process")]
    NoProcesses,
    #[error("the network is not many-to-one")]
    NotManyToOne,
    #[error("exploration exceeded the budget of {0} configurations")]
    BudgetExceeded(usize),
}

/// A communicating finite-state machine: one [`Lts`] per process.
#[derive(Clone, Debug)]
pub struct Cfm {
    pub name: String,
    pub symbols: Symbols,
    pub processes: Vec<Lts>,
}

impl Cfm {
    /// Checks the structural invariants and builds the machine.
    pub fn new(name: impl Into<String>, symbols: Symbols, processes: Vec<Lts>) -> Result<Cfm, ModelError> {
        if processes.is_empty() {
            return Err(ModelError::NoProcesses);
        }
        if processes.len() > MAX_PROCESSES {
            return Err(ModelError::TooManyProcesses(processes.len()));
        }
        for (i, lts) in processes.iter().enumerate() {
            for t in &lts.transitions {
                if t.action.actor.index() != i || t.action.peer == t.action.actor {
                    return Err(ModelError::ActorMismatch {
                        process: symbols.process_name(ProcessId(i as u16)).to_string(),
                        label: symbols.action(&t.action),
                    });
                }
                if t.action.peer.index() >= processes.len() {
                    return Err(ModelError::UnknownProcess(symbols.process_name(t.action.peer).to_string()));
                }
            }
        }
        Ok(Cfm { name: name.into(), symbols, processes })
    }

    pub fn num_processes(&self) -> usize {
        self.processes.len()
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.processes.len()).map(|i| ProcessId(i as u16))
    }

    pub fn lts(&self, p: ProcessId) -> &Lts {
        &self.processes[p.index()]
    }

    pub fn initial_global(&self) -> Global {
        self.processes.iter().map(|l| l.initial).collect()
    }

    /// Every action labelling some transition, deduplicated and sorted.
    pub fn alphabet(&self) -> Vec<Action> {
        let mut v: Vec<Action> = self.processes.iter().flat_map(|l| l.transitions.iter().map(|t| t.action)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Total size: states plus transitions over all processes.
    pub fn size(&self) -> usize {
        self.processes.iter().map(|l| l.num_states() + l.transitions.len()).sum()
    }

    /// Parses `p=s,q=t,...` into a global state; unnamed processes must be named.
    pub fn parse_global(&self, text: &str) -> Result<Global, String> {
        let mut g: Vec<Option<u32>> = vec![None; self.num_processes()];
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (p, s) = part.split_once('=').ok_or_else(|| format!("expected `process=state`, got `{part}`"))?;
            let pid = self.symbols.process(p.trim()).ok_or_else(|| format!("unknown process `{}`", p.trim()))?;
            let lts = self.lts(pid);
            let sid = lts
                .state_index(s.trim())
                .ok_or_else(|| format!("process `{}` has no state `{}`", p.trim(), s.trim()))?;
            g[pid.index()] = Some(sid);
        }
        g.iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| format!("no state given for process `{}`", self.symbols.process_name(ProcessId(i as u16)))))
            .collect()
    }

    pub fn render_global(&self, g: &[u32]) -> String {
        g.iter()
            .enumerate()
            .map(|(i, &s)| format!("{}={}", self.symbols.process_name(ProcessId(i as u16)), self.processes[i].states[s as usize]))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Structural equality up to interning order: names, states, initial states
/// and transitions must coincide.
impl PartialEq for Cfm {
    fn eq(&self, other: &Cfm) -> bool {
        if self.name != other.name || self.processes.len() != other.processes.len() {
            return false;
        }
        let label = |c: &Cfm, t: &Transition, l: &Lts| (l.states[t.src as usize].clone(), c.symbols.action(&t.action), l.states[t.dst as usize].clone());
        self.process_ids().all(|p| {
            let name = self.symbols.process_name(p);
            let Some(q) = other.symbols.process(name) else { return false };
            let (a, b) = (self.lts(p), other.lts(q));
            a.states == b.states
                && a.initial == b.initial
                && a.transitions.len() == b.transitions.len()
                && a.transitions.iter().zip(&b.transitions).all(|(x, y)| label(self, x, a) == label(other, y, b))
        })
    }
}

/// Identifies a buffer of a network.
pub type BufferId = u32;

/// Assignment of channels to buffers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Network {
    /// One buffer per ordered pair of processes.
    P2p,
    /// One buffer per receiving process.
    Mailbox,
    /// An explicit channel-to-buffer map; unmapped channels get their own buffer.
    Custom(BTreeMap<(ProcessId, ProcessId), BufferId>),
}

impl Network {
    pub fn buffer(&self, from: ProcessId, to: ProcessId) -> BufferId {
        match self {
            Network::P2p => (from.0 as u32) << 16 | to.0 as u32,
            Network::Mailbox => to.0 as u32,
            Network::Custom(map) => map.get(&(from, to)).copied().unwrap_or(0x8000_0000 | (from.0 as u32) << 16 | to.0 as u32),
        }
    }

    /// `bf(p,q) = bf(p',q')` implies `q = q'`.
    pub fn is_many_to_one(&self) -> bool {
        match self {
            Network::P2p | Network::Mailbox => true,
            Network::Custom(map) => {
                let mut owner: HashMap<BufferId, ProcessId> = HashMap::new();
                map.iter().all(|(&(_, q), &b)| *owner.entry(b).or_insert(q) == q)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Network::P2p => "p2p",
            Network::Mailbox => "mb",
            Network::Custom(_) => "custom",
        }
    }
}

/// Buffer contents as `(sender, receiver, message)` triples.
pub type Buffer = VecDeque<(ProcessId, ProcessId, MessageId)>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub global: Global,
    /// Non-empty buffers only.
    pub buffers: BTreeMap<BufferId, Buffer>,
}

impl Configuration {
    pub fn initial(cfm: &Cfm) -> Self {
        Configuration { global: cfm.initial_global(), buffers: BTreeMap::new() }
    }

    pub fn buffer(&self, b: BufferId) -> Option<&Buffer> {
        self.buffers.get(&b)
    }

    /// Applies the buffer effect of `a` only, ignoring local states.
    fn apply_buffer(&mut self, net: &Network, a: &Action) -> bool {
        let (from, to) = a.channel();
        let b = net.buffer(from, to);
        match a.kind {
            ActionKind::Send => {
                self.buffers.entry(b).or_default().push_back((from, to, a.msg));
                true
            }
            ActionKind::Receive => {
                let Some(buf) = self.buffers.get_mut(&b) else { return false };
                if buf.front() != Some(&(from, to, a.msg)) {
                    return false;
                }
                buf.pop_front();
                if buf.is_empty() {
                    self.buffers.remove(&b);
                }
                true
            }
        }
    }
}

/// Successors of `conf` under `act`. The buffer effect is deterministic; more
/// than one successor appears only when the actor's LTS has several
/// transitions with the same label. An empty result means `act` is blocked.
pub fn step(cfm: &Cfm, net: &Network, conf: &Configuration, act: &Action) -> Vec<Configuration> {
    let p = act.actor.index();
    if p >= cfm.num_processes() {
        return Vec::new();
    }
    let mut next = conf.clone();
    if !next.apply_buffer(net, act) {
        return Vec::new();
    }
    let mut dsts: Vec<u32> = cfm.processes[p].successors(conf.global[p], act).collect();
    dsts.sort_unstable();
    dsts.dedup();
    dsts.into_iter()
        .map(|d| {
            let mut c = next.clone();
            c.global[p] = d;
            c
        })
        .collect()
}

/// Folds [`step`] from the initial configuration. Returns every reachable
/// final configuration, or the index of the first blocked action.
pub fn run(cfm: &Cfm, net: &Network, trace: &[Action]) -> Result<Vec<Configuration>, usize> {
    run_from(cfm, net, vec![Configuration::initial(cfm)], trace)
}

pub fn run_from(cfm: &Cfm, net: &Network, start: Vec<Configuration>, trace: &[Action]) -> Result<Vec<Configuration>, usize> {
    let mut cur = start;
    for (i, a) in trace.iter().enumerate() {
        let mut next: Vec<Configuration> = cur.iter().flat_map(|c| step(cfm, net, c, a)).collect();
        next.sort();
        next.dedup();
        if next.is_empty() {
            return Err(i);
        }
        cur = next;
    }
    Ok(cur)
}

/// Viability of an action sequence over `net`: at every prefix, each buffer
/// has received at most as often as it was sent to, and the k-th receive from
/// a buffer matches the k-th send to it.
pub fn is_viable(net: &Network, trace: &[Action]) -> bool {
    let mut conf = Configuration { global: Vec::new(), buffers: BTreeMap::new() };
    trace.iter().all(|a| conf.apply_buffer(net, a))
}

/// Subsequence of actions performed by `p`.
pub fn projection(trace: &[Action], p: ProcessId) -> Trace {
    trace.iter().filter(|a| a.actor == p).copied().collect()
}

/// Default cap on explored nodes for explicit enumeration.
pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// All viable traces of `cfm` over `net` with at most `maxlen` actions, in
/// depth-first order (every prefix precedes its extensions).
pub fn traces_up_to(cfm: &Cfm, net: &Network, maxlen: usize, cap: usize) -> Result<Vec<Trace>, ModelError> {
    let mut out = Vec::new();
    let mut budget = cap;
    let mut trace = Vec::new();
    let start = vec![Configuration::initial(cfm)];
    enumerate(cfm, net, &start, &mut trace, maxlen, &mut budget, &mut |t, _| out.push(t.to_vec()))
        .map_err(|_| ModelError::BudgetExceeded(cap))?;
    Ok(out)
}

/// Visits every viable trace up to `maxlen` together with the configurations it reaches.
pub fn for_each_trace(
    cfm: &Cfm,
    net: &Network,
    maxlen: usize,
    cap: usize,
    visit: &mut dyn FnMut(&[Action], &[Configuration]),
) -> Result<(), ModelError> {
    let mut budget = cap;
    let mut trace = Vec::new();
    let start = vec![Configuration::initial(cfm)];
    enumerate(cfm, net, &start, &mut trace, maxlen, &mut budget, visit).map_err(|_| ModelError::BudgetExceeded(cap))
}

fn enumerate(
    cfm: &Cfm,
    net: &Network,
    confs: &[Configuration],
    trace: &mut Trace,
    maxlen: usize,
    budget: &mut usize,
    visit: &mut dyn FnMut(&[Action], &[Configuration]),
) -> Result<(), ()> {
    if *budget == 0 {
        return Err(());
    }
    *budget -= 1;
    visit(trace, confs);
    if trace.len() == maxlen {
        return Ok(());
    }
    let mut enabled: Vec<Action> = Vec::new();
    for c in confs {
        for (p, lts) in cfm.processes.iter().enumerate() {
            for t in lts.outgoing(c.global[p]) {
                enabled.push(t.action);
            }
        }
    }
    enabled.sort();
    enabled.dedup();
    for a in enabled {
        let mut next: Vec<Configuration> = confs.iter().flat_map(|c| step(cfm, net, c, &a)).collect();
        if next.is_empty() {
            continue;
        }
        next.sort();
        next.dedup();
        trace.push(a);
        let r = enumerate(cfm, net, &next, trace, maxlen, budget, visit);
        trace.pop();
        r?;
    }
    Ok(())
}

/// A random execution of at most `maxlen` steps. `choose(n)` must return an
/// index below `n`; it picks among the enabled transitions at each step.
pub fn random_run(cfm: &Cfm, net: &Network, maxlen: usize, choose: &mut dyn FnMut(usize) -> usize) -> (Trace, Configuration) {
    let mut conf = Configuration::initial(cfm);
    let mut trace = Vec::new();
    for _ in 0..maxlen {
        let mut options: Vec<(Action, usize, u32)> = Vec::new();
        for (p, lts) in cfm.processes.iter().enumerate() {
            for t in lts.outgoing(conf.global[p]) {
                let mut probe = conf.clone();
                if probe.apply_buffer(net, &t.action) {
                    options.push((t.action, p, t.dst));
                }
            }
        }
        if options.is_empty() {
            break;
        }
        let (a, p, dst) = options[choose(options.len()) % options.len()];
        conf.apply_buffer(net, &a);
        conf.global[p] = dst;
        trace.push(a);
    }
    (trace, conf)
}

impl fmt::Display for ProcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p.0)?;
        }
        write!(f, "}}")
    }
}
