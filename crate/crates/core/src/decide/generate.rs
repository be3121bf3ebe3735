use super::DecideError;
use crate::automata::{Label, NfaFile};
use crate::model::{Action, Cfm, Lts, ProcessId, Symbols, Transition};
use std::collections::{BTreeSet, HashMap};

/// A gadget run once the whole ring has accepted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gadget {
    None,
    /// Makes the system non-synchronizable.
    NonSync,
    /// Makes the system not mailbox-similar while keeping it synchronizable.
    NonSim,
}

struct Builder {
    states: Vec<String>,
    index: HashMap<String, u32>,
    transitions: Vec<Transition>,
}

impl Builder {
    fn new(initial: &str) -> Self {
        let mut b = Builder { states: Vec::new(), index: HashMap::new(), transitions: Vec::new() };
        b.state(initial);
        b
    }

    fn state(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.states.len() as u32;
        self.states.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    fn add(&mut self, src: &str, action: Action, dst: &str) {
        let (src, dst) = (self.state(src), self.state(dst));
        let t = Transition { src, action, dst };
        if !self.transitions.contains(&t) {
            self.transitions.push(t);
        }
    }

    /// A straight line of actions from `from`, with fresh intermediate states.
    fn chain(&mut self, from: &str, prefix: &str, actions: &[Action]) {
        let mut cur = from.to_string();
        for (i, &a) in actions.iter().enumerate() {
            let next = format!("{prefix}{}", i + 1);
            self.add(&cur, a, &next);
            cur = next;
        }
    }

    fn build(self) -> Lts {
        Lts::new(self.states, 0, self.transitions)
    }
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    let mut s = base.to_string();
    while taken.contains(&s) {
        s.push('_');
    }
    s
}

/// The ring system for the intersection of word automata: `p1` guesses a
/// letter and sends it around the ring, every process following it in its
/// automaton; from final states an `accept` message travels from `p1` to
/// `pn`. The global state where every process is in `accept` is reachable
/// iff the intersection is non-empty. A gadget, if any, starts from `pn`'s
/// `accept` state.
pub fn gen_benchmark(nfas: &[NfaFile], gadget: Gadget) -> Result<Cfm, DecideError> {
    let n = nfas.len();
    if n < 2 {
        return Err(DecideError::Input("the ring needs at least two automata".into()));
    }
    let mut letters: BTreeSet<String> = BTreeSet::new();
    for f in nfas {
        for (_, l, _) in &f.transitions {
            match l {
                Label::Word(w) => {
                    letters.insert(w.clone());
                }
                other => return Err(DecideError::Input(format!("automaton `{}` has a non-word label `{other}`", f.name))),
            }
        }
    }
    let accept = fresh("accept", &letters);
    let mut taken = letters.clone();
    taken.insert(accept.clone());

    let mut sym = Symbols::new();
    let procs: Vec<ProcessId> = (1..=n).map(|i| sym.intern_process(&format!("p{i}"))).collect();
    let msg: HashMap<String, _> = letters.iter().map(|l| (l.clone(), sym.intern_message(l))).collect();
    let acc = sym.intern_message(&accept);
    let next = |i: usize| procs[(i + 1) % n];
    let prev = |i: usize| procs[(i + n - 1) % n];

    let mut builders = Vec::new();
    for (i, f) in nfas.iter().enumerate() {
        let p = procs[i];
        let name = |s: u32| &f.states[s as usize];
        let finals: BTreeSet<u32> = f.finals.iter().copied().collect();
        let mut b;
        if i == 0 {
            b = Builder::new(&format!("r_{}", name(f.initial)));
            for (s, l, t) in &f.transitions {
                let Label::Word(w) = l else { unreachable!() };
                let m = msg[w];
                let wait = format!("w_{}_{}", name(*t), w);
                b.add(&format!("r_{}", name(*s)), Action::send(p, next(i), m), &wait);
                b.add(&wait, Action::receive(p, prev(i), m), &format!("r_{}", name(*t)));
            }
            for &s in &finals {
                b.add(&format!("r_{}", name(s)), Action::send(p, next(i), acc), "accept");
            }
        } else {
            b = Builder::new(&format!("s_{}", name(f.initial)));
            for (s, l, t) in &f.transitions {
                let Label::Word(w) = l else { unreachable!() };
                let m = msg[w];
                let hold = format!("h_{}_{}", name(*t), w);
                b.add(&format!("s_{}", name(*s)), Action::receive(p, prev(i), m), &hold);
                b.add(&hold, Action::send(p, next(i), m), &format!("s_{}", name(*t)));
            }
            for &s in &finals {
                if i + 1 < n {
                    b.add(&format!("s_{}", name(s)), Action::receive(p, prev(i), acc), "relay");
                    b.add("relay", Action::send(p, next(i), acc), "accept");
                } else {
                    b.add(&format!("s_{}", name(s)), Action::receive(p, prev(i), acc), "accept");
                }
            }
        }
        b.state("accept");
        builders.push(b);
    }

    if gadget != Gadget::None {
        let pn = procs[n - 1];
        let g1 = sym.intern_process("g1");
        let g2 = sym.intern_process("g2");
        let go = sym.intern_message(&fresh("go", &taken));
        let (pn_line, g1_line, g2_line) = match gadget {
            Gadget::NonSync => {
                let [a, b, c, d] = ["a", "b", "c", "d"].map(|m| sym.intern_message(&fresh(&format!("g{m}"), &taken)));
                (
                    vec![Action::send(pn, g1, go), Action::send(pn, g1, b), Action::send(pn, g2, d), Action::receive(pn, g1, a)],
                    vec![Action::receive(g1, pn, go), Action::send(g1, pn, a), Action::receive(g1, pn, b), Action::send(g1, g2, c)],
                    vec![Action::receive(g2, g1, c), Action::receive(g2, pn, d)],
                )
            }
            Gadget::NonSim => {
                let dollar = sym.intern_message(&fresh("dollar", &taken));
                (
                    vec![Action::send(pn, g1, go), Action::send(pn, g2, dollar), Action::receive(pn, g1, dollar), Action::send(pn, g1, dollar)],
                    vec![Action::receive(g1, pn, go), Action::send(g1, pn, dollar), Action::receive(g1, pn, dollar), Action::send(g1, g2, dollar)],
                    vec![Action::receive(g2, g1, dollar)],
                )
            }
            Gadget::None => unreachable!(),
        };
        builders[n - 1].chain("accept", "gadget", &pn_line);
        let mut b1 = Builder::new("idle");
        b1.chain("idle", "t", &g1_line);
        let mut b2 = Builder::new("idle");
        b2.chain("idle", "t", &g2_line);
        builders.push(b1);
        builders.push(b2);
    }

    let name = nfas.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join("_x_");
    Ok(Cfm::new(format!("ring_{name}"), sym, builders.into_iter().map(Builder::build).collect())?)
}
