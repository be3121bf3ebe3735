//! The `.nfa` property format.
//!
//! ```text
//! nfa no_late_ack
//! init q0
//! final q0 q1
//! q0 -> q1 : p!q(req)
//! q1 -> q0 : q?p(req)
//! q0 -> q0 : p!!q(req)
//! ```
//!
//! Labels are sends, receives, barred sends (`!!`), or bare identifiers for
//! plain word automata used by `gen intersection`. Names are kept as strings
//! so that a property can mention processes or messages the machine lacks.

use super::ExplicitNfa;
use crate::model::format::{is_ident, split_label, strip_comment, ParseError};
use crate::model::{Action, ActionKind, Symbols};
use crate::msc::MarkedLetter;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Send { actor: String, peer: String, msg: String },
    Barred { actor: String, peer: String, msg: String },
    Receive { actor: String, peer: String, msg: String },
    Word(String),
}

impl Label {
    pub fn parse(text: &str) -> Result<Label, String> {
        let text = text.trim();
        if is_ident(text) {
            return Ok(Label::Word(text.to_string()));
        }
        let raw = split_label(text)?;
        let (actor, peer, msg) = (raw.actor.to_string(), raw.peer.to_string(), raw.msg.to_string());
        Ok(match raw.op {
            "!" => Label::Send { actor, peer, msg },
            "!!" => Label::Barred { actor, peer, msg },
            _ => Label::Receive { actor, peer, msg },
        })
    }

    /// The performing process of a receive.
    pub fn receiver(&self) -> Option<&str> {
        match self {
            Label::Receive { actor, .. } => Some(actor),
            _ => None,
        }
    }

    /// The letter this label denotes over `symbols`, if every name is known.
    pub fn resolve(&self, symbols: &Symbols) -> Option<MarkedLetter> {
        let (kind, barred, actor, peer, msg) = match self {
            Label::Send { actor, peer, msg } => (ActionKind::Send, false, actor, peer, msg),
            Label::Barred { actor, peer, msg } => (ActionKind::Send, true, actor, peer, msg),
            Label::Receive { actor, peer, msg } => (ActionKind::Receive, false, actor, peer, msg),
            Label::Word(_) => return None,
        };
        let action = Action { kind, actor: symbols.process(actor)?, peer: symbols.process(peer)?, msg: symbols.message(msg)? };
        Some(MarkedLetter { action, barred })
    }

    pub fn of_letter(l: &MarkedLetter, symbols: &Symbols) -> Label {
        let a = &l.action;
        let actor = symbols.process_name(a.actor).to_string();
        let peer = symbols.process_name(a.peer).to_string();
        let msg = symbols.message_name(a.msg).to_string();
        match (a.kind, l.barred) {
            (ActionKind::Receive, _) => Label::Receive { actor, peer, msg },
            (ActionKind::Send, true) => Label::Barred { actor, peer, msg },
            (ActionKind::Send, false) => Label::Send { actor, peer, msg },
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Send { actor, peer, msg } => write!(f, "{actor}!{peer}({msg})"),
            Label::Barred { actor, peer, msg } => write!(f, "{actor}!!{peer}({msg})"),
            Label::Receive { actor, peer, msg } => write!(f, "{actor}?{peer}({msg})"),
            Label::Word(w) => f.write_str(w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NfaFile {
    pub name: String,
    pub states: Vec<String>,
    pub initial: u32,
    pub finals: Vec<u32>,
    pub transitions: Vec<(u32, Label, u32)>,
}

impl NfaFile {
    pub fn to_explicit(&self) -> ExplicitNfa<Label> {
        let mut delta = vec![Vec::new(); self.states.len()];
        for (s, l, t) in &self.transitions {
            delta[*s as usize].push((Some(l.clone()), *t));
        }
        let mut finals = vec![false; self.states.len()];
        for &f in &self.finals {
            finals[f as usize] = true;
        }
        ExplicitNfa { initial: vec![self.initial], finals, delta }
    }

    /// The automaton over the letters of a machine with `symbols`.
    /// Transitions naming unknown processes or messages can never fire and are dropped.
    pub fn resolve(&self, symbols: &Symbols) -> ExplicitNfa<MarkedLetter> {
        let mut delta = vec![Vec::new(); self.states.len()];
        for (s, l, t) in &self.transitions {
            if let Some(letter) = l.resolve(symbols) {
                delta[*s as usize].push((Some(letter), *t));
            }
        }
        let mut finals = vec![false; self.states.len()];
        for &f in &self.finals {
            finals[f as usize] = true;
        }
        ExplicitNfa { initial: vec![self.initial], finals, delta }
    }

    pub fn is_word_automaton(&self) -> bool {
        self.transitions.iter().all(|(_, l, _)| matches!(l, Label::Word(_)))
    }

    pub fn render(&self) -> String {
        let mut out = format!("nfa {}\ninit {}\nfinal", self.name, self.states[self.initial as usize]);
        for &f in &self.finals {
            out.push(' ');
            out.push_str(&self.states[f as usize]);
        }
        out.push('\n');
        for (s, l, t) in &self.transitions {
            out.push_str(&format!("{} -> {} : {}\n", self.states[*s as usize], self.states[*t as usize], l));
        }
        out
    }
}

pub fn parse_nfa(text: &str) -> Result<NfaFile, ParseError> {
    let mut name = None;
    let mut init: Option<String> = None;
    let mut finals: Vec<String> = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut trans: Vec<(String, Label, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or_default();
        match head {
            "nfa" => {
                let n: Vec<&str> = words.collect();
                if n.len() != 1 || !is_ident(n[0]) {
                    return Err(ParseError::new(ln, "expected `nfa NAME`"));
                }
                if name.is_some() {
                    return Err(ParseError::new(ln, "duplicate `nfa` header"));
                }
                name = Some(n[0].to_string());
            }
            "init" => {
                let n: Vec<&str> = words.collect();
                if n.len() != 1 || !is_ident(n[0]) {
                    return Err(ParseError::new(ln, "expected `init STATE`"));
                }
                if init.is_some() {
                    return Err(ParseError::new(ln, "duplicate `init`"));
                }
                init = Some(n[0].to_string());
            }
            "final" => {
                for w in words {
                    if !is_ident(w) {
                        return Err(ParseError::new(ln, format!("invalid state name `{w}`")));
                    }
                    finals.push(w.to_string());
                    order.push(w.to_string());
                }
            }
            _ => {
                let (lhs, label) = line.split_once(':').ok_or_else(|| ParseError::new(ln, format!("unrecognized line `{line}`")))?;
                let (src, dst) = lhs.split_once("->").ok_or_else(|| ParseError::new(ln, "expected `STATE -> STATE : LABEL`"))?;
                let (src, dst) = (src.trim(), dst.trim());
                for s in [src, dst] {
                    if !is_ident(s) {
                        return Err(ParseError::new(ln, format!("invalid state name `{s}`")));
                    }
                }
                let label = Label::parse(label).map_err(|m| ParseError::new(ln, m))?;
                order.push(src.to_string());
                order.push(dst.to_string());
                trans.push((src.to_string(), label, dst.to_string()));
            }
        }
    }
    let name = name.unwrap_or_else(|| "property".to_string());
    let init = init.ok_or_else(|| ParseError::new(text.lines().count().max(1), "missing `init`"))?;
    let mut states: Vec<String> = vec![init];
    let mut index: HashMap<String, u32> = HashMap::from([(states[0].clone(), 0)]);
    for s in order {
        if !index.contains_key(&s) {
            index.insert(s.clone(), states.len() as u32);
            states.push(s);
        }
    }
    let mut fin: Vec<u32> = finals.iter().map(|f| index[f]).collect();
    fin.sort_unstable();
    fin.dedup();
    let transitions = trans.into_iter().map(|(s, l, t)| (index[&s], l, index[&t])).collect();
    Ok(NfaFile { name, states, initial: 0, finals: fin, transitions })
}
