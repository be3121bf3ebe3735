//! Line-oriented text formats for machines and traces.
//!
//! ```text
//! # comment
//! system ping
//! process p
//! init s0
//! s0 -> s1 : p!q(ping)
//! endprocess
//! ```
//!
//! An optional `states A B C` line inside a process block fixes the order of
//! local states and declares states that occur in no transition.

use super::{Action, ActionKind, Cfm, Lts, ModelError, Symbols, Trace, Transition};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Strips a trailing `#` comment and surrounding whitespace.
pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

/// The pieces of an action label `a!b(m)`, `a?b(m)` or `a!!b(m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawLabel<'a> {
    pub actor: &'a str,
    pub op: &'a str,
    pub peer: &'a str,
    pub msg: &'a str,
}

pub(crate) fn split_label(text: &str) -> Result<RawLabel<'_>, String> {
    let text = text.trim();
    let op_start = text.find(['!', '?']).ok_or_else(|| format!("`{text}` is not an action (expected p!q(m) or p?q(m))"))?;
    let actor = &text[..op_start];
    let rest = &text[op_start..];
    let op_len = if rest.starts_with("!!") { 2 } else { 1 };
    let op = &rest[..op_len];
    let rest = &rest[op_len..];
    let open = rest.find('(').ok_or_else(|| format!("`{text}`: missing `(`"))?;
    if !rest.ends_with(')') {
        return Err(format!("`{text}`: missing `)`"));
    }
    let peer = &rest[..open];
    let msg = &rest[open + 1..rest.len() - 1];
    for (what, id) in [("process", actor), ("process", peer), ("message", msg)] {
        if !is_ident(id) {
            return Err(format!("`{text}`: invalid {what} name `{id}`"));
        }
    }
    if actor == peer {
        return Err(format!("`{text}`: a process cannot send to itself"));
    }
    Ok(RawLabel { actor, op, peer, msg })
}

/// Parses `p!q(m)` or `p?q(m)`, interning names.
pub fn parse_action(text: &str, symbols: &mut Symbols) -> Result<Action, String> {
    let raw = split_label(text)?;
    let kind = match raw.op {
        "!" => ActionKind::Send,
        "?" => ActionKind::Receive,
        _ => return Err(format!("`{}`: `!!` is only allowed in property automata", text.trim())),
    };
    Ok(Action {
        kind,
        actor: symbols.intern_process(raw.actor),
        peer: symbols.intern_process(raw.peer),
        msg: symbols.intern_message(raw.msg),
    })
}

/// Parses a trace file: one action per line, `#` comments and blank lines ignored.
pub fn parse_trace(text: &str, symbols: &mut Symbols) -> Result<Trace, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = strip_comment(line);
        if line.is_empty() {
            continue;
        }
        out.push(parse_action(line, symbols).map_err(|m| ParseError::new(i + 1, m))?);
    }
    Ok(out)
}

pub fn render_trace(trace: &[Action], symbols: &Symbols) -> String {
    let mut s = String::new();
    for a in trace {
        let _ = writeln!(s, "{}", symbols.action(a));
    }
    s
}

struct ProcBlock {
    name: String,
    line: usize,
    init: Option<String>,
    states: Vec<String>,
    transitions: Vec<(usize, String, String, String)>,
}

impl ProcBlock {
    fn state(&mut self, s: &str) {
        if !self.states.iter().any(|x| x == s) {
            self.states.push(s.to_string());
        }
    }
}

/// Parses the `.cfm` format.
pub fn parse_cfm(text: &str) -> Result<Cfm, ParseError> {
    let mut name: Option<String> = None;
    let mut blocks: Vec<ProcBlock> = Vec::new();
    let mut open: Option<ProcBlock> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        last_line = ln;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or("");
        match head {
            "system" => {
                if name.is_some() {
                    return Err(ParseError::new(ln, "duplicate `system` header"));
                }
                if !blocks.is_empty() || open.is_some() {
                    return Err(ParseError::new(ln, "`system` must come before any process"));
                }
                let n = words.next().ok_or_else(|| ParseError::new(ln, "`system` needs a name"))?;
                if !is_ident(n) || words.next().is_some() {
                    return Err(ParseError::new(ln, format!("invalid system name in `{line}`")));
                }
                name = Some(n.to_string());
            }
            "process" => {
                if name.is_none() {
                    return Err(ParseError::new(ln, "missing `system NAME` header"));
                }
                if open.is_some() {
                    return Err(ParseError::new(ln, "nested `process` (missing `endprocess`?)"));
                }
                let n = words.next().ok_or_else(|| ParseError::new(ln, "`process` needs a name"))?;
                if !is_ident(n) || words.next().is_some() {
                    return Err(ParseError::new(ln, format!("invalid process name in `{line}`")));
                }
                if blocks.iter().any(|b| b.name == n) {
                    return Err(ParseError::new(ln, format!("process `{n}` declared twice")));
                }
                open = Some(ProcBlock { name: n.to_string(), line: ln, init: None, states: Vec::new(), transitions: Vec::new() });
            }
            "endprocess" => {
                let b = open.take().ok_or_else(|| ParseError::new(ln, "`endprocess` without `process`"))?;
                if b.init.is_none() {
                    return Err(ParseError::new(b.line, format!("process `{}` has no `init` line", b.name)));
                }
                blocks.push(b);
            }
            "init" => {
                let b = open.as_mut().ok_or_else(|| ParseError::new(ln, "`init` outside a process block"))?;
                let s = words.next().ok_or_else(|| ParseError::new(ln, "`init` needs a state"))?;
                if !is_ident(s) || words.next().is_some() {
                    return Err(ParseError::new(ln, format!("invalid state name in `{line}`")));
                }
                if b.init.is_some() {
                    return Err(ParseError::new(ln, "duplicate `init`"));
                }
                b.init = Some(s.to_string());
            }
            "states" => {
                let b = open.as_mut().ok_or_else(|| ParseError::new(ln, "`states` outside a process block"))?;
                for s in words {
                    if !is_ident(s) {
                        return Err(ParseError::new(ln, format!("invalid state name `{s}`")));
                    }
                    b.state(s);
                }
            }
            _ => {
                let b = open.as_mut().ok_or_else(|| ParseError::new(ln, format!("unexpected `{line}` outside a process block")))?;
                let (lhs, label) = line.split_once(':').ok_or_else(|| ParseError::new(ln, format!("expected `S -> T : label`, got `{line}`")))?;
                let (src, dst) = lhs.split_once("->").ok_or_else(|| ParseError::new(ln, format!("expected `S -> T : label`, got `{line}`")))?;
                let (src, dst) = (src.trim(), dst.trim());
                if !is_ident(src) || !is_ident(dst) {
                    return Err(ParseError::new(ln, format!("invalid state name in `{line}`")));
                }
                b.transitions.push((ln, src.to_string(), label.trim().to_string(), dst.to_string()));
            }
        }
    }
    if let Some(b) = open {
        return Err(ParseError::new(last_line.max(b.line), format!("process `{}` is missing `endprocess`", b.name)));
    }
    let name = name.ok_or_else(|| ParseError::new(last_line.max(1), "missing `system NAME` header"))?;
    if blocks.is_empty() {
        return Err(ParseError::new(last_line.max(1), "a system needs at least one process"));
    }

    let mut symbols = Symbols::new();
    for b in &blocks {
        symbols.intern_process(&b.name);
    }
    let mut processes = Vec::new();
    for mut b in blocks {
        let init = b.init.clone().expect("checked above");
        let mut order = vec![init.clone()];
        for s in std::mem::take(&mut b.states) {
            if s != init {
                order.push(s);
            }
        }
        b.states = order;
        let trs = std::mem::take(&mut b.transitions);
        for (_, src, _, dst) in &trs {
            b.state(src);
            b.state(dst);
        }
        let me = symbols.process(&b.name).expect("interned");
        let mut transitions = Vec::new();
        for (ln, src, label, dst) in trs {
            let raw = split_label(&label).map_err(|m| ParseError::new(ln, m))?;
            if raw.op == "!!" {
                return Err(ParseError::new(ln, "`!!` is only allowed in property automata"));
            }
            if raw.actor != b.name {
                return Err(ParseError::new(ln, format!("process `{}`: transition label `{label}` is not an action of this process", b.name)));
            }
            let peer = symbols.process(raw.peer).ok_or_else(|| ParseError::new(ln, format!("unknown process `{}`", raw.peer)))?;
            let msg = symbols.intern_message(raw.msg);
            let kind = if raw.op == "!" { ActionKind::Send } else { ActionKind::Receive };
            let idx = |s: &str| b.states.iter().position(|x| x == s).expect("registered") as u32;
            let t = Transition { src: idx(&src), action: Action { kind, actor: me, peer, msg }, dst: idx(&dst) };
            if transitions.contains(&t) {
                return Err(ParseError::new(ln, "duplicate transition"));
            }
            transitions.push(t);
        }
        processes.push(Lts::new(b.states, 0, transitions));
    }
    Cfm::new(name, symbols, processes).map_err(|e| match e {
        ModelError::TooManyProcesses(_) => ParseError::new(1, e.to_string()),
        other => ParseError::new(1, other.to_string()),
    })
}

/// Renders a machine in the `.cfm` format; `parse_cfm(render_cfm(c)) == c`.
pub fn render_cfm(cfm: &Cfm) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "system {}", cfm.name);
    for p in cfm.process_ids() {
        let lts = cfm.lts(p);
        let _ = writeln!(s, "process {}", cfm.symbols.process_name(p));
        let _ = writeln!(s, "init {}", lts.states[lts.initial as usize]);
        if lts.initial != 0 || needs_states_line(lts) {
            let mut order: Vec<&str> = vec![&lts.states[lts.initial as usize]];
            order.extend(lts.states.iter().enumerate().filter(|(i, _)| *i as u32 != lts.initial).map(|(_, x)| x.as_str()));
            let _ = writeln!(s, "states {}", order.join(" "));
        }
        for t in &lts.transitions {
            let _ = writeln!(s, "{} -> {} : {}", lts.states[t.src as usize], lts.states[t.dst as usize], cfm.symbols.action(&t.action));
        }
        let _ = writeln!(s, "endprocess");
    }
    s
}

/// True when first-appearance order in the transitions would not reproduce `lts.states`.
fn needs_states_line(lts: &Lts) -> bool {
    let mut order: Vec<u32> = vec![lts.initial];
    for t in &lts.transitions {
        for x in [t.src, t.dst] {
            if !order.contains(&x) {
                order.push(x);
            }
        }
    }
    order.len() != lts.states.len() || order.iter().enumerate().any(|(i, &x)| x as usize != i)
}
