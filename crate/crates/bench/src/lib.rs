//! Workloads for the benchmarks.

use mbsync_core::automata::{parse_nfa, NfaFile};
use mbsync_core::decide::{gen_benchmark, Gadget};
use mbsync_core::model::parse_cfm;
use mbsync_core::Cfm;

/// A word automaton over {a, b} with `n` states: `a` rotates, `b` doubles
/// modulo `n` after a shift, and state 0 is both initial and final.
pub fn family_member(n: usize, shift: usize) -> NfaFile {
    let mut text = format!("nfa m{n}_{shift}\ninit q0\nfinal q0\n");
    for i in 0..n {
        text.push_str(&format!("q{i} -> q{} : a\n", (i + 1) % n));
        text.push_str(&format!("q{i} -> q{} : b\n", (2 * i + shift) % n));
    }
    parse_nfa(&text).expect("well-formed automaton")
}

/// The intersection ring over `processes` automata of `size` states each.
pub fn ring(processes: usize, size: usize, gadget: Gadget) -> Cfm {
    let nfas: Vec<NfaFile> = (0..processes).map(|s| family_member(size, s)).collect();
    gen_benchmark(&nfas, gadget).expect("ring generation")
}

/// Three processes whose last messages cross; not synchronizable.
pub fn crossing_triangle() -> Cfm {
    parse_cfm(
        "system triangle
process p1
init s0
s0 -> s1 : p1!p3(a)
s1 -> s2 : p1?p2(b)
s2 -> s3 : p1!p2(c)
endprocess
process p2
init s0
s0 -> s1 : p2!p1(b)
s1 -> s2 : p2?p1(c)
endprocess
process p3
init s0
s0 -> s1 : p3!p2(d)
s1 -> s2 : p3?p1(a)
endprocess
",
    )
    .expect("well-formed system")
}

/// A client and server exchanging `rounds` request kinds in a loop.
pub fn request_server(rounds: usize) -> Cfm {
    let mut text = String::from("system rs\nprocess client\ninit idle\n");
    for r in 0..rounds {
        text.push_str(&format!("idle -> wait{r} : client!server(req{r})\nwait{r} -> idle : client?server(ack{r})\n"));
    }
    text.push_str("endprocess\nprocess server\ninit idle\n");
    for r in 0..rounds {
        text.push_str(&format!("idle -> busy{r} : server?client(req{r})\nbusy{r} -> idle : server!client(ack{r})\n"));
    }
    text.push_str("endprocess\n");
    parse_cfm(&text).expect("well-formed system")
}
