//! Text formats for nets, configurations and run scripts.
//!
//! Net format, one declaration per line, `#` starts a comment:
//!
//! ```text
//! state q1 q2
//! place p1 cost=3
//! init q1
//! trans t1 q1 -> q2 cost=1 in p1(0,3] out p2[1,5) p3(2,inf)
//! ```
//!
//! Tokens are written `place:age` with an optional `*count`, e.g. `p1:31/10*2`.

use crate::multiset::Multiset;
use crate::net::{Arc, Interval, Ptpn, Transition};
use crate::num::parse_q;
use crate::semantics::{Configuration, Marking, Step, Token, Witness};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

/// Whitespace-separated words with their 1-based columns, comments stripped.
pub(crate) fn words(line: &str) -> Vec<(usize, &str)> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = vec![];
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, col, msg: msg.into() }
}

/// Parses `lo,hi` bracketed by `[(` and `)]`.
pub fn parse_interval(s: &str) -> Option<Interval> {
    let lo_open = match s.chars().next()? {
        '(' => true,
        '[' => false,
        _ => return None,
    };
    let hi_open = match s.chars().last()? {
        ')' => true,
        ']' => false,
        _ => return None,
    };
    let inner = &s[1..s.len() - 1];
    let (lo, hi) = inner.split_once(',')?;
    let lo: u32 = lo.trim().parse().ok()?;
    let hi = match hi.trim() {
        "inf" | "∞" => None,
        h => Some(h.parse::<u32>().ok()?),
    };
    Some(Interval::new(lo, hi, lo_open, hi_open))
}

fn parse_arc(net: &Ptpn, w: &str) -> Result<Arc, String> {
    let cut = w.find(['[', '(']).ok_or_else(|| format!("arc `{}` lacks an interval", w))?;
    let place = net.place(&w[..cut]).map_err(|e| e.to_string())?;
    let iv = parse_interval(&w[cut..]).ok_or_else(|| format!("bad interval `{}`", &w[cut..]))?;
    Ok(Arc::new(place, iv))
}

fn parse_cost(w: &str) -> Option<u64> {
    w.strip_prefix("cost=")?.parse().ok()
}

pub fn parse_net(text: &str) -> Result<Ptpn, ParseError> {
    let mut net = Ptpn::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let ws = words(line);
        let Some(&(col, kw)) = ws.first() else { continue };
        match kw {
            "state" => {
                if ws.len() < 2 {
                    return Err(err(ln, col, "`state` needs a name"));
                }
                for &(c, name) in &ws[1..] {
                    net.add_state(name).map_err(|e| err(ln, c, e.to_string()))?;
                }
            }
            "place" => {
                let &(c, name) = ws.get(1).ok_or_else(|| err(ln, col, "`place` needs a name"))?;
                let cost = match ws.get(2) {
                    None => 0,
                    Some(&(cc, w)) => parse_cost(w).ok_or_else(|| err(ln, cc, format!("expected cost=N, got `{}`", w)))?,
                };
                if let Some(&(cc, _)) = ws.get(3) {
                    return Err(err(ln, cc, "trailing input"));
                }
                net.add_place(name, cost).map_err(|e| err(ln, c, e.to_string()))?;
            }
            "init" => {
                let &(c, name) = ws.get(1).ok_or_else(|| err(ln, col, "`init` needs a state"))?;
                net.init = Some(net.state(name).map_err(|e| err(ln, c, e.to_string()))?);
            }
            "trans" => {
                if ws.len() < 5 || ws[3].1 != "->" {
                    return Err(err(ln, col, "expected `trans NAME SRC -> DST ...`"));
                }
                let name = ws[1].1.to_string();
                let src = net.state(ws[2].1).map_err(|e| err(ln, ws[2].0, e.to_string()))?;
                let dst = net.state(ws[4].1).map_err(|e| err(ln, ws[4].0, e.to_string()))?;
                let mut t = Transition { name, src, dst, inputs: vec![], reads: vec![], outputs: vec![], cost: 0 };
                let mut section: Option<&str> = None;
                for &(c, w) in &ws[5..] {
                    if let Some(k) = w.strip_prefix("cost=") {
                        t.cost = k.parse().map_err(|_| err(ln, c, format!("bad cost `{}`", k)))?;
                        continue;
                    }
                    if matches!(w, "in" | "read" | "out") {
                        section = Some(w);
                        continue;
                    }
                    let arc = parse_arc(&net, w).map_err(|m| err(ln, c, m))?;
                    match section {
                        Some("in") => t.inputs.push(arc),
                        Some("read") => t.reads.push(arc),
                        Some("out") => t.outputs.push(arc),
                        _ => return Err(err(ln, c, "arc outside of an in/read/out section")),
                    }
                }
                net.add_transition(t).map_err(|e| err(ln, col, e.to_string()))?;
            }
            other => return Err(err(ln, col, format!("unknown declaration `{}`", other))),
        }
    }
    Ok(net)
}

/// Serializes a net back into the text format.
pub fn print_net(net: &Ptpn) -> String {
    let mut s = String::new();
    s.push_str(&format!("state {}\n", net.states.join(" ")));
    for p in &net.places {
        s.push_str(&format!("place {} cost={}\n", p.name, p.cost));
    }
    if let Some(i) = net.init {
        s.push_str(&format!("init {}\n", net.states[i]));
    }
    for t in &net.transitions {
        s.push_str(&format!("trans {} {} -> {} cost={}", t.name, net.states[t.src], net.states[t.dst], t.cost));
        for (kw, arcs) in [("in", &t.inputs), ("read", &t.reads), ("out", &t.outputs)] {
            if !arcs.is_empty() {
                s.push_str(&format!(" {}", kw));
                for a in arcs.iter() {
                    s.push_str(&format!(" {}{}", net.places[a.place].name, a.iv));
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Parses a comma- or space-separated token list such as `p1:31/10*2,p2:6.5`.
pub fn parse_tokens(net: &Ptpn, s: &str) -> Result<Marking, String> {
    let mut m = Multiset::new();
    for item in s.split([',', ' ']).filter(|x| !x.is_empty()) {
        let (item, n) = match item.split_once('*') {
            Some((a, n)) => (a, n.parse::<usize>().map_err(|_| format!("bad multiplicity in `{}`", item))?),
            None => (item, 1),
        };
        let (p, age) = item.split_once(':').ok_or_else(|| format!("expected place:age, got `{}`", item))?;
        let place = net.place(p).map_err(|e| e.to_string())?;
        let age = parse_q(age).ok_or_else(|| format!("bad age `{}`", age))?;
        if age < crate::num::zero() {
            return Err(format!("negative age in `{}`", item));
        }
        m.insert_n(Token::new(place, age), n);
    }
    Ok(m)
}

/// Configuration file: `state q` followed by any number of `tokens ...` lines.
pub fn parse_config(net: &Ptpn, text: &str) -> Result<Configuration, ParseError> {
    let mut state = None;
    let mut marking = Multiset::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let ws = words(line);
        let Some(&(col, kw)) = ws.first() else { continue };
        match kw {
            "state" => {
                let &(c, name) = ws.get(1).ok_or_else(|| err(ln, col, "`state` needs a name"))?;
                state = Some(net.state(name).map_err(|e| err(ln, c, e.to_string()))?);
            }
            "tokens" => {
                for &(c, w) in &ws[1..] {
                    marking = marking.sum(&parse_tokens(net, w).map_err(|m| err(ln, c, m))?);
                }
            }
            other => return Err(err(ln, col, format!("unknown declaration `{}`", other))),
        }
    }
    let state = state.ok_or_else(|| err(1, 1, "missing `state` line"))?;
    Ok(Configuration { state, marking })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Script {
    pub init: Option<Configuration>,
    pub steps: Vec<(usize, Step)>,
}

/// Run script: optional `init q tokens...`, then `delay x` and
/// `fire t in=... read=... out=...` lines. Steps carry their source line.
pub fn parse_script(net: &Ptpn, text: &str) -> Result<Script, ParseError> {
    let mut script = Script { init: None, steps: vec![] };
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let ws = words(line);
        let Some(&(col, kw)) = ws.first() else { continue };
        match kw {
            "init" => {
                let &(c, name) = ws.get(1).ok_or_else(|| err(ln, col, "`init` needs a state"))?;
                let state = net.state(name).map_err(|e| err(ln, c, e.to_string()))?;
                let mut m = Multiset::new();
                for &(c, w) in &ws[2..] {
                    m = m.sum(&parse_tokens(net, w).map_err(|e| err(ln, c, e))?);
                }
                script.init = Some(Configuration { state, marking: m });
            }
            "delay" => {
                let &(c, x) = ws.get(1).ok_or_else(|| err(ln, col, "`delay` needs a value"))?;
                let x = parse_q(x).ok_or_else(|| err(ln, c, format!("bad delay `{}`", x)))?;
                script.steps.push((ln, Step::Timed(x)));
            }
            "fire" => {
                let &(c, name) = ws.get(1).ok_or_else(|| err(ln, col, "`fire` needs a transition"))?;
                let t = net.transition(name).ok_or_else(|| err(ln, c, format!("unknown transition `{}`", name)))?;
                let mut w = Witness { inputs: Multiset::new(), reads: Multiset::new(), outputs: Multiset::new() };
                for &(c, part) in &ws[2..] {
                    let (k, v) = part.split_once('=').ok_or_else(|| err(ln, c, "expected in=/read=/out="))?;
                    let toks = parse_tokens(net, v).map_err(|e| err(ln, c + k.len() + 1, e))?;
                    match k {
                        "in" => w.inputs = w.inputs.sum(&toks),
                        "read" => w.reads = w.reads.sum(&toks),
                        "out" => w.outputs = w.outputs.sum(&toks),
                        _ => return Err(err(ln, c, format!("unknown key `{}`", k))),
                    }
                }
                script.steps.push((ln, Step::Discrete { transition: t, witness: w }));
            }
            other => return Err(err(ln, col, format!("unknown command `{}`", other))),
        }
    }
    Ok(script)
}
