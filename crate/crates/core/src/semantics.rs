//! Concrete semantics with exact rational ages.

use crate::multiset::Multiset;
use crate::net::{Arc, Interval, Ptpn};
use crate::num::{qi, Q};
use num_traits::{Signed, Zero};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub place: usize,
    pub age: Q,
}

impl Token {
    pub fn new(place: usize, age: Q) -> Self {
        Token { place, age }
    }
}

pub type Marking = Multiset<Token>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: usize,
    pub marking: Marking,
}

impl Configuration {
    pub fn new(state: usize, tokens: impl IntoIterator<Item = Token>) -> Self {
        Configuration { state, marking: tokens.into_iter().collect() }
    }

    pub fn render(&self, net: &Ptpn) -> String {
        render_config(net, self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub inputs: Marking,
    pub reads: Marking,
    pub outputs: Marking,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Timed(Q),
    Discrete { transition: usize, witness: Witness },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub configs: Vec<Configuration>,
    pub steps: Vec<Step>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("delay must be positive")]
    NonPositiveDelay,
    #[error("transition `{0}` is not enabled in control state `{1}`")]
    WrongState(String, String),
    #[error("witness for `{0}` does not match its arcs: {1}")]
    InvalidWitness(String, &'static str),
    #[error("malformed run at step {0}: {1}")]
    MalformedRun(usize, String),
    #[error("unknown transition index {0}")]
    UnknownTransition(usize),
}

pub fn age_in(age: &Q, iv: &Interval) -> bool {
    !age.is_negative() && iv.contains(age)
}

/// Perfect matching between `items` and `arcs` under `fits`, by augmenting
/// paths. Returns the arc index assigned to each item.
pub fn bipartite_match<T>(items: &[T], arcs: &[Arc], fits: impl Fn(&T, &Arc) -> bool) -> Option<Vec<usize>> {
    if items.len() != arcs.len() {
        return None;
    }
    let adj: Vec<Vec<usize>> =
        items.iter().map(|x| arcs.iter().enumerate().filter(|(_, a)| fits(x, a)).map(|(j, _)| j).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; arcs.len()];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none() || augment(owner[j].unwrap(), adj, seen, owner) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    for i in 0..items.len() {
        let mut seen = vec![false; arcs.len()];
        if !augment(i, &adj, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut by_item = vec![0; items.len()];
    for (j, o) in owner.iter().enumerate() {
        by_item[o.unwrap()] = j;
    }
    Some(by_item)
}

/// Finds a bijection between `tokens` and `arcs` pairing each token with an
/// arc on the same place whose interval contains its age. Returns
/// `(token, arc index)` pairs in sorted token order.
pub fn match_tokens(tokens: &Marking, arcs: &[Arc]) -> Option<Vec<(Token, usize)>> {
    let toks = tokens.to_vec();
    let m = bipartite_match(&toks, arcs, |tk, a| a.place == tk.place && age_in(&tk.age, &a.iv))?;
    Some(toks.into_iter().zip(m).collect())
}

pub fn storage_rate(net: &Ptpn, m: &Marking) -> u64 {
    m.entries().map(|(t, n)| n as u64 * net.place_cost(t.place)).sum()
}

pub fn timed_step(net: &Ptpn, c: &Configuration, x: &Q) -> Result<(Configuration, Q), SemanticsError> {
    if !x.is_positive() {
        return Err(SemanticsError::NonPositiveDelay);
    }
    let marking = c.marking.map(|t| Token::new(t.place, &t.age + x));
    let cost = x * qi(storage_rate(net, &c.marking) as i64);
    Ok((Configuration { state: c.state, marking }, cost))
}

/// All `(I, R)` decompositions enabling `t`; empty iff `t` is disabled.
pub fn enabled_discrete(net: &Ptpn, c: &Configuration, t: usize) -> Vec<(Marking, Marking)> {
    let tr = &net.transitions[t];
    if tr.src != c.state {
        return vec![];
    }
    let relevant = |arcs: &[Arc]| {
        let places: Vec<usize> = arcs.iter().map(|a| a.place).collect();
        c.marking.filter(|tk| places.contains(&tk.place))
    };
    let mut out = vec![];
    for i in relevant(&tr.inputs).submultisets(tr.inputs.len()) {
        if match_tokens(&i, &tr.inputs).is_none() {
            continue;
        }
        let rest = c.marking.difference(&i).expect("sub-multiset");
        let pool = {
            let places: Vec<usize> = tr.reads.iter().map(|a| a.place).collect();
            rest.filter(|tk| places.contains(&tk.place))
        };
        for r in pool.submultisets(tr.reads.len()) {
            if match_tokens(&r, &tr.reads).is_some() {
                out.push((i.clone(), r));
            }
        }
    }
    out
}

pub fn fire_discrete(net: &Ptpn, c: &Configuration, t: usize, w: &Witness) -> Result<(Configuration, u64), SemanticsError> {
    let tr = net.transitions.get(t).ok_or(SemanticsError::UnknownTransition(t))?;
    if tr.src != c.state {
        return Err(SemanticsError::WrongState(tr.name.clone(), net.states[c.state].clone()));
    }
    let bad = |why| SemanticsError::InvalidWitness(tr.name.clone(), why);
    let rest = c.marking.difference(&w.inputs).ok_or_else(|| bad("inputs not in marking"))?;
    if !rest.contains_all(&w.reads) {
        return Err(bad("reads not in marking"));
    }
    if match_tokens(&w.inputs, &tr.inputs).is_none() {
        return Err(bad("inputs do not match input arcs"));
    }
    if match_tokens(&w.reads, &tr.reads).is_none() {
        return Err(bad("reads do not match read arcs"));
    }
    if match_tokens(&w.outputs, &tr.outputs).is_none() {
        return Err(bad("outputs do not match output arcs"));
    }
    Ok((Configuration { state: tr.dst, marking: rest.sum(&w.outputs) }, tr.cost))
}

pub fn step(net: &Ptpn, c: &Configuration, s: &Step) -> Result<(Configuration, Q), SemanticsError> {
    match s {
        Step::Timed(x) => timed_step(net, c, x),
        Step::Discrete { transition, witness } => fire_discrete(net, c, *transition, witness).map(|(c, k)| (c, qi(k as i64))),
    }
}

impl Run {
    /// Replays `steps` from `init`, validating each one.
    pub fn replay(net: &Ptpn, init: Configuration, steps: Vec<Step>) -> Result<Run, SemanticsError> {
        let mut configs = vec![init];
        for (i, s) in steps.iter().enumerate() {
            let (next, _) = step(net, configs.last().unwrap(), s).map_err(|e| SemanticsError::MalformedRun(i, e.to_string()))?;
            configs.push(next);
        }
        Ok(Run { configs, steps })
    }

    pub fn first(&self) -> &Configuration {
        &self.configs[0]
    }

    pub fn last(&self) -> &Configuration {
        self.configs.last().unwrap()
    }
}

/// Sum of step costs; checks that every step relates its neighbours.
pub fn run_cost(net: &Ptpn, r: &Run) -> Result<Q, SemanticsError> {
    if r.configs.len() != r.steps.len() + 1 {
        return Err(SemanticsError::MalformedRun(0, "configs/steps length mismatch".into()));
    }
    let mut total = Q::zero();
    for (i, s) in r.steps.iter().enumerate() {
        let (next, cost) = step(net, &r.configs[i], s).map_err(|e| SemanticsError::MalformedRun(i, e.to_string()))?;
        if next != r.configs[i + 1] {
            return Err(SemanticsError::MalformedRun(i, "successor differs from recorded configuration".into()));
        }
        total += cost;
    }
    Ok(total)
}

pub fn render_marking(net: &Ptpn, m: &Marking) -> String {
    let parts: Vec<String> = m
        .entries()
        .map(|(t, n)| {
            let age = crate::num::fmt_decimal(&t.age, 6);
            if n > 1 {
                format!("<{},{}>^{}", net.places[t.place].name, age, n)
            } else {
                format!("<{},{}>", net.places[t.place].name, age)
            }
        })
        .collect();
    format!("[{}]", parts.join(","))
}

pub fn render_config(net: &Ptpn, c: &Configuration) -> String {
    format!("({}, {})", net.states[c.state], render_marking(net, &c.marking))
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.place, crate::num::fmt_q(&self.age))
    }
}
