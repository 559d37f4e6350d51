//! Priced timed automata as nets: every clock is a zero-cost place holding one
//! token whose age is the clock value, every location a place holding at most
//! one token.

use crate::net::{Arc, Interval, Ptpn, Transition};
use crate::num::{zero, Q};
use crate::semantics::{Configuration, Token};
use num_traits::ToPrimitive;

#[derive(Clone, Debug)]
pub struct ClockGuard {
    pub clock: usize,
    pub lo: Q,
    pub hi: Option<Q>,
    pub lo_open: bool,
    pub hi_open: bool,
}

#[derive(Clone, Debug)]
pub struct PtaEdge {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub guards: Vec<ClockGuard>,
    pub resets: Vec<usize>,
    pub cost: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Pta {
    pub clocks: Vec<String>,
    /// Location names with their cost rates.
    pub locations: Vec<(String, u64)>,
    pub edges: Vec<PtaEdge>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PtaError {
    #[error("guard on edge `{0}` has a non-integer constant")]
    NonIntegerGuard(String),
    #[error("guard on edge `{0}` is unsatisfiable")]
    EmptyGuard(String),
    #[error(transparent)]
    Net(#[from] crate::net::NetError),
}

fn nat(x: &Q, edge: &str) -> Result<u32, PtaError> {
    if !x.is_integer() || *x < zero() {
        return Err(PtaError::NonIntegerGuard(edge.to_string()));
    }
    x.to_integer().to_u32().ok_or_else(|| PtaError::NonIntegerGuard(edge.to_string()))
}

fn guard_interval(g: &ClockGuard, edge: &str) -> Result<Interval, PtaError> {
    let lo = nat(&g.lo, edge)?;
    let hi = g.hi.as_ref().map(|h| nat(h, edge)).transpose()?;
    Ok(Interval::new(lo, hi, g.lo_open, g.hi_open))
}

fn intersect(a: &Interval, b: &Interval) -> Interval {
    let (lo, lo_open) = match a.lo.cmp(&b.lo) {
        std::cmp::Ordering::Less => (b.lo, b.lo_open),
        std::cmp::Ordering::Greater => (a.lo, a.lo_open),
        std::cmp::Ordering::Equal => (a.lo, a.lo_open || b.lo_open),
    };
    let (hi, hi_open) = match (a.hi, b.hi) {
        (None, None) => (None, true),
        (Some(h), None) => (Some(h), a.hi_open),
        (None, Some(h)) => (Some(h), b.hi_open),
        (Some(x), Some(y)) if x < y => (Some(x), a.hi_open),
        (Some(x), Some(y)) if y < x => (Some(y), b.hi_open),
        (Some(x), Some(_)) => (Some(x), a.hi_open || b.hi_open),
    };
    Interval::new(lo, hi, lo_open, hi_open)
}

pub fn encode_priced_timed_automaton(a: &Pta) -> Result<Ptpn, PtaError> {
    let mut net = Ptpn::new();
    let run = net.add_state("run")?;
    net.init = Some(run);
    for c in &a.clocks {
        net.add_place(&format!("clock_{}", c), 0)?;
    }
    let loc0 = a.clocks.len();
    for (l, cost) in &a.locations {
        net.add_place(&format!("at_{}", l), *cost)?;
    }
    for e in &a.edges {
        let mut per_clock: Vec<Option<Interval>> = vec![None; a.clocks.len()];
        for g in &e.guards {
            let iv = guard_interval(g, &e.name)?;
            per_clock[g.clock] = Some(match &per_clock[g.clock] {
                Some(old) => intersect(old, &iv),
                None => iv,
            });
        }
        if per_clock.iter().flatten().any(|iv| iv.is_empty()) {
            return Err(PtaError::EmptyGuard(e.name.clone()));
        }
        let mut t = Transition {
            name: e.name.clone(),
            src: run,
            dst: run,
            inputs: vec![Arc::new(loc0 + e.from, Interval::from(0))],
            reads: vec![],
            outputs: vec![Arc::new(loc0 + e.to, Interval::point(0))],
            cost: e.cost,
        };
        for (c, g) in per_clock.into_iter().enumerate() {
            let reset = e.resets.contains(&c);
            match (g, reset) {
                (Some(iv), true) => t.inputs.push(Arc::new(c, iv)),
                (Some(iv), false) => t.reads.push(Arc::new(c, iv)),
                (None, true) => t.inputs.push(Arc::new(c, Interval::from(0))),
                (None, false) => {}
            }
            if reset {
                t.outputs.push(Arc::new(c, Interval::point(0)));
            }
        }
        net.add_transition(t)?;
    }
    Ok(net)
}

/// All clocks at zero, one token in `location`.
pub fn initial_configuration(a: &Pta, location: usize) -> Configuration {
    let mut toks: Vec<Token> = (0..a.clocks.len()).map(|c| Token::new(c, zero())).collect();
    toks.push(Token::new(a.clocks.len() + location, zero()));
    Configuration::new(0, toks)
}
