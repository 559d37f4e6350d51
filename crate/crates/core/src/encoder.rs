//! Word encodings of budgeted abstract configurations, automata recognizing
//! sets of encodings, and the compilation of "some encoded configuration
//! reaches `↑U` by monotone steps" into a transfer-net reachability query.
//!
//! A configuration `(q, y, H, C, L)` is written as the head symbol `(q,y)`,
//! the low positions from the highest fraction down separated by `#`, then
//! `$`, the center, `$`, and the high positions from the highest fraction
//! down. Tokens inside a position are listed in sorted order.
//!
//! The compiled net keeps integer-age tokens, low tokens and high tokens in
//! counting places indexed by place and level. Only the relative order of
//! the high part matters for later delays, so high classes of the initial
//! configuration are read from the automaton when they reach the center.
//! Tokens taken from classes that have not been read yet are recorded as
//! debts and repaid when the class is read. Target tokens are claimed when
//! the covering token is created, which is what fixes the order of the low
//! part of the target.

use crate::acptpn::{leq_f, monotone_steps, BudgetedConfig};
use crate::aptpn::{frac_match, int_in, AMarking, AbstractConfig, AbstractStep, AbstractToken, DelayKind};
use crate::automata::Nfa;
use crate::net::Ptpn;
use crate::sdtn::{bag, bounded_reach, Formula, ReachLimits, ReachQuery, ReachResult, Sdtn, UConfig, UWitness};
use crate::wqo::{Outside, Verdict};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    /// Control state and remaining budget.
    Head(usize, u64),
    Tok(AbstractToken),
    Hash,
    Dollar,
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Head(q, y) => write!(f, "h{}.{}", q, y),
            Sym::Tok(t) => write!(f, "t{}.{}", t.place, t.level),
            Sym::Hash => write!(f, "#"),
            Sym::Dollar => write!(f, "$"),
        }
    }
}

impl FromStr for Sym {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let pair = |r: &str| -> Result<(u64, u64), String> {
            let (a, b) = r.split_once('.').ok_or(format!("bad symbol `{}`", s))?;
            Ok((a.parse().map_err(|_| format!("bad symbol `{}`", s))?, b.parse().map_err(|_| format!("bad symbol `{}`", s))?))
        };
        match s {
            "#" => Ok(Sym::Hash),
            "$" => Ok(Sym::Dollar),
            _ if s.starts_with('h') => pair(&s[1..]).map(|(q, y)| Sym::Head(q as usize, y)),
            _ if s.starts_with('t') => pair(&s[1..]).map(|(p, k)| Sym::Tok(AbstractToken::new(p as usize, k as u32))),
            _ => Err(format!("bad symbol `{}`", s)),
        }
    }
}

pub type ConfigAutomaton = Nfa<Sym>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("compiled net exceeds {0} control states")]
    TooLarge(usize),
    #[error("target has {0} tokens; at most 64 are supported")]
    TargetTooLarge(usize),
    #[error("witness decoding failed: {0}")]
    Decode(String),
}

fn all_tokens(net: &Ptpn) -> Vec<AbstractToken> {
    let top = net.cmax() + 1;
    (0..net.places.len()).flat_map(|p| (0..=top).map(move |k| AbstractToken::new(p, k))).collect()
}

pub fn alphabet(net: &Ptpn, v: u64) -> Vec<Sym> {
    let mut out: Vec<Sym> = (0..net.states.len()).flat_map(|q| (0..=v).map(move |y| Sym::Head(q, y))).collect();
    out.extend(all_tokens(net).into_iter().map(Sym::Tok));
    out.push(Sym::Hash);
    out.push(Sym::Dollar);
    out
}

fn push_positions<'a>(w: &mut Vec<Sym>, positions: impl Iterator<Item = &'a AMarking>) {
    for (i, m) in positions.enumerate() {
        if i > 0 {
            w.push(Sym::Hash);
        }
        w.extend(m.iter().map(|t| Sym::Tok(*t)));
    }
}

pub fn enc(b: &BudgetedConfig) -> Vec<Sym> {
    let mut w = vec![Sym::Head(b.conf.state, b.budget)];
    push_positions(&mut w, b.conf.low.iter().rev());
    w.push(Sym::Dollar);
    w.extend(b.conf.center.iter().map(|t| Sym::Tok(*t)));
    w.push(Sym::Dollar);
    push_positions(&mut w, b.conf.high.iter().rev());
    w
}

fn tokens_of(part: &[Sym]) -> Result<AMarking, EncodeError> {
    part.iter()
        .map(|s| match s {
            Sym::Tok(t) => Ok(*t),
            other => Err(EncodeError::Malformed(format!("unexpected `{}`", other))),
        })
        .collect()
}

fn positions_of(part: &[Sym]) -> Result<Vec<AMarking>, EncodeError> {
    if part.is_empty() {
        return Ok(vec![]);
    }
    let mut out = part
        .split(|s| *s == Sym::Hash)
        .map(|seg| if seg.is_empty() { Err(EncodeError::Malformed("empty position".into())) } else { tokens_of(seg) })
        .collect::<Result<Vec<_>, _>>()?;
    out.reverse();
    Ok(out)
}

pub fn dec(w: &[Sym]) -> Result<BudgetedConfig, EncodeError> {
    let Some((Sym::Head(q, y), rest)) = w.split_first() else {
        return Err(EncodeError::Malformed("missing head symbol".into()));
    };
    let parts: Vec<&[Sym]> = rest.split(|s| *s == Sym::Dollar).collect();
    if parts.len() != 3 {
        return Err(EncodeError::Malformed(format!("expected two `$`, found {}", parts.len() - 1)));
    }
    let low = positions_of(parts[0])?;
    let center = tokens_of(parts[1])?;
    let high = positions_of(parts[2])?;
    Ok(BudgetedConfig::new(AbstractConfig::new(*q, high, center, low), *y))
}

pub fn render_word(net: &Ptpn, w: &[Sym]) -> String {
    w.iter()
        .map(|s| match s {
            Sym::Head(q, y) => format!("({},{})", net.states[*q], y),
            Sym::Tok(t) => format!("({},{})", net.places[t.place].name, t.level),
            Sym::Hash => "#".into(),
            Sym::Dollar => "$".into(),
        })
        .collect()
}

/// Nondecreasing sequences over `toks`.
fn sorted_seq(toks: &[AbstractToken], nonempty: bool) -> ConfigAutomaton {
    let n = toks.len();
    let mut a = Nfa { n: n + 1, init: [0].into(), finals: (1..=n).collect(), edges: vec![vec![]; n + 1] };
    if !nonempty {
        a.finals.insert(0);
    }
    for (i, t) in toks.iter().enumerate() {
        a.add_edge(0, Sym::Tok(*t), i + 1);
        for (j, u) in toks.iter().enumerate().skip(i) {
            a.add_edge(i + 1, Sym::Tok(*u), j + 1);
        }
    }
    a
}

/// `ε | seg (# seg)*`
fn position_list(seg: &ConfigAutomaton) -> ConfigAutomaton {
    let more = Nfa::word(&[Sym::Hash]).concat(seg).star();
    seg.concat(&more).union(&Nfa::epsilon())
}

fn heads(net: &Ptpn, v: u64) -> ConfigAutomaton {
    let hs: Vec<Sym> = (0..net.states.len()).flat_map(|q| (0..=v).map(move |y| Sym::Head(q, y))).collect();
    Nfa::any_of(&hs)
}

/// Every well-formed encoding with budget at most `v`.
pub fn aut_universal(net: &Ptpn, v: u64) -> ConfigAutomaton {
    let toks = all_tokens(net);
    let part = position_list(&sorted_seq(&toks, true));
    let dollar = Nfa::word(&[Sym::Dollar]);
    heads(net, v).concat(&part).concat(&dollar).concat(&sorted_seq(&toks, false)).concat(&dollar).concat(&part).trim()
}

/// Encodings of configurations above some element of `cs`, adding tokens on
/// zero-cost places only.
pub fn aut_upward_closure(net: &Ptpn, cs: &[BudgetedConfig]) -> ConfigAutomaton {
    let free: Vec<Sym> = all_tokens(net).into_iter().filter(|t| !net.is_cost_place(t.place)).map(Sym::Tok).collect();
    let fstar = Nfa::loops(&free);
    let fplus = Nfa::any_of(&free).concat(&fstar);
    let hash = Nfa::word(&[Sym::Hash]);
    let pattern = |m: &AMarking| m.iter().fold(fstar.clone(), |a, t| a.concat(&Nfa::word(&[Sym::Tok(*t)])).concat(&fstar));
    let part = |segs: Vec<&AMarking>| {
        let extra_after = hash.concat(&fplus).star();
        let Some((first, rest)) = segs.split_first() else {
            return fplus.concat(&extra_after).union(&Nfa::epsilon());
        };
        let extra_before = fplus.concat(&hash).star();
        let mut a = extra_before.concat(&pattern(first));
        for s in rest {
            a = a.concat(&hash).concat(&extra_before).concat(&pattern(s));
        }
        a.concat(&extra_after)
    };
    let dollar = Nfa::word(&[Sym::Dollar]);
    let parts = cs.iter().map(|c| {
        Nfa::word(&[Sym::Head(c.conf.state, c.budget)])
            .concat(&part(c.conf.low.iter().rev().collect()))
            .concat(&dollar)
            .concat(&pattern(&c.conf.center))
            .concat(&dollar)
            .concat(&part(c.conf.high.iter().rev().collect()))
    });
    let mut out = Nfa::empty();
    for a in parts {
        out = out.union(&a.trim());
    }
    out
}

/// Encodings of configurations with at most `v` tokens on cost places and
/// budget at most `v`: the upward closure of the finite core.
pub fn aut_core(net: &Ptpn, v: u64) -> ConfigAutomaton {
    let mut count = Nfa { n: v as usize + 1, init: [0].into(), finals: (0..=v as usize).collect(), edges: vec![vec![]; v as usize + 1] };
    for s in alphabet(net, v) {
        for i in 0..=v as usize {
            match s {
                Sym::Tok(t) if net.is_cost_place(t.place) => {
                    if i < v as usize {
                        count.add_edge(i, s, i + 1);
                    }
                }
                _ => count.add_edge(i, s, i),
            }
        }
    }
    aut_universal(net, v).intersect(&count).trim()
}

pub fn aut_single(b: &BudgetedConfig) -> ConfigAutomaton {
    Nfa::word(&enc(b))
}

pub fn aut_complement(a: &ConfigAutomaton, net: &Ptpn, v: u64) -> ConfigAutomaton {
    a.complement(&alphabet(net, v)).trim()
}

pub fn aut_intersect(a: &ConfigAutomaton, b: &ConfigAutomaton) -> ConfigAutomaton {
    a.intersect(b).trim()
}

pub fn aut_union(a: &ConfigAutomaton, b: &ConfigAutomaton) -> ConfigAutomaton {
    a.union(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    /// First symbol read and target chosen.
    Start {
        head: Sym,
        target: usize,
    },
    Read(Sym),
    Disc(usize),
    /// A short-delay round begins.
    Round,
    Internal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CompileLimits {
    pub max_controls: usize,
}

impl Default for CompileLimits {
    fn default() -> Self {
        CompileLimits { max_controls: 200_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub sdtn: Sdtn,
    pub query: ReachQuery,
    /// One label per transition of `sdtn`.
    pub labels: Vec<Label>,
    pub targets: Vec<BudgetedConfig>,
    /// Largest number of outstanding read obligations per token kind.
    pub rmax: u8,
}

/// Target tokens with their flag bits, grouped by position.
#[derive(Clone, Debug)]
struct TargetBits {
    low: Vec<Vec<(AbstractToken, u64)>>,
    center: Vec<(AbstractToken, u64)>,
    high: Vec<Vec<(AbstractToken, u64)>>,
    all: u64,
    state: usize,
    budget: u64,
}

impl TargetBits {
    fn new(u: &BudgetedConfig) -> Result<Self, EncodeError> {
        let n = u.conf.size();
        if n > 64 {
            return Err(EncodeError::TargetTooLarge(n));
        }
        let mut next = 0;
        let mut bits = |m: &AMarking| {
            m.iter()
                .map(|t| {
                    next += 1;
                    (*t, 1u64 << (next - 1))
                })
                .collect::<Vec<_>>()
        };
        let low = u.conf.low.iter().map(&mut bits).collect();
        let center = bits(&u.conf.center);
        let high = u.conf.high.iter().map(&mut bits).collect();
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Ok(TargetBits { low, center, high, all, state: u.conf.state, budget: u.budget })
    }

    fn min_opened_low(&self, flags: u64) -> usize {
        self.low.iter().position(|pos| pos.iter().any(|(_, b)| flags & b != 0)).unwrap_or(self.low.len())
    }

    /// Cover indices a newly created lowest low position may take.
    fn low_choices(&self, flags: u64) -> Vec<Option<usize>> {
        std::iter::once(None).chain((0..self.min_opened_low(flags)).map(Some)).collect()
    }
}

fn first_free(pos: &[(AbstractToken, u64)], t: AbstractToken, flags: u64) -> Option<u64> {
    pos.iter().find(|(u, b)| *u == t && flags & b == 0).map(|(_, b)| *b)
}

fn kinds(pos: &[(AbstractToken, u64)]) -> BTreeSet<AbstractToken> {
    pos.iter().map(|(t, _)| *t).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Mode {
    Init,
    InitLow,
    InitZero,
    Sim,
    T1,
    T2,
    T2b,
    Final1,
    Final2Start,
    Final2,
    Accept,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Ctl {
    mode: Mode,
    a: usize,
    done: bool,
    q: usize,
    y: u64,
    target: usize,
    flags: u64,
    /// Low cover index in `InitLow`/`T1`, high cover index in `Final2`.
    cur: Option<usize>,
    hi_last: Option<usize>,
    /// The current class has produced at least one token.
    any: bool,
    rdebt: Vec<u8>,
}

#[derive(Clone, Copy)]
enum Region {
    Zero = 0,
    Low = 1,
    High = 2,
    Debt = 3,
}

struct Compiler<'a> {
    net: &'a Ptpn,
    aut: &'a ConfigAutomaton,
    targets: Vec<TargetBits>,
    levels: usize,
    rmax: u8,
}

type Move = (Ctl, Vec<(usize, u32)>, Vec<(usize, u32)>, bool, Label);

/// Partial choice of token sources and sinks for one discrete transition.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Choice {
    inp: Vec<(usize, u32)>,
    out: Vec<(usize, u32)>,
    flags: u64,
    read_bits: u64,
    in_debt: BTreeMap<AbstractToken, u8>,
    rd_debt: BTreeMap<AbstractToken, u8>,
}

impl Compiler<'_> {
    fn place(&self, r: Region, t: AbstractToken) -> usize {
        (r as usize * self.net.places.len() + t.place) * self.levels + t.level as usize
    }

    fn kind(&self, t: AbstractToken) -> usize {
        t.place * self.levels + t.level as usize
    }

    fn shift(&self, t: AbstractToken) -> AbstractToken {
        AbstractToken::new(t.place, (t.level + 1).min(self.levels as u32 - 1))
    }

    fn tokens(&self) -> Vec<AbstractToken> {
        all_tokens(self.net)
    }

    fn final_a(&self, a: usize) -> bool {
        self.aut.finals.contains(&a)
    }

    fn accept_ctl() -> Ctl {
        Ctl { mode: Mode::Accept, a: 0, done: true, q: 0, y: 0, target: 0, flags: 0, cur: None, hi_last: None, any: false, rdebt: vec![] }
    }

    fn dec_rdebt(&self, c: &mut Ctl, t: AbstractToken) {
        let k = self.kind(t);
        c.rdebt[k] = c.rdebt[k].saturating_sub(1);
    }

    fn moves(&self, c: &Ctl) -> Vec<Move> {
        let mut out: Vec<Move> = vec![];
        let edges = |a: usize| self.aut.edges.get(a).cloned().unwrap_or_default();
        let with = |f: &dyn Fn(&mut Ctl)| {
            let mut d = c.clone();
            f(&mut d);
            d
        };
        if c.mode == Mode::Init {
            for &a0 in &self.aut.init {
                for (s, a1) in edges(a0) {
                    let Sym::Head(q, y) = s else { continue };
                    for (ti, tb) in self.targets.iter().enumerate() {
                        for cur in tb.low_choices(0) {
                            let d = with(&|d| {
                                d.mode = Mode::InitLow;
                                d.a = a1;
                                d.q = q;
                                d.y = y;
                                d.target = ti;
                                d.cur = cur;
                            });
                            out.push((d, vec![], vec![], false, Label::Start { head: s, target: ti }));
                        }
                    }
                }
            }
            return out;
        }
        if c.mode == Mode::Accept {
            return out;
        }
        let tb = &self.targets[c.target];
        match c.mode {
            Mode::InitLow => {
                for (s, a1) in edges(c.a) {
                    match s {
                        Sym::Tok(t) => {
                            out.push((with(&|d| d.a = a1), vec![], vec![(self.place(Region::Low, t), 1)], false, Label::Read(s)));
                            if let Some(bit) = c.cur.and_then(|i| first_free(&tb.low[i], t, c.flags)) {
                                out.push((
                                    with(&|d| {
                                        d.a = a1;
                                        d.flags |= bit;
                                    }),
                                    vec![],
                                    vec![],
                                    false,
                                    Label::Read(s),
                                ));
                            }
                        }
                        Sym::Hash => {
                            for cur in tb.low_choices(c.flags) {
                                out.push((
                                    with(&|d| {
                                        d.a = a1;
                                        d.cur = cur;
                                    }),
                                    vec![],
                                    vec![],
                                    false,
                                    Label::Read(s),
                                ));
                            }
                        }
                        Sym::Dollar => out.push((
                            with(&|d| {
                                d.a = a1;
                                d.mode = Mode::InitZero;
                                d.cur = None;
                            }),
                            vec![],
                            vec![],
                            false,
                            Label::Read(s),
                        )),
                        Sym::Head(..) => {}
                    }
                }
            }
            Mode::InitZero => {
                for (s, a1) in edges(c.a) {
                    match s {
                        Sym::Tok(t) => {
                            out.push((with(&|d| d.a = a1), vec![], vec![(self.place(Region::Zero, t), 1)], false, Label::Read(s)))
                        }
                        Sym::Dollar => out.push((
                            with(&|d| {
                                d.a = a1;
                                d.mode = Mode::Sim;
                            }),
                            vec![],
                            vec![],
                            false,
                            Label::Read(s),
                        )),
                        _ => {}
                    }
                }
            }
            Mode::Sim => {
                if !c.done && self.final_a(c.a) {
                    out.push((with(&|d| d.done = true), vec![], vec![], false, Label::Internal));
                }
                self.discrete_moves(c, tb, &mut out);
                for cur in tb.low_choices(c.flags) {
                    out.push((
                        with(&|d| {
                            d.mode = Mode::T1;
                            d.cur = cur;
                        }),
                        vec![],
                        vec![],
                        false,
                        Label::Round,
                    ));
                }
                out.push((with(&|d| d.mode = Mode::Final1), vec![], vec![], false, Label::Internal));
            }
            Mode::T1 => {
                if let Some(i) = c.cur {
                    for t in kinds(&tb.low[i]) {
                        if let Some(bit) = first_free(&tb.low[i], t, c.flags) {
                            out.push((with(&|d| d.flags |= bit), vec![(self.place(Region::Zero, t), 1)], vec![], false, Label::Internal));
                        }
                    }
                }
                out.push((
                    with(&|d| {
                        d.mode = Mode::T2;
                        d.cur = None;
                    }),
                    vec![],
                    vec![],
                    true,
                    Label::Internal,
                ));
            }
            Mode::T2 => {
                for t in self.tokens() {
                    out.push((
                        c.clone(),
                        vec![(self.place(Region::High, t), 1)],
                        vec![(self.place(Region::Zero, self.shift(t)), 1)],
                        false,
                        Label::Internal,
                    ));
                }
                out.push((with(&|d| d.mode = Mode::Sim), vec![], vec![], false, Label::Internal));
                if !c.done {
                    out.push((
                        with(&|d| {
                            d.mode = Mode::T2b;
                            d.any = false;
                        }),
                        vec![],
                        vec![],
                        false,
                        Label::Internal,
                    ));
                }
            }
            Mode::T2b => {
                for (s, a1) in edges(c.a) {
                    match s {
                        Sym::Tok(t) => {
                            let step = |d: &mut Ctl| {
                                d.a = a1;
                                d.any = true;
                            };
                            out.push((with(&step), vec![(self.place(Region::Debt, t), 1)], vec![], false, Label::Read(s)));
                            let mut d = with(&step);
                            self.dec_rdebt(&mut d, t);
                            out.push((d, vec![], vec![(self.place(Region::Zero, self.shift(t)), 1)], false, Label::Read(s)));
                        }
                        Sym::Hash if c.any => out.push((
                            with(&|d| {
                                d.a = a1;
                                d.mode = Mode::Sim;
                                d.any = false;
                            }),
                            vec![],
                            vec![],
                            false,
                            Label::Read(s),
                        )),
                        _ => {}
                    }
                }
                if c.any && self.final_a(c.a) {
                    out.push((
                        with(&|d| {
                            d.mode = Mode::Sim;
                            d.done = true;
                            d.any = false;
                        }),
                        vec![],
                        vec![],
                        false,
                        Label::Internal,
                    ));
                }
            }
            Mode::Final1 => {
                for t in kinds(&tb.center) {
                    if let Some(bit) = first_free(&tb.center, t, c.flags) {
                        out.push((with(&|d| d.flags |= bit), vec![(self.place(Region::Zero, t), 1)], vec![], false, Label::Internal));
                    }
                }
                for pos in &tb.high {
                    for t in kinds(pos) {
                        if let Some(bit) = first_free(pos, t, c.flags) {
                            out.push((with(&|d| d.flags |= bit), vec![(self.place(Region::High, t), 1)], vec![], false, Label::Internal));
                        }
                    }
                }
                out.push((
                    with(&|d| {
                        d.mode = Mode::Final2Start;
                        d.hi_last = None;
                        d.cur = None;
                    }),
                    vec![],
                    vec![],
                    false,
                    Label::Internal,
                ));
            }
            Mode::Final2Start => {
                if (c.done || self.final_a(c.a))
                    && c.flags == tb.all
                    && c.rdebt.iter().all(|&r| r == 0)
                    && (c.q, c.y) == (tb.state, tb.budget)
                {
                    out.push((Self::accept_ctl(), vec![], vec![], false, Label::Internal));
                }
                if !c.done {
                    let bound = c.hi_last.unwrap_or(tb.high.len());
                    for cur in std::iter::once(None).chain((0..bound).map(Some)) {
                        out.push((
                            with(&|d| {
                                d.mode = Mode::Final2;
                                d.cur = cur;
                                d.hi_last = cur.or(c.hi_last);
                                d.any = false;
                            }),
                            vec![],
                            vec![],
                            false,
                            Label::Internal,
                        ));
                    }
                }
            }
            Mode::Final2 => {
                for (s, a1) in edges(c.a) {
                    match s {
                        Sym::Tok(t) => {
                            let step = |d: &mut Ctl| {
                                d.a = a1;
                                d.any = true;
                            };
                            out.push((with(&step), vec![(self.place(Region::Debt, t), 1)], vec![], false, Label::Read(s)));
                            if let Some(bit) = c.cur.and_then(|i| first_free(&tb.high[i], t, c.flags)) {
                                let mut d = with(&step);
                                d.flags |= bit;
                                self.dec_rdebt(&mut d, t);
                                out.push((d, vec![], vec![], false, Label::Read(s)));
                            }
                            if !self.net.is_cost_place(t.place) {
                                let mut d = with(&step);
                                self.dec_rdebt(&mut d, t);
                                out.push((d, vec![], vec![], false, Label::Read(s)));
                            }
                        }
                        Sym::Hash if c.any => out.push((
                            with(&|d| {
                                d.a = a1;
                                d.mode = Mode::Final2Start;
                            }),
                            vec![],
                            vec![],
                            false,
                            Label::Read(s),
                        )),
                        _ => {}
                    }
                }
                if c.any && self.final_a(c.a) {
                    out.push((
                        with(&|d| {
                            d.mode = Mode::Final2Start;
                            d.done = true;
                        }),
                        vec![],
                        vec![],
                        false,
                        Label::Internal,
                    ));
                }
            }
            Mode::Init | Mode::Accept => unreachable!(),
        }
        out
    }

    fn discrete_moves(&self, c: &Ctl, tb: &TargetBits, out: &mut Vec<Move>) {
        for (ti, tr) in self.net.transitions.iter().enumerate() {
            if tr.src != c.q || tr.cost > c.y {
                continue;
            }
            let mut choices = vec![Choice { flags: c.flags, ..Default::default() }];
            let expand = |choices: Vec<Choice>, f: &dyn Fn(&Choice, &mut Vec<Choice>)| {
                let mut next = BTreeSet::new();
                for ch in &choices {
                    let mut v = vec![];
                    f(ch, &mut v);
                    next.extend(v);
                }
                next.into_iter().collect::<Vec<_>>()
            };
            for arc in &tr.inputs {
                choices = expand(choices, &|ch, v| {
                    for t in (0..self.levels as u32).map(|k| AbstractToken::new(arc.place, k)) {
                        if int_in(t.level, &arc.iv) {
                            let mut n = ch.clone();
                            n.inp.push((self.place(Region::Zero, t), 1));
                            v.push(n);
                        }
                        if frac_match(t.level, &arc.iv) {
                            for r in [Region::Low, Region::High] {
                                let mut n = ch.clone();
                                n.inp.push((self.place(r, t), 1));
                                v.push(n);
                            }
                            if !c.done {
                                let mut n = ch.clone();
                                *n.in_debt.entry(t).or_default() += 1;
                                v.push(n);
                            }
                        }
                    }
                });
            }
            for arc in &tr.reads {
                choices = expand(choices, &|ch, v| {
                    for t in (0..self.levels as u32).map(|k| AbstractToken::new(arc.place, k)) {
                        if int_in(t.level, &arc.iv) {
                            let mut n = ch.clone();
                            let p = self.place(Region::Zero, t);
                            n.inp.push((p, 1));
                            n.out.push((p, 1));
                            v.push(n);
                        }
                        if frac_match(t.level, &arc.iv) {
                            for r in [Region::Low, Region::High] {
                                let mut n = ch.clone();
                                let p = self.place(r, t);
                                n.inp.push((p, 1));
                                n.out.push((p, 1));
                                v.push(n);
                            }
                            if !c.done {
                                let mut n = ch.clone();
                                *n.rd_debt.entry(t).or_default() += 1;
                                v.push(n);
                            }
                            // A claimed low target token is alive and may be read.
                            let claimed = tb.low.iter().flatten().find(|(u, b)| *u == t && ch.flags & b != 0 && ch.read_bits & b == 0);
                            if let Some(&(_, b)) = claimed {
                                let mut n = ch.clone();
                                n.read_bits |= b;
                                v.push(n);
                            }
                        }
                    }
                });
            }
            for arc in &tr.outputs {
                choices = expand(choices, &|ch, v| {
                    for t in (0..self.levels as u32).map(|k| AbstractToken::new(arc.place, k)) {
                        if int_in(t.level, &arc.iv) {
                            let mut n = ch.clone();
                            n.out.push((self.place(Region::Zero, t), 1));
                            v.push(n);
                        }
                        if frac_match(t.level, &arc.iv) {
                            for r in [Region::Low, Region::High] {
                                let mut n = ch.clone();
                                n.out.push((self.place(r, t), 1));
                                v.push(n);
                            }
                            for pos in &tb.low {
                                if let Some(b) = first_free(pos, t, ch.flags) {
                                    let mut n = ch.clone();
                                    n.flags |= b;
                                    v.push(n);
                                }
                            }
                        }
                    }
                });
            }
            for ch in choices {
                let mut d = c.clone();
                d.q = tr.dst;
                d.y = c.y - tr.cost;
                d.flags = ch.flags;
                let mut o = ch.out.clone();
                let touched: BTreeSet<AbstractToken> = ch.in_debt.keys().chain(ch.rd_debt.keys()).copied().collect();
                for t in touched {
                    let k = self.kind(t);
                    let inn = ch.in_debt.get(&t).copied().unwrap_or(0);
                    let rd = ch.rd_debt.get(&t).copied().unwrap_or(0);
                    d.rdebt[k] = rd.max(d.rdebt[k].saturating_sub(inn));
                    debug_assert!(d.rdebt[k] <= self.rmax);
                    if inn > 0 {
                        o.push((self.place(Region::Debt, t), inn as u32));
                    }
                }
                out.push((d, bag(ch.inp), bag(o), false, Label::Disc(ti)));
            }
        }
    }
}

/// Builds a transfer net whose accepting configurations are reachable iff
/// some configuration encoded by a word of `aut` reaches `↑U` (adding
/// zero-cost tokens only) with discrete steps and short delays.
pub fn compile_oracle(aut: &ConfigAutomaton, u: &[BudgetedConfig], net: &Ptpn, limits: CompileLimits) -> Result<Compiled, EncodeError> {
    let aut = aut.trim();
    let levels = net.cmax() as usize + 2;
    let targets = u.iter().map(TargetBits::new).collect::<Result<Vec<_>, _>>()?;
    let rmax = net.transitions.iter().map(|t| t.reads.len()).max().unwrap_or(0) as u8;
    let comp = Compiler { net, aut: &aut, targets, levels, rmax };
    let np = net.places.len();
    let mut sd = Sdtn::default();
    for (r, name) in ["zero", "low", "high", "debt"].iter().enumerate() {
        for p in 0..np {
            for k in 0..levels {
                let idx = sd.add_place(&format!("{}_{}_{}", name, net.places[p].name, k));
                debug_assert_eq!(idx, (r * np + p) * levels + k);
            }
        }
    }
    for t in comp.tokens() {
        sd.st.push((comp.place(Region::Zero, t), comp.place(Region::Low, t)));
    }
    let start = Ctl {
        mode: Mode::Init,
        a: 0,
        done: false,
        q: 0,
        y: 0,
        target: 0,
        flags: 0,
        cur: None,
        hi_last: None,
        any: false,
        rdebt: vec![0; np * levels],
    };
    let accept = Compiler::accept_ctl();
    let mut index: HashMap<Ctl, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    index.insert(start.clone(), sd.add_state("init"));
    queue.push_back(start);
    let mut labels = vec![];
    while let Some(c) = queue.pop_front() {
        let from = index[&c];
        for (d, i, o, transfer, label) in comp.moves(&c) {
            let to = match index.get(&d) {
                Some(&s) => s,
                None => {
                    if index.len() >= limits.max_controls {
                        return Err(EncodeError::TooLarge(limits.max_controls));
                    }
                    let name = if d == accept { "accept".to_string() } else { format!("s{}", sd.states.len()) };
                    let s = sd.add_state(&name);
                    index.insert(d.clone(), s);
                    queue.push_back(d);
                    s
                }
            };
            let name = match label {
                Label::Disc(t) => format!("{}_{}", net.transitions[t].name, sd.transitions.len()),
                _ => format!("x{}", sd.transitions.len()),
            };
            sd.add_transition(&name, from, to, i, o, transfer);
            labels.push(label);
        }
    }
    let mut conj = vec![match index.get(&accept) {
        Some(&s) => Formula::state(s),
        None => Formula::False,
    }];
    for t in comp.tokens() {
        conj.push(Formula::exactly(comp.place(Region::Debt, t), 0));
        if net.is_cost_place(t.place) {
            for r in [Region::Zero, Region::Low, Region::High] {
                conj.push(Formula::exactly(comp.place(r, t), 0));
            }
        }
    }
    let query = ReachQuery { init: vec![UConfig::new(0, vec![0; sd.places.len()])], target: Formula::And(conj) };
    Ok(Compiled { sdtn: sd, query, labels, targets: u.to_vec(), rmax })
}

/// An abstract run recovered from a compiled-net witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractRun {
    pub start: BudgetedConfig,
    pub steps: Vec<AbstractStep>,
    /// `configs[0] = start`, one more entry per step.
    pub configs: Vec<BudgetedConfig>,
    pub target: BudgetedConfig,
}

/// Largest set of candidate configurations tracked while decoding.
const DECODE_WIDTH: usize = 200_000;

/// Recovers an abstract run from a witness of the compiled net. Fresh tokens
/// on high positions are placed lazily by the net, so the replay tracks every
/// placement and keeps one that ends above the chosen target.
pub fn decode_witness(net: &Ptpn, comp: &Compiled, w: &UWitness) -> Result<AbstractRun, EncodeError> {
    let mut word = vec![];
    let mut target = None;
    let mut events = vec![];
    for &t in &w.steps {
        match comp.labels[t] {
            Label::Start { head, target: ti } => {
                word.push(head);
                target = Some(ti);
            }
            Label::Read(s) => word.push(s),
            Label::Disc(tr) => events.push(Some(tr)),
            Label::Round => events.push(None),
            Label::Internal => {}
        }
    }
    let target = comp.targets[target.ok_or_else(|| EncodeError::Decode("no target chosen".into()))?].clone();
    let start = dec(&word).map_err(|e| EncodeError::Decode(format!("{} in `{}`", e, render_word(net, &word))))?;
    // Each node: config, parent index in the previous layer, steps from the parent.
    type Node = (BudgetedConfig, usize, Vec<(AbstractStep, BudgetedConfig)>);
    let mut layers: Vec<Vec<Node>> = vec![vec![(start.clone(), 0, vec![])]];
    for ev in &events {
        let mut seen = BTreeSet::new();
        let mut next: Vec<Node> = vec![];
        for (i, (s, _, _)) in layers.last().unwrap().iter().enumerate() {
            let mut succ: Vec<Vec<(AbstractStep, BudgetedConfig)>> = vec![];
            match ev {
                Some(t) => {
                    for (st, d) in monotone_steps(net, s) {
                        if st == AbstractStep::Discrete(*t) {
                            succ.push(vec![(st, d)]);
                        }
                    }
                }
                None => {
                    let delay =
                        |b: &BudgetedConfig, k: DelayKind| monotone_steps(net, b).into_iter().find(|(st, _)| *st == AbstractStep::Delay(k));
                    let mut path = vec![];
                    let mut a = s.clone();
                    if !s.conf.center.is_empty() {
                        let step = delay(s, DelayKind::Type1).expect("type 1 applies to a nonempty center");
                        a = step.1.clone();
                        path.push(step);
                    }
                    succ.push(path.clone());
                    if let Some(step) = delay(&a, DelayKind::Type2) {
                        path.push(step);
                        succ.push(path);
                    }
                }
            }
            for p in succ {
                let d = p.last().map_or_else(|| s.clone(), |(_, d)| d.clone());
                if seen.insert(d.clone()) {
                    next.push((d, i, p));
                }
            }
        }
        if next.len() > DECODE_WIDTH {
            return Err(EncodeError::Decode(format!("more than {} candidate configurations", DECODE_WIDTH)));
        }
        if next.is_empty() {
            return Err(EncodeError::Decode("replay got stuck".into()));
        }
        layers.push(next);
    }
    let last = layers.last().unwrap();
    let Some(mut idx) = last.iter().position(|(c, _, _)| leq_f(net, &target, c)) else {
        return Err(EncodeError::Decode("no replayed configuration covers the target".into()));
    };
    let mut pieces = vec![];
    for layer in layers.iter().skip(1).rev() {
        let (_, parent, path) = &layer[idx];
        pieces.push(path.clone());
        idx = *parent;
    }
    let mut steps = vec![];
    let mut configs = vec![start.clone()];
    for path in pieces.into_iter().rev() {
        for (st, d) in path {
            steps.push(st);
            configs.push(d);
        }
    }
    Ok(AbstractRun { start, steps, configs, target })
}

/// Checks that `run` is a valid sequence of monotone steps ending above its target.
pub fn check_run(net: &Ptpn, run: &AbstractRun) -> bool {
    run.configs.len() == run.steps.len() + 1
        && run.configs[0] == run.start
        && run
            .steps
            .iter()
            .enumerate()
            .all(|(i, st)| monotone_steps(net, &run.configs[i]).iter().any(|(s, d)| s == st && *d == run.configs[i + 1]))
        && leq_f(net, &run.target, run.configs.last().unwrap())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleLimits {
    pub reach: ReachLimits,
    pub compile: CompileLimits,
}

#[derive(Clone, Debug)]
pub struct OracleAnswer<T> {
    pub answer: T,
    pub run: Option<AbstractRun>,
    /// Control states of the compiled net, when one was built.
    pub controls: usize,
    pub explored: usize,
}

fn run_compiled(
    net: &Ptpn,
    aut: &ConfigAutomaton,
    u: &[BudgetedConfig],
    limits: OracleLimits,
) -> Result<(Verdict, Option<AbstractRun>, usize, usize), EncodeError> {
    let comp = match compile_oracle(aut, u, net, limits.compile) {
        Ok(c) => c,
        Err(EncodeError::TooLarge(_)) => return Ok((Verdict::Unknown, None, limits.compile.max_controls, 0)),
        Err(e) => return Err(e),
    };
    let rep = bounded_reach(&comp.sdtn, &comp.query, limits.reach);
    let controls = comp.sdtn.states.len();
    match rep.result {
        ReachResult::Yes(w) => {
            let run = decode_witness(net, &comp, &w)?;
            if !check_run(net, &run) {
                return Err(EncodeError::Decode("decoded run does not replay".into()));
            }
            Ok((Verdict::Yes, Some(run), controls, rep.explored))
        }
        ReachResult::No => Ok((Verdict::No, None, controls, rep.explored)),
        ReachResult::Unknown(_) => Ok((Verdict::Unknown, None, controls, rep.explored)),
    }
}

/// Cheapest transition cost from each state to `target` in the control
/// graph, ignoring tokens.
fn cost_to(net: &Ptpn, target: usize) -> Vec<Option<u64>> {
    let mut dist = vec![None; net.states.len()];
    dist[target] = Some(0);
    // Bellman-Ford; the graphs are small.
    for _ in 0..net.states.len() {
        let mut changed = false;
        for t in &net.transitions {
            if let Some(d) = dist[t.dst] {
                let nd = d + t.cost;
                if dist[t.src].is_none_or(|o| nd < o) {
                    dist[t.src] = Some(nd);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Head symbols `(q, y)` from which some target is reachable in the control
/// graph within the budget difference.
fn viable_heads(net: &Ptpn, v: u64, u: &[BudgetedConfig]) -> BTreeSet<(usize, u64)> {
    let dists: Vec<(u64, Vec<Option<u64>>)> = u.iter().map(|b| (b.budget, cost_to(net, b.conf.state))).collect();
    let mut out = BTreeSet::new();
    for q in 0..net.states.len() {
        for y in 0..=v {
            if dists.iter().any(|(by, d)| d[q].is_some_and(|c| y >= by + c)) {
                out.insert((q, y));
            }
        }
    }
    out
}

/// Whether `c` reaches `↑U` with monotone steps.
pub fn oracle_7a(net: &Ptpn, c: &BudgetedConfig, u: &[BudgetedConfig], limits: OracleLimits) -> Result<OracleAnswer<Verdict>, EncodeError> {
    if let Some(t) = u.iter().find(|b| leq_f(net, b, c)) {
        let run = AbstractRun { start: c.clone(), steps: vec![], configs: vec![c.clone()], target: t.clone() };
        return Ok(OracleAnswer { answer: Verdict::Yes, run: Some(run), controls: 0, explored: 0 });
    }
    if !viable_heads(net, c.budget, u).contains(&(c.conf.state, c.budget)) {
        return Ok(OracleAnswer { answer: Verdict::No, run: None, controls: 0, explored: 0 });
    }
    let (answer, run, controls, explored) = run_compiled(net, &aut_single(c), u, limits)?;
    Ok(OracleAnswer { answer, run, controls, explored })
}

/// Looks for a configuration in the upward closure of the core, outside
/// `↑X`, that reaches `↑U` with monotone steps.
pub fn oracle_7b(
    net: &Ptpn,
    v: u64,
    u: &[BudgetedConfig],
    x: &[BudgetedConfig],
    limits: OracleLimits,
) -> Result<OracleAnswer<Outside<BudgetedConfig>>, EncodeError> {
    let none = |answer| Ok(OracleAnswer { answer, run: None, controls: 0, explored: 0 });
    if u.is_empty() {
        return none(Outside::Empty);
    }
    let outside_x = aut_complement(&aut_upward_closure(net, x), net, v);
    let heads = viable_heads(net, v, u);
    let mut aut = aut_intersect(&outside_x, &aut_core(net, v));
    // Drop head edges that cannot lead to a target.
    for e in aut.edges.iter_mut() {
        e.retain(|(s, _)| !matches!(s, Sym::Head(q, y) if !heads.contains(&(*q, *y))));
    }
    let aut = aut.trim();
    if aut.is_empty() {
        return none(Outside::Empty);
    }
    let (verdict, run, controls, explored) = run_compiled(net, &aut, u, limits)?;
    let answer = match (verdict, &run) {
        (Verdict::Yes, Some(r)) => Outside::Witness(r.start.clone()),
        (Verdict::No, _) => Outside::Empty,
        _ => Outside::Unknown,
    };
    Ok(OracleAnswer { answer, run, controls, explored })
}
