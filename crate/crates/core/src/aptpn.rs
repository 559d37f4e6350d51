//! Abstract configurations: integer levels plus the relative order of
//! fractional parts, with discrete steps and the four kinds of abstract delay.

use crate::deltaform::{decompose, is_marking_delta_form};
use crate::multiset::Multiset;
use crate::net::{Arc, Interval, Ptpn};
use crate::num::{floor_u64, q, Q};
use crate::semantics::{bipartite_match, Configuration, Marking};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AbstractToken {
    pub place: usize,
    /// Integer part of the age, with `cmax + 1` standing for every larger age.
    pub level: u32,
}

impl AbstractToken {
    pub fn new(place: usize, level: u32) -> Self {
        AbstractToken { place, level }
    }
}

pub type AMarking = Multiset<AbstractToken>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractConfig {
    pub state: usize,
    /// Positions with high fractional parts, in increasing order of fraction.
    pub high: Vec<AMarking>,
    /// Tokens with integer age.
    pub center: AMarking,
    /// Positions with low fractional parts, in increasing order of fraction.
    pub low: Vec<AMarking>,
}

impl AbstractConfig {
    pub fn new(state: usize, high: Vec<AMarking>, center: AMarking, low: Vec<AMarking>) -> Self {
        AbstractConfig { state, high, center, low }.canonical()
    }

    /// Drops empty non-center positions.
    pub fn canonical(mut self) -> Self {
        self.high.retain(|m| !m.is_empty());
        self.low.retain(|m| !m.is_empty());
        self
    }

    pub fn is_canonical(&self) -> bool {
        self.high.iter().chain(&self.low).all(|m| !m.is_empty())
    }

    /// All tokens regardless of position.
    pub fn tokens(&self) -> AMarking {
        let mut m = self.center.clone();
        for b in self.high.iter().chain(&self.low) {
            m = m.sum(b);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.high.iter().chain(&self.low).map(|b| b.len()).sum::<usize>() + self.center.len()
    }

    /// Positions in order high…, center, low…; the center sits at `high.len()`.
    pub fn positions(&self) -> Vec<AMarking> {
        let mut v = self.high.clone();
        v.push(self.center.clone());
        v.extend(self.low.iter().cloned());
        v
    }

    pub(crate) fn from_positions(state: usize, mut pos: Vec<AMarking>, center: usize) -> Self {
        let low = pos.split_off(center + 1);
        let c = pos.pop().unwrap();
        AbstractConfig::new(state, pos, c, low)
    }

    pub fn render(&self, net: &Ptpn) -> String {
        render_abstract(net, self)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AbstractError {
    #[error("marking is not in {0}-form")]
    NotDeltaForm(String),
    #[error("delta must lie in (0, 2/5], got {0}")]
    BadDelta(String),
}

pub fn level_of(age: &Q, cmax: u32) -> u32 {
    floor_u64(age).min(cmax as u64 + 1) as u32
}

fn abstract_marking(m: &Marking, cmax: u32) -> AMarking {
    m.map(|t| AbstractToken::new(t.place, level_of(&t.age, cmax)))
}

pub fn abstract_config(c: &Configuration, delta: &Q, cmax: u32) -> Result<AbstractConfig, AbstractError> {
    if *delta <= q(0, 1) || *delta > q(2, 5) {
        return Err(AbstractError::BadDelta(crate::num::fmt_q(delta)));
    }
    if !is_marking_delta_form(&c.marking, delta) {
        return Err(AbstractError::NotDeltaForm(crate::num::fmt_q(delta)));
    }
    let d = decompose(&c.marking);
    Ok(AbstractConfig {
        state: c.state,
        high: d.high.iter().map(|m| abstract_marking(m, cmax)).collect(),
        center: abstract_marking(&d.center, cmax),
        low: d.low.iter().map(|m| abstract_marking(m, cmax)).collect(),
    })
}

/// Whether every age `level + ε`, `0 < ε < 1`, lies in `iv`.
pub fn frac_match(level: u32, iv: &Interval) -> bool {
    iv.lo <= level && iv.hi.is_none_or(|h| level < h)
}

/// Whether the integer age `level` lies in `iv`.
pub fn int_in(level: u32, iv: &Interval) -> bool {
    let above = if iv.lo_open { level > iv.lo } else { level >= iv.lo };
    let below = match iv.hi {
        None => true,
        Some(h) if iv.hi_open => level < h,
        Some(h) => level <= h,
    };
    above && below
}

/// Token at position `pos` fits `arc`; `center` is the integer-age position.
fn fits(pos: usize, tok: &AbstractToken, arc: &Arc, center: usize) -> bool {
    tok.place == arc.place && if pos == center { int_in(tok.level, &arc.iv) } else { frac_match(tok.level, &arc.iv) }
}

pub fn shift(b: &AMarking, cmax: u32) -> AMarking {
    b.map(|t| AbstractToken::new(t.place, (t.level + 1).min(cmax + 1)))
}

type Located = (usize, AbstractToken);

fn located(pos: &[AMarking], places: &[usize]) -> Multiset<Located> {
    let mut m = Multiset::new();
    for (i, b) in pos.iter().enumerate() {
        for (t, n) in b.entries() {
            if places.contains(&t.place) {
                m.insert_n((i, *t), n);
            }
        }
    }
    m
}

fn choose_matching(pool: &Multiset<Located>, arcs: &[Arc], center: usize) -> Vec<Multiset<Located>> {
    pool.submultisets(arcs.len())
        .into_iter()
        .filter(|sel| bipartite_match(&sel.to_vec(), arcs, |(p, t), a| fits(*p, t, a, center)).is_some())
        .collect()
}

/// Ways to realize the output arcs: (integer-age tokens, fractional tokens).
fn output_choices(arcs: &[Arc], cmax: u32) -> BTreeSet<(AMarking, AMarking)> {
    let mut out = BTreeSet::new();
    fn go(i: usize, arcs: &[Arc], cmax: u32, zero: &mut AMarking, fr: &mut AMarking, out: &mut BTreeSet<(AMarking, AMarking)>) {
        let Some(a) = arcs.get(i) else {
            out.insert((zero.clone(), fr.clone()));
            return;
        };
        for level in 0..=cmax + 1 {
            let t = AbstractToken::new(a.place, level);
            if int_in(level, &a.iv) {
                zero.insert(t);
                go(i + 1, arcs, cmax, zero, fr, out);
                zero.remove(&t);
            }
            if frac_match(level, &a.iv) {
                fr.insert(t);
                go(i + 1, arcs, cmax, zero, fr, out);
                fr.remove(&t);
            }
        }
    }
    go(0, arcs, cmax, &mut AMarking::new(), &mut AMarking::new(), &mut out);
    out
}

/// Every way to place `toks` into `pos` (center at index `center`): each
/// token joins an existing non-center position or opens a new one in a gap.
fn insert_fresh(pos: Vec<AMarking>, center: usize, toks: &[AbstractToken], out: &mut BTreeSet<(Vec<AMarking>, usize)>) {
    let Some((t, rest)) = toks.split_first() else {
        out.insert((pos, center));
        return;
    };
    for i in 0..pos.len() {
        if i != center {
            let mut p = pos.clone();
            p[i].insert(*t);
            insert_fresh(p, center, rest, out);
        }
    }
    for gap in 0..=pos.len() {
        let mut p = pos.clone();
        p.insert(gap, AMarking::singleton(*t));
        let c = if gap <= center { center + 1 } else { center };
        insert_fresh(p, c, rest, out);
    }
}

pub fn abstract_discrete_steps(net: &Ptpn, a: &AbstractConfig, t: usize) -> BTreeSet<AbstractConfig> {
    let tr = &net.transitions[t];
    let mut res = BTreeSet::new();
    if tr.src != a.state {
        return res;
    }
    let cmax = net.cmax();
    let pos = a.positions();
    let center = a.high.len();
    let places = |arcs: &[Arc]| arcs.iter().map(|x| x.place).collect::<Vec<_>>();
    let outs = output_choices(&tr.outputs, cmax);
    for i in choose_matching(&located(&pos, &places(&tr.inputs)), &tr.inputs, center) {
        let mut rest = pos.clone();
        for (p, tok) in i.iter() {
            rest[*p].remove(tok);
        }
        let read_pool = located(&rest, &places(&tr.reads));
        if choose_matching(&read_pool, &tr.reads, center).is_empty() {
            continue;
        }
        for (zero, fr) in &outs {
            let mut base = rest.clone();
            base[center] = base[center].sum(zero);
            // Emptied positions vanish; a center index shift follows.
            let new_center = base[..center].iter().filter(|m| !m.is_empty()).count();
            let kept: Vec<AMarking> = base.into_iter().enumerate().filter(|(k, m)| *k == center || !m.is_empty()).map(|(_, m)| m).collect();
            let mut placed = BTreeSet::new();
            insert_fresh(kept, new_center, &fr.to_vec(), &mut placed);
            for (p, c) in placed {
                res.insert(AbstractConfig::from_positions(tr.dst, p, c));
            }
        }
    }
    res
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DelayKind {
    /// Short delay: integer-age tokens get a small fractional part.
    Type1,
    /// Short delay: the highest fractions reach the next integer.
    Type2,
    /// Delay just below 1 where no token ends on an integer.
    Type3,
    /// Delay just below 1 where one low class ends on an integer.
    Type4,
}

impl DelayKind {
    pub fn number(self) -> u8 {
        match self {
            DelayKind::Type1 => 1,
            DelayKind::Type2 => 2,
            DelayKind::Type3 => 3,
            DelayKind::Type4 => 4,
        }
    }
}

fn long_delay(a: &AbstractConfig, k: usize, cmax: u32, land: bool) -> AbstractConfig {
    let mut high: Vec<AMarking> = a.high.iter().map(|b| shift(b, cmax)).collect();
    high.push(a.center.clone());
    high.extend(a.low[..k].iter().cloned());
    let (center, rest) = if land { (shift(&a.low[k], cmax), &a.low[k + 1..]) } else { (AMarking::new(), &a.low[k..]) };
    AbstractConfig::new(a.state, high, center, rest.iter().map(|b| shift(b, cmax)).collect())
}

pub fn abstract_timed_steps(net: &Ptpn, a: &AbstractConfig) -> BTreeSet<(DelayKind, AbstractConfig)> {
    let cmax = net.cmax();
    let mut res = BTreeSet::new();
    if !a.center.is_empty() {
        let mut low = vec![a.center.clone()];
        low.extend(a.low.iter().cloned());
        res.insert((DelayKind::Type1, AbstractConfig::new(a.state, a.high.clone(), AMarking::new(), low)));
    } else if let Some((last, rest)) = a.high.split_last() {
        res.insert((DelayKind::Type2, AbstractConfig::new(a.state, rest.to_vec(), shift(last, cmax), a.low.clone())));
    }
    for k in 0..=a.low.len() {
        res.insert((DelayKind::Type3, long_delay(a, k, cmax, false)));
    }
    for k in 0..a.low.len() {
        res.insert((DelayKind::Type4, long_delay(a, k, cmax, true)));
    }
    res
}

/// Storage cost of a unit delay: Σ tokens × place cost.
pub fn unit_storage_cost(net: &Ptpn, a: &AbstractConfig) -> u64 {
    a.tokens().entries().map(|(t, n)| n as u64 * net.place_cost(t.place)).sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbstractStep {
    Discrete(usize),
    Delay(DelayKind),
}

/// Cost of a step taken from `source`.
pub fn abstract_step_cost(net: &Ptpn, source: &AbstractConfig, step: &AbstractStep) -> u64 {
    match step {
        AbstractStep::Discrete(t) => net.transitions[*t].cost,
        AbstractStep::Delay(DelayKind::Type1 | DelayKind::Type2) => 0,
        AbstractStep::Delay(_) => unit_storage_cost(net, source),
    }
}

/// All successors, discrete and timed, with the step taken.
pub fn abstract_successors(net: &Ptpn, a: &AbstractConfig) -> Vec<(AbstractStep, AbstractConfig)> {
    let mut out = vec![];
    for t in 0..net.transitions.len() {
        for b in abstract_discrete_steps(net, a, t) {
            out.push((AbstractStep::Discrete(t), b));
        }
    }
    for (k, b) in abstract_timed_steps(net, a) {
        out.push((AbstractStep::Delay(k), b));
    }
    out
}

pub fn render_amarking(net: &Ptpn, m: &AMarking) -> String {
    if m.is_empty() {
        return "∅".into();
    }
    let parts: Vec<String> = m
        .entries()
        .map(|(t, n)| {
            let s = format!("<{},{}>", net.places[t.place].name, t.level);
            if n > 1 {
                format!("{}^{}", s, n)
            } else {
                s
            }
        })
        .collect();
    format!("[{}]", parts.join(","))
}

fn render_word(net: &Ptpn, w: &[AMarking]) -> String {
    if w.is_empty() {
        "ε".into()
    } else {
        w.iter().map(|b| render_amarking(net, b)).collect()
    }
}

/// `(q, high, center, low)` with positions juxtaposed, `ε` for an empty side
/// and `∅` for an empty center.
pub fn render_abstract(net: &Ptpn, a: &AbstractConfig) -> String {
    format!("({}, {}, {}, {})", net.states[a.state], render_word(net, &a.high), render_amarking(net, &a.center), render_word(net, &a.low))
}

impl fmt::Display for AbstractToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.place, self.level)
    }
}
