//! Untimed nets with one global simultaneous transfer, nets with a single
//! inhibitor arc, the reductions between them, generalized reachability
//! targets and a bounded explicit-state reachability search.
//!
//! Text format (one declaration per line, `#` comments):
//!
//! ```text
//! state q0 q1
//! place a b
//! init q0 a*2
//! trans t1 q0 -> q1 in a out b
//! transfer t2 q1 -> q0 in out
//! ST: (a,b)
//! target state=q0 & b>=2 & !(a=1)
//! ```
//!
//! Inhibitor nets use `inhibit PLACE TRANSITION` and no transfer lines.

use crate::parse::{words, ParseError};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Sparse multiset of places: sorted, merged, no zero counts.
pub type Bag = Vec<(usize, u32)>;

pub fn bag(items: impl IntoIterator<Item = (usize, u32)>) -> Bag {
    let mut m: BTreeMap<usize, u32> = BTreeMap::new();
    for (p, k) in items {
        *m.entry(p).or_default() += k;
    }
    m.into_iter().filter(|&(_, k)| k > 0).collect()
}

fn bag_count(b: &Bag, p: usize) -> u32 {
    b.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, k)| k)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UTransition {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub input: Bag,
    pub output: Bag,
    /// Fires the global transfer relation as well.
    pub transfer: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sdtn {
    pub states: Vec<String>,
    pub places: Vec<String>,
    pub transitions: Vec<UTransition>,
    /// Global (source, target) transfer pairs.
    pub st: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UConfig {
    pub state: usize,
    pub marking: Vec<u32>,
}

impl UConfig {
    pub fn new(state: usize, marking: Vec<u32>) -> Self {
        UConfig { state, marking }
    }

    pub fn from_bag(state: usize, places: usize, b: &Bag) -> Self {
        let mut marking = vec![0; places];
        for &(p, k) in b {
            marking[p] += k;
        }
        UConfig { state, marking }
    }

    pub fn render(&self, states: &[String], places: &[String]) -> String {
        let toks: Vec<String> = self
            .marking
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(p, &k)| if k == 1 { places[p].clone() } else { format!("{}*{}", places[p], k) })
            .collect();
        if toks.is_empty() {
            states[self.state].clone()
        } else {
            format!("{} {}", states[self.state], toks.join(" "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SdtnError {
    #[error("transfer pairs ({0},{1}) and ({2},{3}) overlap")]
    Overlap(String, String, String, String),
    #[error("transfer pair ({0},{0}) moves a place onto itself")]
    SelfTransfer(String),
    #[error("transfer transition {0} touches transfer place {1}")]
    TouchesTransfer(String, String),
    #[error("index out of range in {0}")]
    Range(String),
    #[error("expected exactly one inhibitor arc and no transfers")]
    Inhibitor,
    #[error("duplicate name `{0}`")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FireError {
    #[error("transition {0} expects state {1}")]
    WrongState(String, String),
    #[error("transition {0} needs more tokens on {1}")]
    Insufficient(String, String),
    #[error("transition {0} is inhibited by a token on {1}")]
    Inhibited(String, String),
    #[error("no transition {0}")]
    NoSuchTransition(usize),
}

impl Sdtn {
    pub fn add_state(&mut self, name: &str) -> usize {
        self.states.push(name.to_string());
        self.states.len() - 1
    }

    pub fn add_place(&mut self, name: &str) -> usize {
        self.places.push(name.to_string());
        self.places.len() - 1
    }

    pub fn add_transition(&mut self, name: &str, src: usize, dst: usize, input: Bag, output: Bag, transfer: bool) -> usize {
        self.transitions.push(UTransition { name: name.to_string(), src, dst, input, output, transfer });
        self.transitions.len() - 1
    }

    pub fn state(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn place(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|s| s == name)
    }

    /// A name not yet used by a state or place.
    pub fn fresh_name(&self, base: &str) -> String {
        let taken = |n: &str| self.states.iter().chain(&self.places).any(|s| s == n);
        if !taken(base) {
            return base.to_string();
        }
        (1..).map(|i| format!("{}_{}", base, i)).find(|n| !taken(n)).unwrap()
    }

    pub fn validate(&self) -> Result<(), SdtnError> {
        let np = self.places.len();
        let ns = self.states.len();
        let names: BTreeSet<&String> = self.states.iter().chain(&self.places).collect();
        if names.len() != ns + np {
            let mut seen = BTreeSet::new();
            let dup = self.states.iter().chain(&self.places).find(|s| !seen.insert(*s)).unwrap();
            return Err(SdtnError::Duplicate(dup.clone()));
        }
        for t in &self.transitions {
            if t.src >= ns || t.dst >= ns || t.input.iter().chain(&t.output).any(|&(p, _)| p >= np) {
                return Err(SdtnError::Range(t.name.clone()));
            }
        }
        let pn = |p: usize| self.places[p].clone();
        for (i, &(a, b)) in self.st.iter().enumerate() {
            if a >= np || b >= np {
                return Err(SdtnError::Range("ST".into()));
            }
            if a == b {
                return Err(SdtnError::SelfTransfer(pn(a)));
            }
            for &(c, d) in &self.st[..i] {
                if (a, b) != (c, d) && [a, b, c, d].iter().collect::<BTreeSet<_>>().len() != 4 {
                    return Err(SdtnError::Overlap(pn(c), pn(d), pn(a), pn(b)));
                }
            }
        }
        let touched: BTreeSet<usize> = self.st.iter().flat_map(|&(a, b)| [a, b]).collect();
        for t in self.transitions.iter().filter(|t| t.transfer) {
            if let Some(&(p, _)) = t.input.iter().chain(&t.output).find(|(p, _)| touched.contains(p)) {
                return Err(SdtnError::TouchesTransfer(t.name.clone(), pn(p)));
            }
        }
        Ok(())
    }

    pub fn sources(&self) -> BTreeSet<usize> {
        self.st.iter().map(|&(s, _)| s).collect()
    }

    pub fn fire(&self, c: &UConfig, t: usize) -> Result<UConfig, FireError> {
        let tr = self.transitions.get(t).ok_or(FireError::NoSuchTransition(t))?;
        if c.state != tr.src {
            return Err(FireError::WrongState(tr.name.clone(), self.states[tr.src].clone()));
        }
        let mut m = c.marking.clone();
        for &(p, k) in &tr.input {
            if m[p] < k {
                return Err(FireError::Insufficient(tr.name.clone(), self.places[p].clone()));
            }
            m[p] -= k;
        }
        for &(p, k) in &tr.output {
            m[p] += k;
        }
        if tr.transfer {
            for &(s, g) in &self.st {
                m[g] += m[s];
                m[s] = 0;
            }
        }
        Ok(UConfig { state: tr.dst, marking: m })
    }
}

/// A net whose transition `trans` may only fire while `place` is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InhibitorNet {
    pub net: Sdtn,
    pub place: usize,
    pub trans: usize,
}

impl InhibitorNet {
    pub fn new(net: Sdtn, place: usize, trans: usize) -> Result<Self, SdtnError> {
        if !net.st.is_empty() || net.transitions.iter().any(|t| t.transfer) {
            return Err(SdtnError::Inhibitor);
        }
        if place >= net.places.len() || trans >= net.transitions.len() {
            return Err(SdtnError::Range("inhibitor arc".into()));
        }
        net.validate()?;
        Ok(InhibitorNet { net, place, trans })
    }

    pub fn fire(&self, c: &UConfig, t: usize) -> Result<UConfig, FireError> {
        if t == self.trans && c.marking[self.place] > 0 {
            return Err(FireError::Inhibited(self.net.transitions[t].name.clone(), self.net.places[self.place].clone()));
        }
        self.net.fire(c, t)
    }
}

/// Common view used by the reachability search.
pub trait UntimedNet: Sync {
    fn base(&self) -> &Sdtn;
    fn fire_t(&self, c: &UConfig, t: usize) -> Result<UConfig, FireError>;
}

impl UntimedNet for Sdtn {
    fn base(&self) -> &Sdtn {
        self
    }
    fn fire_t(&self, c: &UConfig, t: usize) -> Result<UConfig, FireError> {
        self.fire(c, t)
    }
}

impl UntimedNet for InhibitorNet {
    fn base(&self) -> &Sdtn {
        &self.net
    }
    fn fire_t(&self, c: &UConfig, t: usize) -> Result<UConfig, FireError> {
        self.fire(c, t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    State(usize),
    Exactly(usize, u32),
    AtLeast(usize, u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Atom {
    pub fn holds(&self, c: &UConfig) -> bool {
        match *self {
            Atom::State(q) => c.state == q,
            Atom::Exactly(p, k) => c.marking[p] == k,
            Atom::AtLeast(p, k) => c.marking[p] >= k,
        }
    }

    /// The negation as a disjunction of atoms.
    fn negate(&self, nstates: usize) -> Vec<Atom> {
        match *self {
            Atom::State(q) => (0..nstates).filter(|&r| r != q).map(Atom::State).collect(),
            Atom::Exactly(p, k) => (0..k).map(|j| Atom::Exactly(p, j)).chain([Atom::AtLeast(p, k + 1)]).collect(),
            Atom::AtLeast(p, k) => (0..k).map(|j| Atom::Exactly(p, j)).collect(),
        }
    }
}

impl Formula {
    pub fn state(q: usize) -> Self {
        Formula::Atom(Atom::State(q))
    }
    pub fn exactly(p: usize, k: u32) -> Self {
        Formula::Atom(Atom::Exactly(p, k))
    }
    pub fn at_least(p: usize, k: u32) -> Self {
        Formula::Atom(Atom::AtLeast(p, k))
    }
    pub fn negate(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn holds(&self, c: &UConfig) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(c),
            Formula::Not(f) => !f.holds(c),
            Formula::And(fs) => fs.iter().all(|f| f.holds(c)),
            Formula::Or(fs) => fs.iter().any(|f| f.holds(c)),
        }
    }

    fn atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::Atom(a) => out.push(a.clone()),
            Formula::Not(f) => f.atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.atoms(out)),
            _ => {}
        }
    }

    pub fn well_typed(&self, nstates: usize, nplaces: usize) -> bool {
        let mut v = vec![];
        self.atoms(&mut v);
        v.iter().all(|a| match *a {
            Atom::State(q) => q < nstates,
            Atom::Exactly(p, _) | Atom::AtLeast(p, _) => p < nplaces,
        })
    }

    /// Disjunctive normal form over positive atoms.
    pub fn dnf(&self, nstates: usize) -> Vec<Vec<Atom>> {
        self.dnf_signed(true, nstates)
    }

    fn dnf_signed(&self, pos: bool, ns: usize) -> Vec<Vec<Atom>> {
        let product = |parts: Vec<Vec<Vec<Atom>>>| {
            parts.into_iter().fold(vec![vec![]], |acc: Vec<Vec<Atom>>, d| {
                acc.iter().flat_map(|c| d.iter().map(move |e| c.iter().chain(e).cloned().collect())).collect()
            })
        };
        match (self, pos) {
            (Formula::True, true) | (Formula::False, false) => vec![vec![]],
            (Formula::True, false) | (Formula::False, true) => vec![],
            (Formula::Atom(a), true) => vec![vec![a.clone()]],
            (Formula::Atom(a), false) => a.negate(ns).into_iter().map(|x| vec![x]).collect(),
            (Formula::Not(f), _) => f.dnf_signed(!pos, ns),
            (Formula::And(fs), true) | (Formula::Or(fs), false) => product(fs.iter().map(|f| f.dnf_signed(pos, ns)).collect()),
            (Formula::Or(fs), true) | (Formula::And(fs), false) => fs.iter().flat_map(|f| f.dnf_signed(pos, ns)).collect(),
        }
    }

    pub fn render(&self, states: &[String], places: &[String]) -> String {
        let list = |fs: &[Formula], op: &str, empty: &str| {
            if fs.is_empty() {
                empty.to_string()
            } else {
                format!("({})", fs.iter().map(|f| f.render(states, places)).collect::<Vec<_>>().join(op))
            }
        };
        match self {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Atom(Atom::State(q)) => format!("state={}", states[*q]),
            Formula::Atom(Atom::Exactly(p, k)) => format!("{}={}", places[*p], k),
            Formula::Atom(Atom::AtLeast(p, k)) => format!("{}>={}", places[*p], k),
            Formula::Not(f) => format!("!{}", f.render(states, places)),
            Formula::And(fs) => list(fs, " & ", "true"),
            Formula::Or(fs) => list(fs, " | ", "false"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachQuery {
    pub init: Vec<UConfig>,
    pub target: Formula,
}

impl ReachQuery {
    pub fn well_typed(&self, n: &Sdtn) -> bool {
        self.target.well_typed(n.states.len(), n.places.len())
            && self.init.iter().all(|c| c.state < n.states.len() && c.marking.len() == n.places.len())
    }

    /// Pads initial markings after places were appended to the net.
    fn widen(&self, places: usize) -> Vec<UConfig> {
        self.init
            .iter()
            .map(|c| {
                let mut m = c.marking.clone();
                m.resize(places, 0);
                UConfig::new(c.state, m)
            })
            .collect()
    }
}

/// Simulates the transfer by a drain loop that must empty a mirror place
/// before an inhibited transition lets control continue.
pub fn sdtn_to_inhibitor(n: &Sdtn, q: &ReachQuery) -> (InhibitorNet, ReachQuery) {
    let mut out = Sdtn { states: n.states.clone(), places: n.places.clone(), transitions: vec![], st: vec![] };
    let sources = n.sources();
    let mirror = out.add_place(&n.fresh_name("p_mirror"));
    let cont: Vec<usize> = n
        .states
        .iter()
        .map(|s| {
            let name = out.fresh_name(&format!("p_{}", s));
            out.add_place(&name)
        })
        .collect();
    let drain = out.add_state(&n.fresh_name("q_drain"));
    let ret = out.add_state(&out.fresh_name("q_return"));
    let mirrored = |b: &Bag| -> Bag {
        let s: u32 = b.iter().filter(|(p, _)| sources.contains(p)).map(|&(_, k)| k).sum();
        bag(b.iter().copied().chain([(mirror, s)]))
    };
    for t in &n.transitions {
        if t.transfer {
            let o = bag(mirrored(&t.output).into_iter().chain([(cont[t.dst], 1)]));
            out.add_transition(&t.name, t.src, drain, mirrored(&t.input), o, false);
        } else {
            out.add_transition(&t.name, t.src, t.dst, mirrored(&t.input), mirrored(&t.output), false);
        }
    }
    for &(s, g) in &n.st {
        let name = format!("move_{}_{}", n.places[s], n.places[g]);
        out.add_transition(&name, drain, drain, bag([(s, 1), (mirror, 1)]), bag([(g, 1)]), false);
    }
    let inhibited = out.add_transition("done_transfer", drain, ret, vec![], vec![], false);
    let targets: BTreeSet<usize> = n.transitions.iter().filter(|t| t.transfer).map(|t| t.dst).collect();
    for q2 in targets {
        out.add_transition(&format!("resume_{}", n.states[q2]), ret, q2, bag([(cont[q2], 1)]), vec![], false);
    }
    let np = out.places.len();
    let init = q
        .widen(np)
        .into_iter()
        .map(|mut c| {
            c.marking[mirror] = sources.iter().map(|&p| c.marking[p]).sum();
            c
        })
        .collect();
    let target = Formula::And(vec![q.target.clone(), Formula::negate(Formula::state(drain)), Formula::negate(Formula::state(ret))]);
    let inet = InhibitorNet::new(out, mirror, inhibited).expect("reduction output is a valid inhibitor net");
    (inet, ReachQuery { init, target })
}

/// Replaces the inhibited transition by a transfer that dumps the inhibiting
/// place into a fresh sink which the target requires to stay empty.
///
/// An inhibited transition that consumes from the inhibiting place can never
/// fire, so it is parked on an unreachable state. One that produces into it
/// is split so that its outputs are added after the transfer.
pub fn inhibitor_to_sdtn(n: &InhibitorNet, q: &ReachQuery) -> (Sdtn, ReachQuery) {
    let mut out = n.net.clone();
    let sink = out.add_place(&n.net.fresh_name("p_sink"));
    let t = out.transitions[n.trans].clone();
    let mut target = vec![q.target.clone(), Formula::exactly(sink, 0)];
    if bag_count(&t.input, n.place) > 0 {
        let dead = out.add_state(&out.fresh_name("q_dead"));
        out.transitions[n.trans].src = dead;
    } else {
        let tr = &mut out.transitions[n.trans];
        tr.transfer = true;
        if bag_count(&t.output, n.place) > 0 {
            tr.output = vec![];
            let mid = out.add_state(&out.fresh_name("q_after"));
            out.transitions[n.trans].dst = mid;
            target.push(Formula::negate(Formula::state(mid)));
            out.add_transition(&format!("{}_out", t.name), mid, t.dst, vec![], t.output.clone(), false);
        }
    }
    out.st = vec![(n.place, sink)];
    let target = Formula::And(target);
    let init = q.widen(out.places.len());
    (out, ReachQuery { init, target })
}

/// Reduces a boolean target to reaching a fresh state with an empty marking.
/// Each satisfiable DNF clause gets a gadget state entered by consuming the
/// required tokens, with drain loops on every place not fixed exactly.
pub fn generalized_to_basic(q: &ReachQuery, n: &Sdtn) -> (Sdtn, ReachQuery) {
    let mut out = n.clone();
    let ns = n.states.len();
    let np = n.places.len();
    let goal = out.add_state(&n.fresh_name("q_goal"));
    for (j, clause) in q.target.dnf(ns).into_iter().enumerate() {
        let mut states: BTreeSet<usize> = (0..ns).collect();
        let mut exact: Vec<Option<u32>> = vec![None; np];
        let mut least = vec![0u32; np];
        let mut sat = true;
        for a in &clause {
            match *a {
                Atom::State(s) => states.retain(|&x| x == s),
                Atom::Exactly(p, k) => {
                    sat &= exact[p].is_none_or(|e| e == k);
                    exact[p] = Some(k);
                }
                Atom::AtLeast(p, k) => least[p] = least[p].max(k),
            }
        }
        for p in 0..np {
            if let Some(e) = exact[p] {
                sat &= e >= least[p];
            }
        }
        if !sat || states.is_empty() {
            continue;
        }
        let g = out.add_state(&out.fresh_name(&format!("q_clause{}", j)));
        let need = bag((0..np).map(|p| (p, exact[p].unwrap_or(least[p]))));
        for s in states {
            out.add_transition(&format!("enter{}_{}", j, n.states[s]), s, g, need.clone(), vec![], false);
        }
        for p in (0..np).filter(|&p| exact[p].is_none()) {
            out.add_transition(&format!("drain{}_{}", j, n.places[p]), g, g, bag([(p, 1)]), vec![], false);
        }
        out.add_transition(&format!("finish{}", j), g, goal, vec![], vec![], false);
    }
    let target = Formula::And(std::iter::once(Formula::state(goal)).chain((0..np).map(|p| Formula::exactly(p, 0))).collect());
    (out, ReachQuery { init: q.init.clone(), target })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ReachLimits {
    pub max_states: usize,
    pub max_tokens: u32,
    pub max_depth: usize,
}

impl Default for ReachLimits {
    fn default() -> Self {
        ReachLimits { max_states: 1_000_000, max_tokens: 64, max_depth: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UWitness {
    pub start: UConfig,
    pub steps: Vec<usize>,
    pub end: UConfig,
}

impl UWitness {
    pub fn names(&self, n: &Sdtn) -> Vec<String> {
        self.steps.iter().map(|&t| n.transitions[t].name.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum LimitHit {
    States,
    Tokens,
    Depth,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReachResult {
    Yes(UWitness),
    No,
    Unknown(LimitHit),
}

#[derive(Clone, Debug)]
pub struct ReachReport {
    pub result: ReachResult,
    pub explored: usize,
}

pub fn replay<N: UntimedNet + ?Sized>(n: &N, start: &UConfig, steps: &[usize]) -> Result<UConfig, (usize, FireError)> {
    let mut c = start.clone();
    for (i, &t) in steps.iter().enumerate() {
        c = n.fire_t(&c, t).map_err(|e| (i, e))?;
    }
    Ok(c)
}

/// Level-synchronous breadth-first search. A YES witness is the
/// lexicographically least (by transition index) among the shortest runs;
/// NO is returned only when nothing was cut off by a limit.
pub fn bounded_reach<N: UntimedNet + ?Sized>(n: &N, q: &ReachQuery, limits: ReachLimits) -> ReachReport {
    let base = n.base();
    let mut by_src: Vec<Vec<usize>> = vec![vec![]; base.states.len()];
    for (i, t) in base.transitions.iter().enumerate() {
        by_src[t.src].push(i);
    }
    // parent[i] = (predecessor index, transition)
    let mut seen: HashMap<UConfig, usize> = HashMap::new();
    let mut nodes: Vec<(UConfig, Option<(usize, usize)>)> = vec![];
    let mut frontier: Vec<usize> = vec![];
    let mut cut: Option<LimitHit> = None;
    let witness = |nodes: &Vec<(UConfig, Option<(usize, usize)>)>, mut i: usize| {
        let end = nodes[i].0.clone();
        let mut steps = vec![];
        while let Some((p, t)) = nodes[i].1 {
            steps.push(t);
            i = p;
        }
        steps.reverse();
        UWitness { start: nodes[i].0.clone(), steps, end }
    };
    for c in &q.init {
        if c.marking.iter().any(|&k| k > limits.max_tokens) {
            cut = Some(LimitHit::Tokens);
            continue;
        }
        if !seen.contains_key(c) {
            seen.insert(c.clone(), nodes.len());
            frontier.push(nodes.len());
            nodes.push((c.clone(), None));
        }
    }
    let mut depth = 0;
    loop {
        if let Some(&i) = frontier.iter().find(|&&i| q.target.holds(&nodes[i].0)) {
            return ReachReport { result: ReachResult::Yes(witness(&nodes, i)), explored: nodes.len() };
        }
        if frontier.is_empty() {
            let result = match cut {
                Some(h) => ReachResult::Unknown(h),
                None => ReachResult::No,
            };
            return ReachReport { result, explored: nodes.len() };
        }
        if depth >= limits.max_depth {
            return ReachReport { result: ReachResult::Unknown(LimitHit::Depth), explored: nodes.len() };
        }
        let expand = |&i: &usize| -> Vec<(usize, usize, UConfig)> {
            let c = &nodes[i].0;
            by_src[c.state].iter().filter_map(|&t| n.fire_t(c, t).ok().map(|d| (i, t, d))).collect()
        };
        let succs: Vec<Vec<(usize, usize, UConfig)>> =
            if frontier.len() > 256 { frontier.par_iter().map(expand).collect() } else { frontier.iter().map(expand).collect() };
        let mut next = vec![];
        for (i, t, d) in succs.into_iter().flatten() {
            if d.marking.iter().any(|&k| k > limits.max_tokens) {
                cut.get_or_insert(LimitHit::Tokens);
                continue;
            }
            if seen.contains_key(&d) {
                continue;
            }
            if nodes.len() >= limits.max_states {
                return ReachReport { result: ReachResult::Unknown(LimitHit::States), explored: nodes.len() };
            }
            seen.insert(d.clone(), nodes.len());
            next.push(nodes.len());
            nodes.push((d, Some((i, t))));
        }
        frontier = next;
        depth += 1;
    }
}

/// A parsed net file: the net, an optional inhibitor arc and the query.
#[derive(Clone, Debug)]
pub struct NetFile {
    pub net: Sdtn,
    pub inhibitor: Option<(usize, usize)>,
    pub query: ReachQuery,
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, col, msg: msg.into() }
}

fn parse_bag(n: &Sdtn, ws: &[(usize, &str)], line: usize) -> Result<Bag, ParseError> {
    let mut items = vec![];
    for &(c, w) in ws {
        let (name, k) = match w.split_once('*') {
            Some((a, b)) => (a, b.parse::<u32>().map_err(|_| perr(line, c, format!("bad count in `{}`", w)))?),
            None => (w, 1),
        };
        let p = n.place(name).ok_or_else(|| perr(line, c, format!("unknown place `{}`", name)))?;
        items.push((p, k));
    }
    Ok(bag(items))
}

struct FormulaParser<'a> {
    toks: Vec<String>,
    pos: usize,
    net: &'a Sdtn,
}

impl FormulaParser<'_> {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|s| s.as_str())
    }

    fn or(&mut self) -> Result<Formula, String> {
        let mut fs = vec![self.and()?];
        while self.peek() == Some("|") {
            self.pos += 1;
            fs.push(self.and()?);
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Formula::Or(fs) })
    }

    fn and(&mut self) -> Result<Formula, String> {
        let mut fs = vec![self.unary()?];
        while self.peek() == Some("&") {
            self.pos += 1;
            fs.push(self.unary()?);
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Formula::And(fs) })
    }

    fn unary(&mut self) -> Result<Formula, String> {
        let tok = self.peek().ok_or("unexpected end of formula")?.to_string();
        self.pos += 1;
        match tok.as_str() {
            "!" => Ok(Formula::negate(self.unary()?)),
            "(" => {
                let f = self.or()?;
                if self.peek() != Some(")") {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(f)
            }
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            atom => self.atom(atom),
        }
    }

    fn atom(&self, s: &str) -> Result<Formula, String> {
        if let Some(q) = s.strip_prefix("state=") {
            return self.net.state(q).map(Formula::state).ok_or(format!("unknown state `{}`", q));
        }
        let (name, k, least) = match s.split_once(">=") {
            Some((a, b)) => (a, b, true),
            None => {
                let (a, b) = s.split_once('=').ok_or(format!("bad atom `{}`", s))?;
                (a, b, false)
            }
        };
        let p = self.net.place(name).ok_or(format!("unknown place `{}`", name))?;
        let k: u32 = k.parse().map_err(|_| format!("bad count in `{}`", s))?;
        Ok(if least { Formula::at_least(p, k) } else { Formula::exactly(p, k) })
    }
}

pub fn parse_formula(n: &Sdtn, s: &str) -> Result<Formula, String> {
    let mut toks = vec![];
    let mut cur = String::new();
    for ch in s.chars() {
        if "()&|!".contains(ch) && !(ch == '!' && !cur.is_empty()) {
            if !cur.is_empty() {
                toks.push(std::mem::take(&mut cur));
            }
            toks.push(ch.to_string());
        } else if ch.is_whitespace() {
            if !cur.is_empty() {
                toks.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    let mut p = FormulaParser { toks, pos: 0, net: n };
    let f = p.or()?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing input `{}`", p.toks[p.pos]));
    }
    Ok(f)
}

pub fn parse_untimed(text: &str) -> Result<NetFile, ParseError> {
    let mut net = Sdtn::default();
    let mut inits: Vec<(usize, String)> = vec![];
    let mut target: Option<(usize, String)> = None;
    let mut inhibit = None;
    let mut lines: Vec<(usize, &str)> = vec![];
    // Declarations first so that later lines may refer to any name.
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let ws = words(line);
        let Some(&(col, kw)) = ws.first() else { continue };
        match kw {
            "state" | "place" => {
                for &(c, name) in &ws[1..] {
                    if net.state(name).is_some() || net.place(name).is_some() {
                        return Err(perr(ln, c, format!("duplicate name `{}`", name)));
                    }
                    if kw == "state" {
                        net.add_state(name);
                    } else {
                        net.add_place(name);
                    }
                }
            }
            "init" | "trans" | "transfer" | "ST:" | "inhibit" | "target" => lines.push((ln, line)),
            other => return Err(perr(ln, col, format!("unknown declaration `{}`", other))),
        }
    }
    for (ln, line) in lines {
        let ws = words(line);
        let (col, kw) = ws[0];
        match kw {
            "init" => inits.push((ln, line.to_string())),
            "target" => {
                let rest = line[line.find("target").unwrap() + 6..].split('#').next().unwrap_or("");
                target = Some((ln, rest.to_string()));
            }
            "trans" | "transfer" => {
                if ws.len() < 5 || ws[3].1 != "->" {
                    return Err(perr(ln, col, format!("expected `{} NAME SRC -> DST ...`", kw)));
                }
                let st = |i: usize| net.state(ws[i].1).ok_or_else(|| perr(ln, ws[i].0, format!("unknown state `{}`", ws[i].1)));
                let (src, dst) = (st(2)?, st(4)?);
                let rest = &ws[5..];
                let cut = |w: &str| rest.iter().position(|&(_, x)| x == w);
                let (i_in, i_out) = (cut("in"), cut("out"));
                let end_in = i_out.unwrap_or(rest.len());
                let first = [i_in, i_out].into_iter().flatten().min().unwrap_or(rest.len());
                if let Some(&(c, _)) = rest[..first].first() {
                    return Err(perr(ln, c, "expected `in` or `out`"));
                }
                let input = match i_in {
                    Some(i) => parse_bag(&net, &rest[i + 1..end_in.max(i + 1)], ln)?,
                    None => vec![],
                };
                let output = match i_out {
                    Some(i) => parse_bag(&net, &rest[i + 1..], ln)?,
                    None => vec![],
                };
                net.add_transition(ws[1].1, src, dst, input, output, kw == "transfer");
            }
            "ST:" => {
                for &(c, w) in &ws[1..] {
                    let inner = w.strip_prefix('(').and_then(|x| x.strip_suffix(')')).ok_or_else(|| perr(ln, c, "expected `(p,p')`"))?;
                    let (a, b) = inner.split_once(',').ok_or_else(|| perr(ln, c, "expected `(p,p')`"))?;
                    let pa = net.place(a).ok_or_else(|| perr(ln, c, format!("unknown place `{}`", a)))?;
                    let pb = net.place(b).ok_or_else(|| perr(ln, c, format!("unknown place `{}`", b)))?;
                    net.st.push((pa, pb));
                }
            }
            "inhibit" => {
                if ws.len() != 3 {
                    return Err(perr(ln, col, "expected `inhibit PLACE TRANSITION`"));
                }
                inhibit = Some((ln, ws[1], ws[2]));
            }
            _ => unreachable!(),
        }
    }
    net.validate().map_err(|e| perr(0, 0, e.to_string()))?;
    let inhibitor = match inhibit {
        Some((ln, (c1, p), (c2, t))) => {
            let p = net.place(p).ok_or_else(|| perr(ln, c1, format!("unknown place `{}`", p)))?;
            let t = net.transitions.iter().position(|x| x.name == t).ok_or_else(|| perr(ln, c2, format!("unknown transition `{}`", t)))?;
            Some((p, t))
        }
        None => None,
    };
    let mut init = vec![];
    for (ln, line) in inits {
        let ws = words(&line);
        let &(c, s) = ws.get(1).ok_or_else(|| perr(ln, ws[0].0, "`init` needs a state"))?;
        let q = net.state(s).ok_or_else(|| perr(ln, c, format!("unknown state `{}`", s)))?;
        let b = parse_bag(&net, &ws[2..], ln)?;
        init.push(UConfig::from_bag(q, net.places.len(), &b));
    }
    let target = match target {
        Some((ln, s)) => parse_formula(&net, &s).map_err(|m| perr(ln, 1, m))?,
        None => Formula::False,
    };
    Ok(NetFile { net, inhibitor, query: ReachQuery { init, target } })
}

pub fn print_untimed(n: &Sdtn, inhibitor: Option<(usize, usize)>, q: &ReachQuery) -> String {
    let bag_s = |b: &Bag| {
        b.iter().map(|&(p, k)| if k == 1 { n.places[p].clone() } else { format!("{}*{}", n.places[p], k) }).collect::<Vec<_>>().join(" ")
    };
    let mut s = String::new();
    s.push_str(&format!("state {}\n", n.states.join(" ")));
    if !n.places.is_empty() {
        s.push_str(&format!("place {}\n", n.places.join(" ")));
    }
    for c in &q.init {
        s.push_str(&format!("init {}\n", c.render(&n.states, &n.places)));
    }
    for t in &n.transitions {
        let kw = if t.transfer { "transfer" } else { "trans" };
        let mut line = format!("{} {} {} -> {}", kw, t.name, n.states[t.src], n.states[t.dst]);
        if !t.input.is_empty() {
            line.push_str(&format!(" in {}", bag_s(&t.input)));
        }
        if !t.output.is_empty() {
            line.push_str(&format!(" out {}", bag_s(&t.output)));
        }
        s.push_str(line.trim_end());
        s.push('\n');
    }
    if !n.st.is_empty() {
        let pairs: Vec<String> = n.st.iter().map(|&(a, b)| format!("({},{})", n.places[a], n.places[b])).collect();
        s.push_str(&format!("ST: {}\n", pairs.join(" ")));
    }
    if let Some((p, t)) = inhibitor {
        s.push_str(&format!("inhibit {} {}\n", n.places[p], n.transitions[t].name));
    }
    s.push_str(&format!("target {}\n", q.target.render(&n.states, &n.places)));
    s
}

impl fmt::Display for ReachResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReachResult::Yes(w) => write!(f, "YES ({} steps)", w.steps.len()),
            ReachResult::No => write!(f, "NO"),
            ReachResult::Unknown(h) => write!(f, "UNKNOWN ({:?} limit)", h),
        }
    }
}
