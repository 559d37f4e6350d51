//! Cost-threshold and cost-optimality procedures on top of the phase
//! iteration, and the reduction from inhibitor-net reachability to the
//! question whether the optimal cost is zero.
//!
//! For a threshold `v` the budgeted configurations are split into steps `A`
//! (discrete steps and short delays, monotone for the free order) and `B`
//! (long delays, which pay storage and are only possible with at most `v`
//! cost tokens). Backward coverability over `A` under the any-token order
//! gives the configurations that reach the goal without long delays; the
//! remaining work is done by `phase_reach` with the encoder oracles.

use crate::acptpn::{leq_c, leq_f, leq_fc, long_delay_steps, minimal_basis, BudgetedConfig, Order};
use crate::aptpn::{
    abstract_discrete_steps, abstract_timed_steps, frac_match, int_in, unit_storage_cost, AMarking, AbstractConfig, AbstractToken,
    DelayKind,
};
use crate::encoder::{oracle_7a, oracle_7b, AbstractRun, EncodeError, OracleLimits};
use crate::multiset::Multiset;
use crate::net::{Arc, Interval, NetError, Ptpn, Transition};
use crate::sdtn::InhibitorNet;
use crate::wqo::{backward_coverability, covered, phase_reach, Limits, Outside, PhaseStructure, PhaseTrace, Verdict};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SolveLimits {
    pub phase: Limits,
    /// Backward coverability for the goal.
    pub backward: Limits,
    pub oracle: OracleLimits,
    /// Largest accepted finite core.
    pub max_core: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            phase: Limits { max_basis: 10_000, max_steps: 10_000 },
            backward: Limits { max_basis: 50_000, max_steps: 200_000 },
            oracle: OracleLimits::default(),
            max_core: 200_000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Structure(#[from] crate::wqo::StructureError),
    #[error("state index {0} out of range")]
    State(usize),
}

type Slots = (Vec<AMarking>, usize);

/// Token to add, with whether it may sit at integer age and at a fraction.
type Placement = (AbstractToken, bool, bool);

/// Every way to add `toks`: into the center, into an existing non-center
/// position, or into a new position in any gap.
fn place_all(start: Slots, toks: &[Placement]) -> BTreeSet<Slots> {
    let mut cur = BTreeSet::from([start]);
    for &(t, int, fr) in toks {
        let mut next = BTreeSet::new();
        for (pos, c) in &cur {
            if int {
                let mut p = pos.clone();
                p[*c].insert(t);
                next.insert((p, *c));
            }
            if fr {
                for i in (0..pos.len()).filter(|i| i != c) {
                    let mut p = pos.clone();
                    p[i].insert(t);
                    next.insert((p, *c));
                }
                for gap in 0..=pos.len() {
                    let mut p = pos.clone();
                    p.insert(gap, AMarking::singleton(t));
                    next.insert((p, if gap <= *c { c + 1 } else { *c }));
                }
            }
        }
        cur = next;
    }
    cur
}

/// Token choices fitting `iv`, as placements.
fn arc_tokens(arc: &Arc, cmax: u32) -> Vec<Placement> {
    (0..=cmax + 1)
        .map(|k| (AbstractToken::new(arc.place, k), int_in(k, &arc.iv), frac_match(k, &arc.iv)))
        .filter(|(_, i, f)| *i || *f)
        .collect()
}

fn slots_of(c: &AbstractConfig) -> Slots {
    (c.positions(), c.high.len())
}

/// Preimages of a position under the level shift.
fn unshift(m: &AMarking, cmax: u32) -> Vec<AMarking> {
    let mut out = vec![AMarking::new()];
    for t in m.iter() {
        let pre: Vec<u32> = match t.level {
            0 => return vec![],
            l if l <= cmax => vec![l - 1],
            _ => vec![cmax, cmax + 1],
        };
        out = out
            .iter()
            .flat_map(|b| {
                pre.iter().map(move |&l| {
                    let mut b = b.clone();
                    b.insert(AbstractToken::new(t.place, l));
                    b
                })
            })
            .collect();
    }
    out
}

fn unshift_all(ms: &[AMarking], cmax: u32) -> Vec<Vec<AMarking>> {
    let mut out = vec![vec![]];
    for m in ms {
        let pre = unshift(m, cmax);
        out = out.iter().flat_map(|v: &Vec<AMarking>| pre.iter().map(move |b| [v.clone(), vec![b.clone()]].concat())).collect();
    }
    out
}

fn cost_tokens(net: &Ptpn, c: &AbstractConfig) -> usize {
    c.tokens().iter().filter(|t| net.is_cost_place(t.place)).count()
}

fn all_tokens(net: &Ptpn, keep: impl Fn(usize) -> bool) -> Vec<AbstractToken> {
    let top = net.cmax() + 1;
    (0..net.places.len()).filter(|&p| keep(p)).flat_map(|p| (0..=top).map(move |k| AbstractToken::new(p, k))).collect()
}

/// Canonical configurations (state 0) with exactly `n` tokens from `toks`,
/// built one token at a time from those with `n - 1`.
fn grow(prev: &BTreeSet<AbstractConfig>, toks: &[AbstractToken]) -> BTreeSet<AbstractConfig> {
    let mut out = BTreeSet::new();
    for c in prev {
        for &t in toks {
            for (p, ci) in place_all(slots_of(c), &[(t, true, true)]) {
                out.insert(AbstractConfig::from_positions(0, p, ci));
            }
        }
    }
    out
}

/// Configurations with at most `v` tokens, all on cost places; `None` if
/// more than `max` shapes exist.
pub fn core_shapes(net: &Ptpn, v: u64, max: usize) -> Option<Vec<AbstractConfig>> {
    let toks = all_tokens(net, |p| net.is_cost_place(p));
    let mut layer = BTreeSet::from([AbstractConfig::new(0, vec![], AMarking::new(), vec![])]);
    let mut all: Vec<AbstractConfig> = layer.iter().cloned().collect();
    for _ in 0..v {
        layer = grow(&layer, &toks);
        all.extend(layer.iter().cloned());
        if all.len() > max || layer.is_empty() {
            break;
        }
    }
    (all.len() <= max).then_some(all)
}

/// Basis under the any-token order of the configurations that reach `↑γ`
/// in one `A`-step.
pub fn pre_a_basis(net: &Ptpn, g: &BudgetedConfig, v: u64) -> Vec<BudgetedConfig> {
    let cmax = net.cmax();
    let conf = &g.conf;
    let mut cands: Vec<BudgetedConfig> = vec![];
    let ok = |b: &BudgetedConfig, succ: Vec<AbstractConfig>| {
        succ.into_iter().any(|c| leq_fc(net, g, &BudgetedConfig::new(c, g.budget))) && b.budget <= v
    };
    // Type 1: the center became the lowest low position.
    if conf.center.is_empty() {
        let mut options = vec![];
        if let Some((l0, rest)) = conf.low.split_first() {
            options.push((l0.clone(), rest.to_vec()));
        }
        for t in all_tokens(net, |_| true) {
            options.push((AMarking::singleton(t), conf.low.clone()));
        }
        for (c, l) in options {
            let b = BudgetedConfig::new(AbstractConfig::new(conf.state, conf.high.clone(), c, l), g.budget);
            if ok(&b, abstract_timed_steps(net, &b.conf).into_iter().filter(|(k, _)| *k == DelayKind::Type1).map(|(_, c)| c).collect()) {
                cands.push(b);
            }
        }
    }
    // Type 2: the highest position reached the next integer.
    let tops: Vec<AMarking> = if conf.center.is_empty() {
        all_tokens(net, |_| true).into_iter().map(AMarking::singleton).collect()
    } else {
        unshift(&conf.center, cmax)
    };
    for h in tops {
        let mut high = conf.high.clone();
        high.push(h);
        let b = BudgetedConfig::new(AbstractConfig::new(conf.state, high, AMarking::new(), conf.low.clone()), g.budget);
        if ok(&b, abstract_timed_steps(net, &b.conf).into_iter().filter(|(k, _)| *k == DelayKind::Type2).map(|(_, c)| c).collect()) {
            cands.push(b);
        }
    }
    for (ti, tr) in net.transitions.iter().enumerate() {
        if tr.dst != conf.state || g.budget + tr.cost > v {
            continue;
        }
        let (pos, center) = slots_of(conf);
        let located: Multiset<(usize, AbstractToken)> = pos
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.iter().map(move |t| (i, *t)))
            .filter(|(_, t)| tr.outputs.iter().any(|a| a.place == t.place))
            .collect();
        let mut bases = BTreeSet::new();
        for k in 0..=tr.outputs.len() {
            for s in located.submultisets(k) {
                let mut p = pos.clone();
                for (i, t) in s.iter() {
                    p[*i].remove(t);
                }
                bases.insert((p, center));
            }
        }
        let mut stage = bases;
        for arc in &tr.inputs {
            let mut next = BTreeSet::new();
            for base in &stage {
                for pl in arc_tokens(arc, cmax) {
                    next.extend(place_all(base.clone(), &[pl]));
                }
            }
            stage = next;
        }
        for arc in &tr.reads {
            let mut next = stage.clone();
            for base in &stage {
                for pl in arc_tokens(arc, cmax) {
                    next.extend(place_all(base.clone(), &[pl]));
                }
            }
            stage = next;
        }
        for (p, c) in stage {
            let b = BudgetedConfig::new(AbstractConfig::from_positions(tr.src, p, c), g.budget + tr.cost);
            if ok(&b, abstract_discrete_steps(net, &b.conf, ti).into_iter().collect()) {
                cands.push(b);
            }
        }
    }
    minimal_basis(net, &cands, Order::Any)
}

/// Basis under the free order of the configurations that reach `↑γ` by one
/// long delay.
pub fn pre_b_basis(net: &Ptpn, g: &BudgetedConfig, v: u64) -> Vec<BudgetedConfig> {
    let cmax = net.cmax();
    let conf = &g.conf;
    let free = all_tokens(net, |p| !net.is_cost_place(p));
    let low_pre = unshift_all(&conf.low, cmax);
    let mut cands = vec![];
    let mut push = |high: Vec<AMarking>, center: AMarking, low: Vec<AMarking>| {
        let c = AbstractConfig::new(conf.state, high, center, low);
        let b = BudgetedConfig::new(c.clone(), g.budget + unit_storage_cost(net, &c));
        if b.budget <= v && long_delay_steps(net, &b).iter().any(|(_, d)| leq_f(net, g, d)) {
            cands.push(b);
        }
    };
    for a in 0..=conf.high.len() {
        let (ha, hb) = conf.high.split_at(a);
        let mut splits: Vec<(AMarking, &[AMarking])> = vec![(AMarking::new(), hb)];
        if let Some((c, rest)) = hb.split_first() {
            splits.push((c.clone(), rest));
        }
        for hs in unshift_all(ha, cmax) {
            for (c, lpre) in &splits {
                for lpost in &low_pre {
                    if conf.center.is_empty() {
                        push(hs.clone(), c.clone(), [lpre.to_vec(), lpost.clone()].concat());
                    }
                    let lands: Vec<AMarking> = if conf.center.is_empty() {
                        free.iter().map(|t| AMarking::singleton(*t)).collect()
                    } else {
                        unshift(&conf.center, cmax)
                    };
                    for m in lands {
                        push(hs.clone(), c.clone(), [lpre.to_vec(), vec![m], lpost.clone()].concat());
                    }
                }
            }
        }
    }
    minimal_basis(net, &cands, Order::Free)
}

/// Cost-token extensions of `k` with at most `v` cost tokens in total.
pub fn alpha(net: &Ptpn, k: &BudgetedConfig, v: u64) -> Vec<BudgetedConfig> {
    let have = cost_tokens(net, &k.conf) as u64;
    if have > v {
        return vec![];
    }
    let toks: Vec<Placement> = all_tokens(net, |p| net.is_cost_place(p)).into_iter().map(|t| (t, true, true)).collect();
    let mut layer = BTreeSet::from([slots_of(&k.conf)]);
    let mut out = vec![k.clone()];
    for _ in have..v {
        let mut next = BTreeSet::new();
        for s in &layer {
            for t in &toks {
                next.extend(place_all(s.clone(), &[*t]));
            }
        }
        out.extend(next.iter().map(|(p, c)| BudgetedConfig::new(AbstractConfig::from_positions(k.conf.state, p.clone(), *c), k.budget)));
        layer = next;
    }
    debug_assert!(out.iter().all(|o| leq_c(net, k, o)));
    minimal_basis(net, &out, Order::Free)
}

/// The phase structure for one threshold.
pub struct AcPhase<'a> {
    pub net: &'a Ptpn,
    pub q_init: usize,
    pub q_fin: usize,
    pub v: u64,
    pub limits: SolveLimits,
    k_prime: Option<Option<Vec<BudgetedConfig>>>,
    pub k_size: Option<usize>,
    pub fault: Option<EncodeError>,
    /// Run found by the last successful reachability query from `init`.
    pub last_run: Option<AbstractRun>,
}

impl<'a> AcPhase<'a> {
    pub fn new(net: &'a Ptpn, q_init: usize, q_fin: usize, v: u64, limits: SolveLimits) -> Self {
        AcPhase { net, q_init, q_fin, v, limits, k_prime: None, k_size: None, fault: None, last_run: None }
    }

    pub fn finals(&self) -> Vec<BudgetedConfig> {
        (0..=self.v).map(|y| BudgetedConfig::new(AbstractConfig::new(self.q_fin, vec![], AMarking::new(), vec![]), y)).collect()
    }

    /// Basis under the free order of the core-bounded configurations that
    /// reach a final state without long delays.
    pub fn k_prime(&mut self) -> Option<Vec<BudgetedConfig>> {
        if self.k_prime.is_none() {
            let (net, v) = (self.net, self.v);
            let k = backward_coverability(&self.finals(), |a, b| leq_fc(net, a, b), |g| pre_a_basis(net, g, v), self.limits.backward);
            self.k_prime = Some(k.ok().map(|k| {
                self.k_size = Some(k.len());
                let all: Vec<BudgetedConfig> = k.iter().flat_map(|b| alpha(net, b, v)).collect();
                minimal_basis(net, &all, Order::Free)
            }));
        }
        self.k_prime.clone().unwrap()
    }

    fn absorb<T>(&mut self, r: Result<T, EncodeError>) -> Option<T> {
        match r {
            Ok(x) => Some(x),
            Err(e) => {
                self.fault.get_or_insert(e);
                None
            }
        }
    }
}

impl PhaseStructure for AcPhase<'_> {
    type Conf = BudgetedConfig;

    fn leq(&self, a: &BudgetedConfig, b: &BudgetedConfig) -> bool {
        leq_f(self.net, a, b)
    }

    fn init(&self) -> BudgetedConfig {
        BudgetedConfig::new(AbstractConfig::new(self.q_init, vec![], AMarking::new(), vec![]), self.v)
    }

    fn init_reaches_final(&mut self) -> Verdict {
        let init = self.init();
        match self.k_prime() {
            Some(k) => Verdict::from_bool(covered(&init, &k, |a, b| leq_f(self.net, a, b))),
            None => Verdict::Unknown,
        }
    }

    fn final_pre_basis(&mut self) -> Option<Vec<BudgetedConfig>> {
        self.k_prime()
    }

    fn pre_b_basis(&mut self, u: &[BudgetedConfig]) -> Vec<BudgetedConfig> {
        let all: Vec<BudgetedConfig> = u.iter().flat_map(|g| pre_b_basis(self.net, g, self.v)).collect();
        minimal_basis(self.net, &all, Order::Free)
    }

    fn reaches(&mut self, c: &BudgetedConfig, u: &[BudgetedConfig]) -> Verdict {
        let r = oracle_7a(self.net, c, u, self.limits.oracle);
        let Some(r) = self.absorb(r) else { return Verdict::Unknown };
        if r.answer == Verdict::Yes && *c == self.init() {
            self.last_run = r.run;
        }
        r.answer
    }

    fn outside(&mut self, u: &[BudgetedConfig], x: &[BudgetedConfig]) -> Outside<BudgetedConfig> {
        let r = oracle_7b(self.net, self.v, u, x, self.limits.oracle);
        self.absorb(r).map_or(Outside::Unknown, |r| r.answer)
    }

    fn enumerate_core(&self) -> Box<dyn Iterator<Item = BudgetedConfig> + '_> {
        let toks = all_tokens(self.net, |_| true);
        let layers = std::iter::successors(Some(BTreeSet::from([AbstractConfig::new(0, vec![], AMarking::new(), vec![])])), move |l| {
            Some(grow(l, &toks))
        });
        let states = self.net.states.len();
        Box::new(layers.flat_map(move |l| {
            let l: Vec<AbstractConfig> = l.into_iter().filter(|c| cost_tokens(self.net, c) as u64 <= self.v).collect();
            (0..states).flat_map(move |q| {
                let l = l.clone();
                (0..=self.v).flat_map(move |y| {
                    l.clone().into_iter().map(move |mut c| {
                        c.state = q;
                        BudgetedConfig::new(c, y)
                    })
                })
            })
        }))
    }

    fn in_core(&self, c: &BudgetedConfig) -> bool {
        c.budget <= self.v && cost_tokens(self.net, &c.conf) as u64 <= self.v
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub verdict: Verdict,
    pub v: u64,
    /// Number of configurations in the finite core.
    pub core_size: Option<usize>,
    pub k_size: Option<usize>,
    pub k_prime_size: Option<usize>,
    pub trace: PhaseTrace,
    /// Abstract configurations along the run from the initial configuration
    /// found by the last successful oracle query.
    pub witness: Option<Vec<String>>,
    pub limits: SolveLimits,
    /// Why the answer is UNKNOWN, when it is.
    pub note: Option<String>,
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold {}: {}", self.v, self.verdict)?;
        if let Some(n) = &self.note {
            writeln!(f, "note: {}", n)?;
        }
        for l in &self.trace.log {
            writeln!(f, "  {}", l)?;
        }
        if let Some(w) = &self.witness {
            writeln!(f, "  run prefix:")?;
            for l in w {
                writeln!(f, "    {}", l)?;
            }
        }
        Ok(())
    }
}

fn check_state(net: &Ptpn, q: usize) -> Result<(), SolveError> {
    if q < net.states.len() {
        Ok(())
    } else {
        Err(SolveError::State(q))
    }
}

/// Whether `q_fin` is reachable from `(q_init, ∅)` with total cost at most `v`.
pub fn cost_threshold(net: &Ptpn, q_init: usize, q_fin: usize, v: u64, limits: SolveLimits) -> Result<ThresholdReport, SolveError> {
    check_state(net, q_init)?;
    check_state(net, q_fin)?;
    let mut report = ThresholdReport {
        verdict: Verdict::Unknown,
        v,
        core_size: None,
        k_size: None,
        k_prime_size: None,
        trace: PhaseTrace { verdict: Verdict::Unknown, log: vec![], sizes: vec![] },
        witness: None,
        limits,
        note: None,
    };
    let Some(shapes) = core_shapes(net, v, limits.max_core) else {
        report.note = Some(format!("core exceeds {} configurations", limits.max_core));
        return Ok(report);
    };
    let core = shapes.len().saturating_mul(net.states.len()).saturating_mul(v as usize + 1);
    report.core_size = Some(core);
    if core > limits.max_core {
        report.note = Some(format!("core exceeds {} configurations", limits.max_core));
        return Ok(report);
    }
    let mut ps = AcPhase::new(net, q_init, q_fin, v, limits);
    let trace = phase_reach(&mut ps, limits.phase)?;
    if let Some(e) = ps.fault.take() {
        return Err(e.into());
    }
    report.k_size = ps.k_size;
    report.k_prime_size = ps.k_prime.clone().flatten().map(|k| k.len());
    report.verdict = trace.verdict;
    if trace.verdict == Verdict::Unknown {
        report.note = Some(trace.log.last().cloned().unwrap_or_default());
    }
    report.witness = ps.last_run.as_ref().map(|r| r.configs.iter().map(|c| c.render(net)).collect());
    report.trace = trace;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OptCost {
    Cost(u64),
    /// The final state is unreachable.
    Infinity,
    /// Every threshold below the bound was refuted or unresolved.
    Unknown {
        at_least: u64,
    },
}

impl fmt::Display for OptCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptCost::Cost(c) => write!(f, "{}", c),
            OptCost::Infinity => write!(f, "INFINITY"),
            OptCost::Unknown { at_least } => write!(f, "UNKNOWN(>= {})", at_least),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimalReport {
    pub answer: OptCost,
    /// Threshold 0 on the net with all costs removed.
    pub reachability: ThresholdReport,
    pub thresholds: Vec<ThresholdReport>,
    pub v_cap: u64,
}

/// Smallest threshold answered YES, searching `0..=v_cap` after a plain
/// reachability check. `v_cap` is a search bound, not part of the problem.
pub fn cost_optimal(net: &Ptpn, q_init: usize, q_fin: usize, v_cap: u64, limits: SolveLimits) -> Result<OptimalReport, SolveError> {
    let reachability = cost_threshold(&net.without_costs(), q_init, q_fin, 0, limits)?;
    let mut thresholds = vec![];
    let report = |answer, thresholds| Ok(OptimalReport { answer, reachability: reachability.clone(), thresholds, v_cap });
    if reachability.verdict == Verdict::No {
        return report(OptCost::Infinity, thresholds);
    }
    let mut first_unknown = None;
    for v in 0..=v_cap {
        let r = cost_threshold(net, q_init, q_fin, v, limits)?;
        let verdict = r.verdict;
        thresholds.push(r);
        match verdict {
            Verdict::Yes => return report(OptCost::Cost(v), thresholds),
            Verdict::Unknown => {
                first_unknown.get_or_insert(v);
            }
            Verdict::No => {}
        }
    }
    // Thresholds are monotone, so everything below the first open one is NO.
    report(OptCost::Unknown { at_least: first_unknown.unwrap_or(v_cap + 1) }, thresholds)
}

/// A priced net whose optimal cost from `q_init` to `q_fin` is zero iff the
/// inhibitor net reaches `(final, ∅)` from `(init, ∅)`.
#[derive(Clone, Debug)]
pub struct LowerBound {
    pub net: Ptpn,
    pub q_init: usize,
    pub q_fin: usize,
}

fn fresh(taken: &[String], base: &str) -> String {
    let mut s = base.to_string();
    while taken.contains(&s) {
        s.push('_');
    }
    s
}

pub fn lowerbound_instance(n: &InhibitorNet, init: usize, fin: usize) -> Result<LowerBound, NetError> {
    let src = &n.net;
    let mut net = Ptpn::new();
    for s in &src.states {
        net.add_state(s)?;
    }
    let wait1 = net.add_state(&fresh(&src.states, "wait1"))?;
    let wait2 = net.add_state(&fresh(&src.states, "wait2"))?;
    let goal = net.add_state(&fresh(&src.states, "goal"))?;
    for p in &src.places {
        net.add_place(p, 1)?;
    }
    let pw1 = net.add_place(&fresh(&src.places, "pwait1"), 0)?;
    let pw2 = net.add_place(&fresh(&src.places, "pwait2"), 0)?;
    let expand = |bag: &[(usize, u32)], iv: &dyn Fn(usize) -> Interval| -> Vec<Arc> {
        bag.iter().flat_map(|&(p, k)| (0..k).map(move |_| Arc::new(p, iv(p)))).collect()
    };
    let zero = Interval::point(0);
    let tr = |name: String, src: usize, dst: usize, inputs, outputs| Transition { name, src, dst, inputs, reads: vec![], outputs, cost: 0 };
    let names: Vec<String> = src.transitions.iter().map(|t| t.name.clone()).collect();
    for (i, t) in src.transitions.iter().enumerate() {
        let outputs = expand(&t.output, &|_| zero.clone());
        if i == n.trans {
            net.add_transition(tr(
                t.name.clone(),
                t.src,
                wait1,
                expand(&t.input, &|_| Interval::from(0)),
                vec![Arc::new(pw1, zero.clone())],
            ))?;
            let iv = Interval::new(0, Some(1), true, false);
            net.add_transition(tr(fresh(&names, &format!("{}_end", t.name)), wait1, t.dst, vec![Arc::new(pw1, iv)], outputs))?;
        } else {
            let inputs = expand(&t.input, &|p| if p == n.place { zero.clone() } else { Interval::from(0) });
            net.add_transition(tr(t.name.clone(), t.src, t.dst, inputs, outputs))?;
        }
    }
    net.add_transition(tr(fresh(&names, "finish"), fin, wait2, vec![], vec![Arc::new(pw2, zero.clone())]))?;
    net.add_transition(tr(fresh(&names, "settle"), wait2, goal, vec![Arc::new(pw2, Interval::point(1))], vec![]))?;
    net.init = Some(init);
    Ok(LowerBound { net, q_init: init, q_fin: goal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_net;
    use crate::samples::forced_wait_net;

    fn lim() -> SolveLimits {
        let mut l = SolveLimits::default();
        l.oracle.reach.max_tokens = 8;
        l.oracle.reach.max_states = 200_000;
        l
    }

    fn bc(q: usize, y: u64, high: &[&[(usize, u32)]], center: &[(usize, u32)], low: &[&[(usize, u32)]]) -> BudgetedConfig {
        let am = |m: &[(usize, u32)]| m.iter().map(|&(p, l)| AbstractToken::new(p, l)).collect::<AMarking>();
        BudgetedConfig::new(
            AbstractConfig::new(q, high.iter().map(|m| am(m)).collect(), am(center), low.iter().map(|m| am(m)).collect()),
            y,
        )
    }

    #[test]
    fn unshift_levels() {
        let m: AMarking = [AbstractToken::new(0, 1), AbstractToken::new(0, 2)].into_iter().collect();
        let pre = unshift(&m, 1);
        assert_eq!(pre.len(), 2);
        assert!(unshift(&AMarking::singleton(AbstractToken::new(0, 0)), 1).is_empty());
    }

    #[test]
    fn pre_a_on_forced_wait() {
        let net = forced_wait_net();
        let goal = bc(2, 0, &[], &[], &[]);
        // Only `take` leads into q2; it needs an integer age 1 token. Short
        // delays inside q2 also land above the goal.
        let pre: Vec<_> = pre_a_basis(&net, &goal, 1).into_iter().filter(|b| !leq_fc(&net, &goal, b)).collect();
        assert_eq!(pre, vec![bc(1, 0, &[], &[(0, 1)], &[])]);
        let k = backward_coverability(&[goal], |a, b| leq_fc(&net, a, b), |g| pre_a_basis(&net, g, 1), Limits::default()).unwrap();
        let expect: BTreeSet<_> = [
            bc(2, 0, &[], &[], &[]),
            bc(1, 0, &[], &[(0, 1)], &[]),
            bc(1, 0, &[&[(0, 0)]], &[], &[]),
            bc(0, 0, &[], &[(0, 1)], &[]),
            bc(0, 0, &[&[(0, 0)]], &[], &[]),
        ]
        .into_iter()
        .collect();
        assert_eq!(k.into_iter().collect::<BTreeSet<_>>(), expect);
    }

    fn a_reaches(net: &Ptpn, b: &BudgetedConfig, g: &BudgetedConfig, depth: usize) -> bool {
        let mut layer = vec![b.clone()];
        for _ in 0..=depth {
            if layer.iter().any(|c| leq_fc(net, g, c)) {
                return true;
            }
            layer = layer.iter().flat_map(|c| crate::acptpn::monotone_steps(net, c).into_iter().map(|(_, d)| d)).collect();
        }
        false
    }

    /// Every single-step predecessor found by forward search is covered by the
    /// pre-basis. Covered configurations get there with a few more `A`-steps:
    /// extra high positions first have to pass through the center.
    #[test]
    fn pre_bases_match_forward_steps() {
        let net = parse_net("state a b\nplace c cost=1\nplace f\ntrans t a -> b in f(0,1) read c[1,1] out c[0,0] f(1,2)\n").unwrap();
        let v = 2;
        let targets = [bc(1, 0, &[], &[(0, 0)], &[&[(1, 1)]]), bc(1, 1, &[&[(1, 1)]], &[], &[]), bc(0, 0, &[], &[(0, 2)], &[])];
        let shapes = {
            let toks = all_tokens(&net, |_| true);
            let mut layer = BTreeSet::from([AbstractConfig::new(0, vec![], AMarking::new(), vec![])]);
            let mut all = layer.clone();
            for _ in 0..3 {
                layer = grow(&layer, &toks);
                all.extend(layer.iter().cloned());
            }
            all
        };
        for g in &targets {
            let pa = pre_a_basis(&net, g, v);
            let pb = pre_b_basis(&net, g, v);
            for q in 0..2 {
                for y in 0..=v {
                    for s in &shapes {
                        let mut c = s.clone();
                        c.state = q;
                        let b = BudgetedConfig::new(c, y);
                        let one = crate::acptpn::monotone_steps(&net, &b);
                        let a_step = one.iter().any(|(_, d)| leq_fc(&net, g, d));
                        let more = || a_reaches(&net, &b, g, 8);
                        let cov = pa.iter().any(|p| leq_fc(&net, p, &b));
                        assert!(!a_step || cov, "A {} -> {}", b.render(&net), g.render(&net));
                        assert!(!cov || a_step || more(), "A2 {} -> {}", b.render(&net), g.render(&net));
                        let b_step = long_delay_steps(&net, &b).iter().any(|(_, d)| leq_f(&net, g, d));
                        assert_eq!(b_step, pb.iter().any(|p| leq_f(&net, p, &b)), "B {} -> {}", b.render(&net), g.render(&net));
                    }
                }
            }
        }
    }

    #[test]
    fn alpha_adds_cost_tokens() {
        let net = forced_wait_net();
        let k = bc(2, 1, &[], &[], &[]);
        let a = alpha(&net, &k, 1);
        // Itself plus one cost token at any of three levels, in the center or
        // in a new position on either side.
        assert_eq!(a.len(), 1 + 3 * 3);
        assert!(a.iter().all(|x| leq_c(&net, &k, x)));
        assert!(alpha(&net, &bc(2, 1, &[], &[(0, 0), (0, 1)], &[]), 1).is_empty());
    }

    #[test]
    fn trivial_thresholds() {
        let none = parse_net("state a b\nplace p cost=1\n").unwrap();
        for v in 0..3 {
            assert_eq!(cost_threshold(&none, 0, 1, v, lim()).unwrap().verdict, Verdict::No);
        }
        let free = parse_net("state a b\nplace p cost=1\ntrans t a -> b\n").unwrap();
        assert_eq!(cost_threshold(&free, 0, 1, 0, lim()).unwrap().verdict, Verdict::Yes);
        assert_eq!(cost_optimal(&none, 0, 1, 3, lim()).unwrap().answer, OptCost::Infinity);
        assert_eq!(cost_optimal(&free, 0, 1, 3, lim()).unwrap().answer, OptCost::Cost(0));
        let paid = parse_net("state a b\nplace p cost=1\ntrans t a -> b cost=2\n").unwrap();
        assert_eq!(cost_optimal(&paid, 0, 1, 3, lim()).unwrap().answer, OptCost::Cost(2));
        assert_eq!(cost_optimal(&paid, 0, 1, 1, lim()).unwrap().answer, OptCost::Unknown { at_least: 2 });
        assert!(matches!(cost_threshold(&paid, 0, 7, 0, lim()), Err(SolveError::State(7))));
    }

    #[test]
    fn forced_wait_thresholds() {
        let net = forced_wait_net();
        let r0 = cost_threshold(&net, 0, 2, 0, lim()).unwrap();
        assert_eq!(r0.verdict, Verdict::No, "{}", r0);
        let r1 = cost_threshold(&net, 0, 2, 1, lim()).unwrap();
        assert_eq!(r1.verdict, Verdict::Yes, "{}", r1);
        assert!(r1.witness.is_some());
        assert_eq!(r1.core_size, Some(3 * 2 * (1 + 3 * 3)));
        assert_eq!(cost_optimal(&net, 0, 2, 3, lim()).unwrap().answer, OptCost::Cost(1));
    }

    #[test]
    fn lowerbound_shape() {
        use crate::sdtn::{bag, Sdtn};
        let mut s = Sdtn::default();
        let (a, b) = (s.add_state("a"), s.add_state("b"));
        let p = s.add_place("p");
        s.add_transition("inc", a, a, bag(vec![]), bag(vec![(p, 1)]), false);
        s.add_transition("go", a, b, bag(vec![]), bag(vec![]), false);
        let n = InhibitorNet::new(s, p, 1).unwrap();
        let lb = lowerbound_instance(&n, a, b).unwrap();
        let net = &lb.net;
        assert_eq!(net.states, ["a", "b", "wait1", "wait2", "goal"]);
        assert_eq!(net.places.iter().map(|p| (p.name.as_str(), p.cost)).collect::<Vec<_>>(), [("p", 1), ("pwait1", 0), ("pwait2", 0)]);
        let names: Vec<&str> = net.transitions.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["inc", "go", "go_end", "finish", "settle"]);
        assert_eq!(net.transitions[2].inputs[0].iv.to_string(), "(0,1]");
        assert_eq!(net.transitions[4].inputs[0].iv.to_string(), "[1,1]");
        assert!(net.transitions.iter().all(|t| t.cost == 0));
        assert_eq!(lb.q_fin, 4);
    }
}
