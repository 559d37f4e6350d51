//! Concrete-successor oracle for abstract steps: concretize on a fine grid,
//! take concrete steps at every critical delay / output age, re-abstract.

use ptpn::aptpn::{abstract_config, abstract_discrete_steps, abstract_timed_steps, AbstractConfig, DelayKind};
use ptpn::deltaform::decompose;
use ptpn::net::{Arc, Interval, Ptpn, Transition};
use ptpn::num::{frac, one, q, qi, zero, Q};
use ptpn::semantics::{enabled_discrete, fire_discrete, timed_step, Configuration, Marking, Token, Witness};
use rand::Rng;
use std::collections::BTreeSet;

pub const GRID: i64 = 256;

pub fn delta() -> Q {
    q(1, 8)
}

fn wide() -> Q {
    q(2, 5)
}

fn rand_interval(rng: &mut impl Rng, max: u32) -> Interval {
    loop {
        let lo = rng.gen_range(0..=max);
        let hi = if rng.gen_bool(0.3) { None } else { Some(rng.gen_range(lo..=max)) };
        let iv = Interval::new(lo, hi, rng.gen_bool(0.4), rng.gen_bool(0.4));
        if !iv.is_empty() {
            return iv;
        }
    }
}

pub fn random_net(rng: &mut impl Rng) -> Ptpn {
    let mut n = Ptpn::new();
    n.add_state("q0").unwrap();
    n.add_state("q1").unwrap();
    let places = rng.gen_range(1..=3);
    for p in 0..places {
        n.add_place(&format!("p{}", p), rng.gen_range(0..3)).unwrap();
    }
    let arcs = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| -> Vec<Arc> {
        (0..k).map(|_| Arc::new(rng.gen_range(0..places), rand_interval(rng, 3))).collect()
    };
    let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
    for t in 0..rng.gen_range(1..=3) {
        let (ni, nr, no) = (rng.gen_range(0..=2), rng.gen_range(0..=1), rng.gen_range(0..=2));
        n.add_transition(Transition {
            name: format!("t{}", t),
            src: rng.gen_range(0..2),
            dst: rng.gen_range(0..2),
            inputs: arcs(&mut rng2, ni),
            reads: arcs(&mut rng2, nr),
            outputs: arcs(&mut rng2, no),
            cost: rng.gen_range(0..3),
        })
        .unwrap();
    }
    n
}

use rand::SeedableRng;

/// A configuration in 1/8-form with fractions on the 1/256 grid, drawn from a
/// small pool so that equal fractions are common.
pub fn random_config(rng: &mut impl Rng, net: &Ptpn, max_tokens: usize) -> Configuration {
    let lows: Vec<i64> = (0..2).map(|_| rng.gen_range(1..GRID / 8)).collect();
    let highs: Vec<i64> = (0..2).map(|_| rng.gen_range(GRID * 7 / 8 + 1..GRID)).collect();
    let k = rng.gen_range(0..=max_tokens);
    let state = rng.gen_range(0..2);
    let cmax = net.cmax() as i64;
    let toks = (0..k).map(|_| {
        let f = match rng.gen_range(0..3) {
            0 => 0,
            1 => lows[rng.gen_range(0..2)],
            _ => highs[rng.gen_range(0..2)],
        };
        let int = rng.gen_range(0..=cmax + 2);
        Token::new(rng.gen_range(0..net.places.len()), q(int * GRID + f, GRID))
    });
    let toks: Vec<Token> = toks.collect();
    Configuration::new(state, toks)
}

fn abs(c: &Configuration, net: &Ptpn) -> AbstractConfig {
    abstract_config(c, &wide(), net.cmax()).expect("successor stays in 2/5-form")
}

/// Fractions a fresh output token may take: the existing ones plus `k`
/// evenly spaced points in every gap of the 1/8-form bands.
fn output_fractions(c: &Configuration, k: usize) -> Vec<Q> {
    let mut fr: BTreeSet<Q> = c.marking.iter().map(|t| frac(&t.age)).filter(|f| *f != zero()).collect();
    let d = delta();
    let mut bounds_low: Vec<Q> = vec![zero()];
    bounds_low.extend(fr.iter().filter(|f| **f < d).cloned());
    bounds_low.push(d.clone());
    let mut bounds_high: Vec<Q> = vec![one() - &d];
    bounds_high.extend(fr.iter().filter(|f| **f > one() - &d).cloned());
    bounds_high.push(one());
    let mut extra = vec![];
    for b in [bounds_low, bounds_high] {
        for w in b.windows(2) {
            for i in 1..=k {
                extra.push(&w[0] + (&w[1] - &w[0]) * q(i as i64, k as i64 + 1));
            }
        }
    }
    fr.extend(extra);
    fr.into_iter().collect()
}

fn output_ages(iv: &Interval, cmax: u32, fracs: &[Q]) -> Vec<Q> {
    let mut v = vec![];
    for l in 0..=cmax as i64 + 1 {
        let base = qi(l);
        if iv.contains(&base) {
            v.push(base.clone());
        }
        for f in fracs {
            let a = &base + f;
            if iv.contains(&a) {
                v.push(a);
            }
        }
    }
    v
}

pub fn concrete_discrete(net: &Ptpn, c: &Configuration, t: usize) -> BTreeSet<AbstractConfig> {
    let tr = &net.transitions[t];
    let fracs = output_fractions(c, tr.outputs.len().max(1));
    let per_arc: Vec<Vec<Q>> = tr.outputs.iter().map(|a| output_ages(&a.iv, net.cmax(), &fracs)).collect();
    let mut out = BTreeSet::new();
    for (i, r) in enabled_discrete(net, c, t) {
        let mut idx = vec![0usize; per_arc.len()];
        if per_arc.iter().any(|v| v.is_empty()) {
            continue;
        }
        loop {
            let o: Marking = idx.iter().enumerate().map(|(a, &k)| Token::new(tr.outputs[a].place, per_arc[a][k].clone())).collect();
            let w = Witness { inputs: i.clone(), reads: r.clone(), outputs: o };
            let (c2, _) = fire_discrete(net, c, t, &w).unwrap();
            out.insert(abs(&c2, net));
            let mut j = 0;
            loop {
                if j == idx.len() {
                    break;
                }
                idx[j] += 1;
                if idx[j] < per_arc[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
    }
    out
}

/// Abstract images of detailed delays in (0, δ), without the stutter step.
pub fn concrete_short(net: &Ptpn, c: &Configuration) -> BTreeSet<AbstractConfig> {
    let d = decompose(&c.marking);
    let eps = d.epsilon();
    let first_cross = one() - &eps;
    let mut xs = vec![first_cross.clone().min(delta()) / qi(2)];
    if d.center.is_empty() && first_cross < delta() {
        xs.push(first_cross);
    }
    let me = abs(c, net);
    xs.iter().map(|x| abs(&timed_step(net, c, x).unwrap().0, net)).filter(|a| *a != me).collect()
}

/// Abstract images of delays in (1−δ, 1) at every critical point and between.
pub fn concrete_long(net: &Ptpn, c: &Configuration) -> BTreeSet<AbstractConfig> {
    let lo = one() - delta();
    let mut pts: Vec<Q> = c.marking.iter().map(|t| one() - frac(&t.age)).filter(|x| *x > lo && *x < one()).collect();
    pts.push(lo.clone());
    pts.push(one());
    pts.sort();
    pts.dedup();
    let mut xs: Vec<Q> = pts[1..pts.len() - 1].to_vec();
    for w in pts.windows(2) {
        xs.push((&w[0] + &w[1]) / qi(2));
    }
    xs.iter().map(|x| abs(&timed_step(net, c, x).unwrap().0, net)).collect()
}

#[derive(Debug, Default)]
pub struct Mismatches {
    pub checked: usize,
    /// Discrete comparisons where at least one successor existed.
    pub nonempty_discrete: usize,
    pub discrete_successors: usize,
    pub failures: Vec<String>,
}

pub fn check_config(net: &Ptpn, c: &Configuration, report: &mut Mismatches) {
    let a = abstract_config(c, &delta(), net.cmax()).expect("generated in 1/8-form");
    report.checked += 1;
    for t in 0..net.transitions.len() {
        let want = concrete_discrete(net, c, t);
        let got = abstract_discrete_steps(net, &a, t);
        if !got.is_empty() {
            report.nonempty_discrete += 1;
            report.discrete_successors += got.len();
        }
        if want != got {
            report.failures.push(format!("discrete t{} from {:?}: abstract {} vs concrete {}", t, c, got.len(), want.len()));
        }
    }
    let timed = abstract_timed_steps(net, &a);
    let pick =
        |ks: &[DelayKind]| -> BTreeSet<AbstractConfig> { timed.iter().filter(|(k, _)| ks.contains(k)).map(|(_, b)| b.clone()).collect() };
    if pick(&[DelayKind::Type1, DelayKind::Type2]) != concrete_short(net, c) {
        report.failures.push(format!("short delay from {:?}", c));
    }
    if pick(&[DelayKind::Type3, DelayKind::Type4]) != concrete_long(net, c) {
        report.failures.push(format!("long delay from {:?}", c));
    }
}
