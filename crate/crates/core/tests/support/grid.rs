//! Cheapest concrete runs with every delay and every output age on a fixed
//! grid, found by Dijkstra over configurations with a step bound.

use num_traits::Zero;
use ptpn::net::Ptpn;
use ptpn::num::{q, qi, Q};
use ptpn::semantics::{enabled_discrete, fire_discrete, timed_step, Configuration, Marking, Token, Witness};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

pub struct Grid {
    /// Delays and output ages are multiples of `1/den`.
    pub den: i64,
    /// Longest single delay, in time units.
    pub max_delay: i64,
    pub max_steps: usize,
}

/// Ages above `cmax` behave alike; fold them onto one representative so the
/// search space stays finite.
fn fold(c: Configuration, cmax: u32) -> Configuration {
    let top = qi(cmax as i64);
    let marking = c.marking.map(|t| if t.age > top { Token::new(t.place, &top + q(1, 2)) } else { t.clone() });
    Configuration { state: c.state, marking }
}

fn output_choices(net: &Ptpn, t: usize, den: i64) -> Vec<Marking> {
    let cmax = net.cmax() as i64;
    let mut out = vec![Marking::new()];
    for arc in &net.transitions[t].outputs {
        let ages: Vec<Q> = (0..=(cmax + 1) * den).map(|k| q(k, den)).filter(|a| arc.iv.contains(a)).collect();
        out = out
            .iter()
            .flat_map(|m| {
                ages.iter().map(move |a| {
                    let mut m = m.clone();
                    m.insert(Token::new(arc.place, a.clone()));
                    m
                })
            })
            .collect();
    }
    out
}

/// Least cost of a grid run from `(q_init, ∅)` to `q_fin`, if any.
pub fn min_cost(net: &Ptpn, q_init: usize, q_fin: usize, g: &Grid) -> Option<Q> {
    let cmax = net.cmax();
    let start = Configuration::new(q_init, []);
    let mut best: HashMap<(Configuration, usize), Q> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut nodes: Vec<(Configuration, usize)> = vec![];
    best.insert((start.clone(), 0), Q::zero());
    nodes.push((start, 0));
    heap.push(Reverse((Q::zero(), 0usize)));
    let outputs: Vec<Vec<Marking>> = (0..net.transitions.len()).map(|t| output_choices(net, t, g.den)).collect();
    while let Some(Reverse((cost, idx))) = heap.pop() {
        let (c, depth) = nodes[idx].clone();
        if best.get(&(c.clone(), depth)).is_some_and(|b| *b < cost) {
            continue;
        }
        if c.state == q_fin {
            return Some(cost);
        }
        if depth == g.max_steps {
            continue;
        }
        let mut succ = vec![];
        for k in 1..=g.max_delay * g.den {
            let (d, x) = timed_step(net, &c, &q(k, g.den)).expect("positive delay");
            succ.push((d, x));
        }
        for t in 0..net.transitions.len() {
            for (inputs, reads) in enabled_discrete(net, &c, t) {
                for o in &outputs[t] {
                    let w = Witness { inputs: inputs.clone(), reads: reads.clone(), outputs: o.clone() };
                    let (d, x) = fire_discrete(net, &c, t, &w).expect("enabled step fires");
                    succ.push((d, qi(x as i64)));
                }
            }
        }
        for (d, x) in succ {
            let key = (fold(d, cmax), depth + 1);
            let nc = &cost + x;
            if best.get(&key).is_none_or(|b| nc < *b) {
                best.insert(key.clone(), nc.clone());
                nodes.push(key);
                heap.push(Reverse((nc, nodes.len() - 1)));
            }
        }
    }
    None
}
