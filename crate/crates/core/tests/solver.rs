mod support;

use ptpn::net::Ptpn;
use ptpn::num::{q, qi};
use ptpn::parse::parse_net;
use ptpn::samples::forced_wait_net;
use ptpn::sdtn::{bag, InhibitorNet, Sdtn};
use ptpn::solver::{cost_optimal, cost_threshold, lowerbound_instance, OptCost, SolveLimits};
use ptpn::wqo::Verdict;
use support::grid::{min_cost, Grid};

fn limits() -> SolveLimits {
    let mut l = SolveLimits::default();
    l.oracle.reach.max_tokens = 8;
    l.oracle.reach.max_states = 200_000;
    l
}

#[test]
fn forced_wait_against_grid() {
    let net = forced_wait_net();
    for den in [2, 4, 8, 16] {
        let c = min_cost(&net, 0, 2, &Grid { den, max_delay: 1, max_steps: 6 }).unwrap();
        assert_eq!(c, qi(1), "den {}", den);
    }
    assert_eq!(cost_threshold(&net, 0, 2, 0, limits()).unwrap().verdict, Verdict::No);
    assert_eq!(cost_threshold(&net, 0, 2, 1, limits()).unwrap().verdict, Verdict::Yes);
    assert_eq!(cost_threshold(&net, 0, 2, 2, limits()).unwrap().verdict, Verdict::Yes);
    assert_eq!(cost_optimal(&net, 0, 2, 3, limits()).unwrap().answer, OptCost::Cost(1));
}

/// Small nets with a known cheapest grid run: the solver must never refute a
/// threshold the grid run meets, and YES answers persist as `v` grows.
#[test]
fn thresholds_sound_and_monotone() {
    let nets = [
        "state a b\nplace p cost=1\ntrans t a -> b cost=1\n",
        "state a b\nplace p cost=2\nplace f\ntrans mk a -> a out f[0,0]\ntrans t a -> b in f[1,1]\n",
        "state a b c\nplace p cost=1\ntrans put a -> b out p[0,0]\ntrans go b -> c in p[0,1)\n",
        "state a b c\nplace p cost=1\ntrans put a -> b out p(0,1)\ntrans go b -> c read p[2,2]\n",
    ];
    for src in nets {
        let net: Ptpn = parse_net(src).unwrap();
        let fin = net.states.len() - 1;
        let grid = min_cost(&net, 0, fin, &Grid { den: 4, max_delay: 2, max_steps: 6 });
        let mut prev = Verdict::No;
        for v in 0..=2u64 {
            let r = cost_threshold(&net, 0, fin, v, limits()).unwrap();
            if grid.as_ref().is_some_and(|c| *c <= qi(v as i64)) {
                assert_ne!(r.verdict, Verdict::No, "{} at v={}", src, v);
            }
            if prev == Verdict::Yes {
                assert_ne!(r.verdict, Verdict::No, "{} not monotone at v={}", src, v);
            }
            prev = r.verdict;
        }
    }
}

fn inhibitor(blocked: bool) -> (InhibitorNet, usize, usize) {
    let mut s = Sdtn::default();
    let (a, a1, b, c) = (s.add_state("a"), s.add_state("a1"), s.add_state("b"), s.add_state("c"));
    let (p, r) = (s.add_place("p"), s.add_place("r"));
    let go = if blocked {
        // The inhibiting place is filled before `go` and never emptied, so
        // the simulation reaches `c` only with a stuck cost token.
        s.add_transition("mk", a, a1, bag(vec![]), bag(vec![(p, 1)]), false);
        s.add_transition("noop", b, b, bag(vec![]), bag(vec![]), false);
        s.add_transition("go", a1, c, bag(vec![]), bag(vec![]), false)
    } else {
        // A cost token stays alive across the enforced wait of `go`.
        s.add_transition("mk", a, a1, bag(vec![]), bag(vec![(r, 1)]), false);
        let go = s.add_transition("go", a1, b, bag(vec![]), bag(vec![]), false);
        s.add_transition("eat", b, c, bag(vec![(r, 1)]), bag(vec![]), false);
        go
    };
    (InhibitorNet::new(s, p, go).unwrap(), a, c)
}

#[test]
fn lowerbound_costs_shrink_only_when_reachable() {
    let (open, init, fin) = inhibitor(false);
    let lb = lowerbound_instance(&open, init, fin).unwrap();
    let costs: Vec<_> = [8, 16, 32]
        .iter()
        .map(|&den| min_cost(&lb.net, lb.q_init, lb.q_fin, &Grid { den, max_delay: 1, max_steps: 10 }).unwrap())
        .collect();
    assert_eq!(costs, vec![q(1, 8), q(1, 16), q(1, 32)]);
    let (blocked, init, fin) = inhibitor(true);
    let lb = lowerbound_instance(&blocked, init, fin).unwrap();
    for den in [8, 16, 32] {
        let c = min_cost(&lb.net, lb.q_init, lb.q_fin, &Grid { den, max_delay: 1, max_steps: 10 }).unwrap();
        assert!(c >= qi(1), "den {}: {}", den, c);
    }
}

#[test]
fn lowerbound_empty_net_costs_nothing() {
    let mut s = Sdtn::default();
    let a = s.add_state("a");
    let p = s.add_place("p");
    let t = s.add_transition("t", a, a, bag(vec![]), bag(vec![]), false);
    let lb = lowerbound_instance(&InhibitorNet::new(s, p, t).unwrap(), a, a).unwrap();
    let c = min_cost(&lb.net, lb.q_init, lb.q_fin, &Grid { den: 4, max_delay: 1, max_steps: 4 }).unwrap();
    assert_eq!(c, qi(0));
    assert_eq!(cost_optimal(&lb.net, lb.q_init, lb.q_fin, 1, limits()).unwrap().answer, OptCost::Cost(0));
}
