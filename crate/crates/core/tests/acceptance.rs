//! The ten acceptance criteria, one PASS/FAIL line each. Runs without the
//! libtest harness so the lines are always printed.

mod support;

use ptpn::acptpn::{leq_f, monotone_steps, BudgetedConfig};
use ptpn::aptpn::{abstract_config, abstract_timed_steps, AMarking, AbstractConfig, AbstractToken, DelayKind};
use ptpn::deltaform::{extract_constraints, is_delta_form, is_totally_unimodular, retime_run, run_point};
use ptpn::encoder::{aut_single, check_run, compile_oracle, decode_witness, CompileLimits, EncodeError};
use ptpn::net::{Arc, Interval, Ptpn, Transition};
use ptpn::num::{q, qi, Q};
use ptpn::parse::parse_config;
use ptpn::samples::{forced_wait_net, mixed_config, two_state_net, two_state_run};
use ptpn::sdtn::{
    bag, bounded_reach, inhibitor_to_sdtn, sdtn_to_inhibitor, Bag, Formula, InhibitorNet, ReachLimits, ReachQuery, ReachResult, Sdtn,
    UConfig, UntimedNet,
};
use ptpn::semantics::{enabled_discrete, match_tokens, run_cost, Configuration, Marking, Run, Step, Token, Witness};
use ptpn::solver::{cost_optimal, cost_threshold, lowerbound_instance, OptCost, SolveLimits};
use ptpn::wqo::{covered, generalized_valk_jantzen, minimal_elements, Limits, Outside, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};
use support::correspondence::{check_config, random_config, random_net, Mismatches};
use support::grid::{min_cost, Grid};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {:.2?}, limit {:.0?}", took, limit))
}

fn am(pairs: &[(usize, u32)]) -> AMarking {
    pairs.iter().map(|&(p, k)| AbstractToken::new(p, k)).collect()
}

fn worked_cost() -> Outcome {
    let start = Instant::now();
    let net = two_state_net();
    let cost = run_cost(&net, &two_state_run()).map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(1))?;
    ensure(cost == q(279, 10), || format!("cost {}", cost))?;
    Ok(format!("cost {} in {:.2?}", cost, start.elapsed()))
}

const C1: &str = "(q1, [<p1,2>,<p2,6>,<p3,0>][<p1,3>,<p3,2>,<p3,4>], [<p1,1>,<p2,1>,<p3,6>], [<p1,2>,<p2,1>,<p2,6>,<p3,6>])";

fn worked_abstraction() -> Outcome {
    let net = two_state_net();
    let c1 = abstract_config(&mixed_config(), &q(1, 5), 5).map_err(|e| e.to_string())?;
    ensure(c1.render(&net) == C1, || format!("c1 renders as {}", c1.render(&net)))?;
    let c2 = AbstractConfig::new(
        0,
        vec![am(&[(0, 2), (1, 6), (2, 0)]), am(&[(0, 3), (2, 2), (2, 4)])],
        AMarking::new(),
        vec![am(&[(0, 1), (1, 1), (2, 6)]), am(&[(0, 2), (1, 1), (1, 6), (2, 6)])],
    );
    let c3 = AbstractConfig::new(
        0,
        vec![am(&[(0, 2), (1, 6), (2, 0)])],
        am(&[(0, 4), (2, 3), (2, 5)]),
        vec![am(&[(0, 1), (1, 1), (2, 6)]), am(&[(0, 2), (1, 1), (1, 6), (2, 6)])],
    );
    let c4 = AbstractConfig::new(
        0,
        vec![am(&[(0, 3), (1, 6), (2, 1)]), am(&[(0, 4), (2, 3), (2, 5)]), am(&[(0, 1), (1, 1), (2, 6)])],
        AMarking::new(),
        vec![am(&[(0, 3), (1, 2), (1, 6), (2, 6)])],
    );
    let c5 = AbstractConfig::new(
        0,
        vec![am(&[(0, 3), (1, 6), (2, 1)]), am(&[(0, 4), (2, 3), (2, 5)])],
        am(&[(0, 2), (1, 2), (2, 6)]),
        vec![am(&[(0, 3), (1, 2), (1, 6), (2, 6)])],
    );
    let chain = [(&c1, DelayKind::Type1, &c2), (&c2, DelayKind::Type2, &c3), (&c3, DelayKind::Type3, &c4), (&c3, DelayKind::Type4, &c5)];
    for (from, kind, to) in chain {
        let succ = abstract_timed_steps(&net, from);
        ensure(succ.contains(&(kind, to.clone())), || format!("type {} successor {} missing", kind.number(), to.render(&net)))?;
    }
    Ok("c1 matches, type 1/2/3/4 successors give c2..c5".into())
}

fn enabledness_negatives() -> Outcome {
    let net = two_state_net();
    let t2 = &net.transitions[1];
    let cfg = |text: &str| parse_config(&net, text).map_err(|e| e.to_string());
    let in_q2 = |c: &Configuration| Configuration { state: 1, ..c.clone() };
    // t2 has one input arc and one read arc, so a single token decides each.
    let fits = |m: &Marking, arcs: &[Arc]| m.iter().any(|t| match_tokens(&[t.clone()].into_iter().collect(), arcs).is_some());

    let wrong_state = cfg("state q1\ntokens p1:3.8 p2:2.0 p3:2.9")?;
    ensure(enabled_discrete(&net, &wrong_state, 1).is_empty(), || "enabled despite wrong state".into())?;
    ensure(!enabled_discrete(&net, &in_q2(&wrong_state), 1).is_empty(), || "state is not the only reason".into())?;

    let no_input = cfg("state q1\ntokens p1:3.1*2 p2:2.0 p3:0.1*2")?;
    ensure(enabled_discrete(&net, &no_input, 1).is_empty(), || "enabled despite missing inputs".into())?;
    let m = &no_input.marking;
    ensure(enabled_discrete(&net, &in_q2(&no_input), 1).is_empty(), || "inputs case enabled in q2".into())?;
    ensure(!fits(m, &t2.inputs) && fits(m, &t2.reads), || "inputs case fails for another reason".into())?;

    let no_read = cfg("state q1\ntokens p1:3.1*2 p2:1.0 p3:1.1*2")?;
    ensure(enabled_discrete(&net, &no_read, 1).is_empty(), || "enabled despite missing reads".into())?;
    let m = &no_read.marking;
    ensure(enabled_discrete(&net, &in_q2(&no_read), 1).is_empty(), || "reads case enabled in q2".into())?;
    ensure(fits(m, &t2.inputs) && !fits(m, &t2.reads), || "reads case fails for another reason".into())?;
    Ok("disabled by state, by p3 inputs, by p2 reads".into())
}

fn correspondence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut report = Mismatches::default();
    for _ in 0..120 {
        let net = random_net(&mut rng);
        for _ in 0..5 {
            let c = random_config(&mut rng, &net, 4);
            check_config(&net, &c, &mut report);
        }
    }
    within(start, Duration::from_secs(300))?;
    ensure(report.checked >= 500, || format!("only {} configs", report.checked))?;
    ensure(report.failures.is_empty(), || format!("{} mismatches, first: {}", report.failures.len(), report.failures[0]))?;
    Ok(format!(
        "{} configs, {} enabled discrete cases, {} successors, 0 mismatches in {:.1?}",
        report.checked,
        report.nonempty_discrete,
        report.discrete_successors,
        start.elapsed()
    ))
}

/// Output ages on the `1/den` grid allowed by `iv`.
fn grid_ages(iv: &Interval, cmax: u32, den: i64) -> Vec<Q> {
    (0..=(cmax as i64 + 2) * den).map(|k| q(k, den)).filter(|a| iv.contains(a)).collect()
}

/// A random run from an empty marking with at most `max_vars` created
/// tokens plus delays. Delays stay below 1; longer ones have no δ-form
/// counterpart of the same length.
fn random_run(rng: &mut ChaCha8Rng, net: &Ptpn, max_vars: usize) -> Option<Run> {
    let den = [3, 4, 7, 10][rng.gen_range(0..4)];
    let cmax = net.cmax();
    let init = Configuration::new(rng.gen_range(0..net.states.len()), []);
    let mut c = init.clone();
    let mut steps = vec![];
    let mut vars = 0;
    for _ in 0..12 {
        let step = if rng.gen_bool(0.4) {
            if vars + 1 > max_vars {
                continue;
            }
            vars += 1;
            Step::Timed(q(rng.gen_range(1..den), den))
        } else {
            let options: Vec<(usize, (Marking, Marking))> =
                (0..net.transitions.len()).flat_map(|t| enabled_discrete(net, &c, t).into_iter().map(move |e| (t, e))).collect();
            if options.is_empty() {
                continue;
            }
            let (t, (inputs, reads)) = options[rng.gen_range(0..options.len())].clone();
            let outs = &net.transitions[t].outputs;
            if vars + outs.len() > max_vars {
                continue;
            }
            let mut outputs = Marking::new();
            for arc in outs {
                let ages = grid_ages(&arc.iv, cmax, den);
                outputs.insert(Token::new(arc.place, ages[rng.gen_range(0..ages.len())].clone()));
            }
            vars += outs.len();
            Step::Discrete { transition: t, witness: Witness { inputs, reads, outputs } }
        };
        let r = Run::replay(net, c.clone(), vec![step.clone()]).ok()?;
        c = r.configs[1].clone();
        steps.push(step);
    }
    (vars > 0).then(|| Run::replay(net, init, steps).expect("steps replayed one by one"))
}

fn constraint_matrices() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut runs, mut rows, mut cheaper) = (0, 0, 0);
    while runs < 200 {
        let net = random_net(&mut rng);
        let Some(r) = random_run(&mut rng, &net, 7) else { continue };
        runs += 1;
        let sys = extract_constraints(&net, &r).map_err(|e| e.to_string())?;
        ensure(sys.n_y + sys.n_x <= 7, || format!("{} variables", sys.n_y + sys.n_x))?;
        rows += sys.rows.len();
        ensure(sys.has_constraint_shape(), || format!("bad row shape:\n{}", sys.to_tableau()))?;
        ensure(sys.is_satisfied_by(&run_point(&net, &r).map_err(|e| e.to_string())?), || "run violates its own system".into())?;
        ensure(is_totally_unimodular(&sys.matrix()).map_err(|e| e.to_string())?, || format!("not TU:\n{}", sys.to_tableau()))?;
        let delta = [q(1, 5), q(1, 10)][rng.gen_range(0..2)].clone();
        let out = retime_run(&net, &r, &delta).map_err(|e| e.to_string())?;
        ensure(is_delta_form(&out, &delta), || format!("retimed run not in {}-form", delta))?;
        let (before, after) = (run_cost(&net, &r).unwrap(), run_cost(&net, &out).map_err(|e| e.to_string())?);
        ensure(after <= before, || format!("cost rose from {} to {}", before, after))?;
        cheaper += (after < before) as usize;
    }
    Ok(format!("{} skeletons, {} rows, all TU; retiming lowered the cost on {}", runs, rows, cheaper))
}

fn nat_leq(a: &Vec<u32>, b: &Vec<u32>) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn gvj_planted() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut hits = 0;
    for i in 0..100 {
        let k = rng.gen_range(1..=3);
        let raw: Vec<Vec<u32>> = (0..rng.gen_range(1..=4)).map(|_| (0..k).map(|_| rng.gen_range(0..=5)).collect()).collect();
        let mut planted = minimal_elements(&raw, nat_leq);
        planted.sort();
        planted.dedup();
        let mut all: Vec<Vec<u32>> = vec![vec![]];
        for _ in 0..k {
            all = all.into_iter().flat_map(|v| (0..=5).map(move |x| [v.clone(), vec![x]].concat())).collect();
        }
        all.sort_by_key(|v| (v.iter().sum::<u32>(), v.clone()));
        let got = generalized_valk_jantzen(
            nat_leq,
            |x: &[Vec<u32>]| if planted.iter().all(|b| covered(b, x, nat_leq)) { Outside::Empty } else { Outside::Exists },
            || all.clone().into_iter(),
            |v| Verdict::from_bool(covered(v, &planted, nat_leq)),
            Limits::default(),
        );
        let mut got = got.ok_or_else(|| format!("instance {} gave up", i))?;
        got.sort();
        ensure(got == planted, || format!("instance {}: planted {:?}, got {:?}", i, planted, got))?;
        hits += 1;
    }
    Ok(format!("{}/100 bases recovered", hits))
}

fn random_bag(rng: &mut ChaCha8Rng, places: &[usize]) -> Bag {
    if places.is_empty() {
        return vec![];
    }
    bag((0..rng.gen_range(0..=2)).map(|_| (places[rng.gen_range(0..places.len())], rng.gen_range(1..=2))).collect::<Vec<_>>())
}

/// A valid SD-TN with at most 5 places and 6 transitions, with transfers
/// unless `plain`, and a query from one initial configuration.
fn random_sdtn(rng: &mut ChaCha8Rng, plain: bool) -> (Sdtn, ReachQuery) {
    let mut n = Sdtn::default();
    let ns = rng.gen_range(2..=3);
    for i in 0..ns {
        n.add_state(&format!("q{}", i));
    }
    let np = rng.gen_range(2..=5);
    for i in 0..np {
        n.add_place(&format!("p{}", i));
    }
    if !plain && np >= 3 {
        n.st.push((0, 1));
    }
    let all: Vec<usize> = (0..np).collect();
    let free: Vec<usize> = (0..np).filter(|p| !n.st.iter().any(|&(a, b)| a == *p || b == *p)).collect();
    for i in 0..rng.gen_range(1..=6) {
        let transfer = !n.st.is_empty() && rng.gen_bool(0.3);
        let pool = if transfer { &free } else { &all };
        let (input, output) = (random_bag(rng, pool), random_bag(rng, pool));
        let (src, dst) = (rng.gen_range(0..ns), rng.gen_range(0..ns));
        n.add_transition(&format!("t{}", i), src, dst, input, output, transfer);
    }
    let init = UConfig::new(0, (0..np).map(|_| rng.gen_range(0..=2)).collect());
    let p = rng.gen_range(0..np);
    let k = rng.gen_range(0..=2);
    let mut target = vec![Formula::state(rng.gen_range(0..ns))];
    match rng.gen_range(0..3) {
        0 => target.push(Formula::exactly(p, k)),
        1 => target.push(Formula::at_least(p, k)),
        _ => {}
    }
    (n, ReachQuery { init: vec![init], target: Formula::And(target) })
}

fn verdict<N: UntimedNet + ?Sized>(n: &N, query: &ReachQuery) -> Option<bool> {
    let lim = ReachLimits { max_states: 100_000, max_tokens: 6, max_depth: 200 };
    match bounded_reach(n, query, lim).result {
        ReachResult::Yes(_) => Some(true),
        ReachResult::No => Some(false),
        ReachResult::Unknown(_) => None,
    }
}

fn sdtn_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut compared, mut yes, mut unknown) = (0, 0, 0);
    let mut check = |a: Option<bool>, b: Option<bool>, what: &str, i: usize| -> Result<(), String> {
        match (a, b) {
            (Some(x), Some(y)) => {
                compared += 1;
                yes += x as usize;
                ensure(x == y, || format!("net {}: {} verdicts {} vs {}", i, what, x, y))
            }
            _ => {
                unknown += 1;
                Ok(())
            }
        }
    };
    for i in 0..50 {
        let (n, query) = random_sdtn(&mut rng, false);
        n.validate().map_err(|e| e.to_string())?;
        let direct = verdict(&n, &query);
        let (inet, iq) = sdtn_to_inhibitor(&n, &query);
        let via = verdict(&inet, &iq);
        check(direct, via, "sdtn/inhibitor", i)?;
        let (back, bq) = inhibitor_to_sdtn(&inet, &iq);
        check(via, verdict(&back, &bq), "inhibitor/sdtn", i)?;

        let (plain, pq) = random_sdtn(&mut rng, true);
        let (place, trans) = (rng.gen_range(0..plain.places.len()), rng.gen_range(0..plain.transitions.len()));
        let inet = InhibitorNet::new(plain, place, trans).map_err(|e| e.to_string())?;
        let (sd, sq) = inhibitor_to_sdtn(&inet, &pq);
        check(verdict(&inet, &pq), verdict(&sd, &sq), "inhibitor/sdtn", i)?;
    }
    ensure(compared >= 75, || format!("only {} decided pairs", compared))?;
    Ok(format!("{} decided pairs agree ({} YES), {} with an UNKNOWN side", compared, yes, unknown))
}

fn tiny_net(rng: &mut ChaCha8Rng) -> Ptpn {
    let mut n = Ptpn::new();
    n.add_state("q0").unwrap();
    n.add_state("q1").unwrap();
    let places = rng.gen_range(1..=2);
    for p in 0..places {
        n.add_place(&format!("p{}", p), rng.gen_range(0..2)).unwrap();
    }
    let arc = |rng: &mut ChaCha8Rng| {
        let lo = rng.gen_range(0..=1);
        let iv =
            if rng.gen_bool(0.5) { Interval::point(lo) } else { Interval::new(lo, Some(lo + 1), rng.gen_bool(0.5), rng.gen_bool(0.5)) };
        Arc::new(rng.gen_range(0..places), iv)
    };
    for t in 0..rng.gen_range(1..=2) {
        let inputs = (0..rng.gen_range(0..=1)).map(|_| arc(rng)).collect();
        let reads = (0..rng.gen_range(0..=1)).map(|_| arc(rng)).collect();
        let outputs = (0..rng.gen_range(0..=1)).map(|_| arc(rng)).collect();
        let (src, dst, cost) = (rng.gen_range(0..2), rng.gen_range(0..2), rng.gen_range(0..2));
        n.add_transition(Transition { name: format!("t{}", t), src, dst, inputs, reads, outputs, cost }).unwrap();
    }
    n
}

fn tiny_config(rng: &mut ChaCha8Rng, net: &Ptpn, max_tokens: usize, budget: u64) -> BudgetedConfig {
    let top = net.cmax() + 1;
    let tok = |rng: &mut ChaCha8Rng| AbstractToken::new(rng.gen_range(0..net.places.len()), rng.gen_range(0..=top));
    let mut high = vec![];
    let mut center = AMarking::new();
    let mut low = vec![];
    for _ in 0..rng.gen_range(0..=max_tokens) {
        let t = tok(rng);
        match rng.gen_range(0..3) {
            0 => high.push([t].into_iter().collect()),
            1 => {
                center.insert(t);
            }
            _ => low.push([t].into_iter().collect()),
        }
    }
    BudgetedConfig::new(AbstractConfig::new(rng.gen_range(0..2), high, center, low), budget)
}

/// Breadth-first search over monotone steps for a configuration above some
/// target. `None` when more than `max` configurations were seen.
fn forward_reaches(net: &Ptpn, c: &BudgetedConfig, u: &[BudgetedConfig], max: usize) -> Option<bool> {
    let mut seen = BTreeSet::from([c.clone()]);
    let mut queue = VecDeque::from([c.clone()]);
    while let Some(s) = queue.pop_front() {
        if u.iter().any(|b| leq_f(net, b, &s)) {
            return Some(true);
        }
        for (_, d) in monotone_steps(net, &s) {
            if seen.insert(d.clone()) {
                if seen.len() > max {
                    return None;
                }
                queue.push_back(d);
            }
        }
    }
    Some(false)
}

fn encoder_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let lim = ReachLimits { max_states: 200_000, max_tokens: 8, max_depth: 200 };
    let (mut instances, mut yes, mut no, mut unknown, mut tries) = (0, 0, 0, 0, 0);
    while instances < 50 {
        tries += 1;
        ensure(tries < 2000, || format!("only {} usable instances", instances))?;
        let net = tiny_net(&mut rng);
        let budget = rng.gen_range(0..=2);
        let c = tiny_config(&mut rng, &net, 2, budget);
        let mut u = vec![];
        for _ in 0..rng.gen_range(1..=2) {
            let y = rng.gen_range(0..=budget);
            u.push(tiny_config(&mut rng, &net, 1, y));
        }
        let Some(fwd) = forward_reaches(&net, &c, &u, 20_000) else { continue };
        let comp = match compile_oracle(&aut_single(&c), &u, &net, CompileLimits::default()) {
            Err(EncodeError::TooLarge(..)) => continue,
            r => r.map_err(|e| e.to_string())?,
        };
        instances += 1;
        let here = || format!("instance {} from {}", instances, c.render(&net));
        match bounded_reach(&comp.sdtn, &comp.query, lim).result {
            ReachResult::Yes(w) => {
                yes += 1;
                let run = decode_witness(&net, &comp, &w).map_err(|e| format!("{}: {}", here(), e))?;
                ensure(check_run(&net, &run), || format!("{}: decoded run does not replay", here()))?;
                ensure(run.start == c, || format!("{}: decoded run starts elsewhere", here()))?;
                let last = run.configs.last().unwrap();
                ensure(u.contains(&run.target) && leq_f(&net, &run.target, last), || format!("{}: run misses the targets", here()))?;
                ensure(fwd, || format!("{}: compiled YES, forward search NO", here()))?;
            }
            ReachResult::No => {
                no += 1;
                ensure(!fwd, || format!("{}: forward witness not matched", here()))?;
            }
            ReachResult::Unknown(h) => {
                unknown += 1;
                ensure(!fwd, || format!("{}: forward witness, compiled search hit {:?}", here(), h))?;
            }
        }
    }
    ensure(yes >= 10, || format!("only {} YES instances", yes))?;
    Ok(format!("{} instances: {} YES decoded and replayed, {} NO, {} UNKNOWN", instances, yes, no, unknown))
}

fn solver_limits() -> SolveLimits {
    let mut l = SolveLimits::default();
    l.oracle.reach.max_tokens = 8;
    l.oracle.reach.max_states = 200_000;
    l
}

fn forced_wait() -> Outcome {
    let start = Instant::now();
    let net = forced_wait_net();
    for den in [2, 4, 8] {
        let c = min_cost(&net, 0, 2, &Grid { den, max_delay: 1, max_steps: 6 }).ok_or("grid finds no run")?;
        ensure(c == qi(1), || format!("grid cost {} at 1/{}", c, den))?;
    }
    let v0 = cost_threshold(&net, 0, 2, 0, solver_limits()).map_err(|e| e.to_string())?.verdict;
    let v1 = cost_threshold(&net, 0, 2, 1, solver_limits()).map_err(|e| e.to_string())?.verdict;
    ensure(v0 == Verdict::No && v1 == Verdict::Yes, || format!("v=0: {:?}, v=1: {:?}", v0, v1))?;
    let opt = cost_optimal(&net, 0, 2, 3, solver_limits()).map_err(|e| e.to_string())?.answer;
    ensure(opt == OptCost::Cost(1), || format!("optimum {:?}", opt))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("NO at 0, YES at 1, optimum 1, grid cost 1, in {:.1?}", start.elapsed()))
}

fn gadget_net(blocked: bool) -> (InhibitorNet, usize, usize) {
    let mut s = Sdtn::default();
    let (a, a1, b, c) = (s.add_state("a"), s.add_state("a1"), s.add_state("b"), s.add_state("c"));
    let (p, r) = (s.add_place("p"), s.add_place("r"));
    let go = if blocked {
        s.add_transition("mk", a, a1, bag(vec![]), bag(vec![(p, 1)]), false);
        s.add_transition("noop", b, b, bag(vec![]), bag(vec![]), false);
        s.add_transition("go", a1, c, bag(vec![]), bag(vec![]), false)
    } else {
        s.add_transition("mk", a, a1, bag(vec![]), bag(vec![(r, 1)]), false);
        let go = s.add_transition("go", a1, b, bag(vec![]), bag(vec![]), false);
        s.add_transition("eat", b, c, bag(vec![(r, 1)]), bag(vec![]), false);
        go
    };
    (InhibitorNet::new(s, p, go).expect("valid inhibitor net"), a, c)
}

fn lower_bound_gadget() -> Outcome {
    let dens = [8, 16, 32];
    let grid = |den| Grid { den, max_delay: 1, max_steps: 10 };
    let (open, init, fin) = gadget_net(false);
    let lb = lowerbound_instance(&open, init, fin).map_err(|e| e.to_string())?;
    let open_costs: Vec<Q> = dens
        .iter()
        .map(|&d| min_cost(&lb.net, lb.q_init, lb.q_fin, &grid(d)).ok_or("open variant unreachable"))
        .collect::<Result<_, _>>()?;
    ensure(open_costs.windows(2).all(|w| w[1] < w[0]), || format!("costs not decreasing: {:?}", open_costs))?;
    ensure(open_costs[2] <= q(1, 32), || format!("finest cost {}", open_costs[2]))?;
    let (blocked, init, fin) = gadget_net(true);
    let lb = lowerbound_instance(&blocked, init, fin).map_err(|e| e.to_string())?;
    let mut blocked_costs = vec![];
    for &d in &dens {
        let c = min_cost(&lb.net, lb.q_init, lb.q_fin, &grid(d));
        ensure(c.as_ref().is_none_or(|c| *c >= qi(1)), || format!("blocked cost {:?} at 1/{}", c, d))?;
        blocked_costs.push(c.map_or("none".to_string(), |c| c.to_string()));
    }
    let show = |v: &[Q]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
    Ok(format!("open costs {}; blocked costs {}", show(&open_costs), blocked_costs.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("worked-example cost", worked_cost),
        ("worked-example abstraction", worked_abstraction),
        ("enabledness negatives", enabledness_negatives),
        ("abstract/concrete correspondence", correspondence),
        ("constraint matrices", constraint_matrices),
        ("GVJ planted bases", gvj_planted),
        ("SD-TN reductions", sdtn_reductions),
        ("encoder soundness", encoder_soundness),
        ("end-to-end solver", forced_wait),
        ("lower-bound gadget", lower_bound_gadget),
    ];
    // Failures are reported through the PASS/FAIL lines, not the panic hook.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {}: {} [{:.2?}]", i + 1, name, detail, took),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {}: {} [{:.2?}]", i + 1, name, why, took);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
