//! Fractional decomposition, detailed delays, δ-form, and retiming of runs to
//! δ-form through their linear constraint systems.

use crate::lp::{lex_min_optimum, LpResult};
use crate::net::{Interval, Ptpn};
use crate::num::{frac, one, q, qi, zero, Q};
use crate::semantics::{storage_rate, Configuration, Marking, Run, SemanticsError, Step, Token, Witness};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    /// M_{−m} … M_{−1}: fractional parts ≥ 1/2, increasing.
    pub high: Vec<Marking>,
    pub center: Marking,
    /// M_1 … M_n: fractional parts in (0, 1/2), increasing.
    pub low: Vec<Marking>,
}

pub fn decompose(m: &Marking) -> Decomposition {
    let mut groups: BTreeMap<Q, Marking> = BTreeMap::new();
    for (t, n) in m.entries() {
        groups.entry(frac(&t.age)).or_default().insert_n(t.clone(), n);
    }
    let half = q(1, 2);
    let mut d = Decomposition { high: vec![], center: Marking::new(), low: vec![] };
    for (f, part) in groups {
        if f.is_zero() {
            d.center = part;
        } else if f < half {
            d.low.push(part);
        } else {
            d.high.push(part);
        }
    }
    d
}

impl Decomposition {
    pub fn recompose(&self) -> Marking {
        let mut m = self.center.clone();
        for part in self.high.iter().chain(&self.low) {
            m = m.sum(part);
        }
        m
    }

    /// Fractional part of M_{−1}, or 1/2 when there is none.
    pub fn epsilon(&self) -> Q {
        match self.high.last() {
            Some(part) => frac(&part.iter().next().unwrap().age),
            None => q(1, 2),
        }
    }
}

pub fn is_detailed(c: &Configuration, x: &Q) -> bool {
    let d = decompose(&c.marking);
    let bound = one() - d.epsilon();
    (x.is_positive() && *x < bound) || (d.center.is_empty() && *x == bound)
}

/// Instants in `(0, x]` at which some token of `m` reaches an integer age.
fn crossings(m: &Marking, x: &Q) -> Vec<Q> {
    let mut fracs: Vec<Q> = m.iter().map(|t| frac(&t.age)).collect();
    fracs.sort();
    fracs.dedup();
    let mut out = vec![];
    for f in fracs {
        let mut s = one() - &f;
        while s <= *x {
            out.push(s.clone());
            s += one();
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Splits every delay at the instants where some fractional part wraps to zero.
pub fn make_detailed(net: &Ptpn, r: &Run) -> Result<Run, SemanticsError> {
    let mut steps = vec![];
    for (i, s) in r.steps.iter().enumerate() {
        let Step::Timed(x) = s else {
            steps.push(s.clone());
            continue;
        };
        let c = &r.configs[i];
        let cuts = crossings(&c.marking, x);
        let mut ends = cuts.clone();
        if ends.last() != Some(x) {
            ends.push(x.clone());
        }
        let mut at = zero();
        for end in ends {
            let starts_integral = c.marking.iter().any(|t| frac(&(&t.age + &at)).is_zero());
            if starts_integral && cuts.contains(&end) {
                let mid = (&at + &end) / qi(2);
                steps.push(Step::Timed(&mid - &at));
                steps.push(Step::Timed(&end - &mid));
            } else {
                steps.push(Step::Timed(&end - &at));
            }
            at = end;
        }
    }
    Run::replay(net, r.first().clone(), steps)
}

pub fn is_marking_delta_form(m: &Marking, delta: &Q) -> bool {
    let hi = one() - delta;
    m.iter().all(|t| {
        let f = frac(&t.age);
        f < *delta || f > hi
    })
}

pub fn is_delay_delta_form(x: &Q, delta: &Q) -> bool {
    x.is_positive() && (*x < *delta || (*x > one() - delta && *x < one()))
}

pub fn is_delta_form(r: &Run, delta: &Q) -> bool {
    r.steps.iter().all(|s| match s {
        Step::Timed(x) => is_delay_delta_form(x, delta),
        Step::Discrete { witness, .. } => is_marking_delta_form(&witness.outputs, delta),
    })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DeltaError {
    #[error("run uses token {0} before it exists")]
    MalformedSkeleton(String),
    #[error("constraint system is infeasible")]
    Infeasible,
    #[error("optimal vertex is not integral")]
    NonIntegralVertex,
    #[error("matrix has {0} square submatrices, above the limit {1}")]
    TooLarge(u128, u128),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// One linear inequality `coef · v ≤ rhs` (`<` when strict) over `(y…, x…)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub coef: Vec<i64>,
    pub rhs: Q,
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    /// Number of created-token age variables; they come first.
    pub n_y: usize,
    /// Number of delay variables.
    pub n_x: usize,
    pub rows: Vec<Row>,
}

impl ConstraintSystem {
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        self.rows.iter().map(|r| r.coef.clone()).collect()
    }

    pub fn is_satisfied_by(&self, v: &[Q]) -> bool {
        self.rows.iter().all(|r| {
            let lhs: Q = r.coef.iter().zip(v).filter(|(c, _)| **c != 0).map(|(c, x)| qi(*c) * x).sum();
            if r.strict {
                lhs < r.rhs
            } else {
                lhs <= r.rhs
            }
        })
    }

    /// Each row touches at most one `y_j` plus one contiguous signed block of
    /// `x`s, and every row touching `y_j` starts its block at the same column.
    pub fn has_constraint_shape(&self) -> bool {
        let mut start_for_y: BTreeMap<usize, usize> = BTreeMap::new();
        for r in &self.rows {
            let ys: Vec<usize> = (0..self.n_y).filter(|&j| r.coef[j] != 0).collect();
            let xs: Vec<usize> = (self.n_y..self.n_y + self.n_x).filter(|&j| r.coef[j] != 0).collect();
            let mut signs = r.coef.iter().filter(|&&c| c != 0);
            let Some(&alpha) = signs.next() else { continue };
            if alpha.abs() != 1 || signs.any(|&c| c != alpha) || ys.len() > 1 {
                return false;
            }
            if xs.windows(2).any(|w| w[1] != w[0] + 1) {
                return false;
            }
            if let (Some(&j), Some(&k)) = (ys.first(), xs.first()) {
                if *start_for_y.entry(j).or_insert(k) != k {
                    return false;
                }
            }
        }
        true
    }

    /// Plain-text tableau, one row per line.
    pub fn to_tableau(&self) -> String {
        let mut s = String::new();
        let names: Vec<String> = (1..=self.n_y).map(|j| format!("y{}", j)).chain((1..=self.n_x).map(|i| format!("x{}", i))).collect();
        writeln!(s, "{} | rhs", names.join(" ")).unwrap();
        for r in &self.rows {
            let cells: Vec<String> = r.coef.iter().map(|c| format!("{:>2}", c)).collect();
            writeln!(s, "{} | {} {}", cells.join(" "), if r.strict { "<" } else { "<=" }, crate::num::fmt_q(&r.rhs)).unwrap();
        }
        s
    }
}

#[derive(Clone, Debug)]
enum Origin {
    /// Present initially with a fixed age.
    Initial(Q),
    /// Created with age variable `y_j` through an output arc.
    Created(usize, Interval),
}

#[derive(Clone, Debug)]
struct Tracked {
    place: usize,
    origin: Origin,
    /// Delays elapsed before the token existed.
    born: usize,
}

#[derive(Clone, Debug)]
enum SkelStep {
    Delay,
    Fire { transition: usize, inputs: Vec<usize>, reads: Vec<usize>, outputs: Vec<usize> },
}

/// A run with its token identities made explicit.
#[derive(Clone, Debug)]
struct Skeleton {
    state: usize,
    tokens: Vec<Tracked>,
    initial: Vec<usize>,
    steps: Vec<SkelStep>,
    values: Vec<Q>,
    n_y: usize,
    n_x: usize,
    /// (token, interval, delays elapsed) for every input or read use.
    uses: Vec<(usize, Interval, usize)>,
}

fn arc_for(tr_arcs: &[crate::net::Arc], toks: &[Token]) -> Vec<Interval> {
    let m: Marking = toks.iter().cloned().collect();
    let pairs = crate::semantics::match_tokens(&m, tr_arcs).expect("witness validated by replay");
    // match_tokens pairs distinct tokens in multiset order; realign with `toks`.
    let mut pool = pairs;
    toks.iter()
        .map(|t| {
            let i = pool.iter().position(|(u, _)| u == t).unwrap();
            let (_, a) = pool.remove(i);
            tr_arcs[a].iv.clone()
        })
        .collect()
}

fn skeleton(net: &Ptpn, r: &Run) -> Result<Skeleton, DeltaError> {
    let c0 = r.first();
    let mut sk = Skeleton { state: c0.state, tokens: vec![], initial: vec![], steps: vec![], values: vec![], n_y: 0, n_x: 0, uses: vec![] };
    let mut live: Vec<(usize, Token)> = vec![];
    for t in c0.marking.iter() {
        sk.tokens.push(Tracked { place: t.place, origin: Origin::Initial(t.age.clone()), born: 0 });
        sk.initial.push(sk.tokens.len() - 1);
        live.push((sk.tokens.len() - 1, t.clone()));
    }
    let mut ys = vec![];
    let mut xs = vec![];
    for (i, s) in r.steps.iter().enumerate() {
        crate::semantics::step(net, &r.configs[i], s).map_err(|e| SemanticsError::MalformedRun(i, e.to_string()))?;
        match s {
            Step::Timed(x) => {
                for (_, t) in live.iter_mut() {
                    t.age += x;
                }
                xs.push(x.clone());
                sk.steps.push(SkelStep::Delay);
            }
            Step::Discrete { transition, witness } => {
                let tr = &net.transitions[*transition];
                let take = |want: &[Token], remove: bool, live: &mut Vec<(usize, Token)>| {
                    let mut ids = vec![];
                    let mut skip: Vec<usize> = vec![];
                    for w in want {
                        let pos = live
                            .iter()
                            .enumerate()
                            .position(|(k, (_, t))| t == w && !skip.contains(&k))
                            .ok_or_else(|| DeltaError::MalformedSkeleton(w.to_string()))?;
                        skip.push(pos);
                        ids.push(live[pos].0);
                    }
                    if remove {
                        skip.sort_unstable_by(|a, b| b.cmp(a));
                        for k in skip {
                            live.remove(k);
                        }
                    }
                    Ok::<_, DeltaError>(ids)
                };
                let in_toks = witness.inputs.to_vec();
                let rd_toks = witness.reads.to_vec();
                let inputs = take(&in_toks, true, &mut live)?;
                let reads = take(&rd_toks, false, &mut live)?;
                for (id, iv) in inputs.iter().zip(arc_for(&tr.inputs, &in_toks)) {
                    sk.uses.push((*id, iv, xs.len()));
                }
                for (id, iv) in reads.iter().zip(arc_for(&tr.reads, &rd_toks)) {
                    sk.uses.push((*id, iv, xs.len()));
                }
                let out_toks = witness.outputs.to_vec();
                let mut outputs = vec![];
                for (t, iv) in out_toks.iter().zip(arc_for(&tr.outputs, &out_toks)) {
                    sk.tokens.push(Tracked { place: t.place, origin: Origin::Created(ys.len(), iv), born: xs.len() });
                    ys.push(t.age.clone());
                    let id = sk.tokens.len() - 1;
                    outputs.push(id);
                    live.push((id, t.clone()));
                }
                sk.steps.push(SkelStep::Fire { transition: *transition, inputs, reads, outputs });
            }
        }
    }
    sk.n_y = ys.len();
    sk.n_x = xs.len();
    sk.values = ys.into_iter().chain(xs).collect();
    Ok(sk)
}

/// Adds `lo ≤ base + coef·v ≤ hi` as up to two rows, skipping rows with no variables.
fn bound_rows(rows: &mut Vec<Row>, coef: Vec<i64>, base: &Q, iv: &Interval) {
    if coef.iter().all(|&c| c == 0) {
        return;
    }
    let neg: Vec<i64> = coef.iter().map(|c| -c).collect();
    rows.push(Row { coef: neg, rhs: base - qi(iv.lo as i64), strict: iv.lo_open });
    if let Some(h) = iv.hi {
        rows.push(Row { coef, rhs: qi(h as i64) - base, strict: iv.hi_open });
    }
}

fn system_of(sk: &Skeleton) -> ConstraintSystem {
    let n = sk.n_y + sk.n_x;
    let mut rows = vec![];
    for (id, t) in sk.tokens.iter().enumerate() {
        let Origin::Created(j, iv) = &t.origin else { continue };
        let mut coef = vec![0; n];
        coef[*j] = 1;
        bound_rows(&mut rows, coef, &zero(), iv);
        let mut uses: Vec<_> = sk.uses.iter().filter(|u| u.0 == id).collect();
        uses.sort_by_key(|u| u.2);
        for (_, iv, at) in uses {
            let mut coef = vec![0; n];
            coef[*j] = 1;
            for c in &mut coef[sk.n_y + t.born..sk.n_y + at] {
                *c = 1;
            }
            bound_rows(&mut rows, coef, &zero(), iv);
        }
    }
    for &id in &sk.initial {
        let Origin::Initial(age) = &sk.tokens[id].origin else { unreachable!() };
        for (_, iv, at) in sk.uses.iter().filter(|u| u.0 == id) {
            let mut coef = vec![0; n];
            for c in &mut coef[sk.n_y..sk.n_y + at] {
                *c = 1;
            }
            bound_rows(&mut rows, coef, age, iv);
        }
    }
    for i in 0..sk.n_x {
        let mut coef = vec![0; n];
        coef[sk.n_y + i] = -1;
        rows.push(Row { coef, rhs: zero(), strict: true });
    }
    ConstraintSystem { n_y: sk.n_y, n_x: sk.n_x, rows }
}

/// Linear constraints on the created-token ages and delays of `r`, with the
/// concrete values of `r` as a feasible point (see [`run_point`]).
pub fn extract_constraints(net: &Ptpn, r: &Run) -> Result<ConstraintSystem, DeltaError> {
    Ok(system_of(&skeleton(net, r)?))
}

/// The `(y…, x…)` values realized by `r`.
pub fn run_point(net: &Ptpn, r: &Run) -> Result<Vec<Q>, DeltaError> {
    Ok(skeleton(net, r)?.values)
}

pub const TU_SUBMATRIX_LIMIT: u128 = 50_000_000;

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

fn det(mut a: Vec<Vec<i128>>) -> i128 {
    // Bareiss fraction-free elimination.
    let n = a.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * a[n - 1][n - 1]
    }
}

fn combos(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..n {
            cur.push(i);
            if !go(i + 1, n, k, cur, f) {
                return false;
            }
            cur.pop();
        }
        true
    }
    go(0, n, k, &mut vec![], f)
}

/// Brute-force check that every square submatrix has determinant in {−1, 0, 1}.
///
/// Zero rows, repeated rows and negated copies are dropped first; none of them
/// can change the answer.
pub fn is_totally_unimodular(m: &[Vec<i64>]) -> Result<bool, DeltaError> {
    if m.iter().flatten().any(|&x| !(-1..=1).contains(&x)) {
        return Ok(false);
    }
    let mut rows: Vec<Vec<i64>> = vec![];
    for r in m {
        let Some(&lead) = r.iter().find(|&&x| x != 0) else { continue };
        let r: Vec<i64> = r.iter().map(|x| x * lead).collect();
        if !rows.contains(&r) {
            rows.push(r);
        }
    }
    let cols = m.first().map_or(0, |r| r.len());
    let total: u128 = (1..=rows.len().min(cols)).map(|k| binom(rows.len(), k) * binom(cols, k)).sum();
    if total > TU_SUBMATRIX_LIMIT {
        return Err(DeltaError::TooLarge(total, TU_SUBMATRIX_LIMIT));
    }
    for k in 2..=rows.len().min(cols) {
        let ok = combos(rows.len(), k, &mut |rs| {
            combos(cols, k, &mut |cs| {
                let sub = rs.iter().map(|&i| cs.iter().map(|&j| rows[i][j] as i128).collect()).collect();
                det(sub).abs() <= 1
            })
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

fn to_int(x: &Q) -> Option<BigInt> {
    x.is_integer().then(|| x.to_integer())
}

/// Moves the delays and created-token ages of `r` close to an optimal integer
/// vertex of its constraint polyhedron. Length, skeleton and configuration
/// sizes are kept; the cost does not increase. A delay below 1 stays below 1.
pub fn retime_run(net: &Ptpn, r: &Run, delta: &Q) -> Result<Run, DeltaError> {
    let sk = skeleton(net, r)?;
    let mut sys = system_of(&sk);
    let n = sk.n_y + sk.n_x;
    for i in 0..sk.n_x {
        if sk.values[sk.n_y + i] < one() {
            let mut coef = vec![0; n];
            coef[sk.n_y + i] = 1;
            sys.rows.push(Row { coef, rhs: one(), strict: true });
        }
    }
    let mut cost = vec![zero(); n];
    let mut xi = 0;
    for (i, s) in r.steps.iter().enumerate() {
        if let Step::Timed(_) = s {
            cost[sk.n_y + xi] = qi(storage_rate(net, &r.configs[i].marking) as i64);
            xi += 1;
        }
    }
    let a: Vec<Vec<Q>> = sys.rows.iter().map(|row| row.coef.iter().map(|&c| qi(c)).collect()).collect();
    let b: Vec<Q> = sys.rows.iter().map(|row| row.rhs.clone()).collect();
    let vertex = match lex_min_optimum(&a, &b, &cost) {
        LpResult::Optimal { point, .. } => point,
        LpResult::Infeasible => return Err(DeltaError::Infeasible),
        LpResult::Unbounded => unreachable!("costs are nonnegative and variables are bounded below"),
    };
    if vertex.iter().any(|v| to_int(v).is_none()) {
        return Err(DeltaError::NonIntegralVertex);
    }
    let eps = delta / qi(2 * (r.steps.len() as i64 + 1));
    let spread = sk.values.iter().zip(&vertex).map(|(p, v)| (p - v).abs()).max().unwrap_or_else(zero);
    let lambda = if spread <= eps { one() } else { &eps / &spread };
    let point: Vec<Q> = sk.values.iter().zip(&vertex).map(|(p, v)| v + &lambda * (p - v)).collect();
    debug_assert!(sys.is_satisfied_by(&point));
    rebuild(net, &sk, &point)
}

fn rebuild(net: &Ptpn, sk: &Skeleton, point: &[Q]) -> Result<Run, DeltaError> {
    let mut age: BTreeMap<usize, Q> = BTreeMap::new();
    for &id in &sk.initial {
        let Origin::Initial(a) = &sk.tokens[id].origin else { unreachable!() };
        age.insert(id, a.clone());
    }
    let tok = |id: usize, age: &BTreeMap<usize, Q>| Token::new(sk.tokens[id].place, age[&id].clone());
    let init = Configuration::new(sk.state, sk.initial.iter().map(|&id| tok(id, &age)));
    let mut steps = vec![];
    let mut xi = 0;
    for s in &sk.steps {
        match s {
            SkelStep::Delay => {
                let x = &point[sk.n_y + xi];
                xi += 1;
                for a in age.values_mut() {
                    *a += x;
                }
                steps.push(Step::Timed(x.clone()));
            }
            SkelStep::Fire { transition, inputs, reads, outputs } => {
                for &id in outputs {
                    let Origin::Created(j, _) = &sk.tokens[id].origin else { unreachable!() };
                    age.insert(id, point[*j].clone());
                }
                let witness = Witness {
                    inputs: inputs.iter().map(|&id| tok(id, &age)).collect(),
                    reads: reads.iter().map(|&id| tok(id, &age)).collect(),
                    outputs: outputs.iter().map(|&id| tok(id, &age)).collect(),
                };
                for id in inputs {
                    age.remove(id);
                }
                steps.push(Step::Discrete { transition: *transition, witness });
            }
        }
    }
    Ok(Run::replay(net, init, steps)?)
}
