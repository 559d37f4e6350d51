//! Generic well-quasi-order engines: minimal bases, the Valk-Jantzen style
//! basis construction, backward coverability and the two-relation phase
//! algorithm.
//!
//! Oracles may answer `Unknown` when they are backed by bounded search. Any
//! `Unknown` that matters for the answer makes the result `Unknown`.

use crate::automata::Nfa;
use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    pub fn or(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Yes, _) | (_, Verdict::Yes) => Verdict::Yes,
            (Verdict::No, Verdict::No) => Verdict::No,
            _ => Verdict::Unknown,
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
            (Verdict::Yes, Verdict::Yes) => Verdict::Yes,
            _ => Verdict::Unknown,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

/// Minimal elements of `s` under `leq`; among equivalent elements the first is kept.
pub fn minimal_elements<T: Clone>(s: &[T], leq: impl Fn(&T, &T) -> bool) -> Vec<T> {
    let mut out: Vec<T> = vec![];
    for (i, x) in s.iter().enumerate() {
        let dominated = s.iter().enumerate().any(|(j, y)| j != i && leq(y, x) && (!leq(x, y) || j < i));
        if !dominated {
            out.push(x.clone());
        }
    }
    out
}

pub fn covered<T>(x: &T, basis: &[T], leq: impl Fn(&T, &T) -> bool) -> bool {
    basis.iter().any(|b| leq(b, x))
}

/// Answer of an oracle deciding whether some element of `V` lies outside `↑X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outside<T> {
    /// Yes, and here is one.
    Witness(T),
    /// Yes, but the oracle does not produce an element.
    Exists,
    Empty,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Limits {
    /// Largest basis kept before giving up.
    pub max_basis: usize,
    /// Largest number of oracle queries or enumerated elements.
    pub max_steps: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_basis: 100_000, max_steps: 1_000_000 }
    }
}

/// Grows `X ⊆ V` by elements outside `↑X` until the oracle reports that
/// `V ⊆ ↑X`, then returns the minimal elements of `X`.
///
/// When the oracle only says `Exists`, `enumerate` is scanned for an element
/// of `V` outside `↑X`, using `member` to test membership in `V`.
pub fn generalized_valk_jantzen<T: Clone + fmt::Debug, I: Iterator<Item = T>>(
    leq: impl Fn(&T, &T) -> bool,
    mut outside: impl FnMut(&[T]) -> Outside<T>,
    mut enumerate: impl FnMut() -> I,
    mut member: impl FnMut(&T) -> Verdict,
    limits: Limits,
) -> Option<Vec<T>> {
    let mut x: Vec<T> = vec![];
    for _ in 0..limits.max_steps {
        let w = match outside(&x) {
            Outside::Empty => return Some(minimal_elements(&x, &leq)),
            Outside::Unknown => return None,
            Outside::Witness(w) => w,
            Outside::Exists => {
                let found = enumerate().take(limits.max_steps).filter(|c| !covered(c, &x, &leq)).find(|c| member(c) == Verdict::Yes);
                found?
            }
        };
        assert!(!covered(&w, &x, &leq), "witness {:?} already covered", w);
        x.push(w);
        if x.len() > limits.max_basis {
            return None;
        }
    }
    None
}

/// Smallest words of `V ⊆ Σ*`, upward closed for the subword order, given an
/// oracle for `R ∩ V ≠ ∅` on regular `R`.
pub fn substring_gvj(
    alphabet: &[char],
    member: impl Fn(&[char]) -> bool,
    intersects: impl Fn(&Nfa<char>) -> Verdict,
    limits: Limits,
) -> Option<Vec<Vec<char>>> {
    let leq = |a: &Vec<char>, b: &Vec<char>| is_subword(a, b);
    let outside = |x: &[Vec<char>]| {
        let up = Nfa::union_all(x.iter().map(|w| Nfa::subword_closure(alphabet, w)), alphabet);
        match intersects(&up.complement(alphabet)) {
            Verdict::Yes => Outside::Exists,
            Verdict::No => Outside::Empty,
            Verdict::Unknown => Outside::Unknown,
        }
    };
    let enumerate = || words_by_length(alphabet);
    generalized_valk_jantzen(leq, outside, enumerate, |w| Verdict::from_bool(member(w)), limits)
}

/// `a` embeds into `b` as a scattered subword.
pub fn is_subword(a: &[char], b: &[char]) -> bool {
    let mut it = b.iter();
    a.iter().all(|c| it.any(|d| d == c))
}

/// All words over `alphabet`, by length and then lexicographically.
pub fn words_by_length(alphabet: &[char]) -> impl Iterator<Item = Vec<char>> + '_ {
    let mut cur: Vec<Vec<char>> = vec![vec![]];
    let mut idx = 0;
    std::iter::from_fn(move || {
        if idx == cur.len() {
            cur = cur.iter().flat_map(|w| alphabet.iter().map(move |&c| [w.as_slice(), &[c]].concat())).collect();
            idx = 0;
        }
        idx += 1;
        cur.get(idx - 1).cloned()
    })
}

/// Saturates minimal bases of `Pre^{≤i}(↑F)` until `↑` is stable.
///
/// `pre_basis(b)` must return a finite basis of the one-step predecessors of
/// `↑{b}`. On hitting a limit, returns the partial basis as `Err`.
pub fn backward_coverability<T: Clone>(
    f_basis: &[T],
    leq: impl Fn(&T, &T) -> bool,
    mut pre_basis: impl FnMut(&T) -> Vec<T>,
    limits: Limits,
) -> Result<Vec<T>, Vec<T>> {
    let mut basis = minimal_elements(f_basis, &leq);
    let mut frontier = basis.clone();
    let mut steps = 0;
    while !frontier.is_empty() {
        let mut next = vec![];
        for b in &frontier {
            steps += 1;
            if steps > limits.max_steps {
                return Err(basis);
            }
            for p in pre_basis(b) {
                if !covered(&p, &basis, &leq) && !covered(&p, &next, &leq) {
                    next.retain(|n| !leq(&p, n));
                    next.push(p);
                }
            }
        }
        basis.retain(|b| !next.iter().any(|n| leq(n, b)));
        basis.extend(next.iter().cloned());
        if basis.len() > limits.max_basis {
            return Err(basis);
        }
        frontier = next;
    }
    Ok(basis)
}

/// Oracle hooks of a structure with a monotone relation `A` and a relation
/// `B` enabled only on the upward closure of a finite core `C`.
pub trait PhaseStructure {
    type Conf: Clone + fmt::Debug;

    fn leq(&self, a: &Self::Conf, b: &Self::Conf) -> bool;
    fn init(&self) -> Self::Conf;
    /// Whether `init →_A* F`.
    fn init_reaches_final(&mut self) -> Verdict;
    /// Basis of `Pre*_A(F) ∩ ↑C`; `None` if a limit was hit.
    fn final_pre_basis(&mut self) -> Option<Vec<Self::Conf>>;
    /// Basis of `Pre_B(↑U)`.
    fn pre_b_basis(&mut self, u: &[Self::Conf]) -> Vec<Self::Conf>;
    /// Whether `c →_A* ↑U`.
    fn reaches(&mut self, c: &Self::Conf, u: &[Self::Conf]) -> Verdict;
    /// Whether some `z ∈ ↑C`, `z ∉ ↑X` has `z →_A* ↑U`.
    fn outside(&mut self, u: &[Self::Conf], x: &[Self::Conf]) -> Outside<Self::Conf>;
    /// Fair enumeration of `↑C`, used when `outside` gives no witness.
    fn enumerate_core(&self) -> Box<dyn Iterator<Item = Self::Conf> + '_>;
    /// Optional check that `B` was only used inside `↑C`.
    fn in_core(&self, _c: &Self::Conf) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseTrace {
    pub verdict: Verdict,
    /// One line per iteration.
    pub log: Vec<String>,
    /// Basis sizes `|U_k|`.
    pub sizes: Vec<usize>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("structure violation: {0}")]
pub struct StructureError(pub String);

pub fn phase_reach<S: PhaseStructure>(ps: &mut S, limits: Limits) -> Result<PhaseTrace, StructureError> {
    let mut log = vec![];
    let mut sizes = vec![];
    let direct = ps.init_reaches_final();
    log.push(format!("direct: {}", direct));
    if direct == Verdict::Yes {
        return Ok(PhaseTrace { verdict: Verdict::Yes, log, sizes });
    }
    let mut unsure = direct == Verdict::Unknown;
    let Some(u1p) = ps.final_pre_basis() else {
        log.push("final pre-basis: limit".into());
        return Ok(PhaseTrace { verdict: Verdict::Unknown, log, sizes });
    };
    let mut u = pre_b(ps, &u1p)?;
    log.push(format!("U1': {} U1: {}", u1p.len(), u.len()));
    sizes.push(u.len());
    for k in 1..=limits.max_steps {
        let early = ps.reaches(&ps.init(), &u);
        if early == Verdict::Yes {
            log.push(format!("k={}: init reaches U{}", k, k));
            return Ok(PhaseTrace { verdict: Verdict::Yes, log, sizes });
        }
        let cur = u.clone();
        let next_p = gvj_phase(ps, &cur, limits);
        let Some(next_p) = next_p else {
            log.push(format!("k={}: basis construction gave up", k));
            return Ok(PhaseTrace { verdict: Verdict::Unknown, log, sizes });
        };
        let pre = pre_b(ps, &next_p)?;
        let mut all = cur.clone();
        all.extend(pre);
        let next = minimal_elements(&all, |a, b| ps.leq(a, b));
        for c in &cur {
            if !covered(c, &next, |a, b| ps.leq(a, b)) {
                return Err(StructureError(format!("U sequence not monotone at {:?}", c)));
            }
        }
        log.push(format!("k={}: U'{}: {} U{}: {}", k, k + 1, next_p.len(), k + 1, next.len()));
        sizes.push(next.len());
        let stable = next.len() == cur.len() && next.iter().all(|n| covered(n, &cur, |a, b| ps.leq(a, b)));
        if stable {
            let fin = ps.reaches(&ps.init(), &cur);
            log.push(format!("stable after {} iterations; init reaches: {}", k, fin));
            if fin == Verdict::Unknown {
                unsure = true;
            }
            let verdict = match fin {
                Verdict::Yes => Verdict::Yes,
                _ if unsure => Verdict::Unknown,
                v => v,
            };
            return Ok(PhaseTrace { verdict, log, sizes });
        }
        u = next;
        if u.len() > limits.max_basis {
            break;
        }
    }
    log.push("iteration limit".into());
    Ok(PhaseTrace { verdict: Verdict::Unknown, log, sizes })
}

fn pre_b<S: PhaseStructure>(ps: &mut S, u: &[S::Conf]) -> Result<Vec<S::Conf>, StructureError> {
    let pre = ps.pre_b_basis(u);
    if let Some(bad) = pre.iter().find(|c| !ps.in_core(c)) {
        return Err(StructureError(format!("B-predecessor {:?} outside the core", bad)));
    }
    Ok(minimal_elements(&pre, |a, b| ps.leq(a, b)))
}

fn gvj_phase<S: PhaseStructure>(ps: &mut S, u: &[S::Conf], limits: Limits) -> Option<Vec<S::Conf>> {
    // The oracle, the enumerator and the membership test all need `ps`, so the
    // loop is spelled out here instead of going through the generic engine.
    let mut x: Vec<S::Conf> = vec![];
    for _ in 0..limits.max_steps {
        let w = match ps.outside(u, &x) {
            Outside::Empty => return Some(minimal_elements(&x, |a, b| ps.leq(a, b))),
            Outside::Unknown => return None,
            Outside::Witness(w) => w,
            Outside::Exists => {
                let cands: Vec<S::Conf> =
                    ps.enumerate_core().filter(|c| !covered(c, &x, |a, b| ps.leq(a, b))).take(limits.max_steps).collect();
                let mut found = None;
                for c in cands {
                    if ps.reaches(&c, u) == Verdict::Yes {
                        found = Some(c);
                        break;
                    }
                }
                found?
            }
        };
        assert!(!covered(&w, &x, |a, b| ps.leq(a, b)), "witness {:?} already covered", w);
        x.push(w);
        if x.len() > limits.max_basis {
            return None;
        }
    }
    None
}
