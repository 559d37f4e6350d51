//! Finite automata over an arbitrary ordered symbol type.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Display;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa<S: Ord + Clone> {
    pub n: usize,
    pub init: BTreeSet<usize>,
    pub finals: BTreeSet<usize>,
    /// `edges[q]` lists `(symbol, target)`.
    pub edges: Vec<Vec<(S, usize)>>,
}

impl<S: Ord + Clone> Nfa<S> {
    pub fn empty() -> Self {
        Nfa { n: 1, init: [0].into(), finals: BTreeSet::new(), edges: vec![vec![]] }
    }

    /// Accepts exactly the empty word.
    pub fn epsilon() -> Self {
        Nfa { n: 1, init: [0].into(), finals: [0].into(), edges: vec![vec![]] }
    }

    pub fn word(w: &[S]) -> Self {
        let mut a = Nfa { n: w.len() + 1, init: [0].into(), finals: [w.len()].into(), edges: vec![vec![]; w.len() + 1] };
        for (i, s) in w.iter().enumerate() {
            a.edges[i].push((s.clone(), i + 1));
        }
        a
    }

    pub fn add_state(&mut self) -> usize {
        self.edges.push(vec![]);
        self.n += 1;
        self.n - 1
    }

    pub fn add_edge(&mut self, from: usize, s: S, to: usize) {
        if !self.edges[from].contains(&(s.clone(), to)) {
            self.edges[from].push((s, to));
        }
    }

    pub fn step(&self, from: &BTreeSet<usize>, s: &S) -> BTreeSet<usize> {
        from.iter().flat_map(|&q| self.edges[q].iter().filter(|(a, _)| a == s).map(|(_, t)| *t)).collect()
    }

    pub fn accepts(&self, w: &[S]) -> bool {
        let mut cur = self.init.clone();
        for s in w {
            cur = self.step(&cur, s);
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|q| self.finals.contains(q))
    }

    /// Words of `a` followed by words of `b`.
    pub fn concat(&self, b: &Nfa<S>) -> Nfa<S> {
        let off = self.n;
        let mut r = Nfa { n: self.n + b.n, init: self.init.clone(), finals: BTreeSet::new(), edges: self.edges.clone() };
        for e in &b.edges {
            r.edges.push(e.iter().map(|(s, t)| (s.clone(), t + off)).collect());
        }
        r.finals = b.finals.iter().map(|q| q + off).collect();
        // Epsilon-free glue: copy b's initial moves onto a's final states.
        for &f in &self.finals {
            for &i in &b.init {
                let moves: Vec<(S, usize)> = b.edges[i].iter().map(|(s, t)| (s.clone(), t + off)).collect();
                for (s, t) in moves {
                    r.add_edge(f, s, t);
                }
                if b.finals.contains(&i) {
                    r.finals.insert(f);
                }
            }
        }
        r
    }

    /// One or more repetitions.
    pub fn plus(&self) -> Nfa<S> {
        let mut r = self.clone();
        for &f in &self.finals {
            for &i in &self.init {
                for (s, t) in self.edges[i].clone() {
                    r.add_edge(f, s, t);
                }
            }
        }
        r
    }

    /// Zero or more repetitions.
    pub fn star(&self) -> Nfa<S> {
        self.plus().union(&Nfa::epsilon())
    }

    /// `symbols*` in a single state.
    pub fn loops(symbols: &[S]) -> Nfa<S> {
        let mut a = Nfa::epsilon();
        for s in symbols {
            a.add_edge(0, s.clone(), 0);
        }
        a
    }

    /// Any one symbol of `symbols`.
    pub fn any_of(symbols: &[S]) -> Nfa<S> {
        let mut a = Nfa { n: 2, init: [0].into(), finals: [1].into(), edges: vec![vec![], vec![]] };
        for s in symbols {
            a.add_edge(0, s.clone(), 1);
        }
        a
    }

    pub fn union(&self, b: &Nfa<S>) -> Nfa<S> {
        let off = self.n;
        let mut r = self.clone();
        r.n += b.n;
        for e in &b.edges {
            r.edges.push(e.iter().map(|(s, t)| (s.clone(), t + off)).collect());
        }
        r.init.extend(b.init.iter().map(|q| q + off));
        r.finals.extend(b.finals.iter().map(|q| q + off));
        r
    }

    pub fn union_all(parts: impl IntoIterator<Item = Nfa<S>>, _alphabet: &[S]) -> Nfa<S> {
        parts.into_iter().fold(Nfa::empty(), |acc, a| acc.union(&a))
    }

    /// Product automaton; only reachable pairs are built.
    pub fn intersect(&self, b: &Nfa<S>) -> Nfa<S> {
        let mut idx: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut r = Nfa { n: 0, init: BTreeSet::new(), finals: BTreeSet::new(), edges: vec![] };
        let mut queue = VecDeque::new();
        for &i in &self.init {
            for &j in &b.init {
                let q = r.add_state();
                idx.insert((i, j), q);
                r.init.insert(q);
                queue.push_back((i, j));
            }
        }
        while let Some((i, j)) = queue.pop_front() {
            let q = idx[&(i, j)];
            if self.finals.contains(&i) && b.finals.contains(&j) {
                r.finals.insert(q);
            }
            for (s, ti) in &self.edges[i] {
                for (s2, tj) in &b.edges[j] {
                    if s == s2 {
                        let t = *idx.entry((*ti, *tj)).or_insert_with(|| {
                            queue.push_back((*ti, *tj));
                            r.edges.push(vec![]);
                            r.n += 1;
                            r.n - 1
                        });
                        r.add_edge(q, s.clone(), t);
                    }
                }
            }
        }
        if r.n == 0 {
            return Nfa::empty();
        }
        r
    }

    /// Subset construction over `alphabet`; the result is complete.
    pub fn determinize(&self, alphabet: &[S]) -> Nfa<S> {
        let mut idx: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
        let mut sets = vec![self.init.clone()];
        idx.insert(self.init.clone(), 0);
        let mut r = Nfa { n: 1, init: [0].into(), finals: BTreeSet::new(), edges: vec![vec![]] };
        let mut k = 0;
        while k < sets.len() {
            let cur = sets[k].clone();
            if cur.iter().any(|q| self.finals.contains(q)) {
                r.finals.insert(k);
            }
            for s in alphabet {
                let next = self.step(&cur, s);
                let t = match idx.get(&next) {
                    Some(&t) => t,
                    None => {
                        sets.push(next.clone());
                        idx.insert(next, sets.len() - 1);
                        r.add_state()
                    }
                };
                r.edges[k].push((s.clone(), t));
            }
            k += 1;
        }
        r
    }

    /// Complement with respect to `alphabet*`.
    pub fn complement(&self, alphabet: &[S]) -> Nfa<S> {
        let mut d = self.determinize(alphabet);
        d.finals = (0..d.n).filter(|q| !d.finals.contains(q)).collect();
        d
    }

    fn reachable(&self) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = self.init.clone();
        let mut stack: Vec<usize> = seen.iter().copied().collect();
        while let Some(q) = stack.pop() {
            for (_, t) in &self.edges[q] {
                if seen.insert(*t) {
                    stack.push(*t);
                }
            }
        }
        seen
    }

    /// States that can reach a final state.
    pub fn productive(&self) -> BTreeSet<usize> {
        let mut good: BTreeSet<usize> = self.finals.clone();
        loop {
            let before = good.len();
            for q in 0..self.n {
                if self.edges[q].iter().any(|(_, t)| good.contains(t)) {
                    good.insert(q);
                }
            }
            if good.len() == before {
                return good;
            }
        }
    }

    /// Keeps only states that are reachable and productive.
    pub fn trim(&self) -> Nfa<S> {
        let keep: BTreeSet<usize> = self.reachable().intersection(&self.productive()).copied().collect();
        if keep.is_empty() {
            return Nfa::empty();
        }
        let map: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        let mut r = Nfa { n: keep.len(), init: BTreeSet::new(), finals: BTreeSet::new(), edges: vec![vec![]; keep.len()] };
        for (&q, &i) in &map {
            if self.init.contains(&q) {
                r.init.insert(i);
            }
            if self.finals.contains(&q) {
                r.finals.insert(i);
            }
            for (s, t) in &self.edges[q] {
                if let Some(&j) = map.get(t) {
                    r.add_edge(i, s.clone(), j);
                }
            }
        }
        r
    }

    pub fn is_empty(&self) -> bool {
        self.reachable().iter().all(|q| !self.finals.contains(q))
    }

    /// A shortest accepted word, if any.
    pub fn shortest_word(&self) -> Option<Vec<S>> {
        let mut prev: BTreeMap<usize, Option<(usize, S)>> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for &q in &self.init {
            prev.insert(q, None);
            queue.push_back(q);
        }
        while let Some(q) = queue.pop_front() {
            if self.finals.contains(&q) {
                let mut w = vec![];
                let mut cur = q;
                while let Some(Some((p, s))) = prev.get(&cur) {
                    w.push(s.clone());
                    cur = *p;
                }
                w.reverse();
                return Some(w);
            }
            let mut out = self.edges[q].clone();
            out.sort();
            for (s, t) in out {
                if let std::collections::btree_map::Entry::Vacant(e) = prev.entry(t) {
                    e.insert(Some((q, s)));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Accepted words of length at most `max_len`, shortest first.
    pub fn words_up_to(&self, max_len: usize, cap: usize) -> Vec<Vec<S>> {
        let mut out = vec![];
        let mut layer: Vec<(Vec<S>, BTreeSet<usize>)> = vec![(vec![], self.init.clone())];
        for len in 0..=max_len {
            for (w, st) in &layer {
                if st.iter().any(|q| self.finals.contains(q)) {
                    out.push(w.clone());
                    if out.len() >= cap {
                        return out;
                    }
                }
            }
            if len == max_len {
                break;
            }
            let mut next = vec![];
            for (w, st) in &layer {
                let mut syms: BTreeSet<S> = BTreeSet::new();
                for &q in st {
                    syms.extend(self.edges[q].iter().map(|(s, _)| s.clone()));
                }
                for s in syms {
                    let t = self.step(st, &s);
                    let mut w2 = w.clone();
                    w2.push(s);
                    next.push((w2, t));
                }
            }
            layer = next;
        }
        out
    }

    /// Words having `w` as a scattered subword.
    pub fn subword_closure(alphabet: &[S], w: &[S]) -> Nfa<S> {
        let mut a = Nfa::word(w);
        for q in 0..a.n {
            for s in alphabet {
                a.add_edge(q, s.clone(), q);
            }
        }
        a
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(|e| e.len()).sum()
    }
}

impl<S: Ord + Clone + Display> Nfa<S> {
    /// Line format: `states N`, `init q…`, `final q…`, then `q symbol q'` edges.
    pub fn to_text(&self) -> String {
        let join = |s: &BTreeSet<usize>| s.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("states {}\ninit {}\nfinal {}\n", self.n, join(&self.init), join(&self.finals));
        for (q, es) in self.edges.iter().enumerate() {
            for (s, t) in es {
                out.push_str(&format!("{} {} {}\n", q, s, t));
            }
        }
        out
    }
}

impl<S: Ord + Clone + FromStr> Nfa<S> {
    pub fn from_text(text: &str) -> Result<Nfa<S>, String> {
        let mut a = Nfa { n: 0, init: BTreeSet::new(), finals: BTreeSet::new(), edges: vec![] };
        let nums = |it: std::str::SplitWhitespace| -> Result<BTreeSet<usize>, String> {
            it.map(|x| x.parse::<usize>().map_err(|e| e.to_string())).collect()
        };
        for (ln, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let Some(head) = it.next() else { continue };
            match head {
                "states" => {
                    a.n = it.next().ok_or("missing count")?.parse().map_err(|e| format!("{}", e))?;
                    a.edges = vec![vec![]; a.n];
                }
                "init" => a.init = nums(it)?,
                "final" => a.finals = nums(it)?,
                _ => {
                    let from: usize = head.parse().map_err(|_| format!("line {}: bad state", ln + 1))?;
                    let sym = it.next().ok_or(format!("line {}: missing symbol", ln + 1))?;
                    let s = sym.parse::<S>().map_err(|_| format!("line {}: bad symbol {}", ln + 1, sym))?;
                    let to: usize = it
                        .next()
                        .ok_or(format!("line {}: missing target", ln + 1))?
                        .parse()
                        .map_err(|_| format!("line {}: bad target", ln + 1))?;
                    if from >= a.n || to >= a.n {
                        return Err(format!("line {}: state out of range", ln + 1));
                    }
                    a.add_edge(from, s, to);
                }
            }
        }
        if a.init.iter().chain(&a.finals).any(|&q| q >= a.n) {
            return Err("state out of range".into());
        }
        Ok(a)
    }
}
