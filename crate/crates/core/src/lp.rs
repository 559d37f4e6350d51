//! Exact two-phase simplex over rationals, Bland's rule throughout.
//!
//! Solves `min c·v` subject to `A v ≤ b`, `v ≥ 0`. Sizes here are tiny, so a
//! dense tableau is fine.

use crate::num::Q;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Optimal { point: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows × (cols + 1); last column is the rhs.
    t: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v /= &p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced cost of column `j` for objective `obj` (length `cols`).
    fn reduced(&self, obj: &[Q], j: usize) -> Q {
        let mut d = obj[j].clone();
        for (i, &b) in self.basis.iter().enumerate() {
            if !obj[b].is_zero() && !self.t[i][j].is_zero() {
                d -= &obj[b] * &self.t[i][j];
            }
        }
        d
    }

    /// Minimizes `obj` over columns allowed by `allowed`; false if unbounded.
    fn optimize(&mut self, obj: &[Q], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let enter = (0..self.cols).find(|&j| allowed(j) && !self.basis.contains(&j) && self.reduced(obj, j).is_negative());
            let Some(c) = enter else { return true };
            let mut best: Option<(Q, usize)> = None;
            for i in 0..self.t.len() {
                if self.t[i][c].is_positive() {
                    let ratio = &self.t[i][self.cols] / &self.t[i][c];
                    let better = match &best {
                        None => true,
                        Some((r, bi)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((ratio, i));
                    }
                }
            }
            match best {
                None => return false,
                Some((_, r)) => self.pivot(r, c),
            }
        }
    }
}

pub fn minimize(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> LpResult {
    let m = a.len();
    let n = c.len();
    // Columns: n structural, m slacks, m artificials.
    let cols = n + 2 * m;
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let neg = b[i].is_negative();
        let sgn = |x: &Q| if neg { -x.clone() } else { x.clone() };
        let mut row = vec![Q::zero(); cols + 1];
        for j in 0..n {
            row[j] = sgn(&a[i][j]);
        }
        row[n + i] = sgn(&Q::one());
        row[n + m + i] = Q::one();
        row[cols] = sgn(&b[i]);
        t.push(row);
    }
    let mut tab = Tableau { t, basis: (0..m).map(|i| n + m + i).collect(), cols };
    // Rows with b ≥ 0 can start on their slack directly.
    for i in 0..m {
        if !b[i].is_negative() {
            tab.pivot(i, n + i);
        }
    }
    let mut phase1 = vec![Q::zero(); cols];
    for v in &mut phase1[n + m..] {
        *v = Q::one();
    }
    tab.optimize(&phase1, &|_| true);
    let infeas: Q = tab.basis.iter().enumerate().filter(|(_, &bj)| bj >= n + m).map(|(i, _)| tab.t[i][cols].clone()).sum();
    if infeas.is_positive() {
        return LpResult::Infeasible;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] >= n + m {
            if let Some(j) = (0..n + m).find(|&j| !tab.t[i][j].is_zero()) {
                tab.pivot(i, j);
            }
        }
    }
    let mut obj = vec![Q::zero(); cols];
    obj[..n].clone_from_slice(c);
    if !tab.optimize(&obj, &|j| j < n + m) {
        return LpResult::Unbounded;
    }
    let mut point = vec![Q::zero(); n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            point[bj] = tab.t[i][cols].clone();
        }
    }
    let value = point.iter().zip(c).map(|(x, y)| x * y).sum();
    LpResult::Optimal { point, value }
}

/// Lexicographically least optimal point: optimize `c`, then each coordinate
/// in turn over the optimal face. The result is a vertex of the feasible set.
pub fn lex_min_optimum(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> LpResult {
    let (mut point, value) = match minimize(a, b, c) {
        LpResult::Optimal { point, value } => (point, value),
        other => return other,
    };
    let n = c.len();
    let mut rows = a.to_vec();
    let mut rhs = b.to_vec();
    rows.push(c.to_vec());
    rhs.push(value.clone());
    for k in 0..n {
        let mut e = vec![Q::zero(); n];
        e[k] = Q::one();
        match minimize(&rows, &rhs, &e) {
            LpResult::Optimal { point: p, value: vk } => {
                point = p;
                rows.push(e);
                rhs.push(vk);
            }
            _ => unreachable!("face of a bounded feasible optimum"),
        }
    }
    LpResult::Optimal { point, value }
}
