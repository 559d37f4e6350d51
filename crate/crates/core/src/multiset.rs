//! Finite multisets stored as sorted count maps.
//!
//! Iteration order is the element order, so equality, hashing and printing
//! are deterministic.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<T: Ord> {
    counts: BTreeMap<T, usize>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Multiset { counts: BTreeMap::new() }
    }
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(x: T) -> Self {
        let mut m = Self::new();
        m.insert(x);
        m
    }

    pub fn insert(&mut self, x: T) {
        self.insert_n(x, 1);
    }

    pub fn insert_n(&mut self, x: T, n: usize) {
        if n > 0 {
            *self.counts.entry(x).or_insert(0) += n;
        }
    }

    /// Removes one copy; returns false if `x` was absent.
    pub fn remove(&mut self, x: &T) -> bool {
        self.remove_n(x, 1)
    }

    pub fn remove_n(&mut self, x: &T, n: usize) -> bool {
        match self.counts.get_mut(x) {
            Some(c) if *c >= n => {
                *c -= n;
                if *c == 0 {
                    self.counts.remove(x);
                }
                true
            }
            _ => n == 0,
        }
    }

    pub fn count(&self, x: &T) -> usize {
        self.counts.get(x).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Distinct elements with their multiplicities.
    pub fn entries(&self) -> impl Iterator<Item = (&T, usize)> + '_ {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Every copy, in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.counts.iter().flat_map(|(k, &v)| std::iter::repeat_n(k, v))
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().cloned().collect()
    }

    pub fn contains_all(&self, other: &Self) -> bool {
        other.counts.iter().all(|(k, &v)| self.count(k) >= v)
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other.entries() {
            out.insert_n(k.clone(), v);
        }
        out
    }

    /// `self - other`, or `None` when `other` is not contained in `self`.
    pub fn difference(&self, other: &Self) -> Option<Self> {
        let mut out = self.clone();
        for (k, v) in other.entries() {
            if !out.remove_n(k, v) {
                return None;
            }
        }
        Some(out)
    }

    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Multiset<U> {
        let mut out = Multiset::new();
        for (k, v) in self.entries() {
            out.insert_n(f(k), v);
        }
        out
    }

    pub fn filter(&self, mut keep: impl FnMut(&T) -> bool) -> Self {
        Multiset { counts: self.counts.iter().filter(|(k, _)| keep(k)).map(|(k, &v)| (k.clone(), v)).collect() }
    }

    /// All sub-multisets of size exactly `k`, in lexicographic order of count vectors.
    pub fn submultisets(&self, k: usize) -> Vec<Self> {
        let items: Vec<(&T, usize)> = self.entries().collect();
        let mut out = Vec::new();
        let mut chosen: Vec<usize> = vec![0; items.len()];
        fn rec<T: Ord + Clone>(items: &[(&T, usize)], i: usize, left: usize, chosen: &mut Vec<usize>, out: &mut Vec<Multiset<T>>) {
            if left == 0 {
                let mut m = Multiset::new();
                for (j, &(x, _)) in items.iter().enumerate() {
                    m.insert_n(x.clone(), chosen[j]);
                }
                out.push(m);
                return;
            }
            if i == items.len() {
                return;
            }
            let rest: usize = items[i + 1..].iter().map(|e| e.1).sum();
            let lo = left.saturating_sub(rest);
            for c in lo..=items[i].1.min(left) {
                chosen[i] = c;
                rec(items, i + 1, left - c, chosen, out);
            }
            chosen[i] = 0;
        }
        rec(&items, 0, k, &mut chosen, &mut out);
        out
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for x in iter {
            m.insert(x);
        }
        m
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.counts.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_and_sum_roundtrip() {
        let a: Multiset<u8> = [1, 1, 2, 3].into_iter().collect();
        let b: Multiset<u8> = [1, 3].into_iter().collect();
        let d = a.difference(&b).unwrap();
        assert_eq!(d.to_vec(), vec![1, 2]);
        assert_eq!(d.sum(&b), a);
        assert!(b.difference(&a).is_none());
    }

    #[test]
    fn submultisets_count() {
        let a: Multiset<u8> = [1, 1, 2].into_iter().collect();
        let subs = a.submultisets(2);
        assert_eq!(subs.len(), 2);
        assert_eq!(a.submultisets(0), vec![Multiset::new()]);
        assert!(a.submultisets(4).is_empty());
    }
}
