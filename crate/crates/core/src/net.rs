//! Net syntax: intervals, arcs, transitions and the priced timed Petri net itself.

use crate::num::Q;
use num_bigint::BigInt;
use serde::Serialize;
use std::fmt;

/// Interval with natural bounds; `hi = None` is unbounded (always open).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Interval {
    pub lo: u32,
    pub hi: Option<u32>,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: u32, hi: u32) -> Self {
        Interval { lo, hi: Some(hi), lo_open: false, hi_open: false }
    }

    pub fn new(lo: u32, hi: Option<u32>, lo_open: bool, hi_open: bool) -> Self {
        Interval { lo, hi, lo_open, hi_open: hi_open || hi.is_none() }
    }

    /// `[lo, inf)`
    pub fn from(lo: u32) -> Self {
        Interval::new(lo, None, false, true)
    }

    pub fn point(k: u32) -> Self {
        Self::closed(k, k)
    }

    pub fn is_empty(&self) -> bool {
        match self.hi {
            None => false,
            Some(h) => h < self.lo || (h == self.lo && (self.lo_open || self.hi_open)),
        }
    }

    pub fn contains(&self, age: &Q) -> bool {
        let lo = Q::from_integer(BigInt::from(self.lo));
        let above = if self.lo_open { *age > lo } else { *age >= lo };
        let below = match self.hi {
            None => true,
            Some(h) => {
                let h = Q::from_integer(BigInt::from(h));
                if self.hi_open {
                    *age < h
                } else {
                    *age <= h
                }
            }
        };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_open { '(' } else { '[' };
        match self.hi {
            None => write!(f, "{}{},inf)", l, self.lo),
            Some(h) => write!(f, "{}{},{}{}", l, self.lo, h, if self.hi_open { ')' } else { ']' }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Arc {
    pub place: usize,
    pub iv: Interval,
}

impl Arc {
    pub fn new(place: usize, iv: Interval) -> Self {
        Arc { place, iv }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub inputs: Vec<Arc>,
    pub reads: Vec<Arc>,
    pub outputs: Vec<Arc>,
    pub cost: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Place {
    pub name: String,
    pub cost: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Ptpn {
    pub states: Vec<String>,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    /// Optional default initial state from an `init` declaration.
    pub init: Option<usize>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NetError {
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("transition `{0}` references a missing state or place")]
    Dangling(String),
    #[error("interval {0} on transition `{1}` is empty")]
    EmptyInterval(String, String),
}

impl Ptpn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, name: &str) -> Result<usize, NetError> {
        if self.states.iter().any(|s| s == name) {
            return Err(NetError::Duplicate(name.to_string()));
        }
        self.states.push(name.to_string());
        Ok(self.states.len() - 1)
    }

    pub fn add_place(&mut self, name: &str, cost: u64) -> Result<usize, NetError> {
        if self.places.iter().any(|p| p.name == name) {
            return Err(NetError::Duplicate(name.to_string()));
        }
        self.places.push(Place { name: name.to_string(), cost });
        Ok(self.places.len() - 1)
    }

    pub fn add_transition(&mut self, t: Transition) -> Result<usize, NetError> {
        if self.transitions.iter().any(|u| u.name == t.name) {
            return Err(NetError::Duplicate(t.name));
        }
        let n_s = self.states.len();
        let n_p = self.places.len();
        let arcs = t.inputs.iter().chain(&t.reads).chain(&t.outputs);
        if t.src >= n_s || t.dst >= n_s || arcs.clone().any(|a| a.place >= n_p) {
            return Err(NetError::Dangling(t.name));
        }
        if let Some(a) = arcs.clone().find(|a| a.iv.is_empty()) {
            return Err(NetError::EmptyInterval(a.iv.to_string(), t.name));
        }
        self.transitions.push(t);
        Ok(self.transitions.len() - 1)
    }

    pub fn state(&self, name: &str) -> Result<usize, NetError> {
        self.states.iter().position(|s| s == name).ok_or_else(|| NetError::UnknownState(name.to_string()))
    }

    pub fn place(&self, name: &str) -> Result<usize, NetError> {
        self.places.iter().position(|p| p.name == name).ok_or_else(|| NetError::UnknownPlace(name.to_string()))
    }

    pub fn transition(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    /// Largest finite bound on any arc.
    pub fn cmax(&self) -> u32 {
        self.transitions
            .iter()
            .flat_map(|t| t.inputs.iter().chain(&t.reads).chain(&t.outputs))
            .map(|a| a.iv.hi.unwrap_or(a.iv.lo).max(a.iv.lo))
            .max()
            .unwrap_or(0)
    }

    pub fn place_cost(&self, p: usize) -> u64 {
        self.places[p].cost
    }

    pub fn is_cost_place(&self, p: usize) -> bool {
        self.places[p].cost > 0
    }

    /// Same net with every place and transition cost set to zero.
    pub fn without_costs(&self) -> Ptpn {
        let mut n = self.clone();
        for p in &mut n.places {
            p.cost = 0;
        }
        for t in &mut n.transitions {
            t.cost = 0;
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};

    #[test]
    fn interval_membership() {
        let iv = Interval::new(0, Some(3), true, false);
        assert!(iv.contains(&q(5, 2)));
        assert!(iv.contains(&qi(3)));
        assert!(!iv.contains(&qi(0)));
        assert!(Interval::point(0).contains(&qi(0)));
        assert!(!Interval::new(0, Some(3), true, true).contains(&qi(3)));
        assert!(Interval::from(2).contains(&qi(1000)));
    }

    #[test]
    fn empty_intervals() {
        assert!(Interval::new(2, Some(2), true, false).is_empty());
        assert!(Interval::new(3, Some(2), false, false).is_empty());
        assert!(!Interval::point(2).is_empty());
    }

    #[test]
    fn display_roundtrip_shape() {
        assert_eq!(Interval::new(1, Some(5), false, true).to_string(), "[1,5)");
        assert_eq!(Interval::new(2, None, true, true).to_string(), "(2,inf)");
    }
}
