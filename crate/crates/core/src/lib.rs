//! Priced timed Petri nets with exact rational time.
//!
//! The crate covers the concrete semantics, the fractional-part abstraction
//! with budgets, well-quasi-order engines, transfer nets, the automaton
//! encoding used by the reachability oracles, and the cost-threshold solver.

pub mod acptpn;
pub mod aptpn;
pub mod automata;
pub mod deltaform;
pub mod encoder;
pub mod lp;
pub mod multiset;
pub mod net;
pub mod num;
pub mod parse;
pub mod pta;
pub mod samples;
pub mod sdtn;
pub mod semantics;
pub mod solver;
pub mod wqo;

pub use multiset::Multiset;
pub use net::{Arc, Interval, Ptpn, Transition};
pub use num::Q;
pub use semantics::{Configuration, Marking, Run, Step, Token, Witness};
