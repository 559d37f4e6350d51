//! Abstract configurations with a remaining cost budget, budget-deducting
//! steps, and the orders that add free-place, cost-place or any tokens.

use crate::aptpn::{
    abstract_discrete_steps, abstract_timed_steps, render_abstract, unit_storage_cost, AMarking, AbstractConfig, AbstractStep, DelayKind,
};
use crate::net::Ptpn;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BudgetedConfig {
    pub budget: u64,
    pub conf: AbstractConfig,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("budget {0} exceeds the threshold {1}")]
pub struct BudgetError(pub u64, pub u64);

pub fn to_budgeted(a: &AbstractConfig, y: u64, v: u64) -> Result<BudgetedConfig, BudgetError> {
    if y > v {
        return Err(BudgetError(y, v));
    }
    Ok(BudgetedConfig { budget: y, conf: a.clone() })
}

impl BudgetedConfig {
    pub fn new(conf: AbstractConfig, budget: u64) -> Self {
        BudgetedConfig { budget, conf }
    }

    pub fn render(&self, net: &Ptpn) -> String {
        format!("{} y={}", render_abstract(net, &self.conf), self.budget)
    }
}

/// Discrete steps and short delays, each paid from the budget.
pub fn monotone_steps(net: &Ptpn, b: &BudgetedConfig) -> Vec<(AbstractStep, BudgetedConfig)> {
    let mut out = vec![];
    for (t, tr) in net.transitions.iter().enumerate() {
        if tr.cost > b.budget {
            continue;
        }
        for c in abstract_discrete_steps(net, &b.conf, t) {
            out.push((AbstractStep::Discrete(t), BudgetedConfig::new(c, b.budget - tr.cost)));
        }
    }
    for (k, c) in abstract_timed_steps(net, &b.conf) {
        if matches!(k, DelayKind::Type1 | DelayKind::Type2) {
            out.push((AbstractStep::Delay(k), BudgetedConfig::new(c, b.budget)));
        }
    }
    out
}

/// Delays just below one time unit, paying one unit of storage cost.
pub fn long_delay_steps(net: &Ptpn, b: &BudgetedConfig) -> Vec<(AbstractStep, BudgetedConfig)> {
    let z = unit_storage_cost(net, &b.conf);
    if z > b.budget {
        return vec![];
    }
    abstract_timed_steps(net, &b.conf)
        .into_iter()
        .filter(|(k, _)| matches!(k, DelayKind::Type3 | DelayKind::Type4))
        .map(|(k, c)| (AbstractStep::Delay(k), BudgetedConfig::new(c, b.budget - z)))
        .collect()
}

pub fn budgeted_steps(net: &Ptpn, b: &BudgetedConfig) -> Vec<(AbstractStep, BudgetedConfig)> {
    let mut v = monotone_steps(net, b);
    v.extend(long_delay_steps(net, b));
    v
}

/// Which tokens an order may add.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    /// Tokens on zero-cost places only.
    Free,
    /// Tokens on places with positive cost only.
    Cost,
    /// Any tokens.
    Any,
}

impl Order {
    fn allows(self, net: &Ptpn, m: &AMarking) -> bool {
        match self {
            Order::Any => true,
            Order::Free => m.iter().all(|t| !net.is_cost_place(t.place)),
            Order::Cost => m.iter().all(|t| net.is_cost_place(t.place)),
        }
    }

    fn extends(self, net: &Ptpn, small: &AMarking, big: &AMarking) -> bool {
        big.difference(small).is_some_and(|d| self.allows(net, &d))
    }
}

/// Embeds `small` into `big` as a subsequence; matched positions may only grow
/// by allowed tokens and skipped positions may only hold allowed tokens.
fn embeds(net: &Ptpn, ord: Order, small: &[AMarking], big: &[AMarking]) -> bool {
    let (m, n) = (small.len(), big.len());
    // ok[i][j]: small[i..] embeds into big[j..].
    let mut ok = vec![vec![false; n + 1]; m + 1];
    ok[m][n] = true;
    for j in (0..n).rev() {
        ok[m][j] = ok[m][j + 1] && ord.allows(net, &big[j]);
    }
    for i in (0..m).rev() {
        for j in (0..n).rev() {
            let take = ok[i + 1][j + 1] && ord.extends(net, &small[i], &big[j]);
            let skip = ok[i][j + 1] && ord.allows(net, &big[j]);
            ok[i][j] = take || skip;
        }
    }
    ok[0][0]
}

pub fn leq(net: &Ptpn, ord: Order, b: &BudgetedConfig, c: &BudgetedConfig) -> bool {
    b.budget == c.budget
        && b.conf.state == c.conf.state
        && ord.extends(net, &b.conf.center, &c.conf.center)
        && embeds(net, ord, &b.conf.high, &c.conf.high)
        && embeds(net, ord, &b.conf.low, &c.conf.low)
}

pub fn leq_f(net: &Ptpn, b: &BudgetedConfig, c: &BudgetedConfig) -> bool {
    leq(net, Order::Free, b, c)
}

pub fn leq_c(net: &Ptpn, b: &BudgetedConfig, c: &BudgetedConfig) -> bool {
    leq(net, Order::Cost, b, c)
}

pub fn leq_fc(net: &Ptpn, b: &BudgetedConfig, c: &BudgetedConfig) -> bool {
    leq(net, Order::Any, b, c)
}

/// Order-minimal elements of `s`, first representative kept among equals.
pub fn minimal_basis(net: &Ptpn, s: &[BudgetedConfig], ord: Order) -> Vec<BudgetedConfig> {
    crate::wqo::minimal_elements(s, |a, b| leq(net, ord, a, b))
}

impl fmt::Display for BudgetedConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} y={}", self.conf, self.budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aptpn::AbstractToken;
    use crate::samples::two_state_net;

    fn am(toks: &[(usize, u32)]) -> AMarking {
        toks.iter().map(|&(p, l)| AbstractToken::new(p, l)).collect()
    }

    fn c3() -> AbstractConfig {
        AbstractConfig::new(
            0,
            vec![am(&[(0, 2), (1, 6), (2, 0)])],
            am(&[(0, 4), (2, 3), (2, 5)]),
            vec![am(&[(0, 1), (1, 1), (2, 6)]), am(&[(0, 2), (1, 1), (1, 6), (2, 6)])],
        )
    }

    #[test]
    fn budget_attach() {
        let b = to_budgeted(&c3(), 5, 5).unwrap();
        assert_eq!(b.conf, c3());
        assert_eq!(to_budgeted(&c3(), 6, 5), Err(BudgetError(6, 5)));
    }

    #[test]
    fn long_delay_pays_twenty() {
        let net = two_state_net();
        let s = long_delay_steps(&net, &BudgetedConfig::new(c3(), 25));
        assert!(!s.is_empty());
        assert!(s.iter().all(|(_, c)| c.budget == 5));
        assert!(long_delay_steps(&net, &BudgetedConfig::new(c3(), 19)).is_empty());
    }

    #[test]
    fn short_delay_is_free() {
        let net = two_state_net();
        let b = BudgetedConfig::new(c3(), 3);
        for (k, c) in monotone_steps(&net, &b) {
            if let AbstractStep::Delay(_) = k {
                assert_eq!(c.budget, 3);
            }
        }
    }

    #[test]
    fn discrete_needs_budget() {
        let net = two_state_net();
        // t1 costs 1 and needs a p1 token at level < 3 with a fraction.
        let a = AbstractConfig::new(0, vec![], AMarking::new(), vec![am(&[(0, 1)])]);
        assert!(monotone_steps(&net, &BudgetedConfig::new(a.clone(), 0)).iter().all(|(s, _)| !matches!(s, AbstractStep::Discrete(_))));
        assert!(monotone_steps(&net, &BudgetedConfig::new(a, 1))
            .iter()
            .any(|(s, c)| matches!(s, AbstractStep::Discrete(0)) && c.budget == 0));
    }

    #[test]
    fn order_examples() {
        let net = two_state_net();
        let b = BudgetedConfig::new(c3(), 4);
        assert!(leq_f(&net, &b, &b) && leq_c(&net, &b, &b) && leq_fc(&net, &b, &b));
        // p3 is free.
        let mut g = b.clone();
        g.conf.low.push(am(&[(2, 3)]));
        assert!(leq_f(&net, &b, &g));
        assert!(!leq_c(&net, &b, &g));
        let mut h = b.clone();
        h.conf.center.insert(AbstractToken::new(0, 0));
        assert!(!leq_f(&net, &b, &h));
        assert!(leq_c(&net, &b, &h));
        assert!(leq_fc(&net, &b, &h));
        let mut other_budget = b.clone();
        other_budget.budget = 5;
        assert!(!leq_fc(&net, &b, &other_budget));
    }

    #[test]
    fn not_monotone_for_long_delays() {
        let net = two_state_net();
        let b = BudgetedConfig::new(c3(), 20);
        let mut g = b.clone();
        g.conf.center.insert(AbstractToken::new(0, 0));
        assert!(leq_fc(&net, &b, &g));
        assert!(!long_delay_steps(&net, &b).is_empty());
        assert!(long_delay_steps(&net, &g).is_empty());
    }

    #[test]
    fn basis_examples() {
        let net = two_state_net();
        let b = BudgetedConfig::new(c3(), 4);
        let mut g = b.clone();
        g.conf.low.push(am(&[(2, 3)]));
        assert_eq!(minimal_basis(&net, &[g.clone(), b.clone()], Order::Free), vec![b.clone()]);
        let mut h = b.clone();
        h.budget = 3;
        assert_eq!(minimal_basis(&net, &[b.clone(), h.clone()], Order::Any), vec![b, h]);
    }
}
