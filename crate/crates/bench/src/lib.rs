//! Benchmark inputs shared by the criterion targets.

use ptpn::net::Ptpn;
use ptpn::parse::parse_net;

/// `n` cost tokens created in sequence, each of which must age one unit.
pub fn staircase(n: usize) -> Ptpn {
    let mut s = String::from("state");
    for i in 0..=2 * n {
        s += &format!(" q{}", i);
    }
    s += "\nplace p cost=1\n";
    for i in 0..n {
        s += &format!("trans put{} q{} -> q{} out p[0,0]\n", i, i, i + 1);
        s += &format!("trans take{} q{} -> q{} in p[1,1]\n", i, n + i, n + i + 1);
    }
    parse_net(&s).expect("generated net parses")
}
