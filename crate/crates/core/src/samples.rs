//! Small fixed instances shared by tests, benches and the CLI docs.

use crate::net::Ptpn;
use crate::parse::{parse_config, parse_net, parse_script};
use crate::semantics::{Configuration, Run};

pub const TWO_STATE_NET: &str = "\
state q1 q2
place p1 cost=3
place p2 cost=2
place p3 cost=0
init q1
trans t1 q1 -> q2 cost=1 in p1(0,3] out p2[1,5) p3(2,inf)
trans t2 q2 -> q1 cost=3 in p3[1,4) read p2[2,2] out p1[0,inf)
";

pub const TWO_STATE_RUN: &str = "\
init q1 p1:3.1*2 p1:2.5 p2:6.5 p3:0.1*2
fire t1 in=p1:2.5 out=p2:1.3,p3:2.2
delay 7/10
fire t2 in=p3:2.9 read=p2:2.0 out=p1:9.2
delay 13/10
";

/// A marking in 1/5-form exercising both fractional sides and clamping.
pub const MIXED_CONFIG: &str = "\
state q1
tokens p1:2.1 p1:1.0 p1:2.85 p1:3.9
tokens p2:1.1 p2:9.1 p2:1.0 p2:9.85
tokens p3:8.1 p3:0.85 p3:2.9 p3:4.9 p3:9.0
";

/// One cost-1 token has to age exactly one time unit before the goal.
pub const FORCED_WAIT_NET: &str = "\
state q0 q1 q2
place p cost=1
init q0
trans put q0 -> q1 out p[0,0]
trans take q1 -> q2 in p[1,1]
";

pub fn two_state_net() -> Ptpn {
    parse_net(TWO_STATE_NET).expect("sample net parses")
}

pub fn two_state_initial() -> Configuration {
    two_state_run().configs[0].clone()
}

pub fn two_state_run() -> Run {
    let net = two_state_net();
    let s = parse_script(&net, TWO_STATE_RUN).expect("sample script parses");
    Run::replay(&net, s.init.unwrap(), s.steps.into_iter().map(|(_, st)| st).collect()).expect("sample run is valid")
}

pub fn mixed_config() -> Configuration {
    parse_config(&two_state_net(), MIXED_CONFIG).expect("sample config parses")
}

pub fn forced_wait_net() -> Ptpn {
    parse_net(FORCED_WAIT_NET).expect("sample net parses")
}
