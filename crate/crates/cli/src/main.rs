use clap::{Args, Parser, Subcommand};
use ptpn::aptpn::{abstract_config, abstract_discrete_steps, abstract_timed_steps, render_abstract};
use ptpn::net::Ptpn;
use ptpn::num::{fmt_decimal, fmt_q, parse_q, q, Q};
use ptpn::parse::{parse_config, parse_net, parse_script, print_net};
use ptpn::sdtn::{bounded_reach, parse_untimed, InhibitorNet, ReachLimits, ReachResult};
use ptpn::semantics::{render_config, step};
use ptpn::solver::{cost_optimal, cost_threshold, lowerbound_instance, OptCost, SolveLimits};
use ptpn::wqo::Verdict;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

/// Priced timed Petri nets: replay runs, inspect abstractions, solve
/// cost-threshold and cost-optimality questions.
#[derive(Parser)]
#[command(name = "ptpn", version)]
struct Cli {
    /// Emit one JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the search engines (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a run script and print every configuration with its cumulative cost.
    Simulate { net: PathBuf, script: PathBuf },
    /// Abstract a configuration and list its abstract successors.
    Abstract {
        net: PathBuf,
        config: PathBuf,
        /// Distance of every age from an integer, at most 2/5.
        #[arg(long, default_value = "1/5")]
        delta: String,
        /// Also list discrete successors.
        #[arg(long)]
        discrete: bool,
    },
    /// Decide a cost threshold or search for the optimal cost.
    Solve {
        net: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, conflicts_with = "optimal", required_unless_present = "optimal")]
        threshold: Option<u64>,
        #[arg(long)]
        optimal: bool,
        /// Largest threshold tried by --optimal.
        #[arg(long, default_value_t = 8)]
        cap: u64,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Bounded reachability on an untimed transfer or inhibitor net.
    Reach {
        net: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Print the priced net built from an inhibitor net for the zero-cost question.
    Lowerbound {
        net: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
}

#[derive(Args, Clone)]
struct LimitArgs {
    #[arg(long)]
    max_states: Option<usize>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Control states of a compiled oracle net.
    #[arg(long)]
    max_controls: Option<usize>,
    /// Basis size and iteration bound of the phase loop.
    #[arg(long)]
    max_basis: Option<usize>,
    #[arg(long)]
    max_core: Option<usize>,
}

impl LimitArgs {
    fn reach(&self, mut r: ReachLimits) -> ReachLimits {
        r.max_states = self.max_states.unwrap_or(r.max_states);
        r.max_tokens = self.max_tokens.unwrap_or(r.max_tokens);
        r.max_depth = self.max_depth.unwrap_or(r.max_depth);
        r
    }

    fn solve(&self) -> SolveLimits {
        let mut l = SolveLimits::default();
        l.oracle.reach = self.reach(ReachLimits { max_tokens: 8, max_states: 200_000, max_depth: 500 });
        l.oracle.compile.max_controls = self.max_controls.unwrap_or(l.oracle.compile.max_controls);
        if let Some(b) = self.max_basis {
            l.phase.max_basis = b;
            l.phase.max_steps = b;
        }
        l.max_core = self.max_core.unwrap_or(l.max_core);
        l
    }
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {}", path.display(), e)))
}

fn load_net(path: &PathBuf) -> Result<Ptpn, Failure> {
    parse_net(&read(path)?).map_err(|e| Failure(format!("{}:{}", path.display(), e)))
}

fn emit<T: Serialize>(json: bool, doc: &T, text: String) {
    if json {
        println!("{}", serde_json::to_string_pretty(doc).expect("reports serialize"));
    } else {
        print!("{}", text);
    }
}

/// Exact value with its decimal rendering.
fn money(x: &Q) -> String {
    format!("{} ({})", fmt_q(x), fmt_decimal(x, 6))
}

#[derive(Serialize)]
struct SimRow {
    step: usize,
    line: Option<usize>,
    config: String,
    cost: String,
    cost_decimal: String,
}

fn simulate(json: bool, net: &PathBuf, script: &PathBuf) -> Result<ExitCode, Failure> {
    let n = load_net(net)?;
    let s = parse_script(&n, &read(script)?).map_err(|e| Failure(format!("{}:{}", script.display(), e)))?;
    let mut c = match s.init {
        Some(c) => c,
        None => {
            let q = n.init.ok_or_else(|| Failure("no initial configuration: add an `init` line".into()))?;
            ptpn::semantics::Configuration::new(q, [])
        }
    };
    let mut total = Q::from_integer(0.into());
    let row = |i, line, c: &ptpn::semantics::Configuration, total: &Q| SimRow {
        step: i,
        line,
        config: render_config(&n, c),
        cost: fmt_q(total),
        cost_decimal: fmt_decimal(total, 6),
    };
    let mut rows = vec![row(0, None, &c, &total)];
    for (i, (line, st)) in s.steps.iter().enumerate() {
        let (next, cost) = step(&n, &c, st).map_err(|e| Failure(format!("step {} (line {}): {}", i + 1, line, e)))?;
        total += cost;
        c = next;
        rows.push(row(i + 1, Some(*line), &c, &total));
    }
    let mut text = String::new();
    for r in &rows {
        text += &format!("{:>3}  {}  cost {} ({})\n", r.step, r.config, r.cost, r.cost_decimal);
    }
    text += &format!("total cost {}\n", money(&total));
    emit(json, &rows, text);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AbstractReport {
    delta: String,
    cmax: u32,
    config: String,
    timed: Vec<(u8, String)>,
    discrete: Vec<(String, String)>,
}

fn abstract_cmd(json: bool, net: &PathBuf, config: &PathBuf, delta: &str, with_discrete: bool) -> Result<ExitCode, Failure> {
    let d = parse_q(delta).ok_or_else(|| Failure(format!("bad delta `{}`", delta)))?;
    if d <= q(0, 1) || d > q(2, 5) {
        return Err(Failure(format!("delta must lie in (0, 2/5], got {}", delta)));
    }
    let n = load_net(net)?;
    let c = parse_config(&n, &read(config)?).map_err(|e| Failure(format!("{}:{}", config.display(), e)))?;
    let a = abstract_config(&c, &d, n.cmax())?;
    let timed: Vec<(u8, String)> = abstract_timed_steps(&n, &a).into_iter().map(|(k, b)| (k.number(), render_abstract(&n, &b))).collect();
    let transitions = if with_discrete { 0..n.transitions.len() } else { 0..0 };
    let discrete: Vec<(String, String)> = transitions
        .flat_map(|t| abstract_discrete_steps(&n, &a, t).into_iter().map(move |b| (t, b)))
        .map(|(t, b)| (n.transitions[t].name.clone(), render_abstract(&n, &b)))
        .collect();
    let rep = AbstractReport { delta: fmt_q(&d), cmax: n.cmax(), config: render_abstract(&n, &a), timed, discrete };
    let mut text = format!("delta {}  cmax {}\n{}\n", rep.delta, rep.cmax, rep.config);
    for (k, b) in &rep.timed {
        text += &format!("  type {}  {}\n", k, b);
    }
    for (t, b) in &rep.discrete {
        text += &format!("  {:<6}  {}\n", t, b);
    }
    emit(json, &rep, text);
    Ok(ExitCode::SUCCESS)
}

fn verdict_code(v: Verdict) -> ExitCode {
    if v == Verdict::Unknown {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn limits_header(l: &SolveLimits) -> String {
    format!(
        "limits: reach states={} tokens={} depth={}  controls={}  phase basis={} steps={}  backward basis={} steps={}  core={}\n",
        l.oracle.reach.max_states,
        l.oracle.reach.max_tokens,
        l.oracle.reach.max_depth,
        l.oracle.compile.max_controls,
        l.phase.max_basis,
        l.phase.max_steps,
        l.backward.max_basis,
        l.backward.max_steps,
        l.max_core
    )
}

#[allow(clippy::too_many_arguments)]
fn solve(json: bool, net: &PathBuf, from: &str, to: &str, threshold: Option<u64>, cap: u64, la: &LimitArgs) -> Result<ExitCode, Failure> {
    let n = load_net(net)?;
    let (qi, qf) = (n.state(from)?, n.state(to)?);
    let limits = la.solve();
    let mut text = limits_header(&limits);
    if let Some(v) = threshold {
        let r = cost_threshold(&n, qi, qf, v, limits)?;
        text += &r.to_string();
        emit(json, &r, text);
        return Ok(verdict_code(r.verdict));
    }
    let r = cost_optimal(&n, qi, qf, cap, limits)?;
    text += &format!("optimal cost: {}\n", r.answer);
    text += &format!("reachability (costs removed): {}\n", r.reachability.verdict);
    for t in &r.thresholds {
        text += &format!("  v={}: {}\n", t.v, t.verdict);
    }
    if matches!(r.answer, OptCost::Unknown { .. }) {
        text += &format!("search stopped at the cap {}\n", cap);
    }
    emit(json, &r, text);
    Ok(if matches!(r.answer, OptCost::Unknown { .. }) { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

#[derive(Serialize)]
struct ReachOut {
    limits: ReachLimits,
    verdict: &'static str,
    witness: Option<Vec<String>>,
    limit_hit: Option<String>,
    explored: usize,
}

fn reach(json: bool, net: &PathBuf, la: &LimitArgs) -> Result<ExitCode, Failure> {
    let f = parse_untimed(&read(net)?).map_err(|e| Failure(format!("{}:{}", net.display(), e)))?;
    let limits = la.reach(ReachLimits::default());
    let rep = match f.inhibitor {
        Some((p, t)) => bounded_reach(&InhibitorNet::new(f.net.clone(), p, t)?, &f.query, limits),
        None => bounded_reach(&f.net, &f.query, limits),
    };
    let (verdict, witness, limit_hit, code) = match &rep.result {
        ReachResult::Yes(w) => ("YES", Some(w.names(&f.net)), None, ExitCode::SUCCESS),
        ReachResult::No => ("NO", None, None, ExitCode::SUCCESS),
        ReachResult::Unknown(h) => ("UNKNOWN", None, Some(format!("{:?}", h)), ExitCode::from(2)),
    };
    let out = ReachOut { limits, verdict, witness, limit_hit, explored: rep.explored };
    let mut text = format!(
        "limits: states={} tokens={} depth={}\n{} ({} configurations explored)\n",
        limits.max_states, limits.max_tokens, limits.max_depth, verdict, rep.explored
    );
    if let Some(w) = &out.witness {
        text += &format!("witness: {}\n", w.join(" "));
    }
    if let Some(h) = &out.limit_hit {
        text += &format!("limit hit: {}\n", h);
    }
    emit(json, &out, text);
    Ok(code)
}

fn lowerbound(json: bool, net: &PathBuf, from: &str, to: &str) -> Result<ExitCode, Failure> {
    let f = parse_untimed(&read(net)?).map_err(|e| Failure(format!("{}:{}", net.display(), e)))?;
    let (p, t) = f.inhibitor.ok_or_else(|| Failure("the net has no `inhibit` line".into()))?;
    let n = InhibitorNet::new(f.net, p, t)?;
    let find = |s: &str| n.net.states.iter().position(|x| x == s).ok_or_else(|| Failure(format!("unknown state `{}`", s)));
    let lb = lowerbound_instance(&n, find(from)?, find(to)?)?;
    let text = format!("# from {} to {}\n{}", lb.net.states[lb.q_init], lb.net.states[lb.q_fin], print_net(&lb.net));
    #[derive(Serialize)]
    struct Out<'a> {
        from: &'a str,
        to: &'a str,
        net: String,
    }
    emit(json, &Out { from: &lb.net.states[lb.q_init], to: &lb.net.states[lb.q_fin], net: print_net(&lb.net) }, text);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for UNKNOWN.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global().expect("thread pool starts once");
    }
    let json = cli.json;
    let res = match &cli.cmd {
        Cmd::Simulate { net, script } => simulate(json, net, script),
        Cmd::Abstract { net, config, delta, discrete } => abstract_cmd(json, net, config, delta, *discrete),
        Cmd::Solve { net, from, to, threshold, cap, limits, .. } => solve(json, net, from, to, *threshold, *cap, limits),
        Cmd::Reach { net, limits } => reach(json, net, limits),
        Cmd::Lowerbound { net, from, to } => lowerbound(json, net, from, to),
    };
    match res {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
    }
}
