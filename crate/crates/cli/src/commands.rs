//! Command-line interface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sls_core::acpc::{invariant_body, PiOptions};
use sls_core::automata::{load_dra, Dra};
use sls_core::formats::{parse_policy, write_policy, write_traces, write_values};
use sls_core::game::{load_game, simulate, PolicySpec, SimulationConfig, StochasticGame};
use sls_core::ltl::{parse_ltl, Ltl};
use sls_core::product::{build_product, ProductGame};
use sls_core::reachability::{Mode as ViMode, ViOptions};

use crate::config::GridConfig;
use crate::pipeline::{
    baseline_cycle, baseline_max_prob, marginal_product, max_prob, min_violation, wilson_interval, worst_case,
    MaxProb,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sls", version, about = "Secure control synthesis for stochastic games under LTL constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the input files parse and are consistent.
    Validate(ValidateArgs),
    /// Maximize the worst-case probability of satisfying the automaton.
    SynthMaxProb(MaxProbArgs),
    /// Minimize the worst-case invariant violation cost per cycle.
    SynthMinViolation(MinViolationArgs),
    /// Compare the secure policy with an adversary-oblivious baseline.
    Compare(CompareArgs),
    /// Abstract the UAV grid world into a game file.
    GenGridworld(GridArgs),
    /// Sample trajectories under a synthesized policy.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub dra: Option<PathBuf>,
    /// Product-level policy file; requires `--dra`.
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub dra: PathBuf,
    /// Value iteration stops when no state changes by more than this.
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    /// Use the relaxed update with this ε instead of the strict one.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaxProbArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct MinViolationArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Invariant `G body` with a propositional body.
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// TOML grid description.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long = "samples-K")]
    pub samples_k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub dra: PathBuf,
    /// Product-level controller policy.
    #[arg(long)]
    pub policy: PathBuf,
    /// Product-level adversary policy; defaults to the worst case.
    #[arg(long)]
    pub adversary: Option<PathBuf>,
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Start state name; defaults to the game's initial state.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of trajectories written out.
    #[arg(long, default_value_t = 10)]
    pub keep: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Input problems detected by the frontend itself.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

/// Exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<sls_core::Error>() {
            return if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL };
        }
        if cause.is::<Invalid>() || cause.is::<std::io::Error>() || cause.is::<toml::de::Error>() {
            return EXIT_VALIDATION;
        }
    }
    EXIT_NUMERICAL
}

fn configure_threads() {
    if let Some(n) = std::env::var("SLS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Validate(a) => cmd_validate(a),
        Command::SynthMaxProb(a) => cmd_synth_max_prob(a),
        Command::SynthMinViolation(a) => cmd_synth_min_violation(a),
        Command::Compare(a) => cmd_compare(a),
        Command::GenGridworld(a) => cmd_gen_gridworld(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn read_game(path: &Path) -> Result<StochasticGame> {
    load_game(path).map_err(sls_core::Error::from).context(format!("reading game {}", path.display()))
}

fn read_dra(path: &Path) -> Result<Dra> {
    load_dra(path).map_err(sls_core::Error::from).context(format!("reading automaton {}", path.display()))
}

fn read_psi(text: &str) -> Result<Ltl> {
    let f = parse_ltl(text).map_err(sls_core::Error::from).context("parsing --psi")?;
    invariant_body(&f).map_err(sls_core::Error::from)?;
    Ok(f)
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!(invalid(format!("--{name} must be positive, got {x}")));
    }
    Ok(())
}

fn positive_count(name: &str, x: usize) -> Result<()> {
    if x == 0 {
        bail!(invalid(format!("--{name} must be positive")));
    }
    Ok(())
}

fn vi_options(a: &SolverArgs) -> Result<ViOptions> {
    positive("delta", a.delta)?;
    let mode = match a.epsilon {
        Some(e) => {
            positive("epsilon", e)?;
            ViMode::Epsilon(e)
        }
        None => ViMode::Strict,
    };
    Ok(ViOptions {
        delta: a.delta,
        mode,
        ..ViOptions::default()
    })
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let g = read_game(&a.game)?;
    println!(
        "game: {} states, {} transitions, alphabet {{{}}}",
        g.num_states(),
        g.num_transitions(),
        g.alphabet().names().join(",")
    );
    let Some(dra_path) = &a.dra else {
        if a.policy.is_some() {
            bail!(invalid("--policy needs --dra"));
        }
        return Ok(());
    };
    let d = read_dra(dra_path)?;
    println!("automaton: {} states, {} pairs", d.num_states(), d.pairs().len());
    let p = build_product(&g, &d).map_err(sls_core::Error::from)?;
    println!(
        "product: {} states, {} reachable",
        p.num_states(),
        p.reachable.iter().filter(|&&r| r).count()
    );
    if let Some(path) = &a.policy {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        parse_policy(&p.game, &text).map_err(sls_core::Error::from)?;
        println!("policy: ok");
    }
    Ok(())
}

fn gamec_report(mp: &MaxProb) -> String {
    let mut out = String::new();
    let names = mp.product.game.state_names();
    let won = mp.winning.states.iter().filter(|&&w| w).count();
    let _ = writeln!(out, "winning region {won} states");
    for (i, c) in mp.gamecs.components.iter().enumerate() {
        let _ = writeln!(out, "component {i} pair {} states {}", c.pair + 1, c.states.len());
        for (s, en) in c.states.iter().zip(&c.enabled) {
            let acts: Vec<&str> = en.iter().map(|&u| mp.product.game.ctrl_actions(*s)[u].as_str()).collect();
            let _ = writeln!(out, "  {} {}", names[*s], acts.join(","));
        }
    }
    out
}

fn start_values(g: &StochasticGame, mp: &MaxProb) -> Result<String> {
    let v: Vec<f64> = (0..g.num_states()).map(|s| mp.start_value(s)).collect();
    Ok(write_values(g.state_names(), &v).map_err(sls_core::Error::from)?)
}

fn warn_if_empty(mp: &MaxProb) {
    if !mp.winning.states.iter().any(|&w| w) {
        eprintln!("warning: formula unsatisfiable under worst-case adversary");
    }
}

fn write_max_prob(dir: &Path, g: &StochasticGame, mp: &MaxProb) -> Result<()> {
    let values = write_values(mp.reach.game.state_names(), &mp.values.v).map_err(sls_core::Error::from)?;
    write_out(dir, "values.csv", &values)?;
    write_out(dir, "start_values.csv", &start_values(g, mp)?)?;
    write_out(dir, "gamecs.txt", &gamec_report(mp))?;
    Ok(())
}

fn cmd_synth_max_prob(a: &MaxProbArgs) -> Result<()> {
    let s = &a.solver;
    let vi = vi_options(s)?;
    let g = read_game(&s.game)?;
    let d = read_dra(&s.dra)?;
    let mp = max_prob(&g, &d, &vi)?;
    warn_if_empty(&mp);
    write_max_prob(&s.out, &g, &mp)?;
    write_out(&s.out, "policy.txt", &write_policy(&mp.product.game, &mp.policy, None))?;
    println!(
        "value at initial state {}: {}",
        g.state_names()[g.initial()],
        mp.start_value(g.initial())
    );
    Ok(())
}

fn cmd_synth_min_violation(a: &MinViolationArgs) -> Result<()> {
    let s = &a.solver;
    let vi = vi_options(s)?;
    positive("alpha", a.alpha)?;
    let psi = read_psi(&a.psi)?;
    let g = read_game(&s.game)?;
    let d = read_dra(&s.dra)?;
    let mv = min_violation(&g, &d, &psi, a.alpha, &vi, &PiOptions::default())?;
    warn_if_empty(&mv.max_prob);
    write_max_prob(&s.out, &g, &mv.max_prob)?;
    let p = &mv.max_prob.product;
    write_out(&s.out, "policy.txt", &write_policy(&p.game, &mv.policy, Some(&mv.modes)))?;
    let traces: Vec<(usize, Vec<Vec<f64>>)> = mv
        .solutions
        .iter()
        .map(|c| (c.component, c.result.trace.clone()))
        .collect();
    write_out(&s.out, "trace.csv", &write_traces(&traces).map_err(sls_core::Error::from)?)?;

    let mut gb = String::from("component,state,gain,bias,aux\n");
    let mut summary = String::new();
    for c in &mv.solutions {
        let r = &c.result;
        for (k, &st) in c.states.iter().enumerate() {
            let _ = writeln!(
                gb,
                "{},{},{},{},{}",
                c.component,
                p.game.state_names()[st],
                r.gain_bias.j[k],
                r.gain_bias.h[k],
                r.gain_bias.v[k]
            );
        }
        let _ = writeln!(
            summary,
            "component {} gain {} rounds {} residual {} repaired {}",
            c.component,
            r.gain(),
            r.rounds,
            r.gain_bias.max_residual(),
            r.repairs
        );
    }
    for (c, e) in &mv.failures {
        let _ = writeln!(summary, "component {c} failed: {e}");
    }
    write_out(&s.out, "gain_bias.csv", &gb)?;
    write_out(&s.out, "summary.txt", &summary)?;
    print!("{summary}");
    if !mv.failures.is_empty() && mv.solutions.is_empty() {
        bail!("policy iteration failed on every component");
    }
    Ok(())
}

fn improvement(secure: f64, baseline: f64) -> String {
    if baseline > 0.0 {
        format!("{}", 100.0 * (secure - baseline) / baseline)
    } else if secure > 0.0 {
        "inf".into()
    } else {
        "0".into()
    }
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let s = &a.solver;
    let vi = vi_options(s)?;
    positive_count("runs", a.runs)?;
    positive_count("horizon", a.horizon)?;
    let psi = a.psi.as_deref().map(read_psi).transpose()?;
    if psi.is_some() {
        positive("alpha", a.alpha)?;
    }
    let g = read_game(&s.game)?;
    let d = read_dra(&s.dra)?;

    let secure = max_prob(&g, &d, &vi)?;
    warn_if_empty(&secure);
    let baseline = baseline_max_prob(&g, &d, &vi)?;
    let p = &secure.product;
    let (tau_s, sat_s) = worst_case(p, &secure.policy)?;
    let (tau_b, sat_b) = worst_case(p, &baseline.policy)?;

    let mut table = String::from(
        "state,secure,baseline,improvement_pct,secure_sim,secure_lo,secure_hi,baseline_sim,baseline_lo,baseline_hi\n",
    );
    let mut total = (0.0, 0.0);
    for st in 0..g.num_states() {
        let ps = p.start_of(st);
        let sim = |mu, tau, seed: u64| {
            let cfg = SimulationConfig {
                runs: a.runs,
                horizon: a.horizon,
                seed,
                start: Some(st),
                ..SimulationConfig::default()
            };
            simulate(&g, PolicySpec::Tracked(mu), PolicySpec::Tracked(tau), &d, &cfg).successes
        };
        let ks = sim(&secure.policy, &tau_s, a.seed);
        let kb = sim(&baseline.policy, &tau_b, a.seed);
        let (sl, sh) = wilson_interval(ks, a.runs);
        let (bl, bh) = wilson_interval(kb, a.runs);
        let n = a.runs as f64;
        total.0 += sat_s[ps];
        total.1 += sat_b[ps];
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{},{}",
            g.state_names()[st],
            sat_s[ps],
            sat_b[ps],
            improvement(sat_s[ps], sat_b[ps]),
            ks as f64 / n,
            sl,
            sh,
            kb as f64 / n,
            bl,
            bh
        );
    }
    write_out(&s.out, "comparison.csv", &table)?;
    println!(
        "mean worst-case satisfaction: secure {} baseline {}",
        total.0 / g.num_states() as f64,
        total.1 / g.num_states() as f64
    );

    if let Some(psi) = psi {
        let pi = PiOptions::default();
        let mv = min_violation(&g, &d, &psi, a.alpha, &vi, &pi)?;
        let marginal = marginal_product(&g, &d)?;
        let mut costs = String::from("component,secure_gain,baseline_gain,improvement_pct\n");
        for c in &mv.solutions {
            let comp = &mv.max_prob.gamecs.components[c.component];
            let base = baseline_cycle(&mv.max_prob.product, &marginal, comp, &mv.cost, &pi)
                .map(|(_, gb)| gb.j.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                .unwrap_or(f64::INFINITY);
            let sec = c.result.gain();
            let imp = if base.is_finite() && base > 0.0 {
                format!("{}", 100.0 * (base - sec) / base)
            } else if base.is_infinite() {
                "inf".into()
            } else {
                "0".into()
            };
            let _ = writeln!(costs, "{},{},{},{}", c.component, sec, base, imp);
            println!("component {}: secure gain {sec} baseline gain {base}", c.component);
        }
        write_out(&s.out, "cost_comparison.csv", &costs)?;
    }
    Ok(())
}

fn cmd_gen_gridworld(a: &GridArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            GridConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => GridConfig::default(),
    };
    if let Some(n) = a.grid_n {
        positive_count("grid-n", n)?;
    }
    if let Some(k) = a.samples_k {
        positive_count("samples-K", k)?;
    }
    let (g, _) = cfg
        .build(a.grid_n, a.samples_k, a.seed)
        .map_err(sls_core::Error::from)?;
    write_out(&a.out, "game.sg", &g.to_text())?;
    println!("game: {} states, {} transitions", g.num_states(), g.num_transitions());
    Ok(())
}

fn product_policy(p: &ProductGame, path: &Path) -> Result<sls_core::game::MixedPolicy> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_policy(&p.game, &text).map_err(sls_core::Error::from)?.policy)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    positive_count("runs", a.runs)?;
    positive_count("horizon", a.horizon)?;
    let g = read_game(&a.game)?;
    let d = read_dra(&a.dra)?;
    let p = build_product(&g, &d).map_err(sls_core::Error::from)?;
    let mu = product_policy(&p, &a.policy)?;
    let tau = match &a.adversary {
        Some(path) => product_policy(&p, path)?,
        None => worst_case(&p, &mu)?.0,
    };
    let start = match &a.start {
        Some(name) => Some(
            g.state_index(name)
                .ok_or_else(|| invalid(format!("unknown start state {name:?}")))?,
        ),
        None => None,
    };
    let cost = match &a.psi {
        Some(text) => {
            positive("alpha", a.alpha)?;
            let psi = read_psi(text)?;
            Some(sls_core::acpc::assign_costs(&g, &psi, a.alpha).map_err(sls_core::Error::from)?.g)
        }
        None => None,
    };
    let cfg = SimulationConfig {
        runs: a.runs,
        horizon: a.horizon,
        seed: a.seed,
        start,
        cost: cost.as_deref(),
        keep_trajectories: a.keep,
        ..SimulationConfig::default()
    };
    let stats = simulate(&g, PolicySpec::Tracked(&mu), PolicySpec::Tracked(&tau), &d, &cfg);
    let (lo, hi) = wilson_interval(stats.successes, stats.runs);
    let mut out = String::new();
    let _ = writeln!(out, "runs {}", stats.runs);
    let _ = writeln!(out, "horizon {}", stats.horizon);
    let _ = writeln!(out, "successes {}", stats.successes);
    let _ = writeln!(out, "satisfaction {} [{lo}, {hi}]", stats.satisfaction_estimate);
    if cost.is_some() {
        let (m, v) = stats.violation_cost_per_cycle;
        let _ = writeln!(out, "cost_per_cycle_mean {m}");
        let _ = writeln!(out, "cost_per_cycle_var {v}");
        let _ = writeln!(out, "cost_per_cycle_pooled {}", stats.pooled_cost_per_cycle);
    }
    write_out(&a.out, "stats.txt", &out)?;
    let mut traj = String::from("run,step,state\n");
    for (r, t) in stats.trajectories.iter().enumerate() {
        for (k, &st) in t.iter().enumerate() {
            let _ = writeln!(traj, "{r},{k},{}", g.state_names()[st]);
        }
    }
    write_out(&a.out, "trajectories.csv", &traj)?;
    print!("{out}");
    Ok(())
}

