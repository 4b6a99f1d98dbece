//! The `dreidel` command line.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::chain::game_chain::{absorption_stats, build_game_chain, exact_mean_duration_rational, game_chain_csv, game_start, EXACT_RATIONAL_LIMIT};
use crate::chain::identities::{check_identities, identity_report};
use crate::chain::{bound_tables, build_mod_chain, build_pot_chain, diagnostics, hit_prob, Flavor, HitQuery, ModChainSpec};
use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::gamelet;
use crate::mc_lab::{self, ScalingSource};
use crate::report::{csv_err, finish_csv, fmt_num, BoundEntry, BoundReport};
use crate::rng::SpinRng;
use crate::variants;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Debug, Parser)]
#[command(name = "dreidel", version, about = "Simulation and exact analysis of dreidel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Monte Carlo mean game duration for each n.
    Simulate(Common),
    /// Epoch-length tails and payoff moments of free-running slowdel.
    Epochs(Common),
    /// Wald identities on metaslowdel stopping records.
    Wald(Common),
    /// Exact mean duration for two players from the absorbing chain.
    Exact(Common),
    /// Stationary distribution of the pot-size chain.
    PotChain(Common),
    /// One hitting probability between pot-2 states of the mod chain.
    Hitprob(Common),
    /// Hitting-bound tables, the duration bound and chain identities.
    Bounds(Common),
    /// Gamelet signature counts, Minkowski bounds and concatenations.
    Gamelets(Common),
    /// Build and validate one long metaslowdel game.
    Construct(Common),
    /// Log-log scaling of mean duration in n.
    Scaling(Common),
    /// Every check in one markdown report.
    Report(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Simulate(c) => ("simulate", c),
            Command::Epochs(c) => ("epochs", c),
            Command::Wald(c) => ("wald", c),
            Command::Exact(c) => ("exact", c),
            Command::PotChain(c) => ("pot-chain", c),
            Command::Hitprob(c) => ("hitprob", c),
            Command::Bounds(c) => ("bounds", c),
            Command::Gamelets(c) => ("gamelets", c),
            Command::Construct(c) => ("construct", c),
            Command::Scaling(c) => ("scaling", c),
            Command::Report(c) => ("report", c),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Number of players.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Tokens per player: a value, a list `5,10,20`, or a range `2..8`.
    #[arg(long, default_value = "8", value_parser = parse_n_list)]
    pub n: NList,
    /// Trials (games, epochs or stopping records, depending on the command).
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output format; `report` defaults to md, everything else to csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Mod-chain flavor: game or formal.
    #[arg(long, default_value = "game")]
    pub flavor: String,
    /// Pot cap for the chains (mod chain default 8n, pot chain default 200).
    #[arg(long)]
    pub pmax: Option<i64>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    /// Directory for two-column plot data files.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    /// Starting holding of the last seat for `wald` (default n - 1).
    #[arg(long)]
    pub w0: Option<i64>,
    /// Epochs in the payoff sample for `epochs` and `wald`.
    #[arg(long, default_value_t = 1_000_000)]
    pub epochs: u64,
    /// Gamelet parameter p for `gamelets` (default from n).
    #[arg(long)]
    pub p: Option<usize>,
    /// Rounds s for `construct` (default four times the smallest feasible).
    #[arg(long)]
    pub s: Option<u64>,
    /// Identity queries per n for `bounds`.
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    /// Largest q in the epoch tail table.
    #[arg(long, default_value_t = 15)]
    pub q_max: u64,
    /// `hitprob` start state `y,z`.
    #[arg(long)]
    pub start: Option<String>,
    /// `hitprob` target state `y,z`.
    #[arg(long)]
    pub target: Option<String>,
    /// `hitprob` avoid state `y,z`.
    #[arg(long)]
    pub avoid: Option<String>,
    /// `hitprob`: the first step may pass through target or avoid.
    #[arg(long)]
    pub exempt: bool,
    /// `exact`: also write the transition table here.
    #[arg(long)]
    pub transitions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct NList(pub Vec<i64>);

pub fn parse_n_list(s: &str) -> std::result::Result<NList, String> {
    let bad = |_| format!("bad n list {s:?}");
    let v: Vec<i64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (i64, i64) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        if a > b {
            return Err(format!("empty range {s:?}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(bad)).collect::<std::result::Result<_, _>>()?
    };
    if v.is_empty() {
        return Err("n list is empty".into());
    }
    Ok(NList(v))
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec<'a> {
    pub command: &'a str,
    #[serde(flatten)]
    pub args: &'a Common,
}

impl RunSpec<'_> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run spec serializes")
    }

    pub fn header(&self) -> String {
        format!("# dreidel {VERSION}\n# run_spec: {}\n", self.to_json())
    }
}

/// A named `(x, y)` series for plotting.
#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn new(name: &str, x_label: &str, y_label: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
        }
    }
}

/// Writes one two-column whitespace-separated file, after `header`.
pub fn emit_plot_data(series: &PlotSeries, header: &str, path: &Path) -> Result<()> {
    if series.points.is_empty() {
        return Err(Error::InvalidConfig(format!("series {} is empty", series.name)));
    }
    let mut out = String::from(header);
    let _ = writeln!(out, "# {} {}", series.x_label, series.y_label);
    for &(x, y) in &series.points {
        let _ = writeln!(out, "{} {}", fmt_num(x), fmt_num(y));
    }
    std::fs::write(path, out)?;
    Ok(())
}

struct Output {
    /// CSV or markdown body, without the header.
    text: String,
    json: serde_json::Value,
    summary: String,
    failed: bool,
    plots: Vec<PlotSeries>,
}

impl Output {
    fn from_report(r: &BoundReport, summary: String) -> Result<Self> {
        Ok(Output {
            text: r.to_csv()?,
            json: serde_json::to_value(r)?,
            summary: format!("{summary}; {}", verdict_line(r)),
            failed: !r.all_hard_pass(),
            plots: Vec::new(),
        })
    }
}

fn verdict_line(r: &BoundReport) -> String {
    let fails = r.hard_failures().count();
    if fails == 0 {
        format!("{} checks, all hard checks pass", r.entries.len())
    } else {
        format!("{} checks, {fails} hard failures", r.entries.len())
    }
}

/// Runs `argv` (including the program name) and returns the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(failed) => i32::from(failed),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs one command; `Ok(true)` means a hard bound check failed.
pub fn run(cmd: &Command) -> Result<bool> {
    let (name, c) = cmd.parts();
    let spec = RunSpec { command: name, args: c };
    let out = mc_lab::with_jobs(c.jobs, || execute(cmd))?;
    let format = c.format.unwrap_or(if name == "report" { Format::Md } else { Format::Csv });
    let body = match format {
        Format::Json => {
            let v = serde_json::json!({
                "version": VERSION,
                "run_spec": serde_json::to_value(&spec)?,
                "result": out.json,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv | Format::Md => spec.header() + &out.text,
    };
    match &c.out {
        Some(path) => {
            std::fs::write(path, body)?;
            println!("{name}: {}", out.summary);
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            eprintln!("{name}: {}", out.summary);
        }
    }
    if let Some(dir) = &c.plot_dir {
        std::fs::create_dir_all(dir)?;
        for s in &out.plots {
            emit_plot_data(s, &spec.header(), &dir.join(format!("{}.dat", s.name)))?;
        }
    }
    Ok(out.failed)
}

fn first_n(c: &Common) -> i64 {
    c.n.0[0]
}

fn flavor(c: &Common) -> Result<Flavor> {
    c.flavor.parse()
}

fn execute(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Simulate(c) => simulate(c),
        Command::Epochs(c) => epochs(c),
        Command::Wald(c) => wald(c),
        Command::Exact(c) => exact(c),
        Command::PotChain(c) => pot_chain(c),
        Command::Hitprob(c) => hitprob(c),
        Command::Bounds(c) => bounds(c),
        Command::Gamelets(c) => gamelets(c),
        Command::Construct(c) => construct(c),
        Command::Scaling(c) => scaling(c),
        Command::Report(c) => report(c),
    }
}

fn simulate(c: &Common) -> Result<Output> {
    let mut rows = Vec::new();
    for &n in &c.n.0 {
        rows.push(mc_lab::estimate_mean_duration(GameConfig::dreidel(c.k, n)?, c.trials, c.seed, c.jobs)?);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "n", "trials", "mean", "se", "ci99_lo", "ci99_hi"]).map_err(csv_err)?;
    for r in &rows {
        let (lo, hi) = r.ci99.map(|(a, b)| (fmt_num(a), fmt_num(b))).unwrap_or_default();
        w.write_record([
            r.k.to_string(),
            r.n.to_string(),
            r.trials.to_string(),
            fmt_num(r.mean),
            r.se.map(fmt_num).unwrap_or_default(),
            lo,
            hi,
        ])
        .map_err(csv_err)?;
    }
    let plots = vec![PlotSeries::new(
        "duration",
        "n",
        "mean_duration",
        rows.iter().map(|r| (r.n as f64, r.mean)).collect(),
    )];
    let last = rows.last().expect("n list is non-empty");
    Ok(Output {
        text: finish_csv(w)?,
        json: serde_json::to_value(&rows)?,
        summary: format!("k = {}, n = {}: mean {} over {} games", last.k, last.n, fmt_num(last.mean), last.trials),
        failed: false,
        plots,
    })
}

fn epochs(c: &Common) -> Result<Output> {
    let n = first_n(c);
    let stats = mc_lab::payoff_sample(c.k, n, c.epochs, c.seed)?;
    let mut r = mc_lab::tail_report(&stats, c.k, c.q_max);
    r.extend(mc_lab::moment_report(&stats, c.k));
    let mut out = Output::from_report(&r, format!("{} epochs, mean payoff {}", stats.count, fmt_num(stats.mean())))?;
    let total = stats.count as f64;
    out.plots.push(PlotSeries::new(
        "epoch_length",
        "length",
        "frequency",
        stats.length_hist.iter().map(|(&l, &f)| (l as f64, f as f64 / total)).collect(),
    ));
    out.plots.push(PlotSeries::new(
        "epoch_payoff",
        "payoff",
        "frequency",
        stats.payoff_hist.iter().map(|(&y, &f)| (y as f64, f as f64 / total)).collect(),
    ));
    Ok(out)
}

fn wald(c: &Common) -> Result<Output> {
    let n = first_n(c);
    let w0 = c.w0.unwrap_or(n - 1);
    let records = mc_lab::stopping_sample(c.k, n, w0, c.trials, c.seed, c.jobs)?;
    let stats = mc_lab::payoff_sample(c.k, n, c.epochs, c.seed.wrapping_add(1))?;
    let r = mc_lab::wald_report(&records, &stats, c.k, n);
    let mut out = Output::from_report(&r, format!("{} stopping records from W0 = {w0}", records.len()))?;
    let mut hist = std::collections::BTreeMap::<u64, u64>::new();
    for rec in &records {
        *hist.entry(rec.t).or_default() += 1;
    }
    out.plots.push(PlotSeries::new(
        "stopping_time",
        "T",
        "frequency",
        hist.iter().map(|(&t, &f)| (t as f64, f as f64 / records.len() as f64)).collect(),
    ));
    Ok(out)
}

#[derive(Serialize)]
struct ExactRow {
    n: i64,
    states: usize,
    mu_d: f64,
    residual: f64,
    /// `p/q`, only for small n.
    rational: Option<String>,
    p1_wins: f64,
}

fn exact(c: &Common) -> Result<Output> {
    if c.k != 2 {
        return Err(Error::InvalidConfig("exact durations exist only for k = 2".into()));
    }
    let mut rows = Vec::new();
    for &n in &c.n.0 {
        let kernel = build_game_chain(n)?;
        let st = absorption_stats(&kernel, &game_start(n))?;
        let rational = if n <= EXACT_RATIONAL_LIMIT {
            Some(exact_mean_duration_rational(n)?.to_string())
        } else {
            None
        };
        let p1_wins = st
            .absorption
            .iter()
            .filter(|(s, _)| matches!(s, crate::chain::GameChainState::Over { winner: Some(0) }))
            .map(|(_, p)| p)
            .sum();
        if let Some(path) = &c.transitions {
            let path = if c.n.0.len() > 1 { path.with_extension(format!("n{n}.csv")) } else { path.clone() };
            std::fs::write(path, game_chain_csv(n, &kernel)?)?;
        }
        rows.push(ExactRow {
            n,
            states: kernel.len(),
            mu_d: st.expected_time,
            residual: st.residual,
            rational,
            p1_wins,
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "states", "mu_d", "residual", "rational", "p1_wins"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.n.to_string(),
            r.states.to_string(),
            fmt_num(r.mu_d),
            fmt_num(r.residual),
            r.rational.clone().unwrap_or_default(),
            fmt_num(r.p1_wins),
        ])
        .map_err(csv_err)?;
    }
    let last = rows.last().expect("n list is non-empty");
    Ok(Output {
        text: finish_csv(w)?,
        json: serde_json::to_value(&rows)?,
        summary: format!("n = {}: mu_d = {}", last.n, fmt_num(last.mu_d)),
        failed: false,
        plots: vec![PlotSeries::new("exact_duration", "n", "mu_d", rows.iter().map(|r| (r.n as f64, r.mu_d)).collect())],
    })
}

/// Default truncation of the pot chain.
pub const POT_CHAIN_DEFAULT_MAX: i64 = 200;

pub fn pot_chain_report(x_max: i64) -> Result<(BoundReport, Vec<f64>)> {
    let kernel = build_pot_chain(x_max)?;
    let d = diagnostics(&kernel)?;
    let st = d
        .stationary
        .ok_or_else(|| Error::Solver("pot chain has no stationary distribution".into()))?;
    let i2 = kernel.require(&2)?;
    let pi2 = st.pi[i2];
    let mut r = BoundReport::new(format!("pot chain, x_max = {x_max}"));
    r.push(BoundEntry::at_least("pi_2", "pi_2 >= 6/13", 6.0 / 13.0, pi2, 1e-9));
    r.push(BoundEntry::at_least("pi_2_quarter", "pi_2 > 1/4", 0.25, pi2, 0.0));
    r.push(BoundEntry::at_most("stationary_residual", "|pi P - pi| < 1e-10", 1e-10, st.residual, 0.0));
    r.push(BoundEntry::at_most("return_time_2", "1/pi_2 <= E_g = 4", 4.0, st.mean_return_time(i2), 1e-9));
    r.push(BoundEntry::equal("period", "aperiodic", 1.0, d.period as f64, 0.0));
    let mut pi = vec![0.0; x_max as usize];
    for (i, &p) in st.pi.iter().enumerate() {
        pi[(*kernel.state(i) - 1) as usize] = p;
    }
    Ok((r, pi))
}

fn pot_chain(c: &Common) -> Result<Output> {
    let x_max = c.pmax.unwrap_or(POT_CHAIN_DEFAULT_MAX);
    let (r, pi) = pot_chain_report(x_max)?;
    let pi2 = pi[1];
    let mut out = Output::from_report(&r, format!("pi_2 = {}", fmt_num(pi2)))?;
    out.plots.push(PlotSeries::new(
        "pot_stationary",
        "pot",
        "pi",
        pi.iter().enumerate().map(|(i, &p)| ((i + 1) as f64, p)).collect(),
    ));
    Ok(out)
}

fn parse_yz(s: Option<&str>, what: &str) -> Result<(i64, u8)> {
    let s = s.ok_or_else(|| Error::InvalidConfig(format!("--{what} y,z is required")))?;
    let bad = || Error::InvalidConfig(format!("--{what} expects y,z, got {s:?}"));
    let (y, z) = s.split_once(',').ok_or_else(bad)?;
    let y: i64 = y.trim().parse().map_err(|_| bad())?;
    let z: u8 = z.trim().parse().map_err(|_| bad())?;
    if !(1..=2).contains(&z) {
        return Err(bad());
    }
    Ok((y, z))
}

#[derive(Serialize)]
struct HitRow {
    n: i64,
    flavor: Flavor,
    p_max: i64,
    start: (i64, u8),
    target: (i64, u8),
    avoid: (i64, u8),
    exempt: bool,
    probability: f64,
}

fn hitprob(c: &Common) -> Result<Output> {
    let n = first_n(c);
    let fl = flavor(c)?;
    let spec = ModChainSpec::new(n, c.pmax.unwrap_or_else(|| ModChainSpec::default_p_max(n)), fl)?;
    let kernel = build_mod_chain(&spec)?;
    let (s, t, a) = (
        parse_yz(c.start.as_deref(), "start")?,
        parse_yz(c.target.as_deref(), "target")?,
        parse_yz(c.avoid.as_deref(), "avoid")?,
    );
    let mut q = HitQuery::new(spec.at2(s.0, s.1), vec![spec.at2(t.0, t.1)], vec![spec.at2(a.0, a.1)]);
    if c.exempt {
        q = q.exempt();
    }
    let p = hit_prob(&kernel, &q)?;
    let row = HitRow {
        n,
        flavor: fl,
        p_max: spec.p_max,
        start: (spec.wrap(s.0), s.1),
        target: (spec.wrap(t.0), t.1),
        avoid: (spec.wrap(a.0), a.1),
        exempt: c.exempt,
        probability: p,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "flavor", "p_max", "start", "target", "avoid", "exempt", "probability"]).map_err(csv_err)?;
    let yz = |v: (i64, u8)| format!("{};{}", v.0, v.1);
    w.write_record([
        n.to_string(),
        fl.as_str().to_string(),
        spec.p_max.to_string(),
        yz(row.start),
        yz(row.target),
        yz(row.avoid),
        c.exempt.to_string(),
        fmt_num(p),
    ])
    .map_err(csv_err)?;
    Ok(Output {
        text: finish_csv(w)?,
        json: serde_json::to_value(&row)?,
        summary: format!("P = {}", fmt_num(p)),
        failed: false,
        plots: Vec::new(),
    })
}

pub fn bounds_report(ns: &[i64], fl: Flavor, p_max: Option<i64>, queries: usize, seed: u64) -> Result<BoundReport> {
    let mut r = BoundReport::new(format!("hitting bounds, {} flavor", fl.as_str()));
    let mut ids = Vec::new();
    for &n in ns {
        let t = bound_tables(n, fl, p_max)?;
        for mut e in t.report.entries {
            if e.index.is_none() {
                e.index = Some(n);
            } else {
                e.name = format!("{}@n{n}", e.name);
            }
            r.push(e);
        }
        if n >= 3 && queries > 0 {
            ids.push(check_identities(n, fl, p_max, queries, seed)?);
        }
    }
    r.extend(identity_report(&ids));
    Ok(r)
}

fn bounds(c: &Common) -> Result<Output> {
    let fl = flavor(c)?;
    let r = bounds_report(&c.n.0, fl, c.pmax, c.queries, c.seed)?;
    let mut out = Output::from_report(&r, format!("n = {:?}", c.n.0))?;
    out.text = r.to_table_csv()?;
    Ok(out)
}

fn gamelet_p(c: &Common) -> Result<usize> {
    match c.p {
        Some(p) => Ok(p),
        None => gamelet::gamelet_p(c.k, first_n(c)),
    }
}

pub fn gamelet_report(k: usize, p: usize, tuples: usize, seed: u64) -> Result<(BoundReport, gamelet::SignatureTable)> {
    let table = gamelet::enumerate_signatures(k, p)?;
    let mut r = gamelet::minkowski_check(&table);
    let cc = gamelet::concat_check(&table, tuples, &mut SpinRng::new(seed))?;
    r.push(BoundEntry::at_most(
        "concat_nonzero",
        "matched concatenations give zero payoff",
        0.0,
        cc.nonzero as f64,
        0.0,
    ));
    r.push(BoundEntry::at_most(
        "concat_illegal",
        "concatenations are legal for n > pk^2 + k",
        0.0,
        (cc.illegal + cc.unknown_signatures) as f64,
        0.0,
    ));
    r.extend(gamelet::alpha_report(k)?);
    Ok((r, table))
}

fn gamelets(c: &Common) -> Result<Output> {
    let p = gamelet_p(c)?;
    let tuples = c.trials.min(100_000) as usize;
    let (r, table) = gamelet_report(c.k, p, tuples, c.seed)?;
    let mut out = Output::from_report(&r, format!("k = {}, p = {p}: {} signatures", c.k, table.counts.len()))?;
    if let Some(dir) = &c.plot_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("signatures.csv"), table.to_csv()?)?;
    }
    if c.k == 2 {
        out.plots.push(PlotSeries::new(
            "signature_counts",
            "u1",
            "count",
            table.counts.iter().map(|(u, &x)| (u[0] as f64, x as f64)).collect(),
        ));
    }
    Ok(out)
}

fn construct(c: &Common) -> Result<Output> {
    let n = first_n(c);
    let alpha = gamelet::choose_alpha(c.k)?;
    let start = variants::metaslowdel_start(c.k, n, n - 1)?;
    let s = match c.s {
        Some(s) => s,
        None => 4 * gamelet::min_feasible_s(&start, n, alpha)?,
    };
    let g = gamelet::construct_long_game_from(&start, n, s, alpha, &mut SpinRng::new(c.seed))?;
    let plan = &g.plan;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "k", "n", "s", "alpha", "t_s", "p", "m", "restorative", "ganz", "gamelet_tuples", "gamelet", "nisht", "closing",
        "total", "epochs", "outcomes",
    ])
    .map_err(csv_err)?;
    w.write_record([
        plan.k.to_string(),
        plan.n.to_string(),
        plan.s.to_string(),
        fmt_num(plan.alpha),
        plan.t_s.to_string(),
        plan.p.to_string(),
        plan.m.to_string(),
        plan.restorative_spins.to_string(),
        plan.ganz_spins.to_string(),
        plan.gamelet_tuples.to_string(),
        plan.gamelet_spins.to_string(),
        plan.nisht_spins.to_string(),
        plan.closing_spins.to_string(),
        plan.total().to_string(),
        g.epochs.to_string(),
        g.outcomes.iter().map(|o| o.symbol()).collect::<String>(),
    ])
    .map_err(csv_err)?;
    Ok(Output {
        text: finish_csv(w)?,
        json: serde_json::to_value(&g)?,
        summary: format!("{} spins, {} epochs (T_s = {})", g.outcomes.len(), g.epochs, plan.t_s),
        failed: false,
        plots: Vec::new(),
    })
}

fn scaling(c: &Common) -> Result<Output> {
    let source = if c.trials == 0 {
        ScalingSource::Exact
    } else {
        ScalingSource::MonteCarlo { trials: c.trials, seed: c.seed }
    };
    let rep = mc_lab::scaling_report(c.k, &c.n.0, source, c.jobs)?;
    let r = rep.bound_report();
    Ok(Output {
        text: rep.to_csv()?,
        json: serde_json::to_value(&rep)?,
        summary: format!("log-log slope {} (se {})", fmt_num(rep.slope), fmt_num(rep.slope_se)),
        failed: !r.all_hard_pass(),
        plots: vec![
            PlotSeries::new("scaling", "n", "mean_duration", rep.rows.iter().map(|r| (r.n as f64, r.mean)).collect()),
            PlotSeries::new(
                "scaling_ratio",
                "n",
                "mean_over_104n2_3",
                rep.rows.iter().map(|r| (r.n as f64, r.ratio_to_bound)).collect(),
            ),
        ],
    })
}

/// Every analysis at modest sizes, one section each.
fn report(c: &Common) -> Result<Output> {
    let k = c.k;
    let mut sections: Vec<BoundReport> = Vec::new();
    let w = mc_lab::ganz_wait(c.trials, c.seed, c.jobs)?;
    sections.push(mc_lab::ganz_report(&w, 10));
    let n0 = first_n(c);
    let stats = mc_lab::payoff_sample(k, n0, c.epochs, c.seed)?;
    let mut ep = mc_lab::tail_report(&stats, k, c.q_max);
    ep.extend(mc_lab::moment_report(&stats, k));
    sections.push(ep);
    let records = mc_lab::stopping_sample(k, n0, c.w0.unwrap_or(n0 - 1), c.trials.min(100_000), c.seed, c.jobs)?;
    sections.push(mc_lab::wald_report(&records, &stats, k, n0));
    if k == 2 {
        let mut ex = BoundReport::new("exact against Monte Carlo durations, k = 2");
        for &n in &c.n.0 {
            let exact = crate::chain::game_chain::exact_mean_duration(n)?;
            let est = mc_lab::estimate_mean_duration(GameConfig::dreidel(2, n)?, c.trials, c.seed, c.jobs)?;
            let hw = est.half_width().unwrap_or(0.0);
            ex.push(BoundEntry::equal("mu_d_mc", "exact mu_d inside the 99% interval", exact, est.mean, hw).with_index(n));
        }
        sections.push(ex);
        let ns: Vec<i64> = c.n.0.iter().copied().filter(|&n| n >= 3).collect();
        if !ns.is_empty() {
            sections.push(bounds_report(&ns, Flavor::GameFaithful, c.pmax, c.queries, c.seed)?);
            let mut formal = bounds_report(&ns, Flavor::FormalLambda, c.pmax, c.queries, c.seed)?;
            formal.entries.iter_mut().for_each(|e| e.hard = false);
            sections.push(formal);
        }
    }
    sections.push(pot_chain_report(POT_CHAIN_DEFAULT_MAX)?.0);
    sections.push(gamelet_report(k, 1, 100, c.seed)?.0);
    let alpha = gamelet::choose_alpha(k)?;
    let mut cons = BoundReport::new(format!("long-game construction, k = {k}"));
    for &n in &c.n.0 {
        if n <= k as i64 {
            continue;
        }
        let start = variants::metaslowdel_start(k, n, n - 1)?;
        let s = 4 * gamelet::min_feasible_s(&start, n, alpha)?;
        let g = gamelet::construct_long_game_from(&start, n, s, alpha, &mut SpinRng::new(c.seed))?;
        cons.push(BoundEntry::equal("construct_spins", "exactly ks spins", (k as u64 * s) as f64, g.outcomes.len() as f64, 0.0).with_index(n));
        cons.push(BoundEntry::at_least("construct_epochs", "at least T_s epochs", g.plan.t_s as f64, g.epochs as f64, 0.0).with_index(n));
    }
    sections.push(cons);
    if k * 3 <= gamelet::MAX_KS {
        let s = (gamelet::MAX_KS / k).min(6) as u64;
        let t_s = (s / 2).saturating_sub(1).max(1);
        let cnt = gamelet::count_low_epoch_games(k, s, t_s, n0.max(2))?;
        sections.push(gamelet::low_epoch_report(&cnt, alpha));
    }
    let mut md = String::new();
    let mut all = BoundReport::new("all checks");
    for s in &sections {
        md.push_str(&s.to_markdown());
        md.push('\n');
        all.entries.extend(s.entries.iter().cloned());
    }
    Ok(Output {
        text: md,
        json: serde_json::to_value(&sections)?,
        summary: verdict_line(&all),
        failed: !all.all_hard_pass(),
        plots: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_list("2..5").unwrap().0, vec![2, 3, 4, 5]);
        assert_eq!(parse_n_list("5,10").unwrap().0, vec![5, 10]);
        assert_eq!(parse_n_list("7").unwrap().0, vec![7]);
        assert!(parse_n_list("5..2").is_err());
        assert!(parse_n_list("x").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(dispatch(["dreidel", "frobnicate"]), 2);
        assert_eq!(dispatch(["dreidel", "simulate", "--bogus"]), 2);
        assert_eq!(dispatch(["dreidel", "exact", "--k", "3", "--n", "3"]), 2);
    }

    #[test]
    fn hard_failures_set_the_exit_flag() {
        let mut r = BoundReport::new("t");
        r.push(BoundEntry::at_most("soft", "", 0.0, 1.0, 0.0).soft());
        let out = Output::from_report(&r, "x".into()).unwrap();
        assert!(!out.failed);
        r.push(BoundEntry::at_most("hard", "", 0.0, 1.0, 0.0));
        let out = Output::from_report(&r, "x".into()).unwrap();
        assert!(out.failed);
        assert!(out.summary.ends_with("2 checks, 1 hard failures"));
    }

    #[test]
    fn empty_plot_series_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = PlotSeries::new("empty", "x", "y", Vec::new());
        assert!(emit_plot_data(&s, "", &dir.path().join("e.dat")).is_err());
        let s = PlotSeries::new("line", "n", "mu", vec![(5.0, 50.5), (10.0, 209.0)]);
        let p = dir.path().join("l.dat");
        emit_plot_data(&s, "# h\n", &p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "# h\n# n mu\n5 50.5\n10 209\n");
    }
}
