//! Command-line front end: configuration loading, dispatch and CSV output.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::{load_config, Grid, RunConfig};
use crate::error::{Error, Result};
use crate::liquidation::{liquidation_laplace, liquidation_probability, BarrierSystem, Liquidation};
use crate::parisian::{parisian_ruin_prob, parisian_ruin_prob_barrier};
use crate::scale_functions::ScaleFunction;
use crate::simulator::{estimate, simulate_parisian, Functional, SimEstimate};

#[derive(Debug, Parser)]
#[command(name = "levyliq", version, about = "Liquidation and Parisian ruin quantities for spectrally negative Lévy surplus models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scale functions W_q, W_q′ and Z_q.
    Scale {
        #[command(subcommand)]
        action: ScaleAction,
    },
    /// Liquidation probability, Laplace transform and joint distribution.
    Liquidation {
        #[command(subcommand)]
        action: LiquidationAction,
    },
    /// Parisian ruin probabilities.
    Parisian {
        #[command(subcommand)]
        action: ParisianAction,
    },
    /// Parisian against liquidation ruin over (b, c) grids.
    Compare {
        #[command(subcommand)]
        action: CompareAction,
    },
    /// One-parameter sweeps of the liquidation probability.
    Sweep {
        #[command(subcommand)]
        action: SweepAction,
    },
    /// Monte Carlo estimates with standard errors.
    Simulate(Common),
}

#[derive(Debug, Subcommand)]
pub enum ScaleAction {
    /// Evaluate on grid.x at q = discount.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Regime::Solvent)]
        regime: Regime,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    Solvent,
    Insolvent,
}

#[derive(Debug, Subcommand)]
pub enum LiquidationAction {
    /// Liquidation probability at q = 0.
    Prob(Common),
    /// Laplace transform of the liquidation time on {T < τ_z⁺}; needs `upper`.
    Laplace(Common),
    /// Joint CDF of the surplus at liquidation and the pre-liquidation maximum over grid.u × grid.z.
    JointCdf(Common),
}

#[derive(Debug, Subcommand)]
pub enum ParisianAction {
    /// Parisian ruin probability, plain and with a lower barrier.
    Prob(Common),
}

#[derive(Debug, Subcommand)]
pub enum CompareAction {
    /// Parisian against liquidation ruin over the fig2 grids.
    Fig2(Common),
}

#[derive(Debug, Subcommand)]
pub enum SweepAction {
    /// Liquidation probability along each configured sweep.
    Fig3(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Configuration file.
    #[arg(value_name = "CONFIG")]
    pub config_path: Option<PathBuf>,
    /// Configuration file, overriding the positional one.
    #[arg(long = "config", value_name = "PATH")]
    pub config_flag: Option<PathBuf>,
    /// CSV destination; the CSV is also printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo path count.
    #[arg(long)]
    pub paths: Option<u64>,
    /// Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo Gaussian step.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_name = "LO:HI:N", value_parser = Grid::parse, allow_hyphen_values = true)]
    pub grid_x: Option<Grid>,
    #[arg(long, value_name = "LO:HI:N", value_parser = Grid::parse, allow_hyphen_values = true)]
    pub grid_u: Option<Grid>,
    #[arg(long, value_name = "LO:HI:N", value_parser = Grid::parse, allow_hyphen_values = true)]
    pub grid_z: Option<Grid>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let path = self
            .config_flag
            .as_ref()
            .or(self.config_path.as_ref())
            .ok_or_else(|| Error::Precondition("no configuration given (positional CONFIG or --config)".into()))?;
        let mut cfg = load_config(path)?;
        if let Some(p) = self.paths {
            cfg.sim.paths = p;
        }
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
        }
        if let Some(h) = self.step {
            cfg.sim.step = h;
        }
        cfg.grid_x = self.grid_x.or(cfg.grid_x);
        cfg.grid_u = self.grid_u.or(cfg.grid_u);
        cfg.grid_z = self.grid_z.or(cfg.grid_z);
        cfg.sim.validate()?;
        Ok(cfg)
    }
}

/// Header plus rows, written as RFC-4180 CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Precondition(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn estimate_row(kind: &str, e: &SimEstimate) -> Vec<String> {
    vec![kind.to_string(), num(e.mean), num(e.std_err), num(e.ci95.0), num(e.ci95.1)]
}

fn required_grid(g: Option<Grid>, key: &str) -> Result<Grid> {
    g.ok_or_else(|| Error::Precondition(format!("`{key}` is required for this command")))
}

pub fn scale_eval(cfg: &RunConfig, regime: Regime) -> Result<Table> {
    let model = match regime {
        Regime::Solvent => cfg.solvent_model()?,
        Regime::Insolvent => cfg.insolvent_model()?,
    };
    let sf = ScaleFunction::new(&model, cfg.discount)?;
    let xs = required_grid(cfg.grid_x, "grid.x")?.points();
    let mut t = Table::new(&["kind", "x", "value"]);
    for (kind, f) in [("W", ScaleFunction::w as fn(&ScaleFunction, f64) -> f64), ("W_prime", ScaleFunction::w_prime), ("Z", ScaleFunction::z)] {
        for &x in &xs {
            t.push(vec![kind.into(), num(x), num(f(&sf, x))]);
        }
    }
    Ok(t)
}

pub fn liquidation_prob(cfg: &RunConfig) -> Result<Table> {
    let p = liquidation_probability(&cfg.problem()?)?;
    let mut t = Table::new(&["kind", "value"]);
    t.push(vec!["liquidation_probability".into(), num(p)]);
    Ok(t)
}

pub fn liquidation_laplace_table(cfg: &RunConfig) -> Result<Table> {
    let z = cfg.upper.ok_or_else(|| Error::Precondition("`upper` is required for the Laplace transform".into()))?;
    let v = liquidation_laplace(&cfg.problem()?, z)?;
    let mut t = Table::new(&["kind", "q", "z", "value"]);
    t.push(vec!["liquidation_laplace".into(), num(cfg.discount), num(z), num(v)]);
    Ok(t)
}

/// Joint CDF over the u × z grid, u-major.
pub fn joint_cdf_grid(cfg: &RunConfig) -> Result<Table> {
    let l = Liquidation::new(&cfg.problem()?)?;
    let us = required_grid(cfg.grid_u, "grid.u")?.points();
    let zs = required_grid(cfg.grid_z, "grid.z")?.points();
    let pts: Vec<(f64, f64)> = us.iter().flat_map(|&u| zs.iter().map(move |&z| (u, z))).collect();
    let vals: Vec<f64> = pts.par_iter().map(|&(u, z)| l.joint_cdf(u, z)).collect::<Result<_>>()?;
    let mut t = Table::new(&["u", "z", "value"]);
    for ((u, z), v) in pts.into_iter().zip(vals) {
        t.push(vec![num(u), num(z), num(v)]);
    }
    Ok(t)
}

pub fn parisian_prob(cfg: &RunConfig) -> Result<Table> {
    let model = cfg.solvent_model()?;
    let mut t = Table::new(&["kind", "a", "value"]);
    t.push(vec!["parisian".into(), String::new(), num(parisian_ruin_prob(&model, cfg.grace_rate, cfg.start)?)]);
    if let Some(a) = cfg.parisian_a {
        let v = parisian_ruin_prob_barrier(&model, cfg.grace_rate, a, cfg.start)?;
        t.push(vec!["parisian_barrier".into(), num(a), num(v)]);
    }
    Ok(t)
}

/// Parisian ruin against liquidation ruin with both regimes on the solvent
/// model, over every admissible (a, b, c) of the fig2 grids.
pub fn compare_fig2(cfg: &RunConfig) -> Result<Table> {
    let spec = cfg.fig2.as_ref().ok_or_else(|| Error::Precondition("`fig2.a/b/c` are required".into()))?;
    let model = cfg.solvent_model()?;
    let mut t = Table::new(&["kind", "a", "b", "c", "value"]);
    t.push(vec!["parisian".into(), String::new(), String::new(), String::new(), num(parisian_ruin_prob(&model, cfg.grace_rate, cfg.start)?)]);
    let mut pts = Vec::new();
    for &a in &spec.a {
        for b in spec.b.points() {
            for c in spec.c.points() {
                if a < b && b < c && c > 0.0 && cfg.start > b {
                    pts.push(BarrierSystem { a, b, c });
                }
            }
        }
    }
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|&barriers| {
            let p = crate::liquidation::LiquidationProblem {
                solvent: model.clone(),
                insolvent: model.clone(),
                barriers,
                grace_rate: cfg.grace_rate,
                discount: 0.0,
                start: cfg.start,
            };
            liquidation_probability(&p)
        })
        .collect::<Result<_>>()?;
    for (br, v) in pts.into_iter().zip(vals) {
        t.push(vec!["liquidation".into(), num(br.a), num(br.b), num(br.c), num(v)]);
    }
    Ok(t)
}

/// `(sweep name, parameter value, liquidation probability)` for every
/// configured sweep, in a fixed order.
pub fn fig3_sweeps(cfg: &RunConfig) -> Result<Vec<(String, f64, f64)>> {
    cfg.problem()?;
    let s = &cfg.sweep;
    let div_drift = s.base_dividend_drift.unwrap_or(0.0);
    let premium = s.base_premium.unwrap_or(cfg.solvent.drift + div_drift);
    let component = |name: &str| -> Result<usize> {
        s.dividend_component
            .map(|k| k - 1)
            .ok_or_else(|| Error::Precondition(format!("sweep `{name}` needs sweep.dividend_component")))
    };
    let mut jobs: Vec<(String, f64, RunConfig)> = Vec::new();
    let mut add = |name: &str, grid: Option<Grid>, edit: &dyn Fn(&mut RunConfig, f64) -> Result<()>| -> Result<()> {
        if let Some(g) = grid {
            for v in g.points() {
                let mut c = cfg.clone();
                edit(&mut c, v)?;
                jobs.push((name.to_string(), v, c));
            }
        }
        Ok(())
    };
    add("x", s.x, &|c, v| {
        c.start = v;
        Ok(())
    })?;
    add("premium", s.premium, &|c, v| {
        c.solvent.drift = v - div_drift;
        Ok(())
    })?;
    add("grace_rate", s.grace_rate, &|c, v| {
        c.grace_rate = v;
        Ok(())
    })?;
    add("dividend_drift", s.dividend_drift, &|c, v| {
        c.solvent.drift = premium - v;
        Ok(())
    })?;
    add("dividend_intensity", s.dividend_intensity, &|c, v| {
        c.solvent.jumps[component("dividend_intensity")?].intensity = v;
        Ok(())
    })?;
    add("dividend_size_rate", s.dividend_size_rate, &|c, v| {
        c.solvent.jumps[component("dividend_size_rate")?].rate = v;
        Ok(())
    })?;
    jobs.par_iter()
        .map(|(name, v, c)| Ok((name.clone(), *v, liquidation_probability(&c.problem()?)?)))
        .collect()
}

pub fn sweep_fig3(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new(&["sweep", "param", "value"]);
    for (name, v, p) in fig3_sweeps(cfg)? {
        t.push(vec![name, num(v), num(p)]);
    }
    Ok(t)
}

pub fn simulate(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new(&["kind", "value", "std_err", "ci_lo", "ci_hi"]);
    match cfg.barriers {
        Some(_) => {
            let p = cfg.problem()?;
            t.push(estimate_row("liquidation_probability", &estimate(&p, cfg.upper, Functional::LiqProb, &cfg.sim)?));
            if let Some(z) = cfg.upper {
                let q = cfg.discount;
                t.push(estimate_row("liquidation_laplace", &estimate(&p, Some(z), Functional::Laplace { q }, &cfg.sim)?));
                t.push(estimate_row("exit_before_liquidation", &estimate(&p, Some(z), Functional::ExitUp { q }, &cfg.sim)?));
            }
        }
        None => {
            let model = cfg.solvent_model()?;
            let e = simulate_parisian(&model, cfg.grace_rate, cfg.parisian_a, cfg.start, &cfg.sim)?;
            let kind = if cfg.parisian_a.is_some() { "parisian_barrier" } else { "parisian" };
            t.push(estimate_row(kind, &e));
        }
    }
    Ok(t)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the CSV text.
pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Precondition(e.to_string()))?;
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Result<String> {
    let common = match &cli.command {
        Command::Scale { action: ScaleAction::Eval { common, .. } } => common,
        Command::Liquidation {
            action: LiquidationAction::Prob(c) | LiquidationAction::Laplace(c) | LiquidationAction::JointCdf(c),
        } => c,
        Command::Parisian { action: ParisianAction::Prob(c) } => c,
        Command::Compare { action: CompareAction::Fig2(c) } => c,
        Command::Sweep { action: SweepAction::Fig3(c) } => c,
        Command::Simulate(c) => c,
    };
    let cfg = common.load()?;
    let table = match &cli.command {
        Command::Scale { action: ScaleAction::Eval { regime, .. } } => scale_eval(&cfg, *regime)?,
        Command::Liquidation { action: LiquidationAction::Prob(_) } => liquidation_prob(&cfg)?,
        Command::Liquidation { action: LiquidationAction::Laplace(_) } => liquidation_laplace_table(&cfg)?,
        Command::Liquidation { action: LiquidationAction::JointCdf(_) } => joint_cdf_grid(&cfg)?,
        Command::Parisian { .. } => parisian_prob(&cfg)?,
        Command::Compare { .. } => compare_fig2(&cfg)?,
        Command::Sweep { .. } => sweep_fig3(&cfg)?,
        Command::Simulate(_) => simulate(&cfg)?,
    };
    let csv = table.to_csv()?;
    if let Some(path) = common.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)) {
        std::fs::write(&path, &csv).map_err(|e| Error::Precondition(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(csv)
}

/// Sizes the global thread pool from `LEVYLIQ_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LEVYLIQ_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Precondition(format!("LEVYLIQ_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    }
    Ok(())
}
