//! Flat `key = value` run configuration with dotted section prefixes.
//!
//! ```text
//! # comment
//! solvent.drift = 5
//! solvent.sigma = 0.5
//! solvent.jump.1.law = erlang2
//! solvent.jump.1.intensity = 2
//! solvent.jump.1.rate = 2
//! grace_rate = 0.1
//! start = 1
//! grid.u = -1:2:50
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::levy_model::{JumpLaw, LevyModel};
use crate::liquidation::{BarrierSystem, LiquidationProblem};
use crate::simulator::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    Exponential,
    Erlang2,
}

impl LawKind {
    fn name(self) -> &'static str {
        match self {
            LawKind::Exponential => "exponential",
            LawKind::Erlang2 => "erlang2",
        }
    }
}

/// One compound Poisson stream of downward jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpSpec {
    pub law: LawKind,
    pub intensity: f64,
    pub rate: f64,
}

impl JumpSpec {
    fn law(&self) -> JumpLaw {
        match self.law {
            LawKind::Exponential => JumpLaw::Exponential { rate: self.rate },
            LawKind::Erlang2 => JumpLaw::Erlang2 { rate: self.rate },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub drift: f64,
    pub sigma: f64,
    pub jumps: Vec<JumpSpec>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<LevyModel> {
        LevyModel::from_components(self.drift, self.sigma, self.jumps.iter().map(|j| (j.intensity, j.law())).collect())
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got `{text}`"));
        }
        let lo = parse_f64(parts[0])?;
        let hi = parse_f64(parts[1])?;
        let n = parts[2].parse::<usize>().map_err(|_| format!("bad point count `{}`", parts[2]))?;
        if n == 0 || (n > 1 && hi < lo) {
            return Err(format!("grid needs n ≥ 1 and lo ≤ hi, got `{text}`"));
        }
        Ok(Self { lo, hi, n })
    }

    fn emit(&self) -> String {
        format!("{}:{}:{}", self.lo, self.hi, self.n)
    }
}

/// Figure-2 comparison grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Spec {
    pub a: Vec<f64>,
    pub b: Grid,
    pub c: Grid,
}

/// One-parameter sweeps of the liquidation probability. Premium and
/// dividend drift enter the solvent drift as `premium − dividend_drift`; the
/// dividend stream is solvent jump component `dividend_component`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSpec {
    pub x: Option<Grid>,
    pub premium: Option<Grid>,
    pub grace_rate: Option<Grid>,
    pub dividend_drift: Option<Grid>,
    pub dividend_intensity: Option<Grid>,
    pub dividend_size_rate: Option<Grid>,
    pub base_premium: Option<f64>,
    pub base_dividend_drift: Option<f64>,
    pub dividend_component: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solvent: ModelSpec,
    /// Defaults to the solvent model.
    pub insolvent: Option<ModelSpec>,
    pub barriers: Option<BarrierSystem>,
    pub grace_rate: f64,
    pub discount: f64,
    pub start: f64,
    pub upper: Option<f64>,
    pub parisian_a: Option<f64>,
    pub grid_x: Option<Grid>,
    pub grid_u: Option<Grid>,
    pub grid_z: Option<Grid>,
    pub fig2: Option<Fig2Spec>,
    pub sweep: SweepSpec,
    pub sim: SimConfig,
    pub output: Option<String>,
}

impl RunConfig {
    pub fn solvent_model(&self) -> Result<LevyModel> {
        self.solvent.build()
    }

    pub fn insolvent_model(&self) -> Result<LevyModel> {
        self.insolvent.as_ref().unwrap_or(&self.solvent).build()
    }

    pub fn problem(&self) -> Result<LiquidationProblem> {
        let barriers = self
            .barriers
            .ok_or_else(|| Error::Precondition("configuration has no barriers.a/b/c".into()))?;
        let p = LiquidationProblem {
            solvent: self.solvent_model()?,
            insolvent: self.insolvent_model()?,
            barriers,
            grace_rate: self.grace_rate,
            discount: self.discount,
            start: self.start,
        };
        p.validate()?;
        Ok(p)
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s {
        "-inf" => Ok(f64::NEG_INFINITY),
        "inf" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|_| format!("expected a number, got `{s}`")),
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Table {
    entries: BTreeMap<String, Entry>,
}

fn config_error(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config { line, key: key.to_string(), message: message.into() }
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_error(line, body, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(config_error(line, key, "empty key"));
            }
            let entry = Entry { line, value: value.trim().to_string(), used: false };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(config_error(line, key, format!("duplicate key, first set on line {}", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn take<T>(&mut self, key: &str, conv: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.entries.get_mut(key) {
            None => Ok(None),
            Some(e) => {
                e.used = true;
                conv(&e.value).map(Some).map_err(|m| config_error(e.line, key, m))
            }
        }
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key, parse_f64)
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| config_error(0, key, "missing required key"))
    }

    fn grid(&mut self, key: &str) -> Result<Option<Grid>> {
        self.take(key, Grid::parse)
    }

    fn check(&self, key: &str, cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(config_error(self.line(key), key, msg()))
        }
    }

    fn model(&mut self, prefix: &str) -> Result<Option<ModelSpec>> {
        let drift_key = format!("{prefix}.drift");
        let present = self.entries.keys().any(|k| k.starts_with(&format!("{prefix}.")));
        if !present {
            return Ok(None);
        }
        let drift = self.required(&drift_key)?;
        let sigma = self.num(&format!("{prefix}.sigma"))?.unwrap_or(0.0);
        let jump_prefix = format!("{prefix}.jump.");
        let mut ids: Vec<usize> = Vec::new();
        for (k, e) in &self.entries {
            if let Some(rest) = k.strip_prefix(&jump_prefix) {
                let id = rest
                    .split('.')
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| config_error(e.line, k, "jump keys look like `<model>.jump.<n>.<field>`"))?;
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
        }
        ids.sort_unstable();
        let mut jumps = Vec::new();
        for id in ids {
            let base = format!("{jump_prefix}{id}");
            let law = self
                .take(&format!("{base}.law"), |s| match s {
                    "exponential" => Ok(LawKind::Exponential),
                    "erlang2" => Ok(LawKind::Erlang2),
                    _ => Err(format!("unknown jump law `{s}` (exponential or erlang2)")),
                })?
                .ok_or_else(|| config_error(0, &format!("{base}.law"), "missing required key"))?;
            let intensity = self.required(&format!("{base}.intensity"))?;
            let rate = self.required(&format!("{base}.rate"))?;
            let k = format!("{base}.rate");
            self.check(&k, intensity >= 0.0 && rate > 0.0, || {
                format!("need intensity ≥ 0 and rate > 0, got {intensity} and {rate}")
            })?;
            jumps.push(JumpSpec { law, intensity, rate });
        }
        let spec = ModelSpec { drift, sigma, jumps };
        spec.build().map_err(|e| config_error(self.line(&drift_key), &drift_key, e.to_string()))?;
        Ok(Some(spec))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut t = Table::parse(text)?;
    let solvent = t.model("solvent")?.ok_or_else(|| config_error(0, "solvent.drift", "missing required key"))?;
    let insolvent = t.model("insolvent")?;

    let a = t.num("barriers.a")?;
    let b = t.num("barriers.b")?;
    let c = t.num("barriers.c")?;
    let barriers = match (a, b, c) {
        (None, None, None) => None,
        (Some(a), Some(b), Some(c)) => {
            let sys = BarrierSystem { a, b, c };
            sys.validate().map_err(|e| config_error(t.line("barriers.a"), "barriers.a", e.to_string()))?;
            Some(sys)
        }
        _ => return Err(config_error(t.line("barriers.a").max(t.line("barriers.b")), "barriers", "set all of a, b and c")),
    };

    let grace_rate = t.required("grace_rate")?;
    t.check("grace_rate", grace_rate > 0.0 && grace_rate.is_finite(), || format!("λ must be positive, got {grace_rate}"))?;
    let discount = t.num("discount")?.unwrap_or(0.0);
    t.check("discount", discount >= 0.0 && discount.is_finite(), || format!("q must be ≥ 0, got {discount}"))?;
    let start = t.required("start")?;
    if let Some(sys) = barriers {
        t.check("start", start > sys.b, || format!("start x = {start} must exceed b = {}", sys.b))?;
    } else {
        t.check("start", start > 0.0, || format!("start must be positive, got {start}"))?;
    }
    let upper = t.num("upper")?;
    if let Some(z) = upper {
        t.check("upper", z >= start, || format!("upper z = {z} must be ≥ start"))?;
    }
    let parisian_a = t.take("parisian.a", |s| if s == "none" { Ok(None) } else { parse_f64(s).map(Some) })?.flatten();
    if let Some(pa) = parisian_a {
        t.check("parisian.a", pa < 0.0, || format!("Parisian lower barrier must be negative, got {pa}"))?;
    }

    let grid_x = t.grid("grid.x")?;
    let grid_u = t.grid("grid.u")?;
    let grid_z = t.grid("grid.z")?;

    let fig2_a = t.take("fig2.a", |s| s.split(',').map(|v| parse_f64(v.trim())).collect::<std::result::Result<Vec<_>, _>>())?;
    let fig2 = match (fig2_a, t.grid("fig2.b")?, t.grid("fig2.c")?) {
        (None, None, None) => None,
        (Some(a), Some(b), Some(c)) => Some(Fig2Spec { a, b, c }),
        _ => return Err(config_error(t.line("fig2.a"), "fig2", "set all of fig2.a, fig2.b and fig2.c")),
    };

    let sweep = SweepSpec {
        x: t.grid("sweep.x")?,
        premium: t.grid("sweep.premium")?,
        grace_rate: t.grid("sweep.grace_rate")?,
        dividend_drift: t.grid("sweep.dividend_drift")?,
        dividend_intensity: t.grid("sweep.dividend_intensity")?,
        dividend_size_rate: t.grid("sweep.dividend_size_rate")?,
        base_premium: t.num("sweep.base_premium")?,
        base_dividend_drift: t.num("sweep.base_dividend_drift")?,
        dividend_component: t.take("sweep.dividend_component", |s| {
            s.parse::<usize>().map_err(|_| format!("expected a jump component number, got `{s}`"))
        })?,
    };
    if let Some(k) = sweep.dividend_component {
        t.check("sweep.dividend_component", k >= 1 && k <= solvent.jumps.len(), || {
            format!("solvent has {} jump components, got {k}", solvent.jumps.len())
        })?;
    }

    let defaults = SimConfig::default();
    let sim = SimConfig {
        paths: t
            .take("sim.paths", |s| s.parse::<f64>().ok().filter(|v| *v >= 1.0 && v.fract() == 0.0).map(|v| v as u64).ok_or(format!("expected a positive integer, got `{s}`")))?
            .unwrap_or(defaults.paths),
        step: t.num("sim.step")?.unwrap_or(defaults.step),
        horizon: t.num("sim.horizon")?.unwrap_or(defaults.horizon),
        seed: t.take("sim.seed", |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned integer, got `{s}`")))?.unwrap_or(defaults.seed),
        bridge_correction: t
            .take("sim.bridge", |s| s.parse::<bool>().map_err(|_| format!("expected true or false, got `{s}`")))?
            .unwrap_or(defaults.bridge_correction),
        escape_tol: t.num("sim.escape_tol")?.unwrap_or(defaults.escape_tol),
    };
    sim.validate().map_err(|e| config_error(t.line("sim.step"), "sim", e.to_string()))?;
    let output = t.take("output", |s| Ok(s.to_string()))?;

    if let Some((k, e)) = t.entries.iter().find(|(_, e)| !e.used) {
        return Err(config_error(e.line, k, "unknown key"));
    }

    Ok(RunConfig {
        solvent,
        insolvent,
        barriers,
        grace_rate,
        discount,
        start,
        upper,
        parisian_a,
        grid_x,
        grid_u,
        grid_z,
        fig2,
        sweep,
        sim,
        output,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn emit_model(out: &mut String, prefix: &str, m: &ModelSpec) {
    let _ = writeln!(out, "{prefix}.drift = {}", m.drift);
    let _ = writeln!(out, "{prefix}.sigma = {}", m.sigma);
    for (i, j) in m.jumps.iter().enumerate() {
        let n = i + 1;
        let _ = writeln!(out, "{prefix}.jump.{n}.law = {}", j.law.name());
        let _ = writeln!(out, "{prefix}.jump.{n}.intensity = {}", j.intensity);
        let _ = writeln!(out, "{prefix}.jump.{n}.rate = {}", j.rate);
    }
}

/// Canonical text of `cfg`; `parse_config(&emit_config(cfg)) == cfg`.
pub fn emit_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    emit_model(&mut out, "solvent", &cfg.solvent);
    if let Some(m) = &cfg.insolvent {
        emit_model(&mut out, "insolvent", m);
    }
    if let Some(b) = cfg.barriers {
        let _ = writeln!(out, "barriers.a = {}\nbarriers.b = {}\nbarriers.c = {}", b.a, b.b, b.c);
    }
    let _ = writeln!(out, "grace_rate = {}\ndiscount = {}\nstart = {}", cfg.grace_rate, cfg.discount, cfg.start);
    if let Some(z) = cfg.upper {
        let _ = writeln!(out, "upper = {z}");
    }
    if let Some(a) = cfg.parisian_a {
        let _ = writeln!(out, "parisian.a = {a}");
    }
    for (key, g) in [("grid.x", cfg.grid_x), ("grid.u", cfg.grid_u), ("grid.z", cfg.grid_z)] {
        if let Some(g) = g {
            let _ = writeln!(out, "{key} = {}", g.emit());
        }
    }
    if let Some(f) = &cfg.fig2 {
        let a: Vec<String> = f.a.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "fig2.a = {}\nfig2.b = {}\nfig2.c = {}", a.join(", "), f.b.emit(), f.c.emit());
    }
    let s = &cfg.sweep;
    for (key, g) in [
        ("sweep.x", s.x),
        ("sweep.premium", s.premium),
        ("sweep.grace_rate", s.grace_rate),
        ("sweep.dividend_drift", s.dividend_drift),
        ("sweep.dividend_intensity", s.dividend_intensity),
        ("sweep.dividend_size_rate", s.dividend_size_rate),
    ] {
        if let Some(g) = g {
            let _ = writeln!(out, "{key} = {}", g.emit());
        }
    }
    if let Some(v) = s.base_premium {
        let _ = writeln!(out, "sweep.base_premium = {v}");
    }
    if let Some(v) = s.base_dividend_drift {
        let _ = writeln!(out, "sweep.base_dividend_drift = {v}");
    }
    if let Some(v) = s.dividend_component {
        let _ = writeln!(out, "sweep.dividend_component = {v}");
    }
    let sim = &cfg.sim;
    let _ = writeln!(
        out,
        "sim.paths = {}\nsim.step = {}\nsim.horizon = {}\nsim.seed = {}\nsim.bridge = {}\nsim.escape_tol = {}",
        sim.paths, sim.step, sim.horizon, sim.seed, sim.bridge_correction, sim.escape_tol
    );
    if let Some(o) = &cfg.output {
        let _ = writeln!(out, "output = {o}");
    }
    out
}
