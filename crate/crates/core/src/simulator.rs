//! Monte Carlo simulation of the regime-switching surplus with grace clocks.
//!
//! Jump times and sizes are exact. The Gaussian part moves on a time grid of
//! size `step` near active barriers and on coarser steps far from them; a
//! Brownian-bridge test catches crossings between grid points. Regime
//! switches found inside a step take effect at its end.
//!
//! Fresh exponential clocks per insolvent spell are equivalent in law to one
//! rate-λ Poisson clock observed only while insolvent. Ticks falling inside a
//! step that dips below `b` are resolved on the Brownian bridge, so spell
//! entry times carry no grid delay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{require, Result};
use crate::levy_model::{JumpLaw, LevyModel};
use crate::liquidation::LiquidationProblem;

/// Simulation controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub paths: u64,
    pub step: f64,
    pub horizon: f64,
    pub seed: u64,
    pub bridge_correction: bool,
    /// Solvent paths above the level where the Lundberg bound on ever
    /// returning below `b` falls under this value stop as escaped.
    pub escape_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { paths: 100_000, step: 1e-3, horizon: 500.0, seed: 0, bridge_correction: true, escape_tol: 1e-9 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        require(self.paths > 0, || "paths must be positive".into())?;
        require(self.step > 0.0 && self.step.is_finite(), || format!("step must be positive, got {}", self.step))?;
        require(self.horizon > 0.0, || format!("horizon must be positive, got {}", self.horizon))?;
        require(self.escape_tol >= 0.0 && self.escape_tol < 1.0, || {
            format!("escape_tol must lie in [0, 1), got {}", self.escape_tol)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    HitA,
    GraceExpired,
    ExitedZ,
    Escaped,
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub liquidated: bool,
    /// Liquidation time, exit time, escape time or the horizon.
    pub time: f64,
    /// Surplus at `time`; equals `a` after creeping.
    pub surplus: f64,
    pub running_max: f64,
    pub exit_time: Option<f64>,
    pub cause: Cause,
    pub creeping: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub ci95: (f64, f64),
    pub n: u64,
    pub censored_fraction: f64,
}

impl SimEstimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn contains(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.std_err
    }
}

/// Path functionals with analytic counterparts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `P_x(T < ζ_z⁺)`, or `P_x(T < ∞)` without an upper level.
    LiqProb,
    /// `E_x[e^{−qT}; T < ζ_z⁺]`.
    Laplace { q: f64 },
    /// `E_x[e^{−qT}; U_T ≤ u, Ū_T < z]`.
    JointCdf { u: f64, q: f64 },
    /// `E_x[e^{−qζ_z⁺}; ζ_z⁺ < T]`.
    ExitUp { q: f64 },
    /// `E_x[e^{−qT}; U_T = a, Ū_T < z]`.
    CreepingMass { q: f64 },
}

impl Functional {
    pub fn evaluate(&self, o: &PathOutcome) -> f64 {
        let disc = |q: f64, t: f64| if q == 0.0 { 1.0 } else { (-q * t).exp() };
        match *self {
            Functional::LiqProb => f64::from(u8::from(o.liquidated)),
            Functional::Laplace { q } if o.liquidated => disc(q, o.time),
            Functional::JointCdf { u, q } if o.liquidated && o.surplus <= u => disc(q, o.time),
            Functional::ExitUp { q } => o.exit_time.map_or(0.0, |t| disc(q, t)),
            Functional::CreepingMass { q } if o.liquidated && o.creeping => disc(q, o.time),
            _ => 0.0,
        }
    }
}

/// The switching surplus in simulation form: `a` may be `−∞` and `b = c`
/// is allowed (Parisian case).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSystem {
    pub solvent: LevyModel,
    pub insolvent: LevyModel,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub lambda: f64,
    pub start: f64,
    pub upper: Option<f64>,
}

impl RegimeSystem {
    pub fn from_problem(problem: &LiquidationProblem, z: Option<f64>) -> Self {
        let br = problem.barriers;
        Self {
            solvent: problem.solvent.clone(),
            insolvent: problem.insolvent.clone(),
            a: br.a,
            b: br.b,
            c: br.c,
            lambda: problem.grace_rate,
            start: problem.start,
            upper: z,
        }
    }

    /// Parisian ruin with implementation delay λ and optional lower barrier.
    pub fn parisian(model: &LevyModel, lambda: f64, a: Option<f64>, x: f64) -> Self {
        Self {
            solvent: model.clone(),
            insolvent: model.clone(),
            a: a.unwrap_or(f64::NEG_INFINITY),
            b: 0.0,
            c: 0.0,
            lambda,
            start: x,
            upper: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solvent.validate()?;
        self.insolvent.validate()?;
        require(self.a < self.b && self.b <= self.c, || {
            format!("need a < b ≤ c, got a = {}, b = {}, c = {}", self.a, self.b, self.c)
        })?;
        require(self.lambda > 0.0, || format!("λ must be positive, got {}", self.lambda))?;
        require(self.start > self.b, || format!("start must exceed b, got {}", self.start))?;
        if let Some(z) = self.upper {
            require(z >= self.start, || format!("need z ≥ x, got z = {z}"))?;
        }
        Ok(())
    }
}

/// Lundberg exponent R > 0 with ψ(−R) = 0, or `None` without positive
/// safety loading.
pub fn lundberg_exponent(model: &LevyModel) -> Option<f64> {
    if model.safety_loading() <= 0.0 {
        return None;
    }
    let psi = |r: f64| model.laplace_exponent(-r);
    let cap = model.slowest_jump_decay();
    let mut hi = if cap.is_finite() { cap * (1.0 - 1e-12) } else { 1.0 };
    while psi(hi) <= 0.0 {
        if cap.is_finite() {
            return Some(hi);
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, Copy)]
enum Component {
    Exp(f64),
    Erlang2(f64),
}

#[derive(Debug, Clone)]
struct Regime {
    drift: f64,
    sigma: f64,
    rate: f64,
    cum: Vec<f64>,
    parts: Vec<Component>,
}

fn flatten(law: &JumpLaw, weight: f64, out: &mut Vec<(f64, Component)>) {
    match law {
        JumpLaw::Exponential { rate } => out.push((weight, Component::Exp(*rate))),
        JumpLaw::Erlang2 { rate } => out.push((weight, Component::Erlang2(*rate))),
        JumpLaw::Mixture(parts) => {
            let total: f64 = parts.iter().map(|(w, _)| w).sum();
            for (w, l) in parts {
                flatten(l, weight * w / total, out);
            }
        }
    }
}

impl Regime {
    fn new(model: &LevyModel) -> Self {
        let mut flat = Vec::new();
        flatten(&model.jump_law, 1.0, &mut flat);
        let mut acc = 0.0;
        let cum = flat
            .iter()
            .map(|(w, _)| {
                acc += w;
                acc
            })
            .collect();
        Self {
            drift: model.drift,
            sigma: model.gaussian_sigma,
            rate: model.jump_rate,
            cum,
            parts: flat.into_iter().map(|(_, c)| c).collect(),
        }
    }

    fn next_jump(&self, t: f64, rng: &mut ChaCha8Rng) -> f64 {
        if self.rate > 0.0 {
            t + rng.sample::<f64, _>(Exp1) / self.rate
        } else {
            f64::INFINITY
        }
    }

    fn jump(&self, rng: &mut ChaCha8Rng) -> f64 {
        let part = if self.parts.len() == 1 {
            self.parts[0]
        } else {
            let v = rng.random::<f64>() * self.cum[self.cum.len() - 1];
            let i = self.cum.iter().position(|&c| v < c).unwrap_or(self.parts.len() - 1);
            self.parts[i]
        };
        match part {
            Component::Exp(r) => rng.sample::<f64, _>(Exp1) / r,
            Component::Erlang2(r) => (rng.sample::<f64, _>(Exp1) + rng.sample::<f64, _>(Exp1)) / r,
        }
    }
}

/// Prepared simulation engine for one system and configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    system: RegimeSystem,
    cfg: SimConfig,
    regimes: [Regime; 2],
    escape_level: f64,
}

const SOLVENT: usize = 0;
const INSOLVENT: usize = 1;
/// Far from barriers the step is `(distance / (FAR_SIGMAS·σ))²`.
const FAR_SIGMAS: f64 = 6.0;
const MAX_STEP: f64 = 1.0;

impl Simulator {
    pub fn new(system: &RegimeSystem, cfg: &SimConfig) -> Result<Self> {
        system.validate()?;
        cfg.validate()?;
        let escape_level = match lundberg_exponent(&system.solvent) {
            Some(r) if cfg.escape_tol > 0.0 => system.b + (1.0 / cfg.escape_tol).ln() / r,
            _ => f64::INFINITY,
        };
        Ok(Self {
            regimes: [Regime::new(&system.solvent), Regime::new(&system.insolvent)],
            system: system.clone(),
            cfg: cfg.clone(),
            escape_level,
        })
    }

    pub fn escape_level(&self) -> f64 {
        self.escape_level
    }

    fn crossed(&self, rng: &mut ChaCha8Rng, gap0: f64, gap1: f64, var: f64) -> bool {
        if gap1 <= 0.0 {
            return true;
        }
        if !self.cfg.bridge_correction || !gap0.is_finite() || var == 0.0 {
            return false;
        }
        let p = (-2.0 * gap0 * gap1 / var).exp();
        p > 0.0 && rng.random::<f64>() < p
    }

    fn grace_clock(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.sample::<f64, _>(Exp1) / self.system.lambda
    }

    /// Grace ticks inside a solvent Gaussian step from `(t0, u0)` to
    /// `(t1, u1)` that dipped below `b`. The surplus at each tick comes from
    /// the Brownian bridge. Returns the liquidation, if any, and the first
    /// tick after `t1`.
    fn ticks_in_dip(&self, rng: &mut ChaCha8Rng, (t0, u0): (f64, f64), (t1, u1): (f64, f64), sigma: f64) -> (Option<(f64, f64)>, f64) {
        let s = &self.system;
        let (mut tp, mut up) = (t0, u0);
        let mut dipped = false;
        let mut tick = t0 + self.grace_clock(rng);
        while tick < t1 {
            let w = (tick - tp) / (t1 - tp);
            let sd = sigma * ((tick - tp) * (1.0 - w)).sqrt();
            let v = up + (u1 - up) * w + sd * rng.sample::<f64, _>(StandardNormal);
            let insolvent = if s.c > s.b {
                dipped = dipped || self.crossed(rng, up - s.b, v - s.b, sigma * sigma * (tick - tp));
                dipped && v < s.c
            } else {
                v < s.c
            };
            if insolvent && v > s.a {
                return (Some((tick, v)), tick);
            }
            (tp, up) = (tick, v);
            tick += self.grace_clock(rng);
        }
        (None, tick)
    }

    /// One path from stream `index` of the configured seed.
    pub fn path(&self, index: u64) -> PathOutcome {
        let s = &self.system;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(index);
        let z = s.upper.unwrap_or(f64::INFINITY);
        let horizon = self.cfg.horizon;

        let mut t = 0.0;
        let mut u = s.start;
        let mut max = u;
        let mut state = SOLVENT;
        // Next grace tick; only consulted while insolvent.
        let mut tick = f64::INFINITY;
        let mut next_jump = self.regimes[state].next_jump(t, &mut rng);

        let finish = |cause: Cause, t: f64, u: f64, max: f64| PathOutcome {
            liquidated: matches!(cause, Cause::HitA | Cause::GraceExpired),
            time: t,
            surplus: u,
            running_max: max,
            exit_time: (cause == Cause::ExitedZ).then_some(t),
            cause,
            creeping: false,
        };

        loop {
            if state == SOLVENT && u >= self.escape_level && z > u {
                return finish(Cause::Escaped, t, u, max);
            }
            let reg = &self.regimes[state];
            let target = next_jump.min(tick).min(horizon);
            let (lo, hi) = if state == SOLVENT { (s.b, z) } else { (s.a, s.c.min(z)) };
            let avail = target - t;
            let (t0, u0) = (t, u);

            let (mut down, mut up) = (false, false);
            let reached;
            if reg.sigma == 0.0 {
                let to_hi = if reg.drift > 0.0 { (hi - u) / reg.drift } else { f64::INFINITY };
                let to_lo = if reg.drift < 0.0 { (u - lo) / -reg.drift } else { f64::INFINITY };
                let h = avail.min(to_hi).min(to_lo);
                reached = h == avail;
                if h == to_hi && to_hi <= avail {
                    up = true;
                    u = hi;
                    t += h;
                } else if h == to_lo && to_lo <= avail {
                    down = true;
                    u = lo;
                    t += h;
                } else {
                    u += reg.drift * h;
                    t = target;
                }
            } else {
                let dist = (u - lo).min(hi - u);
                let far = (dist / (FAR_SIGMAS * reg.sigma)).powi(2);
                let h = far.min(MAX_STEP).max(self.cfg.step).min(avail);
                reached = h == avail;
                let u1 = u + reg.drift * h + reg.sigma * h.sqrt() * rng.sample::<f64, _>(StandardNormal);
                let var = reg.sigma * reg.sigma * h;
                down = self.crossed(&mut rng, u - lo, u1 - lo, var);
                if !down {
                    up = self.crossed(&mut rng, hi - u, hi - u1, var);
                }
                u = u1;
                t = if reached { target } else { t + h };
            }
            max = max.max(if up { u.max(hi) } else { u });

            let jump_due = reached && target == next_jump;
            let mut switched = false;
            if down {
                if state == INSOLVENT || u <= s.a {
                    return PathOutcome { surplus: s.a, creeping: true, ..finish(Cause::HitA, t, s.a, max) };
                }
                let next_tick = if reg.sigma > 0.0 {
                    match self.ticks_in_dip(&mut rng, (t0, u0), (t, u), reg.sigma) {
                        (Some((tl, ul)), _) => return finish(Cause::GraceExpired, tl, ul, max),
                        (None, tk) => tk,
                    }
                } else {
                    t + self.grace_clock(&mut rng)
                };
                if u < s.c {
                    state = INSOLVENT;
                    tick = next_tick;
                    switched = true;
                }
            } else if up {
                if hi >= z {
                    return finish(Cause::ExitedZ, t, u, max);
                }
                if u >= s.b {
                    state = SOLVENT;
                    tick = f64::INFINITY;
                    switched = true;
                }
            }
            if switched {
                next_jump = self.regimes[state].next_jump(t, &mut rng);
            }
            if !reached {
                continue;
            }
            if target == horizon && horizon <= next_jump.min(tick) {
                return finish(Cause::Censored, t, u, max);
            }
            if target == tick {
                if state == INSOLVENT && u < s.c {
                    return finish(Cause::GraceExpired, t, u, max);
                }
                tick = if state == INSOLVENT { t + self.grace_clock(&mut rng) } else { f64::INFINITY };
                continue;
            }
            // A jump due at the end of a step that switched regime still
            // happens; dropping it would thin the jump process near barriers.
            if !jump_due {
                continue;
            }
            u -= self.regimes[state].jump(&mut rng);
            if u < s.a {
                return finish(Cause::HitA, t, u, max);
            }
            if state == SOLVENT && u < s.b {
                state = INSOLVENT;
                tick = t + self.grace_clock(&mut rng);
            }
            next_jump = self.regimes[state].next_jump(t, &mut rng);
        }
    }

    /// Mean of `f` over the configured number of paths. Paths are reduced
    /// in fixed blocks so the result does not depend on thread scheduling.
    pub fn estimate_with<F>(&self, f: F) -> SimEstimate
    where
        F: Fn(&PathOutcome) -> f64 + Sync,
    {
        const BLOCK: u64 = 4096;
        let n = self.cfg.paths;
        let blocks = n.div_ceil(BLOCK);
        let sums: Vec<(f64, f64, u64)> = (0..blocks)
            .into_par_iter()
            .map(|k| {
                let (mut s1, mut s2, mut cens) = (0.0, 0.0, 0u64);
                for i in k * BLOCK..((k + 1) * BLOCK).min(n) {
                    let o = self.path(i);
                    let v = f(&o);
                    s1 += v;
                    s2 += v * v;
                    cens += u64::from(o.cause == Cause::Censored);
                }
                (s1, s2, cens)
            })
            .collect();
        let (s1, s2, cens) = sums.iter().fold((0.0, 0.0, 0u64), |acc, b| (acc.0 + b.0, acc.1 + b.1, acc.2 + b.2));
        let nf = n as f64;
        let mean = s1 / nf;
        let var = if n > 1 { ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        let std_err = (var / nf).sqrt();
        SimEstimate {
            mean,
            std_err,
            ci95: (mean - 1.96 * std_err, mean + 1.96 * std_err),
            n,
            censored_fraction: cens as f64 / nf,
        }
    }
}

pub fn simulate_path(problem: &LiquidationProblem, z: Option<f64>, cfg: &SimConfig, path_index: u64) -> Result<PathOutcome> {
    Ok(Simulator::new(&RegimeSystem::from_problem(problem, z), cfg)?.path(path_index))
}

pub fn estimate(problem: &LiquidationProblem, z: Option<f64>, functional: Functional, cfg: &SimConfig) -> Result<SimEstimate> {
    let sim = Simulator::new(&RegimeSystem::from_problem(problem, z), cfg)?;
    Ok(sim.estimate_with(|o| functional.evaluate(o)))
}

/// Estimate of `P_x(T_λ(a) < ∞)`, or `P_x(τ_λ < ∞)` with `a = None`.
pub fn simulate_parisian(model: &LevyModel, lambda: f64, a: Option<f64>, x: f64, cfg: &SimConfig) -> Result<SimEstimate> {
    let sim = Simulator::new(&RegimeSystem::parisian(model, lambda, a, x), cfg)?;
    Ok(sim.estimate_with(|o| f64::from(u8::from(o.liquidated))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liquidation::BarrierSystem;

    fn problem() -> LiquidationProblem {
        let solvent = LevyModel::from_components(
            8.0,
            2.0,
            vec![(3.0, JumpLaw::Erlang2 { rate: 2.0 }), (2.0, JumpLaw::Exponential { rate: 1.0 })],
        )
        .unwrap();
        let insolvent = LevyModel::new(6.0, 1.5, 3.0, JumpLaw::Erlang2 { rate: 2.0 }).unwrap();
        LiquidationProblem {
            solvent,
            insolvent,
            barriers: BarrierSystem::new(0.0, 1.0, 2.0).unwrap(),
            grace_rate: 0.1,
            discount: 0.0,
            start: 2.0,
        }
    }

    #[test]
    fn deterministic_paths() {
        let cfg = SimConfig { paths: 200, ..SimConfig::default() };
        let p = problem();
        for i in [0, 7, 123] {
            assert_eq!(simulate_path(&p, Some(6.0), &cfg, i).unwrap(), simulate_path(&p, Some(6.0), &cfg, i).unwrap());
        }
        let e1 = estimate(&p, Some(6.0), Functional::LiqProb, &cfg).unwrap();
        let e2 = estimate(&p, Some(6.0), Functional::LiqProb, &cfg).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn outcome_invariants() {
        let cfg = SimConfig::default();
        let p = problem();
        for i in 0..500 {
            let o = simulate_path(&p, Some(6.0), &cfg, i).unwrap();
            assert!(o.running_max >= p.start);
            match o.cause {
                Cause::HitA => assert!(o.surplus <= 0.0 && o.liquidated),
                Cause::GraceExpired => assert!(o.surplus > 0.0 && o.surplus < 2.0),
                Cause::ExitedZ => assert!(o.exit_time.is_some() && !o.liquidated),
                _ => assert!(!o.liquidated),
            }
            if o.creeping {
                assert_eq!(o.surplus, 0.0);
            }
        }
    }

    #[test]
    fn lundberg_exponent_solves() {
        let m = LevyModel::new(5.0, 0.5, 2.0, JumpLaw::Erlang2 { rate: 2.0 }).unwrap();
        let r = lundberg_exponent(&m).unwrap();
        assert!(r > 0.0 && r < 2.0);
        assert!(m.laplace_exponent(-r).abs() < 1e-9);
        let bm = LevyModel::new(1.0, 1.0, 0.0, JumpLaw::Exponential { rate: 1.0 }).unwrap();
        assert!((lundberg_exponent(&bm).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn huge_grace_rate_liquidates_at_first_dip() {
        let mut p = problem();
        p.grace_rate = 1e6;
        let cfg = SimConfig { paths: 300, ..SimConfig::default() };
        for i in 0..300 {
            let o = simulate_path(&p, Some(6.0), &cfg, i).unwrap();
            if o.liquidated {
                assert!(o.surplus < 1.5, "{o:?}");
            }
        }
    }
}
