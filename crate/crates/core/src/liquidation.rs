//! Gerber-Shiu functional at the liquidation time, the joint law of the
//! deficit and the running maximum, Laplace transforms, exit identities and
//! the liquidation probability.

use crate::error::{require, Error, Result};
use crate::fluctuation::OmegaKernel;
use crate::levy_model::LevyModel;
use crate::numerics::{try_integrate, try_integrate_semi_inf, QuadratureSpec};
use crate::scale_functions::ScaleKind;

/// Liquidation barrier `a`, rehabilitation barrier `b`, safety barrier `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSystem {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BarrierSystem {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let s = Self { a, b, c };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.a < self.b && self.b < self.c, || {
            format!("barriers must satisfy a < b < c, got a = {}, b = {}, c = {}", self.a, self.b, self.c)
        })?;
        require(self.c > 0.0, || format!("safety barrier c must be positive, got {}", self.c))
    }
}

/// Surplus that follows `solvent` above `b` and `insolvent` during spells
/// below `c`, with exponential(λ) grace periods.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidationProblem {
    pub solvent: LevyModel,
    pub insolvent: LevyModel,
    pub barriers: BarrierSystem,
    pub grace_rate: f64,
    pub discount: f64,
    pub start: f64,
}

impl LiquidationProblem {
    pub fn validate(&self) -> Result<()> {
        self.solvent.validate()?;
        self.insolvent.validate()?;
        self.barriers.validate()?;
        require(self.grace_rate > 0.0 && self.grace_rate.is_finite(), || {
            format!("grace rate λ must be positive, got {}", self.grace_rate)
        })?;
        require(self.discount >= 0.0 && self.discount.is_finite(), || {
            format!("discount q must be ≥ 0, got {}", self.discount)
        })?;
        require(self.start > self.barriers.b, || {
            format!("start x = {} must exceed b = {}", self.start, self.barriers.b)
        })?;
        require(self.solvent.safety_loading() > 0.0, || {
            format!("solvent safety loading must be positive, got {}", self.solvent.safety_loading())
        })
    }

    pub fn with_discount(&self, discount: f64) -> Self {
        Self { discount, ..self.clone() }
    }

    pub fn with_start(&self, start: f64) -> Self {
        Self { start, ..self.clone() }
    }
}

/// Penalty `f` applied to the surplus at liquidation.
pub trait Penalty: Sync {
    fn value(&self, u: f64) -> f64;

    /// `∫_{lower}^∞ f(y − θ) υ(dθ)` for the Lévy measure of `model`.
    fn jump_integral(&self, model: &LevyModel, y: f64, lower: f64) -> Result<f64> {
        if model.jump_rate == 0.0 {
            return Ok(0.0);
        }
        let spec = QuadratureSpec::default().with_kinks(self.kinks().into_iter().map(|k| y - k));
        let lower = lower.max(0.0);
        let decay = 0.9 * model.slowest_jump_decay();
        Ok(try_integrate_semi_inf(|t| Ok(self.value(y - t) * model.levy_density(t)), lower, decay, &spec)?.value)
    }

    /// Points where `f` is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `f ≡ k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPenalty(pub f64);

impl Penalty for ConstantPenalty {
    fn value(&self, _u: f64) -> f64 {
        self.0
    }

    fn jump_integral(&self, model: &LevyModel, _y: f64, lower: f64) -> Result<f64> {
        Ok(self.0 * model.levy_tail(lower))
    }
}

/// `f(u) = 1{u ≤ upper}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorPenalty {
    pub upper: f64,
}

impl Penalty for IndicatorPenalty {
    fn value(&self, u: f64) -> f64 {
        if u <= self.upper {
            1.0
        } else {
            0.0
        }
    }

    fn jump_integral(&self, model: &LevyModel, y: f64, lower: f64) -> Result<f64> {
        Ok(model.levy_tail(lower.max(y - self.upper)))
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.upper]
    }
}

/// Arbitrary bounded penalty given as a closure.
pub struct FnPenalty<F> {
    pub f: F,
    pub kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> Penalty for FnPenalty<F> {
    fn value(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

/// Evaluator for one problem; scale functions are built once.
#[derive(Debug, Clone)]
pub struct Liquidation {
    problem: LiquidationProblem,
    kernel: OmegaKernel,
    spec: QuadratureSpec,
}

impl Liquidation {
    pub fn new(problem: &LiquidationProblem) -> Result<Self> {
        problem.validate()?;
        let kernel = OmegaKernel::new(&problem.solvent, &problem.insolvent, problem.discount, problem.grace_rate)?;
        Ok(Self { problem: problem.clone(), kernel, spec: QuadratureSpec::default() })
    }

    pub fn problem(&self) -> &LiquidationProblem {
        &self.problem
    }

    pub fn kernel(&self) -> &OmegaKernel {
        &self.kernel
    }

    fn omega_w(&self, w: f64, x: f64, z: f64) -> Result<f64> {
        self.kernel.omega(ScaleKind::W, w, self.problem.barriers.b, x, z)
    }

    /// The part of the Gerber-Shiu display that depends on the start point,
    /// with upper insolvent level `m` (c∧z or c).
    fn gs_block(&self, f: &dyn Penalty, x: f64, z: f64, m: f64) -> Result<f64> {
        let p = &self.problem;
        let BarrierSystem { a, b, .. } = p.barriers;
        let wt = self.kernel.insolvent_scale();
        let wq = self.kernel.solvent_scale();
        let om_a = self.omega_w(a, x, z)?;
        let wt_m = wt.w(m - a);

        let sig = p.insolvent.gaussian_sigma;
        let fa = f.value(a);
        let creeping = if sig > 0.0 && fa != 0.0 {
            let om_ap = self.kernel.omega(ScaleKind::WPrime, a, b, x, z)?;
            0.5 * sig * sig * fa * (om_ap - om_a * wt.w_prime(m - a) / wt_m)
        } else {
            0.0
        };

        let lambda = p.grace_rate;
        let insolvent_part = try_integrate(
            |y| {
                let weight = f.jump_integral(&p.insolvent, y, y - a)? + lambda * f.value(y);
                if weight == 0.0 {
                    return Ok(0.0);
                }
                Ok(weight * (om_a * wt.w(m - y) / wt_m - self.omega_w(y, x, z)?))
            },
            a,
            m,
            &self.spec.clone().with_kinks([b].into_iter().chain(f.kinks())),
        )?
        .value;

        let w_xb = wq.w(x - b);
        let overshoot = try_integrate(
            |y| {
                let weight = f.jump_integral(&p.solvent, y, y - a)?;
                if weight == 0.0 {
                    return Ok(0.0);
                }
                Ok(weight * (wq.w_ratio(z - y, z - b) * w_xb - wq.w(x - y)))
            },
            b,
            z,
            &self.spec.clone().with_kinks([x, p.barriers.c]),
        )?
        .value;

        Ok(creeping + insolvent_part + overshoot)
    }

    /// `E_x[e^{−qT} f(U_T); T < ζ_z⁺]`.
    pub fn gerber_shiu(&self, f: &dyn Penalty, z: f64) -> Result<f64> {
        let x = self.problem.start;
        let BarrierSystem { a, c, .. } = self.problem.barriers;
        require(z >= x, || format!("need z ≥ x, got z = {z}, x = {x}"))?;
        let head = self.gs_block(f, x, z, c.min(z))?;
        if z <= c {
            return Ok(head);
        }
        let om_x = self.omega_w(a, x, z)?;
        let om_c = self.omega_w(a, c, z)?;
        let denom = self.kernel.insolvent_scale().w(c - a) - om_c;
        Ok(head + om_x / denom * self.gs_block(f, c, z, c)?)
    }

    /// `E_x[e^{−qT} 1{U_T ≤ u} 1{Ū_T < z}]`; zero for z ≤ x.
    pub fn joint_cdf(&self, u: f64, z: f64) -> Result<f64> {
        if z <= self.problem.start {
            return Ok(0.0);
        }
        self.gerber_shiu(&IndicatorPenalty { upper: u }, z)
    }

    /// Creeping mass `E_x[e^{−qT}; U_T = a, Ū_T < z]`.
    pub fn atom_at_a(&self, z: f64) -> Result<f64> {
        let x = self.problem.start;
        require(z > x, || format!("need z > x, got z = {z}, x = {x}"))?;
        let p = &self.problem;
        let sig = p.insolvent.gaussian_sigma;
        if sig == 0.0 {
            return Ok(0.0);
        }
        let BarrierSystem { a, b, c } = p.barriers;
        let wt = self.kernel.insolvent_scale();
        let creep = |xx: f64, m: f64| -> Result<f64> {
            let om = self.omega_w(a, xx, z)?;
            let omp = self.kernel.omega(ScaleKind::WPrime, a, b, xx, z)?;
            Ok(0.5 * sig * sig * (omp - om * wt.w_prime(m - a) / wt.w(m - a)))
        };
        let head = creep(x, c.min(z))?;
        if z <= c {
            return Ok(head);
        }
        let om_x = self.omega_w(a, x, z)?;
        let om_c = self.omega_w(a, c, z)?;
        Ok(head + om_x / (wt.w(c - a) - om_c) * creep(c, c)?)
    }

    /// Mixed central difference `∂²/∂u∂z` of [`Self::joint_cdf`].
    pub fn joint_density_numeric(&self, u: f64, z: f64, h: f64) -> Result<f64> {
        require(h > 0.0, || format!("step h must be positive, got {h}"))?;
        let BarrierSystem { a, c, .. } = self.problem.barriers;
        if (u - a).abs() <= 2.0 * h {
            return Err(Error::AtomPoint { u, a });
        }
        require((z - c).abs() > 2.0 * h, || format!("z = {z} is within 2h of the kink at c = {c}"))?;
        let f = |du: f64, dz: f64| self.joint_cdf(u + du, z + dz);
        Ok((f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h))
    }

    /// `q/(q+λ)(Ω_Z − Z̃(c−a)/W̃(c−a)·Ω_W) + λ/(q+λ)(Z_q(·−b) − Z_q(z−b)W_q(·−b)/W_q(z−b) − Ω_W/W̃(c−a))`.
    fn laplace_block(&self, x: f64, z: f64) -> Result<f64> {
        let p = &self.problem;
        let BarrierSystem { a, b, c } = p.barriers;
        let (q, lambda) = (p.discount, p.grace_rate);
        let wt = self.kernel.insolvent_scale();
        let wq = self.kernel.solvent_scale();
        let om_w = self.omega_w(a, x, z)?;
        let om_z = self.kernel.omega(ScaleKind::Z, a, b, x, z)?;
        let wt_ca = wt.w(c - a);
        let first = om_z - wt.z(c - a) / wt_ca * om_w;
        let second = wq.z(x - b) - wq.z(z - b) * wq.w_ratio(x - b, z - b) - om_w / wt_ca;
        Ok((q * first + lambda * second) / (q + lambda))
    }

    /// `E_x[e^{−qT}; T < ζ_z⁺]` for q > 0 and z > c.
    pub fn liquidation_laplace(&self, z: f64) -> Result<f64> {
        let p = &self.problem;
        let BarrierSystem { a, c, .. } = p.barriers;
        require(p.discount > 0.0, || "the Laplace formula needs q > 0".into())?;
        require(z > c && z >= p.start, || format!("need z > c and z ≥ x, got z = {z}"))?;
        let om_x = self.omega_w(a, p.start, z)?;
        let om_c = self.omega_w(a, c, z)?;
        let denom = self.kernel.insolvent_scale().w(c - a) - om_c;
        Ok(self.laplace_block(p.start, z)? + om_x / denom * self.laplace_block(c, z)?)
    }

    /// `E_x[e^{−qζ_z⁺}; ζ_z⁺ < T]` for z > c.
    pub fn exit_before_liquidation(&self, z: f64) -> Result<f64> {
        let p = &self.problem;
        let BarrierSystem { a, b, c } = p.barriers;
        require(z > c && z >= p.start, || format!("need z > c and z ≥ x, got z = {z}"))?;
        let wq = self.kernel.solvent_scale();
        let om_x = self.omega_w(a, p.start, z)?;
        let om_c = self.omega_w(a, c, z)?;
        let denom = self.kernel.insolvent_scale().w(c - a) - om_c;
        Ok(wq.w_ratio(p.start - b, z - b) + om_x / denom * wq.w_ratio(c - b, z - b))
    }
}

/// Discount used in place of q = 0 where a formula needs q > 0.
pub const ZERO_DISCOUNT_PROXY: f64 = 1e-8;

pub fn gerber_shiu(problem: &LiquidationProblem, f: &dyn Penalty, z: f64) -> Result<f64> {
    Liquidation::new(problem)?.gerber_shiu(f, z)
}

pub fn joint_cdf(problem: &LiquidationProblem, u: f64, z: f64) -> Result<f64> {
    Liquidation::new(problem)?.joint_cdf(u, z)
}

pub fn atom_at_a(problem: &LiquidationProblem, z: f64) -> Result<f64> {
    Liquidation::new(problem)?.atom_at_a(z)
}

pub fn joint_density_numeric(problem: &LiquidationProblem, u: f64, z: f64, h: f64) -> Result<f64> {
    Liquidation::new(problem)?.joint_density_numeric(u, z, h)
}

/// Laplace transform of the liquidation time killed at `ζ_z⁺`; q = 0 is
/// evaluated at [`ZERO_DISCOUNT_PROXY`].
pub fn liquidation_laplace(problem: &LiquidationProblem, z: f64) -> Result<f64> {
    let problem = if problem.discount == 0.0 {
        problem.with_discount(ZERO_DISCOUNT_PROXY)
    } else {
        problem.clone()
    };
    Liquidation::new(&problem)?.liquidation_laplace(z)
}

pub fn exit_before_liquidation(problem: &LiquidationProblem, z: f64) -> Result<f64> {
    Liquidation::new(problem)?.exit_before_liquidation(z)
}

/// `P_x(T < ∞) = 1 − ψ′(0+)[W(x−b) + W(c−b)Ω(a,b,x)/(W̃_λ(c−a) − Ω(a,b,c))]`.
/// The problem's discount is ignored.
pub fn liquidation_probability(problem: &LiquidationProblem) -> Result<f64> {
    let problem = problem.with_discount(0.0);
    problem.validate()?;
    let BarrierSystem { a, b, c } = problem.barriers;
    let kernel = OmegaKernel::new(&problem.solvent, &problem.insolvent, 0.0, problem.grace_rate)?;
    let w = kernel.solvent_scale();
    let om_x = kernel.omega_inf(ScaleKind::W, a, b, problem.start)?;
    let om_c = kernel.omega_inf(ScaleKind::W, a, b, c)?;
    let denom = kernel.insolvent_scale().w(c - a) - om_c;
    let loading = problem.solvent.safety_loading();
    Ok(1.0 - loading * (w.w(problem.start - b) + w.w(c - b) * om_x / denom))
}
