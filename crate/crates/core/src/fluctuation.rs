//! Exit identities, resolvents and the ω, ℓ, Ω convolution kernels.
//!
//! Ω mixes two models: the solvent model supplies `W_q`, its Gaussian
//! coefficient and its Lévy measure; the insolvent model supplies the
//! integrand `φ ∈ {W̃_{q+λ}, W̃′_{q+λ}, Z̃_{q+λ}}`.

use num_complex::Complex64;

use crate::error::{require, Result};
use crate::levy_model::{ExpTerm, LevyModel};
use crate::numerics::{try_integrate, try_integrate_semi_inf, integrate, QuadratureSpec};
use crate::scale_functions::{ScaleFunction, ScaleKind};

fn same_model(sf_q: &ScaleFunction, sf_p: &ScaleFunction) -> Result<()> {
    require(sf_q.model() == sf_p.model(), || {
        "both scale functions must come from the same model".into()
    })
}

fn check_omega_small_args(w: f64, x: f64) -> Result<()> {
    require(x >= 0.0 && x + w >= 0.0, || {
        format!("ω/ℓ need x ≥ 0 and x + w ≥ 0, got w = {w}, x = {x}")
    })
}

fn outer(kind: ScaleKind, sf: &ScaleFunction, x: f64) -> f64 {
    match kind {
        ScaleKind::Z => sf.z(x),
        _ => sf.w(x),
    }
}

fn small_form1(kind: ScaleKind, sf_q: &ScaleFunction, sf_p: &ScaleFunction, w: f64, x: f64) -> Result<f64> {
    same_model(sf_q, sf_p)?;
    check_omega_small_args(w, x)?;
    let dp = sf_p.q() - sf_q.q();
    let head = outer(kind, sf_p, w + x);
    if dp == 0.0 {
        return Ok(head);
    }
    let conv = integrate(
        |z| outer(kind, sf_p, z + w) * sf_q.w(x - z),
        0.0,
        x,
        &QuadratureSpec::default().with_kinks([-w]),
    )?;
    Ok(head - dp * conv.value)
}

fn small_form2(kind: ScaleKind, sf_q: &ScaleFunction, sf_p: &ScaleFunction, w: f64, x: f64) -> Result<f64> {
    same_model(sf_q, sf_p)?;
    check_omega_small_args(w, x)?;
    require(w >= 0.0, || format!("the second form needs w ≥ 0, got {w}"))?;
    let dp = sf_p.q() - sf_q.q();
    let head = outer(kind, sf_q, x + w);
    if dp == 0.0 {
        return Ok(head);
    }
    let conv = integrate(
        |z| sf_q.w(x + w - z) * outer(kind, sf_p, z),
        0.0,
        w,
        &QuadratureSpec::default(),
    )?;
    Ok(head + dp * conv.value)
}

/// `ω^{(q,p)}(w,x) = W_p(w+x) − (p−q)∫₀ˣ W_p(z+w)W_q(x−z)dz`.
pub fn omega_small(sf_q: &ScaleFunction, sf_p: &ScaleFunction, w: f64, x: f64) -> Result<f64> {
    small_form1(ScaleKind::W, sf_q, sf_p, w, x)
}

/// `ω^{(q,p)}(w,x) = W_q(x+w) + (p−q)∫₀ʷ W_q(x+w−z)W_p(z)dz`.
pub fn omega_small_alt(sf_q: &ScaleFunction, sf_p: &ScaleFunction, w: f64, x: f64) -> Result<f64> {
    small_form2(ScaleKind::W, sf_q, sf_p, w, x)
}

/// `ℓ^{(q,p)}(w,x) = Z_p(w+x) − (p−q)∫₀ˣ Z_p(z+w)W_q(x−z)dz`.
pub fn ell_small(sf_q: &ScaleFunction, sf_p: &ScaleFunction, w: f64, x: f64) -> Result<f64> {
    small_form1(ScaleKind::Z, sf_q, sf_p, w, x)
}

/// `ℓ^{(q,p)}(w,x) = Z_q(x+w) + (p−q)∫₀ʷ W_q(x+w−z)Z_p(z)dz`.
pub fn ell_small_alt(sf_q: &ScaleFunction, sf_p: &ScaleFunction, w: f64, x: f64) -> Result<f64> {
    small_form2(ScaleKind::Z, sf_q, sf_p, w, x)
}

fn check_exit(x: f64, w: f64) -> Result<()> {
    require(w > 0.0 && x <= w, || format!("exit identities need w > 0 and x ≤ w, got x = {x}, w = {w}"))
}

/// `E_x[e^{−qτ_w⁺}; τ_w⁺ < τ_0⁻] = W_q(x)/W_q(w)`.
pub fn exit_up(model: &LevyModel, q: f64, x: f64, w: f64) -> Result<f64> {
    check_exit(x, w)?;
    Ok(ScaleFunction::new(model, q)?.w_ratio(x, w))
}

/// `E_x[e^{−qτ_0⁻}; τ_0⁻ < τ_w⁺] = Z_q(x) − Z_q(w)W_q(x)/W_q(w)`.
pub fn exit_down(model: &LevyModel, q: f64, x: f64, w: f64) -> Result<f64> {
    check_exit(x, w)?;
    let sf = ScaleFunction::new(model, q)?;
    Ok(sf.z(x) - sf.z(w) * sf.w_ratio(x, w))
}

/// Density in y of the q-resolvent killed on exiting `[0, w]`:
/// `W_q(x)W_q(w−y)/W_q(w) − W_q(x−y)`.
pub fn resolvent_density(model: &LevyModel, q: f64, x: f64, y: f64, w: f64) -> Result<f64> {
    require(w > 0.0 && (0.0..=w).contains(&x) && (0.0..=w).contains(&y), || {
        format!("resolvent needs 0 ≤ x, y ≤ w and w > 0, got x = {x}, y = {y}, w = {w}")
    })?;
    let sf = ScaleFunction::new(model, q)?;
    Ok(sf.w(x) * sf.w_ratio(w - y, w) - sf.w(x - y))
}

/// Arguments of Ω^{(q,q+λ)}_φ(w,b,x,z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaArgs {
    pub w: f64,
    pub b: f64,
    pub x: f64,
    pub z: f64,
    pub q: f64,
    pub lambda: f64,
    pub phi_kind: ScaleKind,
}

/// `e^{−ρY}∫₀ᵈ (Y−t)^m e^{κt} dt` with `Y = y + d` and `κ = η + ρ`.
fn shifted_moment(eta: Complex64, rho: f64, m: u32, y: f64, d: f64) -> Complex64 {
    let kappa = eta + rho;
    let big_y = y + d;
    let zd = kappa * d;
    if zd.norm() < 1.0 {
        // E1(z) = Σ zⁿ/(n+1)!, E2(z) = Σ zⁿ/(n!(n+2))
        let mut e1 = Complex64::new(0.0, 0.0);
        let mut e2 = Complex64::new(0.0, 0.0);
        let mut pow_over_fact = Complex64::new(1.0, 0.0);
        for n in 0..24 {
            let nf = n as f64;
            e1 += pow_over_fact / (nf + 1.0);
            e2 += pow_over_fact / (nf + 2.0);
            pow_over_fact = pow_over_fact * zd / (nf + 1.0);
        }
        let damp = (-rho * big_y).exp();
        match m {
            0 => e1 * d * damp,
            _ => (e1 * big_y * d - e2 * d * d) * damp,
        }
    } else {
        let near = (eta * d - rho * y).exp();
        let far = Complex64::new((-rho * big_y).exp(), 0.0);
        match m {
            0 => (near - far) / kappa,
            _ => (near * y - far * big_y) / kappa + (near - far) / (kappa * kappa),
        }
    }
}

/// Ω kernels for one (solvent, insolvent, q, λ).
#[derive(Debug, Clone)]
pub struct OmegaKernel {
    sf_q: ScaleFunction,
    sf_p: ScaleFunction,
    lambda: f64,
    sigma: f64,
    density: Vec<ExpTerm>,
    expansions: [(f64, Vec<(Complex64, Complex64)>); 3],
    solvent: LevyModel,
    spec: QuadratureSpec,
}

fn kind_index(kind: ScaleKind) -> usize {
    match kind {
        ScaleKind::W => 0,
        ScaleKind::WPrime => 1,
        ScaleKind::Z => 2,
    }
}

impl OmegaKernel {
    pub fn new(solvent: &LevyModel, insolvent: &LevyModel, q: f64, lambda: f64) -> Result<Self> {
        require(lambda >= 0.0 && lambda.is_finite(), || format!("λ must be ≥ 0, got {lambda}"))?;
        let sf_q = ScaleFunction::new(solvent, q)?;
        let sf_p = ScaleFunction::new(insolvent, q + lambda)?;
        Ok(Self::from_scales(sf_q, sf_p, lambda))
    }

    /// Kernel from prebuilt scale functions: `sf_q` of the solvent model at q,
    /// `sf_p` of the insolvent model at q + λ.
    pub fn from_scales(sf_q: ScaleFunction, sf_p: ScaleFunction, lambda: f64) -> Self {
        let solvent = sf_q.model().clone();
        Self {
            sigma: solvent.gaussian_sigma,
            density: solvent.levy_density_terms(),
            expansions: [ScaleKind::W, ScaleKind::WPrime, ScaleKind::Z].map(|k| sf_p.exp_expansion(k)),
            solvent,
            sf_q,
            sf_p,
            lambda,
            spec: QuadratureSpec::default(),
        }
    }

    pub fn solvent_scale(&self) -> &ScaleFunction {
        &self.sf_q
    }

    pub fn insolvent_scale(&self) -> &ScaleFunction {
        &self.sf_p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q(&self) -> f64 {
        self.sf_q.q()
    }

    /// `G(y) = ∫_y^∞ φ(y − θ + d) υ(dθ)` with `d = b − w`, in closed form.
    pub fn jump_kernel(&self, kind: ScaleKind, d: f64, y: f64) -> f64 {
        if self.density.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        if d > 0.0 {
            let (constant, terms) = &self.expansions[kind_index(kind)];
            let constant = *constant;
            for t in &self.density {
                let mut acc = Complex64::new(0.0, 0.0);
                if constant != 0.0 {
                    acc += shifted_moment(Complex64::new(0.0, 0.0), t.rate, t.power, y, d) * constant;
                }
                for &(a, eta) in terms {
                    acc += a * shifted_moment(eta, t.rate, t.power, y, d);
                }
                total += t.coef * acc.re;
            }
        }
        if kind == ScaleKind::Z {
            total += self.solvent.levy_tail(y + d.max(0.0));
        }
        total
    }

    fn creeping_weight(&self, kind: ScaleKind, d: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let value = match kind {
            ScaleKind::Z => self.sf_p.z(d),
            ScaleKind::W => self.sf_p.w(d),
            ScaleKind::WPrime => self.sf_p.w_prime(d),
        };
        0.5 * self.sigma * self.sigma * value
    }

    /// Ω^{(q,q+λ)}_φ(w,b,x,z).
    pub fn omega(&self, kind: ScaleKind, w: f64, b: f64, x: f64, z: f64) -> Result<f64> {
        require(b < x && x <= z, || format!("Ω needs b < x ≤ z, got b = {b}, x = {x}, z = {z}"))?;
        let d = b - w;
        let u = x - b;
        let span = z - b;
        let sf = &self.sf_q;
        let w_u = sf.w(u);
        let log_slope = sf.w_prime_scaled(span) / sf.w_scaled(span);
        let mut value = self.creeping_weight(kind, d) * (sf.w_prime(u) - w_u * log_slope);
        if !self.density.is_empty() {
            let q = integrate(
                |y| self.jump_kernel(kind, d, y) * (sf.w_ratio(span - y, span) * w_u - sf.w(u - y)),
                0.0,
                span,
                &self.spec.clone().with_kinks([u]),
            )?;
            value += q.value;
        }
        Ok(value)
    }

    /// Ω^{(q,q+λ)}_φ(w,b,x), the z → ∞ limit.
    pub fn omega_inf(&self, kind: ScaleKind, w: f64, b: f64, x: f64) -> Result<f64> {
        require(b < x, || format!("Ω needs b < x, got b = {b}, x = {x}"))?;
        let d = b - w;
        let u = x - b;
        let sf = &self.sf_q;
        let phi = sf.phi();
        let w_u = sf.w(u);
        let mut value = self.creeping_weight(kind, d) * (sf.w_prime(u) - phi * w_u);
        if !self.density.is_empty() {
            let head = integrate(
                |y| self.jump_kernel(kind, d, y) * ((-phi * y).exp() * w_u - sf.w(u - y)),
                0.0,
                u,
                &self.spec,
            )?;
            let decay = 0.9 * (phi + self.solvent.slowest_jump_decay());
            let tail = try_integrate_semi_inf(
                |y| Ok(self.jump_kernel(kind, d, y) * (-phi * y).exp() * w_u),
                u,
                decay,
                &self.spec,
            )?;
            value += head.value + tail.value;
        }
        Ok(value)
    }
}

/// Ω^{(q,q+λ)}_φ(w,b,x,z) in the Lévy-triplet form.
pub fn omega_big(solvent: &LevyModel, insolvent: &LevyModel, args: &OmegaArgs) -> Result<f64> {
    OmegaKernel::new(solvent, insolvent, args.q, args.lambda)?.omega(args.phi_kind, args.w, args.b, args.x, args.z)
}

/// Ω^{(q,q+λ)}_φ(w,b,x) = lim_{z→∞} Ω^{(q,q+λ)}_φ(w,b,x,z).
#[allow(clippy::too_many_arguments)]
pub fn omega_big_inf(
    solvent: &LevyModel,
    insolvent: &LevyModel,
    kind: ScaleKind,
    w: f64,
    b: f64,
    x: f64,
    q: f64,
    lambda: f64,
) -> Result<f64> {
    OmegaKernel::new(solvent, insolvent, q, lambda)?.omega_inf(kind, w, b, x)
}

/// Scale-function form of Ω for a single model, from prebuilt `W_q` and
/// `φ_{q+λ}` families of that model.
#[allow(clippy::too_many_arguments)]
pub fn omega_scaleform_with(
    sf_q: &ScaleFunction,
    sf_p: &ScaleFunction,
    lambda: f64,
    kind: ScaleKind,
    w: f64,
    b: f64,
    x: f64,
    z: f64,
) -> Result<f64> {
    same_model(sf_q, sf_p)?;
    require(kind != ScaleKind::WPrime, || "the scale form covers φ = W and φ = Z only".into())?;
    require(b < x && x <= z, || format!("Ω needs b < x ≤ z, got b = {b}, x = {x}, z = {z}"))?;
    let block = |end: f64| -> Result<f64> {
        let head = outer(kind, sf_p, end - w);
        if lambda == 0.0 {
            return Ok(head);
        }
        let conv = try_integrate(
            |y| Ok(sf_q.w(end - y) * outer(kind, sf_p, y - w)),
            b,
            end,
            &QuadratureSpec::default().with_kinks([w]),
        )?;
        Ok(head - lambda * conv.value)
    };
    Ok(block(x)? - sf_q.w_ratio(x - b, z - b) * block(z)?)
}

/// Ω^{(q,q+λ)}_φ(w,b,x,z) via scale functions when the two regimes share
/// one model (φ ∈ {W, Z}).
#[allow(clippy::too_many_arguments)]
pub fn omega_big_scaleform(
    model: &LevyModel,
    w: f64,
    b: f64,
    x: f64,
    z: f64,
    q: f64,
    lambda: f64,
    kind: ScaleKind,
) -> Result<f64> {
    let sf_q = ScaleFunction::new(model, q)?;
    let sf_p = ScaleFunction::new(model, q + lambda)?;
    omega_scaleform_with(&sf_q, &sf_p, lambda, kind, w, b, x, z)
}
