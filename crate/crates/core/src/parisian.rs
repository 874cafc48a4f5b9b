//! Single-model specialization: Parisian ruin with exponential implementation
//! delays, with and without a lower barrier.

use crate::error::{require, Result};
use crate::fluctuation::{ell_small, omega_scaleform_with, omega_small};
use crate::levy_model::LevyModel;
use crate::numerics::QuadratureSpec;
use crate::scale_functions::{ScaleFunction, ScaleKind};

/// Arguments of the Parisian identities; `a = None` means no lower barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ParisianArgs {
    pub model: LevyModel,
    pub q: f64,
    pub lambda: f64,
    pub a: Option<f64>,
    pub x: f64,
    pub z: Option<f64>,
}

impl ParisianArgs {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        require(self.q >= 0.0 && self.q.is_finite(), || format!("q must be ≥ 0, got {}", self.q))?;
        require(self.lambda > 0.0 && self.lambda.is_finite(), || {
            format!("λ must be positive, got {}", self.lambda)
        })?;
        if let Some(a) = self.a {
            require(a < 0.0, || format!("lower barrier a must be negative, got {a}"))?;
        }
        require(self.x > 0.0, || format!("x must be positive, got {}", self.x))?;
        if let Some(z) = self.z {
            require(z >= self.x, || format!("need z ≥ x, got z = {z}, x = {}", self.x))?;
        }
        Ok(())
    }

    fn scales(&self) -> Result<(ScaleFunction, ScaleFunction)> {
        Ok((ScaleFunction::new(&self.model, self.q)?, ScaleFunction::new(&self.model, self.q + self.lambda)?))
    }

    fn upper(&self) -> Result<f64> {
        self.z.ok_or_else(|| crate::Error::Precondition("an upper level z is required".into()))
    }
}

/// The explicit scale-function combination `K^{(q,q+λ)}(a,b,x,z)` with safety
/// barrier `c`.
#[allow(clippy::too_many_arguments)]
pub fn k_function(model: &LevyModel, q: f64, lambda: f64, a: f64, b: f64, x: f64, z: f64, c: f64) -> Result<f64> {
    require(a < b && b < c && c < z && b < x && x <= z, || {
        format!("need a < b < c < z and b < x ≤ z, got a = {a}, b = {b}, c = {c}, x = {x}, z = {z}")
    })?;
    require(q > 0.0 && lambda > 0.0, || format!("need q, λ > 0, got q = {q}, λ = {lambda}"))?;
    let sf_q = ScaleFunction::new(model, q)?;
    let sf_p = ScaleFunction::new(model, q + lambda)?;
    k_with(&sf_q, &sf_p, lambda, a, b, x, z, c)
}

#[allow(clippy::too_many_arguments)]
fn k_with(sf_q: &ScaleFunction, sf_p: &ScaleFunction, lambda: f64, a: f64, b: f64, x: f64, z: f64, c: f64) -> Result<f64> {
    let q = sf_q.q();
    let om_w = omega_scaleform_with(sf_q, sf_p, lambda, ScaleKind::W, a, b, x, z)?;
    let om_z = omega_scaleform_with(sf_q, sf_p, lambda, ScaleKind::Z, a, b, x, z)?;
    let wp_ca = sf_p.w(c - a);
    let first = om_z - sf_p.z(c - a) / wp_ca * om_w;
    let second = sf_q.z(x - b) - sf_q.z(z - b) * sf_q.w_ratio(x - b, z - b) - om_w / wp_ca;
    Ok((q * first + lambda * second) / (q + lambda))
}

/// `E_x[e^{−qT}; T < ζ_z⁺]` when both regimes share `model`, through the
/// K-function.
#[allow(clippy::too_many_arguments)]
pub fn liquidation_laplace_single(model: &LevyModel, q: f64, lambda: f64, a: f64, b: f64, c: f64, x: f64, z: f64) -> Result<f64> {
    require(q > 0.0 && lambda > 0.0, || format!("need q, λ > 0, got q = {q}, λ = {lambda}"))?;
    require(a < b && b < c && c < z && b < x && x <= z, || {
        format!("need a < b < c < z and b < x ≤ z, got a = {a}, b = {b}, c = {c}, x = {x}, z = {z}")
    })?;
    let sf_q = ScaleFunction::new(model, q)?;
    let sf_p = ScaleFunction::new(model, q + lambda)?;
    let om_x = omega_scaleform_with(&sf_q, &sf_p, lambda, ScaleKind::W, a, b, x, z)?;
    let om_c = omega_scaleform_with(&sf_q, &sf_p, lambda, ScaleKind::W, a, b, c, z)?;
    let k_x = k_with(&sf_q, &sf_p, lambda, a, b, x, z, c)?;
    let k_c = k_with(&sf_q, &sf_p, lambda, a, b, c, z, c)?;
    Ok(k_x + om_x / (sf_p.w(c - a) - om_c) * k_c)
}

/// Down and up two-sided exits with Parisian ruin and a lower barrier:
/// `(E_x[e^{−qT_λ(a)}; T_λ(a) < τ_z⁺], E_x[e^{−qτ_z⁺}; τ_z⁺ < T_λ(a)])`.
pub fn parisian_exit_laplace(args: &ParisianArgs) -> Result<(f64, f64)> {
    args.validate()?;
    let a = args.a.ok_or_else(|| crate::Error::Precondition("the exit identities need a finite lower barrier".into()))?;
    let z = args.upper()?;
    let (sf_q, sf_p) = args.scales()?;
    let (q, lambda, x) = (args.q, args.lambda, args.x);
    let om_x = omega_small(&sf_q, &sf_p, -a, x)?;
    let om_z = omega_small(&sf_q, &sf_p, -a, z)?;
    let ratio = om_x / om_z;
    let ell_x = ell_small(&sf_q, &sf_p, -a, x)?;
    let ell_z = ell_small(&sf_q, &sf_p, -a, z)?;
    let down = (q * (ell_x - ell_z * ratio) + lambda * (sf_q.z(x) - sf_q.z(z) * ratio)) / (q + lambda);
    Ok((down, ratio))
}

/// Density in `u` of `E_x[e^{−qτ_λ}; X_{τ_λ} ∈ du, τ_λ < τ_a⁻ ∧ τ_z⁺]`; with
/// `a = None` the lower barrier is removed.
pub fn parisian_gs_density(args: &ParisianArgs, u: f64) -> Result<f64> {
    args.validate()?;
    let z = args.upper()?;
    require(z > args.x, || format!("need z > x, got z = {z}, x = {}", args.x))?;
    let (sf_q, sf_p) = args.scales()?;
    let x = args.x;
    let ratio = match args.a {
        Some(a) => {
            require(a < u && u <= 0.0, || format!("need a < u ≤ 0, got a = {a}, u = {u}"))?;
            omega_small(&sf_q, &sf_p, -a, x)? / omega_small(&sf_q, &sf_p, -a, z)?
        }
        None => {
            require(u < 0.0, || format!("need u < 0, got {u}"))?;
            calh_with(&sf_q, &sf_p, x)? / calh_with(&sf_q, &sf_p, z)?
        }
    };
    let om_uz = omega_small(&sf_q, &sf_p, -u, z)?;
    let om_ux = omega_small(&sf_q, &sf_p, -u, x)?;
    Ok(args.lambda * (ratio * om_uz - om_ux))
}

/// `ℋ^{(q+λ,−λ)}(x) = e^{Φ_{q+λ}x}[1 − λ∫₀ˣ e^{−Φ_{q+λ}y}W_q(y)dy]`.
///
/// For λ > 0 the bracket equals `λ∫ₓ^∞ e^{−Φ_{q+λ}y}W_q(y)dy`, which is
/// evaluated in closed form without the cancellation of the direct form.
pub fn calh(model: &LevyModel, q: f64, lambda: f64, x: f64) -> Result<f64> {
    require(x >= 0.0, || format!("ℋ needs x ≥ 0, got {x}"))?;
    require(lambda >= 0.0 && q >= 0.0, || format!("need q, λ ≥ 0, got q = {q}, λ = {lambda}"))?;
    let sf_q = ScaleFunction::new(model, q)?;
    if lambda == 0.0 {
        return Ok((sf_q.phi() * x).exp());
    }
    let sf_p = ScaleFunction::new(model, q + lambda)?;
    calh_with(&sf_q, &sf_p, x)
}

fn calh_with(sf_q: &ScaleFunction, sf_p: &ScaleFunction, x: f64) -> Result<f64> {
    let lambda = sf_p.q() - sf_q.q();
    Ok(lambda * sf_q.discounted_tail(sf_p.phi(), x)?)
}

/// The direct form of [`calh`], for cross-checks at moderate `x`.
pub fn calh_direct(model: &LevyModel, q: f64, lambda: f64, x: f64) -> Result<f64> {
    require(x >= 0.0, || format!("ℋ needs x ≥ 0, got {x}"))?;
    let sf_q = ScaleFunction::new(model, q)?;
    let phi_p = model.phi(q + lambda)?;
    Ok((phi_p * x).exp() * (1.0 - lambda * sf_q.discounted_integral(phi_p, x)))
}

fn require_loading(model: &LevyModel) -> Result<f64> {
    let loading = model.safety_loading();
    require(loading > 0.0, || format!("safety loading must be positive, got {loading}"))?;
    Ok(loading)
}

/// `P_x(T_λ(a) < ∞) = 1 − ψ′(0+)ω^{(0,λ)}(−a,x)/Z_λ(−a)`.
pub fn parisian_ruin_prob_barrier(model: &LevyModel, lambda: f64, a: f64, x: f64) -> Result<f64> {
    require(a < 0.0 && x >= 0.0, || format!("need a < 0 ≤ x, got a = {a}, x = {x}"))?;
    require(lambda > 0.0, || format!("λ must be positive, got {lambda}"))?;
    let loading = require_loading(model)?;
    let sf_0 = ScaleFunction::new(model, 0.0)?;
    let sf_l = ScaleFunction::new(model, lambda)?;
    Ok(1.0 - loading * omega_small(&sf_0, &sf_l, -a, x)? / sf_l.z(-a))
}

/// `P_x(τ_λ < ∞) = 1 − ψ′(0+)Φ_λ/λ·ℋ^{(λ,−λ)}(x)`.
pub fn parisian_ruin_prob(model: &LevyModel, lambda: f64, x: f64) -> Result<f64> {
    require(x >= 0.0, || format!("x must be ≥ 0, got {x}"))?;
    require(lambda > 0.0, || format!("λ must be positive, got {lambda}"))?;
    let loading = require_loading(model)?;
    let sf_0 = ScaleFunction::new(model, 0.0)?;
    let phi = model.phi(lambda)?;
    Ok(1.0 - loading * phi * sf_0.discounted_tail(phi, x)?)
}

/// The Parisian ruin probability evaluated from the displayed bracket
/// `e^{Φ_λx} − λ∫₀ˣ e^{Φ_λz}W(x−z)dz` by quadrature.
pub fn parisian_ruin_prob_quadrature(model: &LevyModel, lambda: f64, x: f64) -> Result<f64> {
    require(x >= 0.0 && lambda > 0.0, || format!("need x ≥ 0 and λ > 0, got x = {x}, λ = {lambda}"))?;
    let loading = require_loading(model)?;
    let sf_0 = ScaleFunction::new(model, 0.0)?;
    let phi = model.phi(lambda)?;
    let conv = crate::numerics::try_integrate(
        |z| Ok((phi * z).exp() * sf_0.w(x - z)),
        0.0,
        x,
        &QuadratureSpec::default().with_abs_tol(1e-12),
    )?;
    Ok(1.0 - loading * phi / lambda * ((phi * x).exp() - lambda * conv.value))
}
