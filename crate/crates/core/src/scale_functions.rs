//! q-scale functions as exponential sums over the roots of
//! `(ψ(θ) − q)·D(θ)`, where `D` clears the denominators of the jump transform.

use num_complex::Complex64;

use crate::error::{require, Error, Result};
use crate::levy_model::LevyModel;
use crate::numerics::{poly_add, poly_derivative, poly_eval, poly_mul, poly_roots, poly_scale};

/// Which function of a scale family to expand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScaleKind {
    W,
    WPrime,
    Z,
}

/// `W_q(x) = Σ C_j e^{θ_j x}` on `x ≥ 0` for one (model, q).
#[derive(Debug, Clone)]
pub struct ScaleFunction {
    q: f64,
    roots: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    phi: f64,
    model: LevyModel,
}

/// Outcome of [`ScaleFunction::verify_laplace_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceReport {
    pub max_rel_err: f64,
    pub worst_theta: f64,
    pub passed: bool,
}

/// `(ψ(θ) − q)·D(θ)` and `D(θ)` as ascending coefficient lists.
fn cleared_polynomials(model: &LevyModel, q: f64) -> (Vec<f64>, Vec<f64>) {
    let (num, den) = if model.jump_rate > 0.0 {
        model.jump_law.rational_form()
    } else {
        (Vec::new(), vec![1.0])
    };
    let s2 = 0.5 * model.gaussian_sigma.powi(2);
    let mut base = vec![-model.jump_rate - q, model.drift];
    if s2 > 0.0 {
        base.push(s2);
    }
    let p = poly_add(&poly_mul(&base, &den), &poly_scale(&num, model.jump_rate));
    (p, den)
}

impl ScaleFunction {
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        require(q >= 0.0 && q.is_finite(), || format!("q must be finite and >= 0, got {q}"))?;
        model.validate()?;
        let (p, den) = cleared_polynomials(model, q);
        let roots = poly_roots(&p)?;

        let max_abs = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let tol = 1e-7 * max_abs;
        let mut min_gap = f64::INFINITY;
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                min_gap = min_gap.min((roots[i] - roots[j]).norm());
            }
        }
        if min_gap < tol {
            return Err(Error::DegenerateRoots { min_gap, tol });
        }

        let dp = poly_derivative(&p);
        let coeffs = roots
            .iter()
            .map(|&r| poly_eval(&den, r) / poly_eval(&dp, r))
            .collect();

        let phi = model.phi(q)?;
        let largest = roots[0];
        if largest.im != 0.0 || (largest.re - phi).abs() > 1e-8 * (1.0 + phi) {
            return Err(Error::Solver(format!(
                "largest root {largest} of the cleared polynomial disagrees with Φ_q = {phi}"
            )));
        }
        Ok(Self { q, roots, coeffs, phi, model: model.clone() })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Φ_q, equal to the largest real root.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    /// `Σ C_j θ_j^k e^{(θ_j − Φ)x}` for `x ≥ 0`.
    fn scaled_sum(&self, x: f64, power: i32) -> Complex64 {
        self.roots
            .iter()
            .zip(&self.coeffs)
            .map(|(&r, &c)| c * r.powi(power) * ((r - self.phi) * x).exp())
            .sum()
    }

    /// `e^{−Φ_q x} W_q(x)`, bounded for large x.
    pub fn w_scaled(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.scaled_sum(x, 0).re
        }
    }

    /// `e^{−Φ_q x} W_q′(x)`, bounded for large x.
    pub fn w_prime_scaled(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.scaled_sum(x, 1).re
        }
    }

    /// `W_q(num)/W_q(den)` evaluated without overflow (den ≥ 0).
    pub fn w_ratio(&self, num: f64, den: f64) -> f64 {
        if num < 0.0 {
            return 0.0;
        }
        (self.phi * (num - den)).exp() * self.w_scaled(num) / self.w_scaled(den)
    }

    /// `W_q(x)`, zero for negative x.
    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (self.phi * x).exp() * self.scaled_sum(x, 0).re
        }
    }

    /// Right derivative `W_q′(x)`; zero for negative x.
    pub fn w_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (self.phi * x).exp() * self.scaled_sum(x, 1).re
        }
    }

    /// `Z_q(x) = 1 + q∫₀ˣ W_q`, one for x ≤ 0.
    pub fn z(&self, x: f64) -> f64 {
        if x <= 0.0 || self.q == 0.0 {
            return 1.0;
        }
        let s: Complex64 = self
            .roots
            .iter()
            .zip(&self.coeffs)
            .map(|(&r, &c)| c / r * ((r * x).exp() - 1.0))
            .sum();
        1.0 + self.q * s.re
    }

    pub fn eval(&self, kind: ScaleKind, x: f64) -> f64 {
        match kind {
            ScaleKind::W => self.w(x),
            ScaleKind::WPrime => self.w_prime(x),
            ScaleKind::Z => self.z(x),
        }
    }

    /// The selected function on `x ≥ 0` as `constant + Σ a_j e^{θ_j x}`.
    pub fn exp_expansion(&self, kind: ScaleKind) -> (f64, Vec<(Complex64, Complex64)>) {
        let pairs = self.roots.iter().zip(&self.coeffs);
        match kind {
            ScaleKind::W => (0.0, pairs.map(|(&r, &c)| (c, r)).collect()),
            ScaleKind::WPrime => (0.0, pairs.map(|(&r, &c)| (c * r, r)).collect()),
            ScaleKind::Z if self.q == 0.0 => (1.0, Vec::new()),
            ScaleKind::Z => {
                let terms: Vec<_> = pairs.map(|(&r, &c)| (c * self.q / r, r)).collect();
                let shift: Complex64 = terms.iter().map(|(a, _)| *a).sum();
                (1.0 - shift.re, terms)
            }
        }
    }

    /// `∫₀ˣ e^{−s y} W_q(y) dy` in closed form.
    pub fn discounted_integral(&self, s: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let sum: Complex64 = self
            .roots
            .iter()
            .zip(&self.coeffs)
            .map(|(&r, &c)| {
                let k = r - s;
                if k.norm() * x < 1e-8 {
                    c * x * (1.0 + 0.5 * k * x)
                } else {
                    c * ((k * x).exp() - 1.0) / k
                }
            })
            .sum();
        sum.re
    }

    /// `e^{s x}∫ₓ^∞ e^{−s y} W_q(y) dy` for `s > Φ_q`.
    pub fn discounted_tail(&self, s: f64, x: f64) -> Result<f64> {
        require(s > self.phi, || format!("tail transform needs s > Φ_q = {}, got {s}", self.phi))?;
        let x = x.max(0.0);
        let sum: Complex64 = self
            .roots
            .iter()
            .zip(&self.coeffs)
            .map(|(&r, &c)| c * (r * x).exp() / (s - r))
            .sum();
        Ok(sum.re)
    }

    /// Compares `Σ C_j/(θ − θ_j)` with `1/(ψ(θ) − q)` on the grid.
    pub fn verify_laplace_transform(&self, theta_grid: &[f64], tol: f64) -> Result<LaplaceReport> {
        let mut report = LaplaceReport { max_rel_err: 0.0, worst_theta: f64::NAN, passed: true };
        for &t in theta_grid {
            require(t > self.phi, || format!("θ = {t} must exceed Φ_q = {}", self.phi))?;
            let s: Complex64 = self
                .roots
                .iter()
                .zip(&self.coeffs)
                .map(|(&r, &c)| c / (t - r))
                .sum();
            let err = (s.re * (self.model.laplace_exponent(t) - self.q) - 1.0).abs();
            if !(err <= report.max_rel_err) {
                report.max_rel_err = err;
                report.worst_theta = t;
            }
        }
        report.passed = report.max_rel_err < tol;
        Ok(report)
    }
}

pub fn build_scale(model: &LevyModel, q: f64) -> Result<ScaleFunction> {
    ScaleFunction::new(model, q)
}

pub fn eval_w(sf: &ScaleFunction, x: f64) -> f64 {
    sf.w(x)
}

pub fn eval_w_prime(sf: &ScaleFunction, x: f64) -> f64 {
    sf.w_prime(x)
}

pub fn eval_z(sf: &ScaleFunction, x: f64) -> f64 {
    sf.z(x)
}
