//! Spectrally negative Lévy processes of the form drift + σB − compound Poisson,
//! with exponential, Erlang-2 or mixed jump laws.

use num_complex::Complex64;

use crate::error::{require, Error, Result};
use crate::numerics::{poly_add, poly_mul, poly_scale};

/// Law of a single downward jump.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// Density `γ e^{−γy}`.
    Exponential { rate: f64 },
    /// Density `β² y e^{−βy}`.
    Erlang2 { rate: f64 },
    /// Weighted mixture; weights are nonnegative and sum to one.
    Mixture(Vec<(f64, JumpLaw)>),
}

/// One term `coef · y^power · e^{−rate·y}` of a jump density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coef: f64,
    pub power: u32,
    pub rate: f64,
}

impl JumpLaw {
    /// Mixture with weights normalized to sum to one.
    pub fn mixture(components: Vec<(f64, JumpLaw)>) -> Result<Self> {
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        require(total > 0.0 && total.is_finite(), || {
            "mixture weights must have a positive finite sum".into()
        })?;
        require(components.iter().all(|(w, _)| *w >= 0.0), || {
            "mixture weights must be nonnegative".into()
        })?;
        let law = JumpLaw::Mixture(components.into_iter().map(|(w, l)| (w / total, l)).collect());
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Exponential { rate } | JumpLaw::Erlang2 { rate } => {
                if *rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidModel(format!("jump rate parameter must be positive, got {rate}")))
                }
            }
            JumpLaw::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidModel("empty mixture".into()));
                }
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                if parts.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!(
                        "mixture weights must be nonnegative and sum to 1, got sum {total}"
                    )));
                }
                parts.iter().try_for_each(|(_, l)| l.validate())
            }
        }
    }

    /// Density flattened into exponential-polynomial terms.
    pub fn density_terms(&self) -> Vec<ExpTerm> {
        match self {
            JumpLaw::Exponential { rate } => vec![ExpTerm { coef: *rate, power: 0, rate: *rate }],
            JumpLaw::Erlang2 { rate } => vec![ExpTerm { coef: rate * rate, power: 1, rate: *rate }],
            JumpLaw::Mixture(parts) => parts
                .iter()
                .flat_map(|(w, l)| {
                    l.density_terms()
                        .into_iter()
                        .map(move |t| ExpTerm { coef: t.coef * w, ..t })
                })
                .filter(|t| t.coef > 0.0)
                .collect(),
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        self.density_terms()
            .iter()
            .map(|t| t.coef * y.powi(t.power as i32) * (-t.rate * y).exp())
            .sum()
    }

    /// Mass of `(y, ∞)`.
    pub fn tail(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match self {
            JumpLaw::Exponential { rate } => (-rate * y).exp(),
            JumpLaw::Erlang2 { rate } => (1.0 + rate * y) * (-rate * y).exp(),
            JumpLaw::Mixture(parts) => parts.iter().map(|(w, l)| w * l.tail(y)).sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            JumpLaw::Exponential { rate } => 1.0 / rate,
            JumpLaw::Erlang2 { rate } => 2.0 / rate,
            JumpLaw::Mixture(parts) => parts.iter().map(|(w, l)| w * l.mean()).sum(),
        }
    }

    /// `E e^{−θY}`, valid for `Re θ > −min rate`.
    pub fn laplace(&self, theta: Complex64) -> Complex64 {
        match self {
            JumpLaw::Exponential { rate } => *rate / (theta + rate),
            JumpLaw::Erlang2 { rate } => {
                let r = *rate / (theta + rate);
                r * r
            }
            JumpLaw::Mixture(parts) => parts.iter().map(|(w, l)| l.laplace(theta) * *w).sum(),
        }
    }

    /// `d/dθ E e^{−θY}` for real θ.
    fn laplace_derivative(&self, theta: f64) -> f64 {
        match self {
            JumpLaw::Exponential { rate } => -rate / (rate + theta).powi(2),
            JumpLaw::Erlang2 { rate } => -2.0 * rate * rate / (rate + theta).powi(3),
            JumpLaw::Mixture(parts) => parts.iter().map(|(w, l)| w * l.laplace_derivative(theta)).sum(),
        }
    }

    /// Distinct rates with the largest multiplicity each appears with.
    fn poles(&self) -> Vec<(f64, u32)> {
        let mut out: Vec<(f64, u32)> = Vec::new();
        for t in self.density_terms() {
            let mult = t.power + 1;
            match out.iter_mut().find(|(r, _)| *r == t.rate) {
                Some(entry) => entry.1 = entry.1.max(mult),
                None => out.push((t.rate, mult)),
            }
        }
        out
    }

    /// `(N, D)` with `E e^{−θY} = N(θ)/D(θ)` and `D = Π(ρ+θ)^m` over the poles.
    pub fn rational_form(&self) -> (Vec<f64>, Vec<f64>) {
        let poles = self.poles();
        let product = |skip: Option<(f64, u32)>| {
            poles.iter().fold(vec![1.0], |acc, &(r, m)| {
                let m = match skip {
                    Some((sr, sm)) if sr == r => m - sm,
                    _ => m,
                };
                (0..m).fold(acc, |p, _| poly_mul(&p, &[r, 1.0]))
            })
        };
        let denominator = product(None);
        let numerator = self
            .density_terms()
            .iter()
            .fold(Vec::new(), |acc, t| {
                // ∫ c y^m e^{−(ρ+θ)y} dy = c·m!/(ρ+θ)^{m+1}, and m! = 1 for m ≤ 1
                let part = poly_scale(&product(Some((t.rate, t.power + 1))), t.coef);
                poly_add(&acc, &part)
            });
        (numerator, denominator)
    }
}

/// Drift + σB − compound Poisson with intensity `jump_rate` and law `jump_law`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    pub drift: f64,
    pub gaussian_sigma: f64,
    pub jump_rate: f64,
    pub jump_law: JumpLaw,
}

impl LevyModel {
    pub fn new(drift: f64, gaussian_sigma: f64, jump_rate: f64, jump_law: JumpLaw) -> Result<Self> {
        let m = Self { drift, gaussian_sigma, jump_rate, jump_law };
        m.validate()?;
        Ok(m)
    }

    /// Model whose jump part is the superposition of independent compound
    /// Poisson streams `(intensity, law)`.
    pub fn from_components(drift: f64, gaussian_sigma: f64, components: Vec<(f64, JumpLaw)>) -> Result<Self> {
        let rate: f64 = components.iter().map(|(i, _)| i).sum();
        match components.len() {
            0 => Self::new(drift, gaussian_sigma, 0.0, JumpLaw::Exponential { rate: 1.0 }),
            1 => {
                let (i, law) = components.into_iter().next().expect("one component");
                Self::new(drift, gaussian_sigma, i, law)
            }
            _ if rate == 0.0 => Self::new(drift, gaussian_sigma, 0.0, JumpLaw::Exponential { rate: 1.0 }),
            _ => Self::new(drift, gaussian_sigma, rate, JumpLaw::mixture(components)?),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.drift, self.gaussian_sigma, self.jump_rate].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("parameters must be finite".into()));
        }
        if self.gaussian_sigma < 0.0 {
            return Err(Error::InvalidModel(format!("gaussian_sigma must be >= 0, got {}", self.gaussian_sigma)));
        }
        if self.jump_rate < 0.0 {
            return Err(Error::InvalidModel(format!("jump_rate must be >= 0, got {}", self.jump_rate)));
        }
        if !(self.gaussian_sigma > 0.0 || (self.drift > 0.0 && self.jump_rate > 0.0)) {
            return Err(Error::InvalidModel(
                "monotone paths: need gaussian_sigma > 0, or drift > 0 with jumps".into(),
            ));
        }
        self.jump_law.validate()
    }

    /// ψ(θ) = drift·θ + σ²θ²/2 + rate·(E e^{−θY} − 1).
    pub fn laplace_exponent(&self, theta: f64) -> f64 {
        let jumps = if self.jump_rate > 0.0 {
            self.jump_rate * (self.jump_law.laplace(Complex64::new(theta, 0.0)).re - 1.0)
        } else {
            0.0
        };
        self.drift * theta + 0.5 * self.gaussian_sigma.powi(2) * theta * theta + jumps
    }

    pub fn laplace_exponent_derivative(&self, theta: f64) -> f64 {
        let jumps = if self.jump_rate > 0.0 {
            self.jump_rate * self.jump_law.laplace_derivative(theta)
        } else {
            0.0
        };
        self.drift + self.gaussian_sigma.powi(2) * theta + jumps
    }

    /// ψ′(0+) = drift − rate·E Y.
    pub fn safety_loading(&self) -> f64 {
        let mean = if self.jump_rate > 0.0 { self.jump_law.mean() } else { 0.0 };
        self.drift - self.jump_rate * mean
    }

    /// Right inverse Φ_q = sup{θ ≥ 0 : ψ(θ) = q}.
    pub fn phi(&self, q: f64) -> Result<f64> {
        require(q >= 0.0 && q.is_finite(), || format!("q must be finite and >= 0, got {q}"))?;
        let loading = self.safety_loading();
        if q == 0.0 && loading >= 0.0 {
            return Ok(0.0);
        }
        let psi = |t: f64| self.laplace_exponent(t) - q;
        let mut lo = 0.0;
        if q == 0.0 {
            // ψ dips below zero first: start the bracket at the minimizer.
            let mut hi = 1.0;
            while self.laplace_exponent_derivative(hi) <= 0.0 {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::Solver("could not bracket the minimizer of ψ".into()));
                }
            }
            let mut l = 0.0;
            for _ in 0..200 {
                let m = 0.5 * (l + hi);
                if self.laplace_exponent_derivative(m) > 0.0 {
                    hi = m;
                } else {
                    l = m;
                }
            }
            lo = hi;
        }
        let mut hi = lo.max(1.0);
        let mut doublings = 0;
        while psi(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(Error::Solver(format!("could not bracket Φ_q for q = {q}")));
            }
        }
        let mut t = hi;
        for iter in 0..200 {
            let f = psi(t);
            if f.abs() <= 1e-12 * q.max(1.0) {
                return Ok(t);
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.laplace_exponent_derivative(t);
            let newton = t - f / d;
            t = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi && iter > 2 {
                return Ok(t);
            }
        }
        Err(Error::Solver(format!(
            "Φ_q iteration for q = {q} stalled with |ψ−q| = {:e}",
            psi(t).abs()
        )))
    }

    /// Lévy tail υ(y, ∞) = rate·P(Y > y).
    pub fn levy_tail(&self, y: f64) -> f64 {
        self.jump_rate * self.jump_law.tail(y)
    }

    /// Lévy density rate·f_Y(y).
    pub fn levy_density(&self, y: f64) -> f64 {
        self.jump_rate * self.jump_law.density(y)
    }

    /// Lévy density as exponential-polynomial terms (empty without jumps).
    pub fn levy_density_terms(&self) -> Vec<ExpTerm> {
        if self.jump_rate == 0.0 {
            return Vec::new();
        }
        self.jump_law
            .density_terms()
            .into_iter()
            .map(|t| ExpTerm { coef: t.coef * self.jump_rate, ..t })
            .collect()
    }

    /// Slowest exponential decay rate of the jump tail (∞ without jumps).
    pub fn slowest_jump_decay(&self) -> f64 {
        self.levy_density_terms()
            .iter()
            .map(|t| t.rate)
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parisian_model() -> LevyModel {
        LevyModel::new(5.0, 0.5, 2.0, JumpLaw::Erlang2 { rate: 2.0 }).unwrap()
    }

    #[test]
    fn exponent_at_zero_and_one() {
        let m = parisian_model();
        assert_eq!(m.laplace_exponent(0.0), 0.0);
        let expect = 5.0 - 2.0 + 2.0 * 4.0 / 9.0 + 0.125;
        assert!((m.laplace_exponent(1.0) - expect).abs() < 1e-14);
    }

    #[test]
    fn safety_loadings() {
        assert_eq!(parisian_model().safety_loading(), 3.0);
        let bm = LevyModel::new(1.0, 1.0, 0.0, JumpLaw::Exponential { rate: 1.0 }).unwrap();
        assert_eq!(bm.safety_loading(), 1.0);
    }

    #[test]
    fn phi_solves_and_orders() {
        let m = parisian_model();
        assert_eq!(m.phi(0.0).unwrap(), 0.0);
        let p1 = m.phi(0.1).unwrap();
        assert!((m.laplace_exponent(p1) - 0.1).abs() < 1e-10);
        assert!(p1 < m.phi(0.5).unwrap());
        assert!(m.phi(-1.0).is_err());
    }

    #[test]
    fn phi_with_negative_loading_at_zero() {
        let m = LevyModel::new(1.0, 1.0, 2.0, JumpLaw::Exponential { rate: 1.0 }).unwrap();
        let p = m.phi(0.0).unwrap();
        assert!(p > 0.0);
        assert!(m.laplace_exponent(p).abs() < 1e-12);
    }

    #[test]
    fn tails() {
        let e = LevyModel::new(1.0, 0.0, 2.0, JumpLaw::Exponential { rate: 1.0 }).unwrap();
        assert_eq!(e.levy_tail(0.0), 2.0);
        let g = LevyModel::new(1.0, 0.0, 3.0, JumpLaw::Erlang2 { rate: 2.0 }).unwrap();
        assert!((g.levy_tail(1.0) - 3.0 * 3.0 * (-2f64).exp()).abs() < 1e-15);
        let mix = LevyModel::from_components(
            8.0,
            2.0,
            vec![(3.0, JumpLaw::Erlang2 { rate: 2.0 }), (2.0, JumpLaw::Exponential { rate: 1.0 })],
        )
        .unwrap();
        assert!((mix.levy_tail(0.0) - 5.0).abs() < 1e-15);
        assert!((mix.safety_loading() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rational_form_matches_laplace() {
        let law = JumpLaw::mixture(vec![
            (0.6, JumpLaw::Erlang2 { rate: 2.0 }),
            (0.4, JumpLaw::Exponential { rate: 1.0 }),
            (0.1, JumpLaw::Exponential { rate: 2.0 }),
        ])
        .unwrap();
        let (n, d) = law.rational_form();
        for t in [0.0, 0.3, 1.7, 9.0] {
            let z = Complex64::new(t, 0.0);
            let ratio = crate::numerics::poly_eval(&n, z) / crate::numerics::poly_eval(&d, z);
            assert!((ratio - law.laplace(z)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_monotone_and_negative() {
        assert!(LevyModel::new(1.0, 0.0, 0.0, JumpLaw::Exponential { rate: 1.0 }).is_err());
        assert!(LevyModel::new(-1.0, 0.0, 1.0, JumpLaw::Exponential { rate: 1.0 }).is_err());
        assert!(LevyModel::new(1.0, -0.1, 1.0, JumpLaw::Exponential { rate: 1.0 }).is_err());
        assert!(LevyModel::new(1.0, 1.0, 1.0, JumpLaw::Erlang2 { rate: 0.0 }).is_err());
    }
}
