use levyliq::config::{emit_config, parse_config, Grid, JumpSpec, LawKind, ModelSpec, RunConfig, SweepSpec};
use levyliq::fluctuation::{exit_down, exit_up, omega_big, omega_big_scaleform, omega_small, omega_small_alt, ell_small, ell_small_alt, OmegaArgs};
use levyliq::levy_model::{JumpLaw, LevyModel};
use levyliq::liquidation::{
    exit_before_liquidation, liquidation_laplace, liquidation_probability, BarrierSystem, ConstantPenalty, Liquidation,
    LiquidationProblem, ZERO_DISCOUNT_PROXY,
};
use levyliq::numerics::{poly_mul, poly_roots};
use levyliq::parisian::{parisian_exit_laplace, parisian_ruin_prob, parisian_ruin_prob_barrier, ParisianArgs};
use levyliq::scale_functions::{ScaleFunction, ScaleKind};
use levyliq::simulator::{simulate_path, Cause, SimConfig};
use proptest::prelude::*;

fn law(erlang: bool, rate: f64) -> JumpLaw {
    if erlang {
        JumpLaw::Erlang2 { rate }
    } else {
        JumpLaw::Exponential { rate }
    }
}

/// Jump-diffusions with one or two jump streams and positive safety loading.
fn model() -> impl Strategy<Value = LevyModel> {
    (0.2f64..2.5, 0.3f64..3.0, any::<bool>(), 1.0f64..4.0, 0.0f64..2.0, any::<bool>(), 0.5f64..3.0, 0.2f64..3.0)
        .prop_map(|(sigma, i1, e1, r1, i2, e2, r2, margin)| {
            let m1 = if e1 { 2.0 / r1 } else { 1.0 / r1 };
            let m2 = if e2 { 2.0 / r2 } else { 1.0 / r2 };
            let drift = i1 * m1 + i2 * m2 + margin;
            let mut comps = vec![(i1, law(e1, r1))];
            if i2 > 0.05 {
                comps.push((i2, law(e2, r2)));
            }
            LevyModel::from_components(drift, sigma, comps).unwrap()
        })
}

fn problem() -> impl Strategy<Value = LiquidationProblem> {
    (model(), model(), -2.0f64..0.5, 0.2f64..1.5, 0.2f64..1.5, 0.05f64..1.0, 0.1f64..1.5).prop_map(
        |(solvent, insolvent, a, db, dc, lambda, dx)| {
            let barriers = BarrierSystem::new(a, a + db, (a + db + dc).max(a + db + 0.05).max(0.05)).unwrap();
            LiquidationProblem { solvent, insolvent, barriers, grace_rate: lambda, discount: 0.0, start: barriers.b + dx }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn roots_recovered_from_products(roots in prop::collection::vec(-20.0f64..20.0, 1..6)) {
        let mut sorted = roots.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for w in sorted.windows(2) {
            prop_assume!(w[0] - w[1] > 0.05);
        }
        let p = sorted.iter().fold(vec![1.0], |acc, &r| poly_mul(&acc, &[-r, 1.0]));
        let found = poly_roots(&p).unwrap();
        prop_assert_eq!(found.len(), sorted.len());
        for (z, r) in found.iter().zip(&sorted) {
            prop_assert!((z.re - r).abs() < 1e-7 * (1.0 + r.abs()) && z.im == 0.0, "{z} vs {r}");
        }
    }

    #[test]
    fn laplace_identity_holds(m in model(), q in prop::sample::select(vec![0.0, 0.05, 0.1, 0.5, 2.0])) {
        let sf = ScaleFunction::new(&m, q).unwrap();
        let phi = sf.phi();
        prop_assert!((m.laplace_exponent(phi) - q).abs() < 1e-9 * (1.0 + q));
        let grid: Vec<f64> = (1..=10).map(|k| phi + 0.3 * k as f64).collect();
        let report = sf.verify_laplace_transform(&grid, 1e-8).unwrap();
        prop_assert!(report.passed, "{report:?}");
    }

    #[test]
    fn scale_function_shape(m in model(), q in 0.0f64..1.0, x in 0.0f64..8.0, dx in 0.01f64..2.0) {
        let sf = ScaleFunction::new(&m, q).unwrap();
        prop_assert!(sf.w(x + dx) > sf.w(x));
        prop_assert!(sf.w_prime(x + dx) > 0.0);
        prop_assert!(sf.z(x + dx) >= sf.z(x) && sf.z(x) >= 1.0);
        prop_assert_eq!(sf.w(-dx), 0.0);
        prop_assert_eq!(sf.z(-dx), 1.0);
    }

    #[test]
    fn exits_decompose(m in model(), q in 0.0f64..0.5, w in 0.5f64..5.0, frac in 0.0f64..1.0) {
        let x = frac * w;
        let up = exit_up(&m, q, x, w).unwrap();
        let down = exit_down(&m, q, x, w).unwrap();
        prop_assert!((0.0..=1.0).contains(&up) && (0.0..=1.0 + 1e-12).contains(&down));
        let up0 = exit_up(&m, 0.0, x, w).unwrap();
        let down0 = exit_down(&m, 0.0, x, w).unwrap();
        prop_assert!((up0 + down0 - 1.0).abs() < 1e-10);
        prop_assert!(up + down <= 1.0 + 1e-10);
    }

    #[test]
    fn omega_small_forms_agree(m in model(), q in prop::sample::select(vec![0.0, 0.1, 0.5]), dp in prop::sample::select(vec![0.0, 0.1, 0.5]), w in 0.0f64..3.0, x in 0.5f64..5.0) {
        let sf_q = ScaleFunction::new(&m, q).unwrap();
        let sf_p = ScaleFunction::new(&m, q + dp).unwrap();
        let (a, b) = (omega_small(&sf_q, &sf_p, w, x).unwrap(), omega_small_alt(&sf_q, &sf_p, w, x).unwrap());
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "ω: {a} vs {b}");
        let (a, b) = (ell_small(&sf_q, &sf_p, w, x).unwrap(), ell_small_alt(&sf_q, &sf_p, w, x).unwrap());
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "ℓ: {a} vs {b}");
    }

    #[test]
    fn omega_triplet_equals_scale_form_on_one_model(m in model(), q in 0.0f64..0.3, lambda in 0.05f64..1.0, w in -1.0f64..0.5, db in 0.1f64..1.0, fx in 0.05f64..1.0, dz in 0.2f64..3.0, z_kind in any::<bool>()) {
        let b = w + db;
        let z = b + dz;
        let x = b + fx * dz;
        let kind = if z_kind { ScaleKind::Z } else { ScaleKind::W };
        let t = omega_big(&m, &m, &OmegaArgs { w, b, x, z, q, lambda, phi_kind: kind }).unwrap();
        let s = omega_big_scaleform(&m, w, b, x, z, q, lambda, kind).unwrap();
        prop_assert!((t - s).abs() < 1e-6 * (1.0 + s.abs()), "{t} vs {s}");
        prop_assert!(t >= -1e-10);
    }

    #[test]
    fn joint_cdf_is_monotone_and_bounded(p in problem(), q in prop::sample::select(vec![0.0, 0.1]), u1 in -3.0f64..3.0, du in 0.0f64..2.0, dz1 in 0.0f64..3.0, dz2 in 0.0f64..3.0) {
        let p = p.with_discount(q);
        let l = Liquidation::new(&p).unwrap();
        let z1 = p.start + dz1;
        let z2 = z1 + dz2;
        let f = |u: f64, z: f64| l.joint_cdf(u, z).unwrap();
        prop_assert!(f(u1, z1) <= f(u1 + du, z1) + 1e-9);
        prop_assert!(f(u1, z1) <= f(u1, z2) + 1e-9);
        prop_assert!(f(u1, z1) >= -1e-10);
        if q > 0.0 && z2 > p.barriers.c {
            prop_assert!(f(u1 + du, z2) <= l.liquidation_laplace(z2).unwrap() + 1e-9);
        }
    }

    #[test]
    fn theorem_matches_laplace_formula(p in problem(), q in 0.01f64..1.0, dz in 0.1f64..6.0) {
        let p = p.with_discount(q);
        let z = p.start.max(p.barriers.c) + dz;
        let l = Liquidation::new(&p).unwrap();
        let gs = l.gerber_shiu(&ConstantPenalty(1.0), z).unwrap();
        let lap = l.liquidation_laplace(z).unwrap();
        prop_assert!((gs - lap).abs() < 1e-6, "{gs} vs {lap}");
        prop_assert!(gs > 0.0 && gs < 1.0);
    }

    #[test]
    fn total_probability_without_discount(p in problem(), dz in 0.1f64..6.0) {
        let z = p.start.max(p.barriers.c) + dz;
        let exit = exit_before_liquidation(&p, z).unwrap();
        let lap = liquidation_laplace(&p.with_discount(ZERO_DISCOUNT_PROXY), z).unwrap();
        prop_assert!((exit + lap - 1.0).abs() < 1e-4, "{exit} + {lap}");
    }

    #[test]
    fn liquidation_probability_trends(p in problem(), dx in 0.1f64..2.0, dl in 0.05f64..1.0) {
        let base = liquidation_probability(&p).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!(liquidation_probability(&p.with_start(p.start + dx)).unwrap() < base);
        let faster = LiquidationProblem { grace_rate: p.grace_rate + dl, ..p.clone() };
        prop_assert!(liquidation_probability(&faster).unwrap() > base);
    }

    #[test]
    fn parisian_exits_sum_to_one(m in model(), lambda in 0.05f64..2.0, a in -5.0f64..-0.2, x in 0.1f64..3.0, dz in 0.0f64..4.0) {
        let args = ParisianArgs { model: m, q: 0.0, lambda, a: Some(a), x, z: Some(x + dz) };
        let (down, up) = parisian_exit_laplace(&args).unwrap();
        prop_assert!((down + up - 1.0).abs() < 1e-8, "{down} + {up}");
        prop_assert!((0.0..=1.0 + 1e-12).contains(&up));
    }

    #[test]
    fn parisian_ruin_orderings(m in model(), lambda in 0.05f64..2.0, x in 0.05f64..3.0, a in -5.0f64..-0.2, da in 0.1f64..3.0) {
        let pure = parisian_ruin_prob(&m, lambda, x).unwrap();
        let near = parisian_ruin_prob_barrier(&m, lambda, a, x).unwrap();
        let far = parisian_ruin_prob_barrier(&m, lambda, a - da, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&pure));
        prop_assert!(pure <= far + 1e-9 && far <= near + 1e-9, "{pure} ≤ {far} ≤ {near}");
        prop_assert!(parisian_ruin_prob(&m, lambda, x + 0.5).unwrap() < pure);
    }

    #[test]
    fn simulated_paths_are_reproducible_and_consistent(p in problem(), seed in any::<u64>(), index in 0u64..1_000_000) {
        let cfg = SimConfig { seed, paths: 1, ..SimConfig::default() };
        let z = p.start + 3.0;
        let o = simulate_path(&p, Some(z), &cfg, index).unwrap();
        prop_assert_eq!(o, simulate_path(&p, Some(z), &cfg, index).unwrap());
        prop_assert!(o.running_max >= p.start && o.running_max <= z.max(o.surplus) + 1e-9);
        match o.cause {
            Cause::HitA => prop_assert!(o.liquidated && o.surplus <= p.barriers.a),
            Cause::GraceExpired => prop_assert!(o.liquidated && o.surplus > p.barriers.a && o.surplus < p.barriers.c),
            Cause::ExitedZ => prop_assert!(!o.liquidated && o.exit_time == Some(o.time)),
            Cause::Escaped | Cause::Censored => prop_assert!(!o.liquidated),
        }
    }

    #[test]
    fn config_round_trips(m in model(), lambda in 0.01f64..2.0, start in 0.5f64..5.0, paths in 1u64..10_000_000, seed in any::<u64>(), n in 1usize..60) {
        let jumps = match &m.jump_law {
            JumpLaw::Mixture(_) => vec![JumpSpec { law: LawKind::Erlang2, intensity: 1.0, rate: 2.0 }, JumpSpec { law: LawKind::Exponential, intensity: 0.5, rate: 1.5 }],
            JumpLaw::Exponential { rate } => vec![JumpSpec { law: LawKind::Exponential, intensity: m.jump_rate, rate: *rate }],
            JumpLaw::Erlang2 { rate } => vec![JumpSpec { law: LawKind::Erlang2, intensity: m.jump_rate, rate: *rate }],
        };
        let base = parse_config("solvent.drift = 1\nsolvent.sigma = 1\ngrace_rate = 1\nstart = 1\n").unwrap();
        let mut cfg = RunConfig {
            solvent: ModelSpec { drift: m.drift + 5.0, sigma: m.gaussian_sigma, jumps },
            grace_rate: lambda,
            start,
            grid_u: Some(Grid { lo: -start, hi: start, n }),
            sweep: SweepSpec { x: Some(Grid { lo: 1.0, hi: 1.0 + start, n }), dividend_component: Some(1), ..SweepSpec::default() },
            ..base
        };
        cfg.sim.paths = paths;
        cfg.sim.seed = seed;
        prop_assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
    }
}
