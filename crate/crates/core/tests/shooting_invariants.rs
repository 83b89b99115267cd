use minkowski_core::shooting::{shoot, Outcome, Problem, ShootConfig};
use minkowski_core::variational::{choose_rho, discrete_j, minimize_j, witness_gamma, MinimizeConfig};
use minkowski_core::Nonlinearity;
use proptest::prelude::*;

fn power(lambda: f64, q: f64, n: u32) -> Problem<f64> {
    Problem::new(Nonlinearity::power(lambda, q).unwrap(), n).unwrap()
}

fn big_f(lambda: f64, q: f64, s: f64) -> f64 {
    s.powf(q + 1.0) / (q + 1.0) - 0.5 * lambda * s * s
}

fn full_shot() -> ShootConfig<f64> {
    ShootConfig { stop_at_candidate: false, ..ShootConfig::default() }
}

const BOUNDARY: f64 = 2.768892093911;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heights_below_xi0_turn(lambda in 0.5f64..4.0, q in 2.0f64..4.0, n in 2u32..=4, t in 0.001f64..0.999) {
        let p = power(lambda, q, n);
        let th = *p.thresholds();
        let xi = th.alpha + t * (th.xi0 - th.alpha);
        let shot = shoot(&p, xi, &full_shot()).unwrap();
        prop_assert!(matches!(shot.outcome, Outcome::Turning { .. }), "{xi}: {:?}", shot.outcome);
    }

    #[test]
    fn classes_split_at_the_ground_state_and_are_open(xi in 1.001f64..10.0, sign in prop::bool::ANY) {
        prop_assume!((xi - BOUNDARY).abs() > 1e-2);
        let p = power(1.0, 3.0, 3);
        let cfg = full_shot();
        let class = shoot(&p, xi, &cfg).unwrap().outcome.name();
        prop_assert_eq!(class, if xi < BOUNDARY { "Turning" } else { "Crossing" });
        let nudged = xi * if sign { 1.0 + 1e-7 } else { 1.0 - 1e-7 };
        prop_assert_eq!(shoot(&p, nudged, &cfg).unwrap().outcome.name(), class);
    }

    #[test]
    fn profile_invariants(lambda in 0.5f64..4.0, q in 2.0f64..4.0, n in 2u32..=4, t in 0.0f64..1.0) {
        let p = power(lambda, q, n);
        let th = *p.thresholds();
        let xi = th.alpha + 1e-3 + t * (2.5 * th.xi0 - th.alpha);
        let shot = shoot(&p, xi, &full_shot()).unwrap();
        let rows = &shot.profile;
        prop_assert!(rows.len() > 2);
        prop_assert!(rows.iter().all(|r| r.uprime.abs() < 1.0));
        prop_assert!(shot.max_energy_residual < 1e-7, "{}", shot.max_energy_residual);
        for w in rows.windows(2) {
            prop_assert!(w[1].dissipation >= w[0].dissipation);
            if w[0].u > th.alpha + 1e-3 && w[1].u > th.alpha + 1e-3 {
                let m0 = w[0].r.powi(n as i32 - 1) * w[0].q;
                let m1 = w[1].r.powi(n as i32 - 1) * w[1].q;
                prop_assert!(m1 < m0, "r = {}: {m0} -> {m1}", w[1].r);
            }
        }
    }

    #[test]
    fn turning_point_balances_dissipation(lambda in 0.5f64..4.0, q in 2.0f64..4.0, n in 2u32..=4, t in 0.01f64..0.99) {
        let p = power(lambda, q, n);
        let th = *p.thresholds();
        let xi = th.alpha + t * (th.xi0 - th.alpha);
        let shot = shoot(&p, xi, &full_shot()).unwrap();
        let s = shot.final_state;
        prop_assert!(s.u > 0.0 && s.u <= th.alpha + 1e-12);
        let gap = (n - 1) as f64 * s.dissipation - big_f(lambda, q, xi) + big_f(lambda, q, s.u);
        prop_assert!(gap.abs() < 1e-8, "{gap}");
    }
}

#[test]
fn minimizer_improves_on_the_trial_function() {
    for (lambda, q, n) in [(1.0, 3.0, 3), (2.0, 2.5, 2), (0.5, 4.0, 4)] {
        let nl = Nonlinearity::power(lambda, q).unwrap();
        let th = nl.compute_thresholds(n).unwrap();
        let gamma = witness_gamma(&nl, &th);
        let cfg = MinimizeConfig { cells: 400, ..MinimizeConfig::default() };
        let pick = choose_rho(n, &nl, gamma, cfg.cells, 1e-3).unwrap();
        let min = minimize_j(n, &nl, pick.rho, gamma, &cfg).unwrap();
        assert!(min.j <= min.j_trial, "{} > {}", min.j, min.j_trial);
        assert!(min.j_trial < 0.0);
        assert!((discrete_j(n, &nl, &min.grid).unwrap() - min.j).abs() <= 1e-12 * min.j.abs());
        assert!(min.grid.max_abs_slope() < 1.0);
    }
}

#[test]
fn sine_shot_across_the_kink_keeps_the_energy_identity() {
    let p = Problem::new(Nonlinearity::sine(1.045).unwrap(), 4).unwrap();
    let shot = shoot(&p, 6.2074, &full_shot()).unwrap();
    assert!(shot.max_energy_residual <= 5e-9, "{}", shot.max_energy_residual);
}
