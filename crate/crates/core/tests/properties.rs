use num_complex::Complex64;
use proptest::prelude::*;
use tsrk_core::chebyshev::{cheb_t, cheb_t_shifted};
use tsrk_core::design::{
    build_damped_pair, damping_residual, design_method, rebuild_pair_from_method, solve_damping, stability_length,
    DesignInput,
};
use tsrk_core::integrator::{integrate, StarterPolicy};
use tsrk_core::problems::{FnSystem, IvpProblem};
use tsrk_core::stability::{char_roots, max_abs_root, stable_on_real_axis};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chebyshev_on_unit_interval(s in 0usize..200, theta in 0.0f64..std::f64::consts::PI) {
        let got = cheb_t(s, theta.cos()).unwrap().value;
        prop_assert!((got - (s as f64 * theta).cos()).abs() < 1e-11 * (1 + s) as f64);
    }

    #[test]
    fn shifted_argument_matches_direct(s in 0usize..60, d in -2.0f64..0.5) {
        let a = cheb_t_shifted(s, d).unwrap().value;
        let b = cheb_t(s, 1.0 + d).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn damping_solution_is_consistent(s in 2usize..80, eps in 0.01f64..0.3) {
        let input = DesignInput::new(s, eps).unwrap();
        let sol = solve_damping(&input).unwrap();
        let res = damping_residual(&input, sol.alpha, sol.omega_minus_one, sol.beta).unwrap();
        prop_assert!(res.iter().all(|r| r.abs() < 1e-10), "{res:?}");
        prop_assert!(sol.omega > 1.0 && sol.beta > 0.0);
        let (r1, r0) = build_damped_pair(&sol).eval(0.0).unwrap();
        prop_assert!((r1 + r0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn principal_root_is_second_order(s in 2usize..30, mu in -1e-3f64..-1e-5) {
        let p = build_damped_pair(&solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap());
        let roots = char_roots(&p, Complex64::new(mu, 0.0));
        let principal = if (roots.zeta1.re - 1.0).abs() < (roots.zeta2.re - 1.0).abs() { roots.zeta1 } else { roots.zeta2 };
        // the root's local error is C_s / (1 - zeta_parasitic(0)) mu^3, about 7.3 mu^3
        prop_assert!((principal.re - mu.exp()).abs() <= 10.0 * mu.abs().powi(3) + 1e-12);
    }

    #[test]
    fn roots_satisfy_vieta(s in 2usize..40, re in -100.0f64..0.0, im in -30.0f64..30.0) {
        let p = build_damped_pair(&solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap());
        let mu = Complex64::new(re, im);
        let (r1, r0) = p.eval_complex(mu);
        let roots = char_roots(&p, mu);
        let scale = 1.0 + r1.norm() + r0.norm();
        prop_assert!((roots.zeta1 + roots.zeta2 - r1).norm() < 1e-12 * scale);
        prop_assert!((roots.zeta1 * roots.zeta2 + r0).norm() < 1e-12 * scale);
    }

    #[test]
    fn interval_is_stable(s in 2usize..40, frac in 0.0f64..0.999) {
        let sol = solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap();
        let p = build_damped_pair(&sol);
        let mu = -frac * stability_length(&sol).unwrap();
        prop_assert!(stable_on_real_axis(&p, mu));
        prop_assert!(max_abs_root(&p, mu) <= 1.0 + 1e-7);
    }

    #[test]
    fn recurrence_and_closed_form_agree(s in 2usize..40, frac in 0.0f64..1.0) {
        let sol = solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap();
        let m = design_method(s, 0.05).unwrap();
        let mu = -frac * stability_length(&sol).unwrap();
        let (a1, a0) = build_damped_pair(&sol).eval(mu).unwrap();
        let (b1, b0) = rebuild_pair_from_method(&m, mu);
        let scale = a1.abs().max(a0.abs());
        prop_assert!((a1 - b1).abs() < 1e-10 * scale && (a0 - b0).abs() < 1e-10 * scale);
    }

    #[test]
    fn linear_invariant_is_preserved(s in 2usize..12, k1 in 0.1f64..50.0, k2 in 0.1f64..50.0) {
        // a closed reaction chain: the components always sum to one
        let sys = FnSystem::new(3, move |_, y, dy| {
            dy[0] = -k1 * y[0] + k2 * y[2];
            dy[1] = k1 * y[0] - y[1];
            dy[2] = y[1] - k2 * y[2];
        });
        let problem = IvpProblem::new("chain", sys, 0.0, vec![0.6, 0.3, 0.1], 1.0);
        let run = integrate(&design_method(s, 0.05).unwrap(), &problem, 0.01, &StarterPolicy::default());
        // exact up to roundoff, which v_0 = a~ y_n + (1 - a~) y_{n-1} amplifies by a~ ~ 20
        if let Ok(run) = run {
            prop_assert!((run.y_end.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn linear_system_steps_match_the_pair() {
    // diagonal y' = diag(lambda) y; each component follows its own recurrence
    let lambdas = [-0.5, -3.0, -12.0, -40.0];
    let s = 5;
    let sol = solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap();
    let p = build_damped_pair(&sol);
    let h = 1.0;
    let sys = FnSystem::new(4, move |_, y, dy| {
        for i in 0..4 {
            dy[i] = lambdas[i] * y[i];
        }
    });
    let y1 = vec![0.9, 0.7, 0.2, -0.1];
    let problem = IvpProblem::new("diag", sys, 0.0, vec![1.0; 4], 101.0 * h);
    let run = integrate(&design_method(s, 0.05).unwrap(), &problem, h, &StarterPolicy::Given(y1.clone())).unwrap();
    for i in 0..4 {
        let (r1, r0) = p.eval(h * lambdas[i]).unwrap();
        let (mut prev, mut curr) = (1.0, y1[i]);
        for _ in 0..100 {
            let next = r1 * curr + r0 * prev;
            prev = curr;
            curr = next;
        }
        let peak = curr.abs().max(1e-300);
        assert!((run.y_end[i] - curr).abs() <= 1e-12 * peak.max(1e-6), "component {i}: {} vs {curr}", run.y_end[i]);
    }
}
