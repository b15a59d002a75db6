use agraal::baselines::{adagrad_stepsize, bb_stepsize};
use agraal::diagnostics::{check_h_envelope, check_monotone_psi, full_suite, lemma_suite, lyapunov_series};
use agraal::oracle::Oracle;
use agraal::params::{max_gamma, nu_from, GOLDEN_RATIO};
use agraal::problems::{seeded_point, QuadraticOracle};
use agraal::trace::{read_csv, write_csv, IterRecord};
use agraal::{
    make_quadratic, run_baseline_problem, run_problem, BaselineMethod, Point, RunStatus, SolverParams,
    StopRule,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feasible_parameters_above_golden_ratio(theta in (GOLDEN_RATIO + 1e-3)..20.0, frac in 0.01f64..1.0) {
        let gamma = frac * max_gamma(theta).unwrap();
        let p = SolverParams::from_theta(theta, Some(gamma), 1.0).unwrap();
        let report = p.validate();
        prop_assert!(report.passed(), "{report}");
        prop_assert!((p.nu - nu_from(theta, gamma)).abs() <= 1e-15 * p.nu);
    }

    #[test]
    fn infeasible_below_golden_ratio(theta in 0.1..(GOLDEN_RATIO - 1e-3)) {
        prop_assert!(SolverParams::from_theta(theta, None, 1.0).is_err());
    }

    #[test]
    fn solver_invariants_on_random_quadratics(
        seed in 0u64..1000,
        dim in 1usize..12,
        log_cond in 0.0f64..4.0,
        log_eta in -6.0f64..1.0,
    ) {
        let cond = 10f64.powf(log_cond);
        let problem = make_quadratic(seed, dim, cond).unwrap();
        let eta0 = 10f64.powf(log_eta) / cond;
        let params = SolverParams::defaults(eta0).unwrap();
        let x0 = seeded_point(seed + 1, dim, 1.0);
        let t = run_problem(&problem, &x0, &params, &StopRule::iterations(150), true, false).unwrap();
        prop_assert_eq!(&t.status, &RunStatus::MaxIters);
        prop_assert_eq!(t.total_evals(), 1 + 2 * 150);
        let refs = [("xstar", problem.x_star.clone().unwrap()), ("x0", x0.clone())];
        let report = full_suite(&t, &problem, &refs).unwrap();
        prop_assert!(report.passed(), "{}", report);
    }

    #[test]
    fn psi_monotone_for_any_reference(seed in 0u64..500, scale in 0.1f64..100.0) {
        let problem = make_quadratic(seed, 6, 300.0).unwrap();
        let params = SolverParams::defaults(1.0 / 300.0).unwrap();
        let x0 = seeded_point(seed, 6, 1.0);
        let t = run_problem(&problem, &x0, &params, &StopRule::iterations(100), true, false).unwrap();
        let x_ref = seeded_point(seed + 7, 6, scale);
        let s = lyapunov_series(&t, &x_ref, problem.oracle.as_ref()).unwrap();
        prop_assert!(check_monotone_psi(&s).passed());
    }

    #[test]
    fn bb_step_within_rayleigh_bounds(
        w in proptest::collection::vec(0.1f64..50.0, 2..8),
        seed in 0u64..1000,
    ) {
        let d = w.len();
        let dx = seeded_point(seed, d, 1.0);
        let dg = Point::from_fn(d, |i, _| w[i] * dx[i]);
        let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = w.iter().cloned().fold(0.0, f64::max);
        let eta = bb_stepsize(&dx, &dg).unwrap();
        prop_assert!(eta >= (1.0 / hi) * (1.0 - 1e-12) && eta <= (1.0 / lo) * (1.0 + 1e-12));
    }

    #[test]
    fn adagrad_steps_nonincreasing(grads in proptest::collection::vec(0.0f64..10.0, 1..50)) {
        let mut sum = 0.0;
        let mut prev = f64::INFINITY;
        for g in grads {
            sum += g * g;
            if let Some(eta) = adagrad_stepsize(1.0, sum) {
                prop_assert!(eta <= prev);
                prev = eta;
            }
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(
        vals in proptest::collection::vec(
            (any::<f64>().prop_filter("finite", |v| v.is_finite()), proptest::option::of(-1e300f64..1e300)),
            1..20,
        ),
    ) {
        let records: Vec<IterRecord> = vals
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| IterRecord {
                k: k as u64,
                eta: a,
                h: b,
                alpha: b,
                beta: Some(a),
                lambda: b,
                f_bar: a,
                f_tilde: b,
                grad_norm_tilde: Some(a),
                evals_cum: 2 * k as u64 + 1,
                fallback: false,
            })
            .collect();
        let mut t = run_problem(
            &make_quadratic(0, 2, 1.0).unwrap(),
            &Point::zeros(2),
            &SolverParams::defaults(1.0).unwrap(),
            &StopRule::iterations(0),
            false,
            false,
        )
        .unwrap();
        t.records = records.clone();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.records.len(), records.len());
        for (r, s) in back.records.iter().zip(&records) {
            prop_assert_eq!(r.eta.to_bits(), s.eta.to_bits());
            prop_assert_eq!(r.h.map(f64::to_bits), s.h.map(f64::to_bits));
            prop_assert_eq!(r.lambda.map(f64::to_bits), s.lambda.map(f64::to_bits));
            prop_assert_eq!(r.f_bar.to_bits(), s.f_bar.to_bits());
            prop_assert_eq!(r.evals_cum, s.evals_cum);
        }
    }
}

#[test]
fn lemma_suite_from_serialized_trace() {
    let problem = make_quadratic(4, 8, 100.0).unwrap();
    let params = SolverParams::defaults(0.01).unwrap();
    let t = run_problem(&problem, &Point::zeros(8), &params, &StopRule::iterations(300), true, false).unwrap();
    let mut buf = Vec::new();
    write_csv(&t, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap().into_trace("agraal", Some(params));
    let oracle = problem.oracle.as_ref();
    let direct = lemma_suite(&t, Some(oracle), problem.lipschitz).unwrap();
    let replay = lemma_suite(&back, Some(oracle), problem.lipschitz).unwrap();
    assert!(direct.passed(), "{direct}");
    assert_eq!(direct, replay);
    assert!(check_h_envelope(&back, &params, 100.0).unwrap().passed());
}

#[test]
fn broken_parameters_are_detectable() {
    // Ten times the admissible nu: the sanity probe should see Psi increase
    // somewhere along an ill-conditioned run. The outcome is observed, not a theorem.
    let problem = make_quadratic(6, 20, 1e3).unwrap();
    let good = SolverParams::defaults(1e-3).unwrap();
    let bad = SolverParams::unchecked(good.theta, good.gamma, 10.0 * good.nu, good.eta0);
    assert!(bad.ensure_valid().is_err());
    let opts = agraal::RunOptions {
        store_iterates: true,
        ..Default::default()
    };
    let x0 = seeded_point(1, 20, 1.0);
    let t = agraal::solver::run_unchecked(problem.oracle.as_ref(), &x0, &bad, &StopRule::iterations(400), &opts)
        .unwrap();
    let s = lyapunov_series(&t, problem.x_star.as_ref().unwrap(), problem.oracle.as_ref()).unwrap();
    let entry = check_monotone_psi(&s);
    println!("nu x10 probe: {entry}");
}

#[test]
fn agd_beats_gd_at_200() {
    let problem = make_quadratic(3, 50, 1e3).unwrap();
    let stop = StopRule::iterations(200);
    let x0 = Point::zeros(50);
    let gd = run_baseline_problem(&BaselineMethod::Gd { eta: 1e-3 }, &problem, &x0, &stop, false).unwrap();
    let agd = run_baseline_problem(&BaselineMethod::Agd { eta: 1e-3 }, &problem, &x0, &stop, false).unwrap();
    assert!(agd.last().f_bar < gd.last().f_bar, "{} vs {}", agd.last().f_bar, gd.last().f_bar);
}

#[test]
fn gd_gap_decays_like_one_over_k() {
    let w: Vec<f64> = (1..=20).map(|i| i as f64).collect();
    let o = QuadraticOracle::new(DMatrix::from_diagonal(&Point::from_vec(w)), Point::zeros(20));
    let x0 = Point::from_element(20, 1.0);
    let t = agraal::run_baseline(
        &BaselineMethod::Gd { eta: 1.0 / 20.0 },
        &o,
        &x0,
        &StopRule::iterations(2000),
        false,
        Some(0.0),
    )
    .unwrap();
    // f(x_k) - f* <= L |x_0 - x*|^2 / (2k)
    for r in &t.records[1..] {
        assert!(r.f_bar <= 20.0 * 20.0 / (2.0 * r.k as f64));
    }
    assert!(o.value_grad(&t.solution).0 < t.records[100].f_bar);
}
