use are_vi::are::{run_algorithm1, run_are, run_are_restart};
use are_vi::metrics::{merit_estimate, slope_estimate};
use are_vi::oracle::taylor_oracle;
use are_vi::problems::{self, AffineSpec};
use are_vi::subproblem::{bisection_lambda, inner_eg, newton_lambda, solve_subproblem, ss2_loop};
use are_vi::{AREConfig, ConvergenceTrace, FeasibleSet, Matrix, Sampler, StepKind, Strategy, SubproblemInstance, VIProblem, Vector};
use proptest::prelude::*;

fn set_for(kind: u8, n: usize, s: &mut Sampler) -> FeasibleSet {
    match kind % 4 {
        0 => FeasibleSet::whole_space(n),
        1 => FeasibleSet::nonnegative_orthant(n),
        2 => {
            let lo = Vector::from_fn(n, |_, _| s.uniform_range(-2.0, 0.0));
            let hi = Vector::from_fn(n, |i, _| lo[i] + s.uniform_range(0.1, 3.0));
            FeasibleSet::boxed(lo, hi).unwrap()
        }
        _ => FeasibleSet::ball(s.normal_vector(n) * 0.5, s.uniform_range(0.2, 2.0)).unwrap(),
    }
}

fn monotone_problem(seed: u64, n: usize, mu: f64, set: FeasibleSet) -> VIProblem {
    let spec = AffineSpec {
        dim: n,
        mu,
        l_sym: mu + 2.0,
        skew: 1.5,
        seed,
    };
    let p = problems::random_affine(&spec, set).unwrap();
    let l1 = p.l1;
    p.with_constants(l1, 1.0, mu).unwrap()
}

/// `gamma_k = M ||x_half - x||` and the stored averages, replayed from the records.
fn assert_trace_identities(trace: &ConvergenceTrace, reg: f64) {
    let n = trace.final_iterate.len();
    let (mut sum, mut weight) = (Vector::zeros(n), 0.0);
    let mut outputs = trace.epoch_outputs.iter();
    let mut epoch = 1;
    for r in &trace.records {
        if r.epoch != epoch {
            let out = outputs.next().expect("an output per closed epoch");
            assert!((out - &sum / weight).norm() <= 1e-12 * out.norm().max(1.0));
            (sum, weight, epoch) = (Vector::zeros(n), 0.0, r.epoch);
        }
        let (x, x_half) = (r.x.as_ref().unwrap(), r.x_half.as_ref().unwrap());
        if r.step_kind == StepKind::Stationary {
            continue;
        }
        let want = reg * (x_half - x).norm();
        assert!((r.gamma_k - want).abs() <= 1e-12 * want.max(f64::MIN_POSITIVE), "{} vs {want}", r.gamma_k);
        match r.step_kind {
            StepKind::Are => {
                sum += x_half / r.gamma_k;
                weight += 1.0 / r.gamma_k;
            }
            _ => (sum, weight) = (Vector::zeros(n), 0.0),
        }
    }
    if weight > 0.0 {
        let mean = match outputs.next() {
            Some(out) => out.clone(),
            None => {
                assert!((trace.gamma_sum - weight).abs() <= 1e-12 * weight);
                trace.averaged_iterate.clone().unwrap()
            }
        };
        assert!((&mean - &sum / weight).norm() <= 1e-12 * mean.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_firmly_nonexpansive(seed in any::<u64>(), kind in 0u8..4, n in 1usize..6) {
        let mut s = Sampler::new(seed);
        let set = set_for(kind, n, &mut s);
        let z = s.normal_vector(n) * 4.0;
        let w = s.normal_vector(n) * 4.0;
        let (pz, pw) = (set.project(&z).unwrap(), set.project(&w).unwrap());
        prop_assert!(set.contains(&pz, 1e-12));
        prop_assert!((set.project(&pz).unwrap() - &pz).norm() <= 1e-10);
        let d = &pz - &pw;
        prop_assert!(d.norm_squared() <= d.dot(&(&z - &w)) + 1e-10);
    }

    #[test]
    fn are_iterates_stay_feasible(seed in any::<u64>(), kind in 1u8..4, n in 2usize..5) {
        let mut s = Sampler::new(seed);
        let set = set_for(kind, n, &mut s);
        let problem = monotone_problem(seed, n, 0.0, set.clone());
        let oracle = taylor_oracle(&problem, 2).unwrap();
        let cfg = AREConfig { max_iters: 8, tol_residual: 1e-12, d0: Some(5.0), ..AREConfig::new(2) };
        let trace = run_are(&problem, &oracle, &cfg, &set.anchor_point()).unwrap();
        for r in &trace.records {
            for x in [&r.x, &r.x_half, &r.x_next] {
                prop_assert!(set.contains(x.as_ref().unwrap(), 1e-9));
            }
        }
        prop_assert!(set.contains(&trace.final_iterate, 1e-9));
    }

    #[test]
    fn traces_keep_gamma_and_averages_consistent(seed in any::<u64>(), kind in 0u8..4, n in 2usize..5) {
        let mut s = Sampler::new(seed);
        let set = set_for(kind, n, &mut s);
        let problem = monotone_problem(seed, n, 0.5, set.clone());
        let oracle = taylor_oracle(&problem, 2).unwrap();
        let cfg = AREConfig { max_iters: 12, tol_residual: 1e-13, d0: Some(5.0), restart_n: Some(3), ..AREConfig::new(2) };
        let reg = cfg.reg(&oracle).unwrap();
        let x0 = set.anchor_point();
        for trace in [
            run_are(&problem, &oracle, &cfg, &x0).unwrap(),
            run_are_restart(&problem, &oracle, &cfg, &x0).unwrap(),
            run_algorithm1(&problem, &oracle, &cfg, &x0).unwrap(),
        ] {
            assert_trace_identities(&trace, reg);
        }
    }

    #[test]
    fn strategies_agree_on_unconstrained_instances(seed in any::<u64>(), n in 1usize..6, m in 0.3f64..3.0) {
        let mut s = Sampler::new(seed);
        let problem = monotone_problem(seed, n, 0.0, FeasibleSet::whole_space(n));
        let oracle = taylor_oracle(&problem, 2).unwrap();
        let anchor = s.normal_vector(n);
        let inst = SubproblemInstance::new(&oracle, &anchor, m, problem.set());
        let base = newton_lambda(&inst, 1e-12).unwrap().x_half;
        for other in [
            bisection_lambda(&inst, 1e-12).unwrap().x_half,
            ss2_loop(&inst, 1e-12).unwrap().x_half,
            inner_eg(&inst, None, 1e-12).unwrap().x_half,
        ] {
            prop_assert!((&base - other).norm() <= 1e-6);
        }
    }

    #[test]
    fn constrained_subproblems_are_certified(seed in any::<u64>(), kind in 1u8..4, n in 1usize..6, m in 0.3f64..3.0) {
        let mut s = Sampler::new(seed);
        let set = set_for(kind, n, &mut s);
        let problem = monotone_problem(seed, n, 0.0, set.clone());
        let oracle = taylor_oracle(&problem, 2).unwrap();
        let anchor = set.project(&s.normal_vector(n)).unwrap();
        let inst = SubproblemInstance::new(&oracle, &anchor, m, &set);
        for strategy in [Strategy::BisectionLambda, Strategy::InnerEg] {
            let sol = solve_subproblem(&inst, strategy, 1e-10).unwrap();
            prop_assert!(set.contains(&sol.x_half, 1e-12));
            prop_assert!(inst.certificate(&sol.x_half) <= 1e-8, "{strategy}: {}", inst.certificate(&sol.x_half));
        }
    }

    #[test]
    fn merit_estimate_grows_with_samples(seed in any::<u64>(), n in 1usize..5) {
        let problem = monotone_problem(seed, n, 0.0, FeasibleSet::cube(n, -1.0, 1.0).unwrap());
        let x_bar = Sampler::new(seed ^ 1).point_in_box(&Vector::from_element(n, -1.0), &Vector::from_element(n, 1.0));
        let few = merit_estimate(&problem, &x_bar, &mut Sampler::new(seed), 10).unwrap().value;
        let many = merit_estimate(&problem, &x_bar, &mut Sampler::new(seed), 200).unwrap().value;
        prop_assert!(few >= 0.0 && many >= few);
    }

    #[test]
    fn slope_of_an_exact_power_law(c in 0.1f64..10.0, q in -3.0f64..-0.2) {
        let series: Vec<(usize, f64)> = (1..=500).map(|k| (k, c * (k as f64).powf(q))).collect();
        let fit = slope_estimate(&series, 10, 500).unwrap();
        prop_assert!((fit.slope - q).abs() <= 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() <= 1e-8);
    }
}

#[test]
fn random_linear_regularized_step_matches_dense_kkt_solve() {
    // on the whole space the subproblem is a scalar equation in lambda; compare
    // with a fixed-point iteration on lambda run to convergence
    let mut s = Sampler::new(7);
    for _ in 0..10 {
        let n = 4;
        let problem = monotone_problem(s.uniform().to_bits(), n, 0.2, FeasibleSet::whole_space(n));
        let oracle = taylor_oracle(&problem, 2).unwrap();
        let anchor = s.normal_vector(n);
        let c = problem.eval_operator(&anchor).unwrap();
        let b = problem.jacobian(&anchor).unwrap();
        let step = |lambda: f64| -(b.clone() + Matrix::identity(n, n) * lambda).lu().solve(&c).unwrap();
        let mut lambda: f64 = 1.0;
        for _ in 0..2000 {
            // damped iteration lambda <- sqrt(lambda * ||d(lambda)||), a contraction towards the root
            lambda = (lambda * step(lambda).norm()).sqrt();
        }
        let inst = SubproblemInstance::new(&oracle, &anchor, 1.0, problem.set());
        let got = newton_lambda(&inst, 1e-13).unwrap();
        assert!((got.lambda - lambda).abs() <= 1e-9 * lambda.max(1.0), "{} vs {lambda}", got.lambda);
        assert!((got.x_half - (&anchor + step(lambda))).norm() <= 1e-9);
    }
}
