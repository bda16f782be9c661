use hadamard_sparse::baselines::{check_kkt, fista, ista, soft_threshold, LassoProblem, SolverOptions};
use hadamard_sparse::design::{generate_design, kfold_indices, Covariance, CovarianceSpec};
use hadamard_sparse::linalg::gram_lambda_max_quick;
use hadamard_sparse::rip::{estimate_rip, isometry_defect};
use hadamard_sparse::seed::rng_from_seed;
use hadamard_sparse::selection::{hard_threshold, score_selection, selected_indices};
use hadamard_sparse::solver::{gradient_step, IterateState, Workspace};
use hadamard_sparse::stopping::SureState;
use hadamard_sparse::{Dataset, GroundTruth, HyperParams};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    Dataset::new(x, y).unwrap()
}

fn random_vec(p: usize, scale: f64, seed: u64) -> DVector<f64> {
    let mut rng = rng_from_seed(seed);
    DVector::from_fn(p, |_, _| rng.random_range(-scale..scale))
}

/// One step written as explicit loops over `f = (2n)⁻¹‖X(g∘l) − y‖²`.
fn loop_step(x: &DMatrix<f64>, y: &DVector<f64>, g: &[f64], l: &[f64], eta: f64) -> (Vec<f64>, Vec<f64>) {
    let (n, p) = x.shape();
    let mut r = vec![0.0; n];
    for i in 0..n {
        let mut acc = -y[i];
        for j in 0..p {
            acc += x[(i, j)] * g[j] * l[j];
        }
        r[i] = acc;
    }
    let mut g2 = vec![0.0; p];
    let mut l2 = vec![0.0; p];
    for j in 0..p {
        let mut q = 0.0;
        for i in 0..n {
            q += x[(i, j)] * r[i];
        }
        q /= n as f64;
        g2[j] = g[j] - eta * l[j] * q;
        l2[j] = l[j] - eta * g[j] * q;
    }
    (g2, l2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_matches_loop_oracle(seed in any::<u64>(), eta in 0.01f64..0.5) {
        let ds = random_dataset(5, 8, seed);
        let g = random_vec(8, 1.0, seed ^ 1);
        let l = random_vec(8, 1.0, seed ^ 2);
        let state = IterateState::from_factors(&ds, g.clone(), l.clone(), 0).unwrap();
        let hp = HyperParams { eta: Some(eta), ..Default::default() };
        let next = gradient_step(&state, &ds, &hp).unwrap();
        let (g2, l2) = loop_step(ds.x(), ds.y(), g.as_slice(), l.as_slice(), eta);
        for j in 0..8 {
            prop_assert!((next.g()[j] - g2[j]).abs() <= 1e-12);
            prop_assert!((next.l()[j] - l2[j]).abs() <= 1e-12);
        }
        prop_assert_eq!(next.t(), 1);
    }

    #[test]
    fn zero_factor_pair_stays_zero(seed in any::<u64>(), j in 0usize..8, steps in 1usize..20) {
        let ds = random_dataset(6, 8, seed);
        let mut g = random_vec(8, 0.1, seed ^ 3);
        let mut l = random_vec(8, 0.1, seed ^ 4);
        g[j] = 0.0;
        l[j] = 0.0;
        let mut state = IterateState::from_factors(&ds, g, l, 0).unwrap();
        let mut ws = Workspace::new(8);
        for _ in 0..steps {
            state.step(&ds, 0.05, None, &mut ws).unwrap();
        }
        prop_assert_eq!(state.g()[j], 0.0);
        prop_assert_eq!(state.l()[j], 0.0);
        prop_assert_eq!(state.beta()[j], 0.0);
    }

    #[test]
    fn sum_and_difference_factors_evolve_multiplicatively(seed in any::<u64>()) {
        let ds = random_dataset(6, 5, seed);
        let g = random_vec(5, 1.0, seed ^ 5);
        let l = random_vec(5, 1.0, seed ^ 6);
        let eta = 0.1;
        let state = IterateState::from_factors(&ds, g, l, 0).unwrap();
        let q = ds.x().tr_mul(&(ds.x() * state.beta() - ds.y())) / ds.n() as f64;
        let mut next = state.clone();
        next.step(&ds, eta, None, &mut Workspace::new(5)).unwrap();
        let (a, b, a2, b2) = (state.a(), state.b(), next.a(), next.b());
        for j in 0..5 {
            prop_assert!((a2[j] - a[j] * (1.0 - eta * q[j])).abs() <= 1e-12);
            prop_assert!((b2[j] - b[j] * (1.0 + eta * q[j])).abs() <= 1e-12);
            prop_assert!((a2[j] * a2[j] - b2[j] * b2[j] - next.beta()[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn small_steps_do_not_increase_loss(seed in any::<u64>()) {
        let cov = CovarianceSpec::new(Covariance::Identity, 30).unwrap();
        let x = generate_design(20, &cov, seed).unwrap();
        let mut rng = rng_from_seed(seed ^ 7);
        let beta: Vec<f64> = (0..30).map(|j| if j < 3 { rng.random_range(-2.0..2.0) } else { 0.0 }).collect();
        let truth = GroundTruth::all_strong(beta, 0.1).unwrap();
        let ds = hadamard_sparse::design::attach_response(x, &truth, seed ^ 8).unwrap();
        let eta = 0.25 / gram_lambda_max_quick(ds.x());
        let hp = HyperParams { alpha: 1e-3, ..Default::default() };
        let mut state = hadamard_sparse::solver::init_iterate(&ds, &hp, seed).unwrap();
        let mut ws = Workspace::new(30);
        let mut prev = state.loss();
        for _ in 0..300 {
            state.step(&ds, eta, None, &mut ws).unwrap();
            let now = state.loss();
            prop_assert!(now <= prev * (1.0 + 1e-12) + 1e-15, "loss rose from {prev} to {now}");
            prev = now;
        }
    }

    #[test]
    fn soft_threshold_is_odd_and_nonexpansive(x in -10.0f64..10.0, z in -10.0f64..10.0, lam in 0.0f64..5.0) {
        prop_assert_eq!(soft_threshold(-x, lam), -soft_threshold(x, lam));
        prop_assert!((soft_threshold(x, lam) - soft_threshold(z, lam)).abs() <= (x - z).abs() + 1e-15);
        prop_assert!(soft_threshold(x, lam).abs() <= x.abs());
    }

    #[test]
    fn hard_threshold_selection_shrinks_with_lambda(seed in any::<u64>(), l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
        let beta = random_vec(40, 1.0, seed);
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let big = selected_indices(&hard_threshold(&beta, lo));
        let small = selected_indices(&hard_threshold(&beta, hi));
        prop_assert!(small.iter().all(|j| big.contains(j)));
        let kept = hard_threshold(&beta, lo);
        for j in 0..40 {
            prop_assert!(kept[j] == 0.0 || kept[j] == beta[j]);
        }
    }

    #[test]
    fn selection_counts_balance(sel in proptest::collection::btree_set(0usize..50, 0..50), sup in proptest::collection::btree_set(0usize..50, 1..20)) {
        let mut beta = vec![0.0; 50];
        for &j in &sup {
            beta[j] = 1.0;
        }
        let truth = GroundTruth::all_strong(beta, 1.0).unwrap();
        let sel: Vec<usize> = sel.into_iter().collect();
        let rep = score_selection(&sel, &truth);
        prop_assert_eq!(rep.false_positives as i64 - rep.true_negatives_missed as i64, sel.len() as i64 - sup.len() as i64);
    }

    #[test]
    fn kfold_is_a_reproducible_partition(n in 2usize..200, k in 2usize..10, seed in any::<u64>(), shuffle in any::<bool>()) {
        prop_assume!(k <= n);
        let folds = kfold_indices(n, k, shuffle, seed).unwrap();
        prop_assert_eq!(&folds, &kfold_indices(n, k, shuffle, seed).unwrap());
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn sure_trace_matches_explicit_product(seed in any::<u64>(), steps in 1usize..6) {
        let ds = random_dataset(6, 9, seed);
        let eta = 0.1;
        let n = 6.0;
        let mut sure = SureState::new(6, 1.0).unwrap();
        sure.drop_tol = 0.0;
        let mut product = DMatrix::<f64>::identity(6, 6);
        for k in 0..steps {
            let beta = random_vec(9, 1.0, seed ^ (100 + k as u64));
            sure.advance(ds.x(), &beta, eta, None);
            let d = DMatrix::from_diagonal(&beta.map(f64::abs));
            let factor = DMatrix::identity(6, 6) - ds.x() * d * ds.x().transpose() * (2.0 * eta / n);
            product *= factor;
        }
        prop_assert!((sure.trace_s() - product.trace()).abs() <= 1e-10 * product.trace().abs().max(1.0));
    }
}

fn brute_force_delta(x: &DMatrix<f64>, s: usize) -> f64 {
    fn rec(x: &DMatrix<f64>, s: usize, start: usize, cur: &mut Vec<usize>, best: &mut f64) {
        if cur.len() == s {
            let sub = x.select_columns(cur.iter());
            let n = x.nrows() as f64;
            let gram = sub.transpose() * &sub / n - DMatrix::identity(s, s);
            let eig = gram.symmetric_eigen().eigenvalues;
            *best = eig.iter().fold(*best, |m, e| m.max(e.abs()));
            return;
        }
        for j in start..x.ncols() {
            cur.push(j);
            rec(x, s, j + 1, cur, best);
            cur.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(x, s, 0, &mut Vec::new(), &mut best);
    best
}

#[test]
fn exhaustive_rip_equals_brute_force() {
    for seed in 0..20u64 {
        let p = 4 + (seed as usize % 7);
        let s = 1 + (seed as usize % 3);
        let ds = random_dataset(12, p, seed);
        let est = estimate_rip(&ds, s, 1_000_000, seed).unwrap();
        assert!(est.exhaustive);
        let oracle = brute_force_delta(ds.x(), s);
        assert!((est.delta_lower - oracle).abs() < 1e-12, "p={p} s={s}: {} vs {oracle}", est.delta_lower);
        assert!((isometry_defect(ds.x(), &est.worst_support) - oracle).abs() < 1e-12);
    }
}

#[test]
fn ista_and_fista_meet_kkt_on_random_instances() {
    let opts = SolverOptions {
        tol: 1e-10,
        max_iter: 200_000,
        lipschitz: None,
    };
    for seed in 0..100u64 {
        let ds = random_dataset(10 + seed as usize % 10, 5 + seed as usize % 12, seed);
        let lmax = hadamard_sparse::baselines::lambda_max(&ds);
        let lambda = lmax * (0.05 + 0.9 * (seed as f64 / 100.0));
        let prob = LassoProblem::new(&ds, lambda).unwrap();
        for sol in [ista(&prob, &opts).unwrap(), fista(&prob, &opts).unwrap()] {
            let kkt = check_kkt(&prob, &sol.beta, 1e-6);
            assert!(kkt.ok, "seed {seed}: violation {}", kkt.max_violation);
        }
    }
}

fn truncated(prob: &LassoProblem<'_>, accelerate: bool, k: usize) -> DVector<f64> {
    let opts = SolverOptions {
        tol: 0.0,
        max_iter: k,
        lipschitz: None,
    };
    let out = if accelerate { fista(prob, &opts) } else { ista(prob, &opts) };
    match out {
        Ok(sol) => sol.beta,
        Err(hadamard_sparse::Error::NotConverged { beta, .. }) => DVector::from_vec(beta),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn ista_objective_never_increases_and_fista_stays_below_start() {
    for seed in 0..10u64 {
        let ds = random_dataset(15, 12, 500 + seed);
        let prob = LassoProblem::new(&ds, 0.2 * hadamard_sparse::baselines::lambda_max(&ds)).unwrap();
        let start = prob.objective(&DVector::zeros(12));
        let mut prev = start;
        for k in 1..60 {
            let now = prob.objective(&truncated(&prob, false, k));
            assert!(now <= prev + 1e-12, "seed {seed} iteration {k}: {prev} -> {now}");
            prev = now;
            assert!(prob.objective(&truncated(&prob, true, k)) <= start + 1e-12);
        }
    }
}

#[test]
fn fista_needs_no_more_iterations_than_ista() {
    let opts = SolverOptions {
        tol: 1e-8,
        max_iter: 200_000,
        lipschitz: None,
    };
    let mut wins = 0;
    // High-dimensional instances; without restarts the momentum buys little on
    // well-conditioned p < n problems.
    for seed in 0..50u64 {
        let ds = random_dataset(20, 40 + seed as usize % 40, 900 + seed);
        let prob = LassoProblem::new(&ds, 0.1 * hadamard_sparse::baselines::lambda_max(&ds)).unwrap();
        let (fi, is) = (fista(&prob, &opts).unwrap().iters, ista(&prob, &opts).unwrap().iters);
        if fi <= is {
            wins += 1;
        }
    }
    assert!(wins >= 45, "fista faster on {wins}/50");
}
