mod oracles;

use pdqubo::qubo::{energy, CoefficientMatrix, QuboProblem};
use pdqubo::solvers::{
    relaxed_energy, relaxed_gradient, sample_stability, solve, solve_exhaustive, SolverConfig, SolverKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> (oracles::Dense, QuboProblem) {
    let q = oracles::random_symmetric(rng, n);
    let k = rng.gen_bool(0.5).then(|| rng.gen_range(1..n));
    let p = QuboProblem::new(CoefficientMatrix::from_rows(&q).unwrap(), k)
        .unwrap()
        .with_auto_penalty();
    (q, p)
}

#[test]
fn exhaustive_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let (q, p) = random_problem(&mut rng, n.max(2));
        let r = solve_exhaustive(&p).unwrap();
        let want = oracles::brute_force_min(&q, p.k, p.penalty_weight);
        assert!((r.best_energy - want).abs() <= 1e-9 * want.abs().max(1.0));
        assert_eq!(r.best_energy, energy(&p, &r.best).unwrap());
    }
}

#[test]
fn heuristics_reach_the_oracle_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for kind in [SolverKind::Sa, SolverKind::Tabu] {
        let mut hits = 0;
        for t in 0..100 {
            let n = rng.gen_range(4..=12);
            let (_, p) = random_problem(&mut rng, n);
            let oracle = solve_exhaustive(&p).unwrap().best_energy;
            let r = solve(&p, &SolverConfig::new(kind, t)).unwrap();
            let tol = 1e-9 * oracle.abs().max(1.0);
            assert!(r.best_energy >= oracle - tol, "{kind} undershot the optimum");
            if r.best_energy <= oracle + tol {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{kind}: {hits}/100");
    }
}

#[test]
fn auto_penalty_yields_feasible_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut feasible = 0;
    for t in 0..100 {
        let n = rng.gen_range(5..=50);
        let q = oracles::random_symmetric(&mut rng, n);
        let k = rng.gen_range(1..n);
        let p = QuboProblem::new(CoefficientMatrix::from_rows(&q).unwrap(), Some(k))
            .unwrap()
            .with_auto_penalty();
        let r = solve(&p, &SolverConfig::new(SolverKind::Sa, t).with_samples(20)).unwrap();
        if r.best.count_ones() == k {
            feasible += 1;
        }
    }
    assert!(feasible >= 99, "{feasible}/100");
}

#[test]
fn relaxed_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let h = 1e-6;
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let (_, p) = random_problem(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let g = relaxed_gradient(&p, &x);
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] += h;
                down[i] -= h;
                (relaxed_energy(&p, &up) - relaxed_energy(&p, &down)) / (2.0 * h)
            })
            .collect();
        let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / norm.max(1e-12) < 1e-5, "relative error {}", diff / norm);
    }
}

#[test]
fn fixed_seed_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let (_, p) = random_problem(&mut rng, 25);
    for kind in [SolverKind::Sa, SolverKind::Tabu, SolverKind::Sgd] {
        let c = SolverConfig::new(kind, 77).with_samples(30);
        let a = solve(&p, &c).unwrap();
        let b = solve(&p, &c).unwrap();
        assert_eq!(
            (a.best, a.best_energy, a.samples, a.evaluations),
            (b.best, b.best_energy, b.samples, b.evaluations)
        );
    }
}

#[test]
fn min_energy_variance_shrinks_with_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for t in 0..5 {
        let q = oracles::random_symmetric(&mut rng, 60);
        let p = QuboProblem::new(CoefficientMatrix::from_rows(&q).unwrap(), None).unwrap();
        let mut c = SolverConfig::new(SolverKind::Sa, t);
        // a deliberately short schedule so single runs disagree
        c.sa.cooling = 0.6;
        c.sa.steps_per_temp = Some(5);
        let reports = sample_stability(&p, &c, &[1, 4, 16, 64], 20, 10).unwrap();
        for w in reports.windows(2) {
            assert!(w[1].mean <= w[0].mean);
        }
        assert!(reports[3].variance < reports[0].variance);
    }
}

#[test]
fn unconstrained_optimum_bounds_constrained_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..50 {
        let n = rng.gen_range(4..=14);
        let q = CoefficientMatrix::from_rows(&oracles::random_symmetric(&mut rng, n)).unwrap();
        let k = ((0.9 * n as f64).round() as usize).max(1);
        let free = solve_exhaustive(&QuboProblem::new(q.clone(), None).unwrap()).unwrap();
        let hard = solve_exhaustive(
            &QuboProblem::new(q, Some(k))
                .unwrap()
                .with_penalty(f64::INFINITY)
                .unwrap(),
        )
        .unwrap();
        assert!(free.best_energy <= hard.best_energy);
        assert_eq!(hard.best.count_ones(), k);
    }
}
