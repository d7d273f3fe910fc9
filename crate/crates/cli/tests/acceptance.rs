//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Pass a substring to run a subset.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use pdqubo::counterfactual::{compute_profile, CounterfactualProfile, PairMode};
use pdqubo::dataset::{FeatureMask, ItemFeatureMatrix, LabeledSample};
use pdqubo::qubo::{build_miqubo, build_pdqubo, energy, BinarySolution, CoefficientMatrix, QuboProblem};
use pdqubo::recsys::{EvalSplit, Evaluator, ItemKnnEvaluator, MetricSpec};
use pdqubo::solvers::{
    relaxed_energy, relaxed_gradient, sample_stability, solve, solve_exhaustive, SolverConfig, SolverKind,
};
use pdqubo::Execution;
use pdqubo_cli::config::{Builder, ExperimentConfig, KList, KValue};
use pdqubo_cli::experiments::{cmd_energy_vs_performance, cmd_pipeline, cmd_stability, prepare_run};
use pdqubo_cli::report::RunReport;
use pdqubo_cli::stats::{ks_statistic, mean};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(started: Instant, limit: Duration) -> (bool, String) {
    let t = started.elapsed();
    (t < limit, format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn dense_to_matrix(q: &oracles::Dense) -> CoefficientMatrix {
    CoefficientMatrix::from_rows(q).unwrap()
}

/// Corpus used by the planted-signal criteria.
fn planted_config(runs: usize, builder: Builder) -> ExperimentConfig {
    ExperimentConfig {
        runs,
        builder,
        synth_users: 100,
        synth_items: 200,
        synth_features: 30,
        synth_informative: 8,
        synth_sparsity: 0.8,
        synth_seed: 5,
        k: KList(vec![KValue::Fixed(8)]),
        solvers: vec![SolverKind::Sa],
        out: None,
        ..ExperimentConfig::default()
    }
}

fn oracle_optimality() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut hits = [0usize; 2];
    let mut undershoots = 0;
    for t in 0..100u64 {
        let n = rng.gen_range(4..=12);
        let q = oracles::random_symmetric(&mut rng, n);
        let k = rng.gen_bool(0.5).then(|| rng.gen_range(1..n));
        let p = QuboProblem::new(dense_to_matrix(&q), k).unwrap().with_auto_penalty();
        let oracle = oracles::brute_force_min(&q, p.k, p.penalty_weight);
        let exhaustive = solve_exhaustive(&p).unwrap().best_energy;
        let tol = 1e-9 * oracle.abs().max(1.0);
        if (exhaustive - oracle).abs() > tol {
            return Verdict::new(
                false,
                format!("exhaustive {exhaustive} disagrees with brute force {oracle}"),
            );
        }
        for (s, kind) in [SolverKind::Sa, SolverKind::Tabu].into_iter().enumerate() {
            let got = solve(&p, &SolverConfig::new(kind, t)).unwrap().best_energy;
            if got < exhaustive - tol {
                undershoots += 1;
            }
            if got <= exhaustive + tol {
                hits[s] += 1;
            }
        }
    }
    let (fast, time) = within(started, Duration::from_secs(60));
    Verdict::new(
        hits[0] >= 95 && hits[1] >= 95 && undershoots == 0 && fast,
        format!(
            "sa {}/100, tabu {}/100, undershoots {undershoots}, {time}",
            hits[0], hits[1]
        ),
    )
}

fn energy_correctness() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let q = oracles::random_symmetric(&mut rng, n);
        let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let k = rng.gen_bool(0.7).then(|| rng.gen_range(0..=n));
        let w = rng.gen_range(0.0..10.0);
        let p = QuboProblem::new(dense_to_matrix(&q), k)
            .unwrap()
            .with_penalty(w)
            .unwrap();
        let got = energy(&p, &BinarySolution::from_bits(x.clone())).unwrap();
        let want = oracles::naive_energy(&q, &x, k, w);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    let (fast, time) = within(started, Duration::from_secs(5));
    Verdict::new(
        worst <= 1e-10 && fast,
        format!("max relative error {worst:.2e}, {time}"),
    )
}

fn counterfactual_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    let mut corpora = 0;
    while corpora < 50 {
        let c = oracles::tiny_corpus(&mut rng, 8, 6);
        if c.heldout.nnz() == 0 {
            continue;
        }
        corpora += 1;
        let k = rng.gen_range(1..=c.features.num_items());
        let cutoff = rng.gen_range(1..=4);
        let e = ItemKnnEvaluator::new(
            &c.features,
            &c.train,
            &c.heldout,
            MetricSpec::ndcg(cutoff),
            k,
            EvalSplit::Validation,
        )
        .unwrap();
        let got = compute_profile(&e, PairMode::Comb, Execution::Parallel).unwrap();
        let want = oracles::profile(
            &oracles::dense_features(&c.features),
            &oracles::profiles(&c.train),
            &oracles::profiles(&c.heldout),
            k,
            cutoff,
        );
        let d = got.num_features();
        for i in 0..d {
            worst = worst.max((got.singles[i] - want.singles[i]).abs());
            for j in (0..d).filter(|&j| j != i) {
                worst = worst.max((got.pair(i, j) - want.pairs[i][j]).abs());
            }
        }
    }
    let (fast, time) = within(started, Duration::from_secs(60));
    Verdict::new(
        worst <= 1e-12 && fast,
        format!("50 corpora, max deviation {worst:.2e}, {time}"),
    )
}

fn pdqubo_fidelity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut entries = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=20);
        let singles: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let profile = CounterfactualProfile::from_parts(
            rng.gen(),
            singles,
            &upper,
            MetricSpec::ndcg(10),
            EvalSplit::Validation,
            PairMode::Comb,
            String::new(),
        )
        .unwrap();
        let q = build_pdqubo(&profile);
        for i in 0..n {
            if q.get(i, i) != -profile.singles[i] {
                return Verdict::new(
                    false,
                    format!("Q[{i}][{i}] = {} vs E = {}", q.get(i, i), profile.singles[i]),
                );
            }
            for j in (0..n).filter(|&j| j != i) {
                if q.get(i, j) != -profile.pair(i, j) {
                    return Verdict::new(
                        false,
                        format!("Q[{i}][{j}] = {} vs E = {}", q.get(i, j), profile.pair(i, j)),
                    );
                }
            }
            entries += n;
        }
    }
    Verdict::new(true, format!("{entries} entries exact over 200 profiles"))
}

fn planted_recovery() -> Verdict {
    let started = Instant::now();
    let config = planted_config(5, Builder::Pdqubo);
    let report = cmd_pipeline(&config).unwrap();
    let recovered: Vec<f64> = report
        .rows
        .iter()
        .map(|r| r.planted_recovered.unwrap() as f64 / 8.0)
        .collect();
    let after = mean(&report.rows.iter().map(|r| r.metric_after).collect::<Vec<_>>());

    let mut random_means = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for run in 0..config.runs {
        let ctx = prepare_run(&config, run, None).unwrap();
        let n = ctx.num_features();
        let values: Vec<f64> = (0..100)
            .map(|_| {
                let picked = rand::seq::index::sample(&mut rng, n, 8).into_vec();
                ctx.test
                    .evaluate_mask(&FeatureMask::complement_of(&picked, n))
                    .unwrap()
                    .metric_value
            })
            .collect();
        random_means.push(mean(&values));
    }
    let random = mean(&random_means);
    let rate = mean(&recovered);
    let (fast, time) = within(started, Duration::from_secs(600));
    Verdict::new(
        rate >= 0.8 && after > random && fast,
        format!(
            "recovery {rate:.3} per run {recovered:?}, metric-after {after:.4} vs random subsets {random:.4}, {time}"
        ),
    )
}

fn energy_vs_performance() -> Verdict {
    let started = Instant::now();
    let mut config = planted_config(1, Builder::Pdqubo);
    config.num_solutions = 200;
    let pd = cmd_energy_vs_performance(&config, Builder::Pdqubo).unwrap();
    let mi = cmd_energy_vs_performance(&config, Builder::Miqubo).unwrap();
    let rho = pd.spearman.unwrap_or(f64::NAN);
    let (fast, time) = within(started, Duration::from_secs(900));
    Verdict::new(
        pd.num_points >= 200 && rho <= -0.5 && fast,
        format!(
            "pdqubo rho {rho:.4} over {} points, miqubo rho {} (recorded), {time}",
            pd.num_points,
            mi.spearman.map_or("undefined".into(), |r| format!("{r:.4}"))
        ),
    )
}

fn comb_vs_indiv() -> Verdict {
    let metrics = |builder| -> Vec<f64> {
        let report: RunReport = cmd_pipeline(&planted_config(20, builder)).unwrap();
        report.rows.iter().map(|r| r.metric_after).collect()
    };
    let comb = metrics(Builder::Pdqubo);
    let indiv = metrics(Builder::PdquboIndiv);
    let (c, i) = (mean(&comb), mean(&indiv));
    Verdict::new(
        comb.len() == 20 && indiv.len() == 20 && c >= i,
        format!(
            "comb {c:.4} vs indiv {i:.4} over 20 runs, KS {:.3}",
            ks_statistic(&comb, &indiv)
        ),
    )
}

fn stability_laws() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut instances = 0;
    let mut violations = Vec::new();
    for t in 0..20u64 {
        let n = rng.gen_range(10..=40);
        let q = dense_to_matrix(&oracles::random_symmetric(&mut rng, n));
        let free = QuboProblem::new(q, None).unwrap();
        let reports = sample_stability(
            &free,
            &SolverConfig::new(SolverKind::Sa, t),
            &[1, 2, 4, 8, 16, 32],
            10,
            10,
        )
        .unwrap();
        instances += 1;
        if reports.windows(2).any(|w| w[1].mean > w[0].mean || w[1].min > w[0].min) {
            violations.push(format!("sample-count law at n={n}"));
        }
    }
    for _ in 0..50 {
        let n = rng.gen_range(4..=14);
        let q = dense_to_matrix(&oracles::random_symmetric(&mut rng, n));
        let k = ((0.9 * n as f64).round() as usize).max(1);
        let free = solve_exhaustive(&QuboProblem::new(q.clone(), None).unwrap()).unwrap();
        let hard = solve_exhaustive(
            &QuboProblem::new(q, Some(k))
                .unwrap()
                .with_penalty(f64::INFINITY)
                .unwrap(),
        )
        .unwrap();
        instances += 1;
        if free.best_energy > hard.best_energy {
            violations.push(format!("feasible-subset law at n={n}"));
        }
    }
    let config = ExperimentConfig {
        scales: vec![10, 30, 50],
        sample_counts: vec![1, 4, 16, 64],
        stability_reps: 5,
        ..ExperimentConfig::default()
    };
    for s in cmd_stability(&config).unwrap().scales {
        instances += 1;
        if !s.comparison.direction_holds {
            violations.push(format!("constrained comparison at scale {}", s.scale));
        }
        if s.reports.windows(2).any(|w| w[1].mean > w[0].mean) {
            violations.push(format!("sample-count law at scale {}", s.scale));
        }
    }
    Verdict::new(
        violations.is_empty(),
        format!("{instances} instances, violations {violations:?}"),
    )
}

fn gradient_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let q = dense_to_matrix(&oracles::random_symmetric(&mut rng, n));
        let k = rng.gen_bool(0.5).then(|| rng.gen_range(1..n));
        let p = QuboProblem::new(q, k).unwrap().with_auto_penalty();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let g = relaxed_gradient(&p, &x);
        let mut diff = 0.0;
        for i in 0..n {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (relaxed_energy(&p, &up) - relaxed_energy(&p, &down)) / (2.0 * h);
            diff += (g[i] - fd).powi(2);
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff.sqrt() / norm);
    }
    Verdict::new(
        worst <= 1e-5,
        format!("100 interior points, max relative error {worst:.2e}"),
    )
}

fn mi_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let count = rng.gen_range(4..=30);
        let feats = rng.gen_range(2..=5);
        let triplets: Vec<(usize, usize, f64)> = (0..count)
            .flat_map(|t| (0..feats).map(move |d| (t, d)))
            .filter(|_| rng.gen_bool(0.5))
            .map(|(t, d)| (t, d, 1.0))
            .collect();
        let f = ItemFeatureMatrix::from_triplets(count, feats, triplets).unwrap();
        let mut samples: Vec<LabeledSample> = (0..count)
            .map(|t| LabeledSample {
                user: 0,
                item: t,
                label: rng.gen_range(0..=1),
            })
            .collect();
        samples[0].label = 0;
        samples[1].label = 1;
        let q = build_miqubo(&f, &samples, Execution::Parallel).unwrap();
        let (cols, y) = oracles::sample_columns(&f, &samples);
        for i in 0..feats {
            worst = worst.max((q.get(i, i) + oracles::mi(&cols[i], &y)).abs());
            for j in i + 1..feats {
                let want = -(oracles::cmi(&cols[i], &y, &cols[j]) + oracles::cmi(&cols[j], &y, &cols[i])) / 2.0;
                worst = worst.max((q.get(i, j) - want).abs());
            }
        }
    }
    let labels = [1u8, 0, 1, 0, 0, 1, 1, 0];
    let triplets: Vec<(usize, usize, f64)> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == 1)
        .map(|(t, _)| (t, 0, 1.0))
        .collect();
    let f = ItemFeatureMatrix::from_triplets(labels.len(), 1, triplets).unwrap();
    let samples: Vec<LabeledSample> = labels
        .iter()
        .enumerate()
        .map(|(t, &label)| LabeledSample {
            user: 0,
            item: t,
            label,
        })
        .collect();
    let copy = build_miqubo(&f, &samples, Execution::Sequential).unwrap().get(0, 0);
    let copy_err = (copy + std::f64::consts::LN_2).abs();
    Verdict::new(
        worst <= 1e-12 && copy_err <= 1e-12,
        format!("max deviation {worst:.2e}, label copy {copy:.15} vs -ln 2"),
    )
}

fn determinism() -> Verdict {
    let first_dir = tempfile::tempdir().unwrap();
    let second_dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        runs: 2,
        k: KList(vec![KValue::Fixed(8), KValue::Auto]),
        solvers: vec![SolverKind::Sa, SolverKind::Tabu, SolverKind::Sgd],
        out: Some(first_dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    };
    let first = cmd_pipeline(&config).unwrap();
    let mut replay = ExperimentConfig::load(&first_dir.path().join("report.json")).unwrap();
    replay.out = Some(second_dir.path().to_path_buf());
    let second = cmd_pipeline(&replay).unwrap();
    let strip = |r: &RunReport| r.rows.iter().map(|row| row.without_timing()).collect::<Vec<_>>();
    let (a, b) = (strip(&first), strip(&second));
    let same = a == b && first.run_seeds == second.run_seeds;
    Verdict::new(same, format!("{} rows compared, identical: {same}", a.len()))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("oracle optimality", oracle_optimality),
        ("energy correctness", energy_correctness),
        ("counterfactual oracle equivalence", counterfactual_oracle),
        ("pdqubo fidelity", pdqubo_fidelity),
        ("planted-feature recovery", planted_recovery),
        ("energy vs performance", energy_vs_performance),
        ("comb vs indiv", comb_vs_indiv),
        ("stability laws", stability_laws),
        ("gradient check", gradient_check),
        ("mutual information correctness", mi_correctness),
        ("determinism", determinism),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (index, (name, check)) in criteria.iter().enumerate() {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Verdict::new(false, "panicked"));
        if !verdict.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if verdict.pass { "PASS" } else { "FAIL" },
            index + 1,
            verdict.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
