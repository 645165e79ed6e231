//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! with its measurements, and exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weaklabel::model::LabelMatrix;
use weaklabel::moments::TripletMode;
use weaklabel::online::{run_stream, DriftSpec, Window};
use weaklabel::oracle::{enumerate_joint, exact_statistics, CanonicalParameters, ExactStatistics};
use weaklabel::recovery::{assemble_rhs, build_transform, PairConditionals};
use weaklabel::{posterior, ClassPrior, DependencyGraph, FitConfig, LabelModel};

use common::{all_vote_rows, clique_vars, conditional_accuracy, event_vector, label_error, majority_error, star};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Closure grid: one task with 3, 5 or 8 sources, 0 to 2 dependency
/// edges, with and without abstains, plus a three-task chain. Task terms
/// are nonzero so sources without a triplet can use the ratio estimate.
fn grid() -> Vec<(String, CanonicalParameters)> {
    let mut out = Vec::new();
    let mut seed = 100;
    for m in [3, 5, 8] {
        for edges in 0..=2 {
            for abstains in [true, false] {
                let mut b = DependencyGraph::builder(1, m).assign_all(0);
                if edges >= 1 {
                    b = b.source_edge(0, 1);
                }
                if edges == 2 {
                    b = b.source_edge(m - 2, m - 1);
                }
                let mut theta = CanonicalParameters::random(b.build().unwrap(), seed);
                theta.theta_task[0] = 0.5;
                if !abstains {
                    theta.never_abstain = vec![true; m];
                }
                let tag = if abstains { "abstains" } else { "no abstains" };
                out.push((format!("m={m} edges={edges} {tag}"), theta));
                seed += 1;
            }
        }
    }
    // three tasks in a chain, three sources each, the first two dependent
    let chain = DependencyGraph::builder(3, 9);
    let chain = (0..9).fold(chain, |b, i| b.assign(i, i / 3)).task_edge(0, 1).task_edge(1, 2).source_edge(0, 1);
    let mut theta = CanonicalParameters::random(chain.build().unwrap(), seed);
    theta.theta_task = vec![0.5, 0.4, -0.3];
    out.push(("three-task chain".into(), theta));
    out
}

fn exact(theta: &CanonicalParameters) -> ExactStatistics {
    exact_statistics(&enumerate_joint(theta).unwrap(), &theta.graph).unwrap()
}

fn oracle_closure() -> Outcome {
    let mut cfg = FitConfig::default();
    cfg.accuracy.ratio_fallback = true;
    let (mut worst, mut worst_name, mut failures) = (0.0_f64, String::new(), Vec::new());
    let models = grid();
    for (name, theta) in &models {
        let ex = exact(theta);
        let fit = LabelModel::new(theta.graph.clone(), ex.observable.prior())
            .map(|m| m.with_config(cfg.clone()))
            .and_then(|m| m.fit_moments(&ex.moments));
        match fit.and_then(|f| f.parameters().max_abs_difference(&ex.parameters)) {
            Ok(err) => {
                if err > worst {
                    worst = err;
                    worst_name.clone_from(name);
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let pass = failures.is_empty() && worst <= 1e-9;
    outcome(
        pass,
        format!("{} models, max entry error {worst:.2e} ({worst_name}){}", models.len(), failures.join("; ")),
    )
}

fn accuracy_error(n: usize, seed: u64) -> f64 {
    let truth = star(&[0.6, 0.675, 0.75, 0.825, 0.9], 0.1);
    let data = truth.sample(n, seed);
    let fitted = LabelModel::new(truth.graph(), truth.prior()).unwrap().fit(&data.labels).unwrap();
    let est = fitted.accuracies().unwrap();
    truth.accuracies().iter().enumerate().map(|(i, a)| (est.source(i) - a).powi(2)).sum::<f64>().sqrt()
}

fn sampled_rate() -> Outcome {
    let seeds: Vec<u64> = (0..20).collect();
    let mean = |n: usize| seeds.iter().map(|&s| accuracy_error(n, s)).sum::<f64>() / seeds.len() as f64;
    let (e100k, e10k, e40k) = (mean(100_000), mean(10_000), mean(40_000));
    let ratio = e10k / e40k;
    outcome(
        e100k <= 0.02 && ratio >= 1.67,
        format!("mean ‖â−a‖ at n=100k {e100k:.4}; n=10k {e10k:.4}, n=40k {e40k:.4}, ratio {ratio:.2}"),
    )
}

fn transform_identity() -> Outcome {
    #[rustfmt::skip]
    let single = DMatrix::from_row_slice(6, 6, &[
        1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
        1.0, 0.0, 1.0, 0.0, 1.0, 0.0,
        1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
    ]);
    let matrix_exact = build_transform(1).a == single;
    let transforms = [build_transform(1), build_transform(2)];
    let graph = DependencyGraph::builder(1, 4).assign_all(0).source_edge(0, 1).build().unwrap();
    let (mut worst_a, mut worst_b, mut worst_rhs) = (0.0_f64, 0.0_f64, 0.0_f64);
    let gap = |x: &DVector<f64>, y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    for seed in 0..50 {
        let ex = exact(&CanonicalParameters::random(graph.clone(), 1000 + seed));
        let obs = &ex.observable;
        for sources in [vec![2], vec![0, 1]] {
            let t = &transforms[sources.len() - 1];
            let mu = DVector::from_column_slice(obs.marginal(&clique_vars(&sources)).probs());
            let r = event_vector(obs, &sources, 1);
            let r_b = event_vector(obs, &sources, -1);
            worst_a = worst_a.max(gap(&(&t.a * &mu), &r));
            worst_b = worst_b.max(gap(&(&t.b * &mu), &r_b));
            let cond = (sources.len() == 2).then(|| PairConditionals {
                j_given_i: conditional_accuracy(obs, 1, 0),
                i_given_j: conditional_accuracy(obs, 0, 1),
            });
            let assembled = assemble_rhs(0, &sources, &ex.accuracies, &ex.moments, cond).unwrap();
            worst_rhs = worst_rhs.max(gap(&DVector::from_column_slice(&assembled.0), &r));
        }
    }
    let pass = matrix_exact && worst_a <= 1e-10 && worst_b <= 1e-10 && worst_rhs <= 1e-10;
    outcome(
        pass,
        format!(
            "50 joints, |Aμ−r| {worst_a:.1e}, |Bμ−r_B| {worst_b:.1e}, assembled r vs oracle {worst_rhs:.1e}, single-source matrix exact: {matrix_exact}"
        ),
    )
}

fn inference_exactness() -> Outcome {
    let (mut worst, mut worst_norm, mut rows, mut failures) = (0.0_f64, 0.0_f64, 0usize, Vec::new());
    for (name, theta) in grid() {
        let ex = exact(&theta);
        for lam in all_vote_rows(theta.graph.n_sources()) {
            let Some(truth) = ex.observable.conditional(&lam) else { continue };
            match posterior(&ex.parameters, &lam) {
                Ok(post) => {
                    let total: f64 = post.iter().sum();
                    worst_norm = worst_norm.max((total - 1.0).abs());
                    for (p, q) in post.iter().zip(&truth) {
                        worst = worst.max((p - q).abs());
                    }
                    rows += 1;
                }
                Err(e) => {
                    failures.push(format!("{name}: {e}"));
                    break;
                }
            }
        }
    }
    outcome(
        failures.is_empty() && worst <= 1e-9 && worst_norm <= 1e-12,
        format!("{rows} vote rows, max gap {worst:.2e}, max |Σ−1| {worst_norm:.1e}{}", failures.join("; ")),
    )
}

fn fit_speed() -> Outcome {
    let m = 100;
    let correct: Vec<f64> = (0..m).map(|i| 0.6 + 0.3 * i as f64 / (m - 1) as f64).collect();
    let truth = star(&correct, 0.3);
    let data = truth.sample(100_000, 5);
    let model = LabelModel::new(truth.graph(), truth.prior()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut best = Duration::MAX;
    let mut result = Ok(());
    for _ in 0..3 {
        let start = Instant::now();
        let fit = pool.install(|| model.fit(&data.labels));
        best = best.min(start.elapsed());
        result = fit.map(|_| ());
    }
    let secs = best.as_secs_f64();
    outcome(
        result.is_ok() && secs < 1.0,
        format!("n=100000 m=100 single-threaded fit {secs:.3} s (best of 3){}", result.err().map_or(String::new(), |e| format!(": {e}"))),
    )
}

fn randomize_abstains(l: &LabelMatrix, seed: u64) -> LabelMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<i8>> = (0..l.n_rows())
        .map(|r| l.row(r).iter().map(|&v| if v == 0 { if rng.random::<bool>() { 1 } else { -1 } } else { v }).collect())
        .collect();
    LabelMatrix::from_rows(&rows).unwrap()
}

fn ablations() -> Outcome {
    // (a) abstain-heavy data: augmentation against random fill-in
    let truth = star(&[0.85, 0.8, 0.75, 0.7, 0.7], 0.6);
    let (mut aug_err, mut fill_err) = (0.0, 0.0);
    for seed in 0..10 {
        let data = truth.sample(20_000, seed);
        let model = LabelModel::new(truth.graph(), truth.prior()).unwrap();
        let fitted = model.fit(&data.labels).unwrap();
        aug_err += label_error(&fitted.predict_proba(&data.labels).unwrap(), &data.truth) / 10.0;
        let filled = randomize_abstains(&data.labels, seed + 500);
        let fitted = model.fit(&filled).unwrap();
        fill_err += label_error(&fitted.predict_proba(&filled).unwrap(), &data.truth) / 10.0;
    }
    let a_pass = fill_err > aug_err;

    // (b) a single triplet per source against the aggregate
    let truth = star(&[0.8, 0.75, 0.7, 0.65, 0.6], 0.2);
    let (mut agg_err, mut single_err, mut wins) = (0.0, 0.0, 0);
    let (mut failed_fits, mut unlabeled) = (0usize, 0usize);
    for seed in 0..20 {
        let data = truth.sample(2000, 100 + seed);
        let mut error_with = |mode: TripletMode| {
            let mut cfg = FitConfig::default();
            cfg.accuracy.mode = mode;
            let model = LabelModel::new(truth.graph(), truth.prior()).unwrap().with_config(cfg);
            let Ok(fitted) = model.fit(&data.labels) else {
                failed_fits += 1;
                return 0.5;
            };
            // rows the fitted tables give zero likelihood count as coin flips
            let wrong: f64 = (0..data.labels.n_rows())
                .map(|r| match fitted.posterior(data.labels.row(r)) {
                    Ok(p) if p[0] == 0.5 => 0.5,
                    Ok(p) => f64::from(u8::from((p[0] > 0.5) != (data.truth[r] > 0))),
                    Err(_) => {
                        unlabeled += 1;
                        0.5
                    }
                })
                .sum();
            wrong / data.labels.n_rows() as f64
        };
        let agg = error_with(TripletMode::All);
        let worst = (0..6).map(|k| error_with(TripletMode::Single(k))).fold(0.0, f64::max);
        agg_err += agg / 20.0;
        single_err += worst / 20.0;
        wins += usize::from(worst > agg);
    }
    let b_pass = single_err > agg_err;
    outcome(
        a_pass && b_pass,
        format!(
            "(a) label error augmented {aug_err:.4} vs random fill {fill_err:.4}; (b) aggregated {agg_err:.4} vs worst single triplet {single_err:.4}, worse on {wins}/20 seeds, {failed_fits} failed fits, {unlabeled} zero-likelihood rows"
        ),
    )
}

fn online_drift() -> Outcome {
    let base = star(&[0.85, 0.8, 0.8, 0.75, 0.75], 0.1);
    let drifting = DriftSpec { base: base.clone(), flipped: vec![3, 4], period: Some(2000) };
    let stationary = DriftSpec { base, flipped: vec![], period: None };
    let seeds = [1, 2, 3];
    let mean = |spec: &DriftSpec, window: Window| {
        seeds.iter().map(|&s| run_stream(spec, window, 100, 10_000, s).unwrap().posterior_mse).sum::<f64>()
            / seeds.len() as f64
    };
    let (dw, dc) = (mean(&drifting, Window::Sliding(500)), mean(&drifting, Window::Cumulative));
    let (sw, sc) = (mean(&stationary, Window::Sliding(500)), mean(&stationary, Window::Cumulative));
    outcome(
        dw < dc && sc < sw,
        format!("posterior MSE with drift: W=500 {dw:.5}, cumulative {dc:.5}; stationary: W=500 {sw:.5}, cumulative {sc:.5}"),
    )
}

fn majority_vote_gap() -> Outcome {
    let truth = star(&[0.9, 0.55, 0.55, 0.55, 0.55], 0.0);
    let (mut lm, mut mv) = (0.0, 0.0);
    for seed in 0..10 {
        let data = truth.sample(50_000, 300 + seed);
        let fitted = LabelModel::new(truth.graph(), ClassPrior::balance(0.5).unwrap()).unwrap().fit(&data.labels);
        lm += fitted.map_or(0.5, |f| label_error(&f.predict_proba(&data.labels).unwrap(), &data.truth)) / 10.0;
        mv += majority_error(&data.labels, &data.truth) / 10.0;
    }
    let points = 100.0 * (mv - lm);
    outcome(
        points >= 3.0,
        format!("agreement label model {:.2}% vs majority vote {:.2}% ({points:+.2} points)", 100.0 * (1.0 - lm), 100.0 * (1.0 - mv)),
    )
}

fn main() {
    let criteria: [(&str, Option<f64>, fn() -> Outcome); 8] = [
        ("1 oracle closure", Some(10.0), oracle_closure),
        ("2 sampled recovery rate", Some(30.0), sampled_rate),
        ("3 transform identity", None, transform_identity),
        ("4 inference exactness", None, inference_exactness),
        ("5 fit speed", None, fit_speed),
        ("6 ablation directions", None, ablations),
        ("7 online drift", Some(60.0), online_drift),
        ("8 majority-vote gap", None, majority_vote_gap),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let in_budget = budget.is_none_or(|b| secs < b);
        let pass = out.pass && in_budget;
        failed += usize::from(!pass);
        let budget_note = budget.map_or(String::new(), |b| format!(", budget {b:.0} s"));
        println!("{} {name}: {} [{secs:.2} s{budget_note}]", if pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
}
