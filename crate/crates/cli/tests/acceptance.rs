//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the test harness so the lines are always
//! shown.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gapkit_core::embedding::{nearest_neighbors, nn_margin, sq_dist};
use gapkit_core::fixtures::{lifted_polygon, orthogonal_gap_pairs, standard_retrieval_fixture};
use gapkit_core::io::{read_embeddings, write_embeddings, write_labels, Dtype};
use gapkit_core::simulator::presets;
use gapkit_core::{
    apply_plan, contrastive_loss, gd_step, loss_gradient, noise_correlation_score, plan_closing,
    quantization_aware_lambda, robustness_curve, run_simulation, sample_noise, temperature_sweep, ClosingPlan,
    EmbeddingMatrix, Modality, NoiseModel, PairedEmbeddings, Quantizer, Simulation,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_matrix(seed: u64, stream: u64, n: usize, d: usize, scale: f64) -> EmbeddingMatrix {
    sample_noise(&NoiseModel::Gaussian { sigma: scale }, n, d, seed, stream).unwrap()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let h = 1e-5;
    let (mut worst, mut instances) = (0.0f64, 0);
    let shapes = [(2, 2), (3, 4), (4, 3), (5, 5), (6, 2), (7, 4), (8, 5)];
    for (k, &tau) in [0.07f64, 0.5, 1.0].iter().enumerate() {
        for (s, &(n, d)) in shapes.iter().enumerate() {
            let seed = (k * 100 + s) as u64;
            // logits stay O(1) at every temperature
            let scale = 0.7 * tau.sqrt();
            let p = PairedEmbeddings::bijective(
                random_matrix(seed, 0, n, d, scale),
                random_matrix(seed, 1, n, d, scale),
            )
            .unwrap();
            let g = loss_gradient(&p, tau).unwrap();
            for side in 0..2 {
                for idx in 0..n * d {
                    let shifted = |delta: f64| {
                        let (mut x, mut y) = (p.x.as_slice().to_vec(), p.y.as_slice().to_vec());
                        let target = if side == 0 { &mut x } else { &mut y };
                        target[idx] += delta;
                        let q = PairedEmbeddings::bijective(
                            EmbeddingMatrix::from_vec(n, d, x).unwrap(),
                            EmbeddingMatrix::from_vec(n, d, y).unwrap(),
                        )
                        .unwrap();
                        contrastive_loss(&q, tau).unwrap()
                    };
                    let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                    let analytic = if side == 0 { g.dx.as_slice()[idx] } else { g.dy.as_slice()[idx] };
                    worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-3));
                }
            }
            instances += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        instances >= 20 && worst < 1e-5 && elapsed < Duration::from_secs(5),
        format!("{instances} instances, worst relative error {worst:.2e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn variance_shrinkage() -> Outcome {
    let start = Instant::now();
    let log = run_simulation(&presets::tight_clusters()).unwrap();
    let elapsed = start.elapsed();
    let (first, last) = (log.first().unwrap(), log.last().unwrap());
    let rx = last.var_along_init_gap_x / first.var_along_init_gap_x;
    let ry = last.var_along_init_gap_y / first.var_along_init_gap_y;
    outcome(
        last.iter == 100 && rx < 0.1 && ry < 0.1 && elapsed < Duration::from_secs(10),
        format!("iteration {}: ratio x {rx:.4}, y {ry:.4}, {:.2}s", last.iter, elapsed.as_secs_f64()),
    )
}

fn gap_preservation() -> Outcome {
    let height = 0.8;
    let mut p = lifted_polygon(8, 0.6, 0.3, height).unwrap();
    for _ in 0..1000 {
        p = gd_step(&p, 0.5, 0.01, false).unwrap();
    }
    let drift =
        p.x.rows().map(|r| r[2].abs()).chain(p.y.rows().map(|r| (r[2] - height).abs())).fold(0.0, f64::max);
    outcome(drift < 1e-8, format!("max drift along v after 1000 steps {drift:.2e}"))
}

fn fig3_endpoint() -> Outcome {
    let log = run_simulation(&presets::sphere_clusters()).unwrap();
    let (first, last) = (log.first().unwrap(), log.last().unwrap());
    let ratio = last.loss / first.loss;
    outcome(
        ratio < 0.05 && last.gap_norm > 0.1 && last.mean_abs_cos < 0.05,
        format!(
            "loss {:.4} -> {:.4} ({:.2}%), gap_norm {:.4}, mean |cos| {:.2e}",
            first.loss,
            last.loss,
            100.0 * ratio,
            last.gap_norm,
            last.mean_abs_cos
        ),
    )
}

fn info_imbalance_and_collapse() -> Outcome {
    let cfg = presets::info_imbalance();
    let mut sim = Simulation::new(cfg.clone()).unwrap();
    while sim.iteration() < cfg.iterations {
        sim.step().unwrap();
    }
    let state = sim.state().unwrap();
    let y = state.y.row(0);
    let spread = state.x.rows().map(|r| sq_dist(r, y).sqrt()).fold(0.0, f64::max);
    let collapse = run_simulation(&presets::dim_collapse()).unwrap();
    let gap = collapse.last().unwrap().gap_norm;
    outcome(
        spread < 1e-3 && gap < 0.01,
        format!("max ||x_k - y|| {spread:.2e}; dim_collapse final gap_norm {gap:.2e}"),
    )
}

fn temperature_contrast() -> Outcome {
    let sweep = temperature_sweep(&presets::temperature_contrast(1.0), &[10.0, 0.07]).unwrap();
    let hot = sweep[0].last.gap_norm / sweep[0].initial.gap_norm;
    let cold = sweep[1].last.gap_norm / sweep[1].initial.gap_norm;
    outcome(
        hot < 0.1 && cold > 0.5,
        format!("final/initial gap: tau=10 {hot:.4}, tau=0.07 {cold:.4}"),
    )
}

fn accuracy_invariance() -> Outcome {
    let (mut fixtures, mut changed, mut checked, mut seed) = (0, 0, 0, 0u64);
    while fixtures < 100 {
        let pairs = orthogonal_gap_pairs(seed, 10, 15, 8, 5).unwrap();
        seed += 1;
        if pairs.y.rows().any(|q| nn_margin(q, &pairs.x).unwrap() <= 1e-6) {
            continue;
        }
        fixtures += 1;
        let plan = plan_closing(&pairs, Modality::X, 0.0, 1.0).unwrap();
        let before = nearest_neighbors(&pairs.y, &pairs.x).unwrap();
        for lambda in [-1.0, 0.5, 1.0, 2.0] {
            let moved = apply_plan(&pairs, &ClosingPlan { lambda, ..plan.clone() }).unwrap();
            let after = nearest_neighbors(&pairs.y, &moved.x).unwrap();
            changed += before.iter().zip(&after).filter(|(a, b)| a != b).count();
            checked += before.len();
        }
    }
    outcome(changed == 0, format!("{fixtures} fixtures, {checked} neighbor checks, {changed} changed"))
}

fn robustness_monotonicity() -> Outcome {
    let start = Instant::now();
    let f = standard_retrieval_fixture().unwrap();
    let pairs = f.pairs();
    let plan = plan_closing(&pairs, Modality::X, 0.0, 1.0).unwrap();
    let lambdas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let k = 200;
    let tol = 2.0 / ((k * f.queries.n()) as f64).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, model) in [
        ("gaussian", NoiseModel::Gaussian { sigma: 0.05 }),
        ("uniform", NoiseModel::Uniform { sigma: 0.05 }),
        ("laplace", NoiseModel::Laplace { sigma: 0.05 }),
        ("rademacher", NoiseModel::Rademacher { sigma: 0.05 }),
    ] {
        let curve = robustness_curve(&pairs, &plan, &lambdas, &model, k, 0, None).unwrap();
        let r: Vec<f64> = curve.points.iter().map(|p| p.robustness).collect();
        let monotone = r.windows(2).all(|w| w[1] >= w[0] - tol);
        let gain = r[4] - r[0];
        pass &= monotone && gain > 0.02;
        parts.push(format!("{name} {:.4}->{:.4}{}", r[0], r[4], if monotone { "" } else { " (not monotone)" }));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    outcome(pass, format!("{}; tol {tol:.4}, {:.2}s", parts.join(", "), elapsed.as_secs_f64()))
}

fn quantization() -> Outcome {
    let f = standard_retrieval_fixture().unwrap();
    let pairs = f.pairs();
    let plan = plan_closing(&pairs, Modality::X, 0.0, 1.0).unwrap();
    let (levels, lo, hi) = (16, -3.0, 3.0);
    let grid: Vec<f64> = (0..=30).map(|i| i as f64 / 20.0).collect();
    let best = quantization_aware_lambda(&pairs, &plan, &Quantizer::new(levels, lo, hi).unwrap(), &grid).unwrap();
    let model = NoiseModel::Quantize { levels, lo, hi };
    let curve = robustness_curve(&pairs, &plan, &[0.0, best], &model, 1, 0, None).unwrap();
    let (r0, rb) = (curve.points[0].robustness, curve.points[1].robustness);
    outcome(rb >= r0, format!("lambda* = {best}, robustness {r0:.4} at 0 vs {rb:.4} at lambda*"))
}

fn correlation_separation() -> Outcome {
    let clean = random_matrix(7, 0, 500, 64, 1.0);
    let shift = sample_noise(&NoiseModel::Rank1Shift { sigma: 0.1 }, 500, 64, 7, 0).unwrap();
    let rank1 = noise_correlation_score(&clean, &clean.add(&shift).unwrap()).unwrap().d_c;
    let clean = random_matrix(8, 0, 2000, 8, 1.0);
    let iid = sample_noise(&NoiseModel::Gaussian { sigma: 0.1 }, 2000, 8, 8, 0).unwrap();
    let iid = noise_correlation_score(&clean, &clean.add(&iid).unwrap()).unwrap().d_c;
    outcome(rank1 > 0.9 && iid < 0.2, format!("rank-1 d(C) {rank1:.4}, iid d(C) {iid:.4}"))
}

fn stochasticity_trend() -> Outcome {
    let log = run_simulation(&presets::wide_clusters()).unwrap();
    let (first, last) = (log.first().unwrap(), log.last().unwrap());
    outcome(
        last.var_s < first.var_s,
        format!("var_s {:.3e} at iteration 0, {:.3e} at iteration {}", first.var_s, last.var_s, last.iter),
    )
}

fn run_twice(args: &[&str], out: &Path) -> (bool, Vec<u8>) {
    let mut results = Vec::new();
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_gapkit")).args(args).status().unwrap();
        results.push((status.success(), fs::read(out).unwrap_or_default()));
        let _ = fs::remove_file(out);
    }
    let ok = results.iter().all(|r| r.0) && results[0].1 == results[1].1 && !results[0].1.is_empty();
    (ok, results.swap_remove(0).1)
}

fn determinism_and_io() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let s = |path: &Path| path.to_str().unwrap().to_string();

    let f = standard_retrieval_fixture().unwrap();
    write_embeddings(&f.classes, &p("x.emb"), Dtype::F64).unwrap();
    write_embeddings(&f.queries, &p("y.emb"), Dtype::F64).unwrap();
    write_labels(&f.labels.iter().map(|&l| l as i64).collect::<Vec<_>>(), &p("y.lbl")).unwrap();
    let (x, y, l) = (s(&p("x.emb")), s(&p("y.emb")), s(&p("y.lbl")));

    let rob_out = s(&p("r.csv"));
    let (rob, _) = run_twice(
        &[
            "robustness", "--x", &x, "--y", &y, "--noise", "gaussian", "--sigma", "0.05", "--k", "50",
            "--lambda-grid", "0:1:0.25", "--seed", "7", "--labels", &l, "--out", &rob_out,
        ],
        &p("r.csv"),
    );
    let ana_out = s(&p("a.json"));
    let (ana, _) = run_twice(&["analyze", "--x", &x, "--y", &y, "--out", &ana_out], &p("a.json"));
    let config = p("sim.json");
    fs::write(
        &config,
        r#"{"n_per_modality": 30, "d": 3, "scenario": {"kind": "gaussian_clusters",
            "mu_x": [0, 0.5, 0], "mu_y": [0, -0.5, 0], "sigma": 0.05},
            "tau": 0.1, "lr": 0.01, "iterations": 200, "log_every": 20, "seed": 7}"#,
    )
    .unwrap();
    let sim_out = s(&p("t.csv"));
    let (sim, _) = run_twice(&["simulate", "--config", &s(&config), "--out", &sim_out], &p("t.csv"));

    let m = random_matrix(3, 0, 50, 9, 1e3);
    let extreme = EmbeddingMatrix::from_rows(&[[f64::MIN_POSITIVE, -0.0, 1e-310], [f64::MAX, -f64::MAX, 0.1]]).unwrap();
    let mut lossless = true;
    for (i, src) in [m, extreme].iter().enumerate() {
        let path = p(&format!("rt{i}.emb"));
        write_embeddings(src, &path, Dtype::F64).unwrap();
        let back = read_embeddings(&path).unwrap();
        lossless &= (back.n(), back.d()) == (src.n(), src.d())
            && back.as_slice().iter().zip(src.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    outcome(
        rob && ana && sim && lossless,
        format!("robustness csv {rob}, analyze json {ana}, simulate csv {sim}, f64 EMB1 roundtrip {lossless}"),
    )
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("gradient matches central differences", gradient_correctness),
        ("variance shrinks along the initial gap (Theorem 1)", variance_shrinkage),
        ("gap direction is preserved (Theorem 2)", gap_preservation),
        ("sphere-constrained endpoint keeps an orthogonal gap", fig3_endpoint),
        ("shared caption converges; collapsed init aligns", info_imbalance_and_collapse),
        ("temperature controls how much gap closes", temperature_contrast),
        ("closing keeps nearest neighbors (Theorem 4)", accuracy_invariance),
        ("closing improves robustness for all noise families (Theorem 3)", robustness_monotonicity),
        ("quantization-aware closing does not hurt robustness", quantization),
        ("d(C) separates rank-1 from i.i.d. noise", correlation_separation),
        ("soft assignments approach double stochasticity", stochasticity_trend),
        ("deterministic CLI output and lossless EMB1", determinism_and_io),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
