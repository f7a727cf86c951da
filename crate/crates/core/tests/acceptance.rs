//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! and exits non-zero when any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use conflictforge::conflict::conflict_factor_values;
use conflictforge::eval::{fleiss_kappa, ranking_metrics, roc_auc, roc_curve, trapezoid_area, RankedList};
use conflictforge::features::{pair_features, FeatureMask};
use conflictforge::graph::{
    archetype_graph, cluster_report, normalized_adjacency, Archetype, ClusterType, Snapshot, DEFAULT_MAJORITY,
};
use conflictforge::learn::{
    forward_trace, gcn_evaluate, gcn_train, loss_and_gradients, pair_sample, pair_samples, sample_loss,
    sample_pairs, select_lambda_ebic, svm_fit, time_ordered_split, GcnConfig, GcnParams, GcnSample,
    NegativeSampling, SamplingConfig, SvmConfig,
};
use conflictforge::sentiment::{aggregate_probabilities, TdProbability, NEGATIVE, NEUTRAL, POSITIVE};

use common::planted::{planted, DAY, DAYS, FEATURE_DIM};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn conflict_factor_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(Vec<u8>, Vec<u8>)> = (0..1000)
        .map(|_| {
            let len = rng.gen_range(1..=60);
            let v = |rng: &mut ChaCha8Rng| (0..len).map(|_| rng.gen_range(0..=3u8)).collect::<Vec<_>>();
            (v(&mut rng), v(&mut rng))
        })
        .collect();
    let start = Instant::now();
    for (a, b) in &pairs {
        let mut expected = 0.0;
        let mut common = 0;
        for k in 0..a.len() {
            let (x, y) = (f64::from(a[k]), f64::from(b[k]));
            expected += x.min(y).min(1.0) * (x - y).abs();
            if a[k] > 0 && b[k] > 0 {
                common += 1;
            }
        }
        let ab = conflict_factor_values(a, b).map_err(|e| e.to_string())?;
        let ba = conflict_factor_values(b, a).map_err(|e| e.to_string())?;
        ensure(ab.value == expected, || format!("cf {} != oracle {expected}", ab.value))?;
        ensure(ab == ba, || "asymmetric".into())?;
        ensure(ab.common_terms == common, || "common term count".into())?;
        ensure(ab.value <= 2.0 * common as f64, || "exceeds 2 * common".into())?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("1000 pairs in {took:?}"))
}

fn aggregation_oracle() -> Outcome {
    // coarse grid so that exact and near ties are common
    let grid = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.25, 0.25, 0.5],
        [0.25, 0.5, 0.25],
        [0.5, 0.25, 0.25],
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [0.1, 0.2, 0.7],
        [0.7, 0.2, 0.1],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ties = 0;
    for _ in 0..200 {
        let n = rng.gen_range(0..=6);
        let draws: Vec<[f64; 3]> = (0..n).map(|_| *grid.choose(&mut rng).expect("grid")).collect();
        let probs = draws
            .iter()
            .map(|p| TdProbability::new(p[0], p[1], p[2]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let expected = if n == 0 {
            None
        } else {
            let mut mean = [0.0; 3];
            for p in &draws {
                for c in 0..3 {
                    mean[c] += p[c] / n as f64;
                }
            }
            let best = mean.iter().cloned().fold(f64::MIN, f64::max);
            let near: Vec<bool> = mean.iter().map(|m| best - m <= 1e-12).collect();
            if near.iter().filter(|b| **b).count() > 1 {
                ties += 1;
            }
            Some(if near[1] {
                NEUTRAL
            } else if near[0] {
                NEGATIVE
            } else {
                POSITIVE
            })
        };
        let got = aggregate_probabilities(&probs);
        ensure(got == expected, || format!("{draws:?}: {got:?} != {expected:?}"))?;
    }
    Ok(format!("200 sets, {ties} ties"))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[[i, j]].powi(2)).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[[i, i]]).collect()
}

fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(density) {
                let w = rng.gen_range(0.0..3.0);
                a[[i, j]] = w;
                a[[j, i]] = w;
            }
        }
    }
    a
}

fn adjacency_spectrum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=50);
        let density = rng.gen_range(0.05..0.9);
        let a_hat = normalized_adjacency(&random_adjacency(&mut rng, n, density)).map_err(|e| e.to_string())?;
        let asym = (&a_hat - &a_hat.t()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(asym <= 1e-12, || format!("asymmetry {asym}"))?;
        let radius = jacobi_eigenvalues(a_hat).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(radius);
        ensure(radius <= 1.0 + 1e-9, || format!("spectral radius {radius} on n={n}"))?;
    }
    let two = normalized_adjacency(&ndarray::array![[0.0, 1.0], [1.0, 0.0]]).map_err(|e| e.to_string())?;
    ensure(two == ndarray::array![[0.0, 1.0], [1.0, 0.0]], || format!("two-node case {two:?}"))?;
    Ok(format!("max spectral radius {worst:.12}"))
}

fn gcn_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (d, widths, h) = (3, [6, 6, 5, 4], 1e-6);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut redraws = 0;
    while checked < 20 {
        let a_hat = normalized_adjacency(&random_adjacency(&mut rng, 5, 0.6)).map_err(|e| e.to_string())?;
        let x = Array2::from_shape_fn((5, d), |_| normal(&mut rng));
        let base = GcnParams::init(d, widths, rng.gen());
        let flat: Vec<f64> = base.flatten().iter().map(|v| v + 0.1 * normal(&mut rng)).collect();
        let p = base.unflatten(&flat).map_err(|e| e.to_string())?;
        let sample = GcnSample { a_hat, x, i: 0, j: 1, label: rng.gen_range(0..=1) };
        let margin = forward_trace(&sample.a_hat, &sample.x, 0, 1, &p)
            .map_err(|e| e.to_string())?
            .min_abs_preactivation(&sample.a_hat);
        // central differences are only valid away from ReLU kinks
        if margin < 1e-3 {
            redraws += 1;
            continue;
        }
        let (_, grads) = loss_and_gradients(&sample, &p).map_err(|e| e.to_string())?;
        let analytic = grads.flatten();
        let mut numeric = Vec::with_capacity(flat.len());
        for k in 0..flat.len() {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[k] += h;
            minus[k] -= h;
            let lp = sample_loss(&sample, &p.unflatten(&plus).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let lm = sample_loss(&sample, &p.unflatten(&minus).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            numeric.push((lp - lm) / (2.0 * h));
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / (norm(&analytic) + norm(&numeric)).max(1e-12);
        worst = worst.max(rel);
        ensure(rel <= 1e-4, || format!("relative error {rel:e}"))?;
        checked += 1;
    }
    Ok(format!("20 draws ({redraws} redrawn near kinks), worst relative error {worst:.2e}"))
}

fn planted_gcn_run() -> Result<(f64, Vec<f64>), String> {
    let p = planted(1, 2.0, 0.5, 0.5);
    let mut cands = Vec::new();
    for day in 10..DAYS {
        let cfg = SamplingConfig { negatives: NegativeSampling::Engaged, seed: 5, ..Default::default() };
        cands.extend(sample_pairs(&p.events, day * DAY, &cfg));
    }
    let times: Vec<i64> = cands.iter().map(|c| c.as_of).collect();
    let split = time_ordered_split(&times, 0.2, 0.15).map_err(|e| e.to_string())?;
    let samples = pair_samples(&p.history, &cands, 1, 5000, FEATURE_DIM)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| s.to_gcn_sample())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let pick = |ix: &[usize]| ix.iter().map(|&k| samples[k].clone()).collect::<Vec<_>>();
    let never_met: Vec<usize> = split.test.iter().copied().filter(|&k| !cands[k].met_before).collect();
    let config = GcnConfig {
        lr: 1e-2,
        max_epochs: 200,
        patience: 5,
        min_epochs: 30,
        seed: 1,
        ..Default::default()
    };
    let trained = gcn_train(&pick(&split.train), &pick(&split.dev), &config).map_err(|e| e.to_string())?;
    let (_, auc) = gcn_evaluate(&pick(&never_met), &trained.params).map_err(|e| e.to_string())?;
    let auc = auc.ok_or("never-met test set has a single class")?;
    Ok((auc, trained.params.flatten()))
}

fn planted_gcn() -> Outcome {
    let start = Instant::now();
    let (auc, params) = planted_gcn_run()?;
    let took = start.elapsed();
    let (_, again) = planted_gcn_run()?;
    ensure(params == again, || "two runs with one seed differ".into())?;
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    ensure(auc >= 0.8, || format!("never-met AUC {auc:.4} < 0.8"))?;
    Ok(format!("never-met AUC {auc:.4} in {took:?}, deterministic"))
}

fn dual_feasible(alpha: &[f64], y: &[i8], c: f64) -> Result<(), String> {
    for a in alpha {
        ensure(*a >= -1e-6 && *a <= c + 1e-6, || format!("alpha {a} outside [0, {c}]"))?;
    }
    let balance: f64 = alpha.iter().zip(y).map(|(a, y)| a * f64::from(*y)).sum();
    ensure(balance.abs() <= 1e-6, || format!("sum alpha y = {balance:e}"))
}

fn svm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows = |n: usize, rng: &mut ChaCha8Rng, f: &dyn Fn(&mut ChaCha8Rng) -> ([f64; 2], i8)| {
        let (xs, ys): (Vec<[f64; 2]>, Vec<i8>) = (0..n).map(|_| f(rng)).unzip();
        (Array2::from_shape_fn((n, 2), |(i, j)| xs[i][j]), ys)
    };
    let blobs = |rng: &mut ChaCha8Rng| {
        let y: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let c = 3.0 * f64::from(y);
        ([c + 0.5 * normal(rng), c + 0.5 * normal(rng)], y)
    };
    let (x, y) = rows(100, &mut rng, &blobs);
    let config = SvmConfig::default();
    let model = svm_fit(x.view(), &y, &config, FeatureMask::All).map_err(|e| e.to_string())?;
    let correct = x.rows().into_iter().zip(&y).filter(|(r, y)| model.predict(r.as_slice().unwrap()) == **y).count();
    ensure(correct == 100, || format!("separable train accuracy {correct}/100"))?;
    dual_feasible(&model.alpha, &y, model.c)?;

    let xor = |rng: &mut ChaCha8Rng| {
        let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        (p, if p[0] * p[1] > 0.0 { 1 } else { -1 })
    };
    let (xt, yt) = rows(400, &mut rng, &xor);
    let (xh, yh) = rows(400, &mut rng, &xor);
    let config = SvmConfig { c: 100.0, ..Default::default() };
    let model = svm_fit(xt.view(), &yt, &config, FeatureMask::All).map_err(|e| e.to_string())?;
    dual_feasible(&model.alpha, &yt, model.c)?;
    let correct = xh.rows().into_iter().zip(&yh).filter(|(r, y)| model.predict(r.as_slice().unwrap()) == **y).count();
    let acc = correct as f64 / 400.0;
    ensure(acc >= 0.95, || format!("held-out XOR accuracy {acc:.3}"))?;
    Ok(format!("separable 100/100, XOR held-out {acc:.3}"))
}

fn lasso() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, p) = (100, 20);
    let truth = [(0usize, 3.0), (5, -2.0), (10, 1.5)];
    let x = Array2::from_shape_fn((n, p), |_| normal(&mut rng));
    // unit-variance columns: Var(Xβ) = ‖β‖², so SNR 10 fixes the noise level
    let signal_var: f64 = truth.iter().map(|(_, b)| b * b).sum();
    let sigma = (signal_var / 10.0).sqrt();
    let y: Vec<f64> = (0..n)
        .map(|i| truth.iter().map(|&(j, b)| b * x[[i, j]]).sum::<f64>() + sigma * normal(&mut rng))
        .collect();
    let model = select_lambda_ebic(x.view(), &y, 100).map_err(|e| e.to_string())?;
    let support = model.support();
    ensure(support == vec![0, 5, 10], || format!("support {support:?}"))?;
    for w in model.objective.windows(2) {
        ensure(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), || format!("objective rose {} -> {}", w[0], w[1]))?;
    }
    Ok(format!("support {support:?} at lambda {:.4}, {} sweeps", model.lambda, model.objective.len()))
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let n = rng.gen_range(2..80);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0.0..1.0f64) * 10.0).round() / 10.0).collect();
        let auc = roc_auc(&labels, &scores).map_err(|e| e.to_string())?;
        let trap = trapezoid_area(&roc_curve(&labels, &scores).map_err(|e| e.to_string())?);
        ensure((auc - trap).abs() <= 1e-12, || format!("auc {auc} vs trapezoid {trap}"))?;
        let (mut wins, mut pairs) = (0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                if labels[a] && !labels[b] {
                    pairs += 1.0;
                    wins += if scores[a] > scores[b] { 1.0 } else if scores[a] == scores[b] { 0.5 } else { 0.0 };
                }
            }
        }
        ensure((auc - wins / pairs).abs() <= 1e-12, || format!("auc {auc} vs pairwise {}", wins / pairs))?;
    }

    let lists: Vec<Vec<bool>> = (0..100)
        .map(|_| {
            let len = rng.gen_range(1..20);
            (0..len).map(|_| rng.gen_bool(0.3)).collect()
        })
        .collect();
    let (mut ap_sum, mut rr_sum, mut counted) = (0.0, 0.0, 0);
    for rel in &lists {
        let total = rel.iter().filter(|r| **r).count();
        if total == 0 {
            continue;
        }
        let mut ap = 0.0;
        for k in 0..rel.len() {
            if rel[k] {
                let hits = rel[..=k].iter().filter(|r| **r).count();
                ap += hits as f64 / (k + 1) as f64;
            }
        }
        ap_sum += ap / total as f64;
        rr_sum += 1.0 / (rel.iter().position(|r| *r).expect("has relevant") + 1) as f64;
        counted += 1;
    }
    let ranked: Vec<RankedList> = lists.iter().cloned().map(RankedList::from_ranked).collect();
    let m = ranking_metrics(&ranked).map_err(|e| e.to_string())?;
    ensure((m.map - ap_sum / counted as f64).abs() <= 1e-12, || format!("map {} vs {}", m.map, ap_sum / counted as f64))?;
    ensure((m.mrr - rr_sum / counted as f64).abs() <= 1e-12, || format!("mrr {} vs {}", m.mrr, rr_sum / counted as f64))?;

    let unanimous = vec![vec![4, 0, 0], vec![0, 4, 0], vec![0, 0, 4], vec![4, 0, 0], vec![0, 4, 0]];
    let k1 = fleiss_kappa(&unanimous).map_err(|e| e.to_string())?;
    ensure((k1 - 1.0).abs() <= 1e-12, || format!("unanimous kappa {k1}"))?;
    let reference = vec![
        vec![0, 0, 0, 0, 14],
        vec![0, 2, 6, 4, 2],
        vec![0, 0, 3, 5, 6],
        vec![0, 3, 9, 2, 0],
        vec![2, 2, 8, 1, 1],
        vec![7, 7, 0, 0, 0],
        vec![3, 2, 6, 3, 0],
        vec![2, 5, 3, 2, 2],
        vec![6, 5, 2, 1, 0],
        vec![0, 2, 2, 3, 7],
    ];
    let k = fleiss_kappa(&reference).map_err(|e| e.to_string())?;
    ensure((k - 0.210).abs() <= 1e-3, || format!("reference kappa {k}"))?;
    Ok(format!("auc/map/mrr match oracles, reference kappa {k:.4}"))
}

fn archetypes() -> Outcome {
    let mut got = Vec::new();
    for (kind, expected) in [
        (Archetype::Peaceful, ClusterType::I),
        (Archetype::Feuding, ClusterType::II),
        (Archetype::Factional, ClusterType::III),
    ] {
        let report = cluster_report(&Snapshot { t: 0, graph: archetype_graph(kind) }, 1.0, DEFAULT_MAJORITY, 0);
        let kinds: Vec<ClusterType> = report.clusters.iter().map(|c| c.kind).collect();
        ensure(!kinds.is_empty() && kinds.iter().all(|k| *k == expected), || format!("{kind:?} typed {kinds:?}"))?;
        got.push(expected.label());
    }
    Ok(format!("({})", got.join(", ")))
}

fn golden_run() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = common::mini::run_cli(dir.path(), &["all"]);
    let took = start.elapsed();
    ensure(out.status.success(), || format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    let diffs = common::mini::golden_diff(dir.path());
    ensure(diffs.is_empty(), || diffs.join("; "))?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("byte-identical in {took:?}"))
}

fn anti_leakage() -> Outcome {
    let p = planted(3, 2.0, 0.5, 0.5);
    let mut pool = Vec::new();
    for day in 5..DAYS {
        let cfg = SamplingConfig { negatives: NegativeSampling::Random, seed: day as u64, ..Default::default() };
        pool.extend(sample_pairs(&p.events, day * DAY + 3600, &cfg));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let picks: Vec<_> = pool.choose_multiple(&mut rng, 100).cloned().collect();
    ensure(picks.len() == 100, || format!("only {} candidates", picks.len()))?;
    for c in &picks {
        let past = p.history.truncated(c.as_of);
        let full = pair_sample(&p.history, c, 2, 5000, FEATURE_DIM).map_err(|e| e.to_string())?;
        let cut = pair_sample(&past, c, 2, 5000, FEATURE_DIM).map_err(|e| e.to_string())?;
        ensure(full == cut, || format!("sample for {}-{} at {} sees the future", c.user_i, c.user_j, c.as_of))?;
        let f_full = pair_features(&p.history, &c.user_i, &c.user_j, c.as_of).map_err(|e| e.to_string())?;
        let f_cut = pair_features(&past, &c.user_i, &c.user_j, c.as_of).map_err(|e| e.to_string())?;
        ensure(f_full == f_cut, || format!("pair features for {}-{} see the future", c.user_i, c.user_j))?;
    }
    Ok("100 samples identical on truncated history".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("conflict factor", conflict_factor_oracle),
        ("sentiment aggregation", aggregation_oracle),
        ("normalized adjacency", adjacency_spectrum),
        ("gcn gradients", gcn_gradients),
        ("planted gcn", planted_gcn),
        ("svm", svm),
        ("lasso", lasso),
        ("metrics", metrics),
        ("cluster archetypes", archetypes),
        ("golden mini-corpus", golden_run),
        ("anti-leakage", anti_leakage),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let n = k + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS ({name}: {detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL ({name}: {why})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
