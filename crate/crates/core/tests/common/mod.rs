//! Reference implementations and property checks shared by the integration
//! tests and the acceptance runner. The oracles are written straight from
//! the textbook definitions, with no shared code from the library.
#![allow(dead_code)]

use adeval::data::catalog::CATALOG;
use adeval::detectors::nn::{Activation, Mlp};
use adeval::detectors::LofModel;
use adeval::engine::audit::{audit_class_swap, audit_ratio_manipulation};
use adeval::metrics::{
    aupr, auroc, evaluate, optimal_threshold, percentile_threshold, prf1, PositiveClass, ScoreSet, Threshold,
    ThresholdPolicy,
};
use adeval::rng::SplitMix64;
use adeval::split::{inject_corruption, split_labels, SplitSpec, SplitStrategy};
use ndarray::{Array2, ArrayView2};

pub type Check = Result<String, String>;

// ---------------------------------------------------------------- LOF

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Neighbours sorted by (distance, index), cut after the k-th distance
/// but keeping ties.
fn knn(train: &[Vec<f64>], q: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut all = Vec::new();
    for (j, p) in train.iter().enumerate() {
        if Some(j) != skip {
            all.push((dist(q, p), j));
        }
    }
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let kd = all[k - 1].0;
    all.into_iter().filter(|p| p.0 <= kd).collect()
}

/// Brute-force novelty LOF of every `test` row against `train`.
pub fn naive_lof(train: &[Vec<f64>], test: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = train.len();
    let hoods: Vec<_> = (0..n).map(|i| knn(train, &train[i], k, Some(i))).collect();
    let kdist: Vec<f64> = hoods.iter().map(|h| h[k - 1].0).collect();
    let lrd_of = |h: &[(f64, usize)]| {
        let mut s = 0.0;
        for &(d, o) in h {
            s += d.max(kdist[o]).max(1e-12);
        }
        1.0 / (s / h.len() as f64)
    };
    let lrd: Vec<f64> = hoods.iter().map(|h| lrd_of(h)).collect();
    test.iter()
        .map(|q| {
            let h = knn(train, q, k, None);
            let mut s = 0.0;
            for &(_, o) in &h {
                s += lrd[o];
            }
            (s / h.len() as f64) / lrd_of(&h)
        })
        .collect()
}

pub fn to_array(rows: &[Vec<f64>]) -> Array2<f64> {
    let d = rows[0].len();
    Array2::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j])
}

/// Random points; on a small integer grid when `grid` so that distance
/// ties and duplicates are common.
pub fn random_points(rng: &mut SplitMix64, n: usize, d: usize, grid: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| if grid { rng.below(5) as f64 } else { rng.next_f64() })
                .collect()
        })
        .collect()
}

fn distinct(rows: &[Vec<f64>]) -> bool {
    rows.iter().any(|r| r != &rows[0])
}

/// Compares the library LOF with the brute-force oracle on `cases` random
/// point sets of at most 200 rows. Returns the number of scores compared.
pub fn lof_oracle_check(cases: usize, seed: u64) -> Result<usize, String> {
    let mut rng = SplitMix64::new(seed);
    let mut compared = 0;
    for case in 0..cases {
        let n_train = 5 + rng.below(150) as usize;
        let n_test = 1 + rng.below(45) as usize;
        let d = 1 + rng.below(6) as usize;
        let grid = case % 2 == 0;
        let train = random_points(&mut rng, n_train, d, grid);
        if !distinct(&train) {
            continue;
        }
        let test = random_points(&mut rng, n_test, d, grid);
        let k = 1 + rng.below(n_train.min(30) as u64 - 1) as usize;
        let model = LofModel::fit(to_array(&train).view(), k).map_err(|e| format!("case {case}: {e}"))?;
        let got = model.score(to_array(&test).view()).map_err(|e| e.to_string())?;
        let want = naive_lof(&train, &test, k);
        for (i, (g, w)) in got.iter().zip(&want).enumerate() {
            if g != w {
                return Err(format!("case {case} (n={n_train}, d={d}, k={k}) row {i}: {g} vs oracle {w}"));
            }
        }
        compared += got.len();
    }
    Ok(compared)
}

// ---------------------------------------------------------------- DAE

/// The autoencoder shape used by the gradient check: 4 -> 3 -> 2 -> 3 -> 4.
pub fn small_autoencoder(seed: u64) -> Mlp<f64> {
    let mut rng = SplitMix64::new(seed);
    Mlp::new(
        &[4, 3, 2, 3, 4],
        &[Activation::Relu, Activation::Identity, Activation::Relu, Activation::Identity],
        &mut rng,
    )
}

fn loss(net: &Mlp<f64>, x: ArrayView2<'_, f64>) -> f64 {
    let y = net.forward(x);
    (&y - &x).iter().map(|d| d * d).sum::<f64>() / x.len() as f64
}

/// Relative error `|g - g_fd| / (|g| + |g_fd|)` between the analytic
/// gradient and central finite differences with step `h`, over every
/// parameter of a randomly initialised network on a 5 x 4 batch.
pub fn gradient_relative_error(seed: u64, h: f64) -> f64 {
    let mut net = small_autoencoder(seed);
    let mut rng = SplitMix64::new(seed ^ 0xabcdef);
    let x = Array2::from_shape_simple_fn((5, 4), || rng.next_f64());
    let (_, grads) = net.reconstruction_loss_and_gradients(x.view());
    let (mut num, mut den_a, mut den_b) = (0.0f64, 0.0f64, 0.0f64);
    for l in 0..net.layers.len() {
        let (rows, cols) = net.layers[l].weight.dim();
        for i in 0..rows {
            for j in 0..cols {
                let orig = net.layers[l].weight[[i, j]];
                net.layers[l].weight[[i, j]] = orig + h;
                let up = loss(&net, x.view());
                net.layers[l].weight[[i, j]] = orig - h;
                let down = loss(&net, x.view());
                net.layers[l].weight[[i, j]] = orig;
                let fd = (up - down) / (2.0 * h);
                let g = grads[l].weight[[i, j]];
                num += (g - fd).powi(2);
                den_a += g * g;
                den_b += fd * fd;
            }
        }
        for i in 0..net.layers[l].bias.len() {
            let orig = net.layers[l].bias[i];
            net.layers[l].bias[i] = orig + h;
            let up = loss(&net, x.view());
            net.layers[l].bias[i] = orig - h;
            let down = loss(&net, x.view());
            net.layers[l].bias[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let g = grads[l].bias[i];
            num += (g - fd).powi(2);
            den_a += g * g;
            den_b += fd * fd;
        }
    }
    num.sqrt() / (den_a.sqrt() + den_b.sqrt()).max(1e-300)
}

// ---------------------------------------------------------------- metrics

/// Uniform random scores with exactly `round(rho * n)` positives.
pub fn random_score_set(rng: &mut SplitMix64, n: usize, rho: f64) -> ScoreSet {
    let p = ((rho * n as f64).round() as usize).clamp(1, n - 1);
    let mut labels: Vec<bool> = (0..n).map(|i| i < p).collect();
    rng.shuffle(&mut labels);
    let scores = (0..n).map(|_| rng.next_f64()).collect();
    ScoreSet::new("random", scores, labels).unwrap()
}

/// Scores that are informative but noisy, drawn from a few levels so ties
/// occur.
pub fn noisy_score_set(rng: &mut SplitMix64) -> ScoreSet {
    let n = 20 + rng.below(300) as usize;
    let rho = 0.02 + 0.4 * rng.next_f64();
    let levels = 2 + rng.below(40);
    let mut labels: Vec<bool> = (0..n).map(|_| rng.next_f64() < rho).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = labels
        .iter()
        .map(|&l| (rng.below(levels) as f64 + if l { 0.3 * levels as f64 } else { 0.0 }) / levels as f64)
        .collect();
    ScoreSet::new("noisy", scores, labels).unwrap()
}

/// Pairwise AUROC: P(s+ > s-) + P(s+ = s-) / 2.
pub fn brute_auroc(s: &ScoreSet) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &li) in s.labels().iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in s.labels().iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            let (a, b) = (s.scores()[i], s.scores()[j]);
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Average precision: sum over distinct cut-offs `score >= v`, highest
/// first, of the recall gained times the precision there.
pub fn brute_average_precision(s: &ScoreSet) -> f64 {
    let mut values: Vec<f64> = s.scores().to_vec();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values.dedup();
    let p = s.n_positive() as f64;
    let (mut ap, mut prev_recall) = (0.0, 0.0);
    for v in values {
        let (mut tp, mut flagged) = (0.0, 0.0);
        for (&x, &l) in s.scores().iter().zip(s.labels()) {
            if x >= v {
                flagged += 1.0;
                if l {
                    tp += 1.0;
                }
            }
        }
        let recall = tp / p;
        ap += (recall - prev_recall) * tp / flagged;
        prev_recall = recall;
    }
    ap
}

/// Best F1 over every possible cut-off, including flagging nothing.
pub fn brute_best_f1(s: &ScoreSet) -> f64 {
    let mut cuts: Vec<f64> = s.scores().to_vec();
    cuts.push(f64::INFINITY);
    let mut best = 0.0f64;
    for v in cuts {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for (&x, &l) in s.scores().iter().zip(s.labels()) {
            match (x >= v, l) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        if tp > 0.0 {
            best = best.max(2.0 * tp / (2.0 * tp + fp + fn_));
        }
    }
    best
}

fn flagged(s: &ScoreSet, t: &Threshold) -> Vec<bool> {
    s.scores().iter().map(|&x| x > t.value).collect()
}

pub fn check_random_aupr(n: usize, seeds: u64, tol: f64) -> Check {
    let mut worst = 0.0f64;
    for rho in [0.05, 0.1, 0.3] {
        for seed in 0..seeds {
            let mut rng = SplitMix64::new(seed * 7919 + (rho * 1000.0) as u64);
            let s = random_score_set(&mut rng, n, rho);
            let dev = (aupr(&s).unwrap() - rho).abs();
            worst = worst.max(dev);
            if dev > tol {
                return Err(format!("rho {rho} seed {seed}: AUPR deviates by {dev:.4}"));
            }
        }
    }
    Ok(format!("max |AUPR - rho| = {worst:.4}"))
}

pub fn check_perfect_scorer() -> Check {
    for n in [10usize, 100, 1000] {
        let labels: Vec<bool> = (0..n).map(|i| i % 10 == 0).collect();
        let scores: Vec<f64> = labels.iter().enumerate().map(|(i, &l)| i as f64 + if l { 1e6 } else { 0.0 }).collect();
        let s = ScoreSet::new("perfect", scores, labels).unwrap();
        for policy in [ThresholdPolicy::OptimalF1, ThresholdPolicy::Percentile] {
            let r = evaluate(&s, policy, PositiveClass::Minority).unwrap();
            let all = [r.precision, r.recall, r.f1, r.auroc, r.aupr];
            if all.iter().any(|&v| v != 1.0) {
                return Err(format!("n {n} {policy:?}: {all:?}"));
            }
        }
    }
    Ok("P = R = F1 = AUROC = AUPR = 1".into())
}

/// Strictly increasing, and far from affine.
fn warp(x: f64) -> f64 {
    (3.0 * x).exp() + x.powi(3)
}

pub fn check_monotone_invariance(sets: u64) -> Check {
    for seed in 0..sets {
        let s = noisy_score_set(&mut SplitMix64::new(seed));
        let w = ScoreSet::new("warped", s.scores().iter().map(|&x| warp(x)).collect(), s.labels().to_vec()).unwrap();
        let (a, b) = (auroc(&s).unwrap(), auroc(&w).unwrap());
        let (c, d) = (aupr(&s).unwrap(), aupr(&w).unwrap());
        if a != b || c != d {
            return Err(format!("seed {seed}: AUROC {a} vs {b}, AUPR {c} vs {d}"));
        }
        if flagged(&s, &optimal_threshold(&s).unwrap()) != flagged(&w, &optimal_threshold(&w).unwrap()) {
            return Err(format!("seed {seed}: optimal-F1 predictions differ"));
        }
    }
    Ok(format!("{sets} score sets"))
}

pub fn check_optimal_dominates_percentile(sets: u64) -> Check {
    for seed in 0..sets {
        let s = noisy_score_set(&mut SplitMix64::new(1000 + seed));
        let opt = prf1(&s, &optimal_threshold(&s).unwrap(), PositiveClass::Minority).f1;
        let pct = prf1(&s, &percentile_threshold(&s, s.anomaly_ratio()).unwrap(), PositiveClass::Minority).f1;
        let brute = brute_best_f1(&s);
        if opt < pct || (opt - brute).abs() > 1e-12 {
            return Err(format!("seed {seed}: optimal {opt}, percentile {pct}, brute force {brute}"));
        }
    }
    Ok(format!("{sets} score sets"))
}

/// Negating the scores and flipping the labels, then scoring the majority
/// class at the mirrored threshold, reproduces the original report.
pub fn check_class_swap_identity(sets: u64) -> Check {
    for seed in 0..sets {
        let s = noisy_score_set(&mut SplitMix64::new(2000 + seed));
        let swapped = ScoreSet::new(
            "swapped",
            s.scores().iter().map(|x| -x).collect(),
            s.labels().iter().map(|l| !l).collect(),
        )
        .unwrap();
        for t in [optimal_threshold(&s).unwrap(), percentile_threshold(&s, s.anomaly_ratio()).unwrap()] {
            // `s > t` is `-s < -t`, i.e. not `-s > next_down(-t)`.
            let neg = Threshold {
                value: (-t.value).next_down(),
                ..t
            };
            let a = prf1(&s, &t, PositiveClass::Minority);
            let b = prf1(&swapped, &neg, PositiveClass::Majority);
            if (a.confusion, a.precision, a.recall, a.f1) != (b.confusion, b.precision, b.recall, b.f1) {
                return Err(format!("seed {seed}: {a:?} vs {b:?}"));
            }
        }
        let (x, y) = (auroc(&s).unwrap(), auroc(&swapped).unwrap());
        if (x - y).abs() > 1e-12 {
            return Err(format!("seed {seed}: AUROC {x} vs {y}"));
        }
    }
    Ok(format!("{sets} score sets"))
}

// ---------------------------------------------------------------- splits

/// Label vectors with the published size and anomaly count of each catalog
/// dataset, anomalies first.
pub fn catalog_label_vectors() -> Vec<(&'static str, Vec<bool>)> {
    CATALOG
        .iter()
        .map(|e| {
            let a = e.expected_anomalies();
            (e.name, (0..e.n_samples).map(|i| i < a).collect())
        })
        .collect()
}

/// Outcome of the split checks over a set of label vectors.
pub struct SplitSuite {
    pub proposed: Check,
    pub discarding: Check,
    pub corruption: Check,
}

/// Runs the proposed, discarding and corruption checks in one pass per seed.
/// The corrupted split reuses the proposed one, as `split_labels` does.
pub fn check_split_suite(labels: &[(&str, Vec<bool>)], seeds: u64, tol: f64) -> SplitSuite {
    let mut proposed: Check = Ok(format!("{} datasets x {seeds} seeds", labels.len()));
    let mut corruption: Check = Ok("round(0.1 A) anomalies moved in every case".into());
    let mut ratios = Vec::new();
    let mut discarding: Option<String> = None;
    for (name, l) in labels {
        let a = l.iter().filter(|&&x| x).count();
        let normals = l.len() - a;
        let want = (0.1 * a as f64).round() as usize;
        let (mut disc, mut rec) = (0.0, 0.0);
        for seed in 0..seeds {
            let spec = SplitSpec::new(SplitStrategy::Proposed, seed);
            let r = match split_labels(l, &spec) {
                Ok(r) => r,
                Err(e) => {
                    proposed = Err(format!("{name} seed {seed}: {e}"));
                    continue;
                }
            };
            let c = r.counts;
            if proposed.is_ok() && (c.train_anomalies != 0 || c.test_anomalies != a || c.train_normals != normals / 2) {
                proposed = Err(format!("{name} seed {seed}: {c:?}"));
            }
            if corruption.is_ok() {
                match inject_corruption(&r, l, 0.1, seed) {
                    Ok(k) if k.counts.train_anomalies == want && k.counts.test_anomalies == a - want => {}
                    Ok(k) => {
                        corruption = Err(format!("{name} seed {seed}: moved {} of {a}, want {want}", k.counts.train_anomalies))
                    }
                    Err(e) => corruption = Err(format!("{name} seed {seed}: {e}")),
                }
            }
            for (strategy, acc) in [(SplitStrategy::Discarding, &mut disc), (SplitStrategy::Recycling, &mut rec)] {
                match split_labels(l, &SplitSpec::new(strategy, seed)) {
                    Ok(r) => *acc += r.counts.test_anomalies as f64,
                    Err(e) => discarding = discarding.or(Some(format!("{name} seed {seed}: {e}"))),
                }
            }
        }
        let ratio = disc / rec;
        if (ratio - 0.5).abs() > tol * 0.5 {
            discarding = discarding.or(Some(format!("{name}: discarding / recycling = {ratio:.4}")));
        }
        ratios.push(format!("{name} {ratio:.4}"));
    }
    SplitSuite {
        proposed,
        discarding: match discarding {
            Some(e) => Err(e),
            None => Ok(ratios.join(", ")),
        },
        corruption,
    }
}

// ---------------------------------------------------------------- audits

pub fn check_all_negative_swap() -> Check {
    let labels: Vec<bool> = (0..1000).map(|i| i % 10 == 0).collect();
    let s = ScoreSet::new("all-negative", vec![0.0; 1000], labels).unwrap();
    let t = Threshold {
        value: f64::INFINITY,
        policy: ThresholdPolicy::OptimalF1,
        percentile_level: None,
    };
    let r = audit_class_swap(&s, &t);
    if r.minority.f1 == 0.0 && (r.majority.f1 - 0.947).abs() < 5e-4 {
        Ok(format!("F1 minority {:.3}, majority {:.3}", r.minority.f1, r.majority.f1))
    } else {
        Err(format!("F1 minority {}, majority {}", r.minority.f1, r.majority.f1))
    }
}

/// A detector that separates the classes imperfectly, at a threshold fixed
/// before the positives are duplicated.
pub fn check_ratio_manipulation() -> Check {
    let mut rng = SplitMix64::new(17);
    let n = 2000;
    let labels: Vec<bool> = (0..n).map(|i| i % 20 == 0).collect();
    let scores: Vec<f64> = labels
        .iter()
        .map(|&l| rng.next_f64() + if l { 0.6 } else { 0.0 })
        .collect();
    let s = ScoreSet::new("overlap", scores, labels).unwrap();
    let t = percentile_threshold(&s, s.anomaly_ratio()).unwrap();
    let rows = audit_ratio_manipulation(&s, &t, &[1.0, 2.0], 5).map_err(|e| e.to_string())?;
    let r = &rows[1];
    let line = format!(
        "tau {:.4}: F1 {:.4} -> {:.4} (dF1 {:+.4}), dAUROC {:+.5}",
        t.value, rows[0].f1, r.f1, r.delta_f1, r.delta_auroc
    );
    if r.delta_f1.abs() > 0.05 && r.delta_auroc.abs() < 0.005 {
        Ok(line)
    } else {
        Err(line)
    }
}
