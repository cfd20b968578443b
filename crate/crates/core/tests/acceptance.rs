//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances are fixed constants below.

mod common;

use std::time::{Duration, Instant};

use common::{exhaustive_best_count, gms_instance, gms_oracle, iterations_formula, small_instance};
use gms_ransac::bench::config::default_synthetic_homography;
use gms_ransac::bench::{run_scenario, sweep_presets, warped_homography, write_csv, Method, RunRecord, Scenario, Source};
use gms_ransac::gms::{gms_filter, gms_score, GmsConfig};
use gms_ransac::imageio::{synth_correspondences, Dims};
use gms_ransac::robust::{ransac, required_iterations, Candidate, Model, ModelKind, RansacConfig, SamplingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FORMULA_LIMIT: Duration = Duration::from_secs(1);
const GMS_LIMIT: Duration = Duration::from_secs(30);
const SMALL_RANSAC_LIMIT: Duration = Duration::from_secs(10);
const MIN_PRECISION: f64 = 95.0;
const MIN_RECALL: f64 = 80.0;
const MAX_ITERATION_RATIO: f64 = 0.5;
const MIN_RANSAC_REDUCTION: f64 = 20.0;
const MAX_FINAL_DIFF: f64 = 0.02;
const SPEED_LIMIT: Duration = Duration::from_secs(300);
const TREND_LIMIT: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn iteration_formula() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut points = 0;
    for p in [0.9, 0.95, 0.99, 0.995, 0.999] {
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for n in [2, 4, 7, 8] {
                points += 1;
                if required_iterations(p, t, n, usize::MAX) != iterations_formula(p, t, n, usize::MAX) {
                    mismatches += 1;
                }
            }
        }
    }
    let k4 = required_iterations(0.99, 0.5, 4, usize::MAX);
    let k8 = required_iterations(0.99, 0.5, 8, usize::MAX);
    let elapsed = start.elapsed();
    outcome(
        points == 100 && mismatches == 0 && k4 == 72 && k8 == 1177 && elapsed < FORMULA_LIMIT,
        format!("{points} grid points, {mismatches} mismatches, k(4)={k4}, k(8)={k8}, {elapsed:?} (limit {FORMULA_LIMIT:?})"),
    )
}

fn gms_equivalence() -> Outcome {
    let start = Instant::now();
    let cfg = GmsConfig::default();
    let mut bad = Vec::new();
    let mut total = 0;
    for seed in 0..200 {
        let (m, pa, pb, dims) = gms_instance(1000 + seed, 2000);
        total += m.len();
        let oracle = gms_oracle(&m, &pa, dims, &pb, dims, &cfg);
        let scored = gms_score(&m, &pa, dims, &pb, dims, &cfg).unwrap();
        let survivors = gms_filter(&m, &pa, dims, &pb, dims, &cfg).unwrap();
        let want: Vec<_> = m.iter().zip(&oracle).filter(|(_, o)| o.passed).map(|(mm, o)| (*mm, o.confidence)).collect();
        let got: Vec<_> = survivors.iter().map(|s| (s.m, s.confidence)).collect();
        let conf_ok = scored.iter().zip(&oracle).all(|((s, passed), o)| s.confidence == o.confidence && *passed == o.passed);
        if got != want || !conf_ok {
            bad.push(seed);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && elapsed < GMS_LIMIT,
        format!("200 instances, {total} matches, {} disagreements {bad:?}, {elapsed:?} (limit {GMS_LIMIT:?})", bad.len()),
    )
}

fn small_ransac() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for seed in 0..100 {
        let (cands, _) = small_instance(5000 + seed);
        let want = exhaustive_best_count(&cands, 3.0);
        let cfg = RansacConfig { max_iterations: 495, ..RansacConfig::new(ModelKind::Homography).with_seed(seed) };
        let got = ransac(&cands, &cfg, SamplingMode::Uniform).map(|m| m.inlier_count).unwrap_or(0);
        if got != want {
            bad.push((seed, got, want));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && elapsed < SMALL_RANSAC_LIMIT,
        format!("100 instances, budget 495 = C(12,4), misses {bad:?}, {elapsed:?} (limit {SMALL_RANSAC_LIMIT:?})"),
    )
}

fn warped_accuracy() -> Outcome {
    let s = Scenario::new(
        "warped_accuracy",
        Source::Warped { extent: Dims::new(640, 480), scene_seed: None, homography: None, outlier_rate: 0.5, noise: 0.5 },
    )
    .with_preset(3000)
    .with_method(Method::GmsRansacPrioritized)
    .with_seeds(0, 20);
    let rows = run_scenario(&s).unwrap();
    let ok: Vec<&RunRecord> = rows.iter().filter(|r| r.is_ok()).collect();
    let precision = median(ok.iter().map(|r| if r.precision_empty { 0.0 } else { r.precision }).collect());
    let recall = median(ok.iter().map(|r| if r.recall_empty { 0.0 } else { r.recall }).collect());
    outcome(
        ok.len() == 20 && precision >= MIN_PRECISION && recall >= MIN_RECALL,
        format!(
            "{} of 20 runs ok, median precision {precision:.2}% (min {MIN_PRECISION}), median recall {recall:.2}% (min {MIN_RECALL})",
            ok.len()
        ),
    )
}

fn speedup() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for rate in [0.3, 0.5, 0.7] {
        let n = 2000;
        let n_out = (rate * n as f64).round() as usize;
        let mut s = Scenario::new(
            format!("outlier_rate_{rate}"),
            Source::Synthetic {
                homography: default_synthetic_homography(),
                n_inliers: n - n_out,
                n_outliers: n_out,
                noise: 0.5,
                extent: Dims::new(640, 480),
            },
        )
        .with_seeds(0, 100);
        s.gms.reject = false;
        s.single_worker = true;
        let run = |m: Method| run_scenario(&s.clone().with_method(m)).unwrap();
        let uni = run(Method::GmsRansacUniform);
        let pri = run(Method::GmsRansacPrioritized);
        let med = |rs: &[RunRecord], f: fn(&RunRecord) -> f64| median(rs.iter().filter(|r| r.is_ok()).map(f).collect());
        let (iu, ip) = (med(&uni, |r| r.iterations_used as f64), med(&pri, |r| r.iterations_used as f64));
        let (tu, tp) = (med(&uni, |r| r.t_ransac_ms), med(&pri, |r| r.t_ransac_ms));
        let (fu, fp) = (med(&uni, |r| r.matches_final as f64), med(&pri, |r| r.matches_final as f64));
        let reduction = 100.0 * (tu - tp) / tu;
        let diff = (fp - fu).abs() / fu;
        let ok = ip <= MAX_ITERATION_RATIO * iu && reduction >= MIN_RANSAC_REDUCTION && diff <= MAX_FINAL_DIFF;
        pass &= ok;
        parts.push(format!(
            "rate {rate}: iterations {iu}->{ip}, ransac ms {tu:.3}->{tp:.3} ({reduction:.1}% less), matches_final {fu}->{fp} ({:.2}%)",
            100.0 * diff
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < SPEED_LIMIT;
    outcome(
        pass,
        format!(
            "{}; {elapsed:?} (limits: iterations <= {MAX_ITERATION_RATIO}x, reduction >= {MIN_RANSAC_REDUCTION}%, final diff <= {}%, {SPEED_LIMIT:?})",
            parts.join("; "),
            100.0 * MAX_FINAL_DIFF
        ),
    )
}

fn preset_trend() -> Outcome {
    let start = Instant::now();
    let extent = Dims::new(640, 480);
    let s = Scenario::new(
        "preset_trend",
        Source::Warped {
            extent,
            scene_seed: Some(7),
            homography: Some(warped_homography(None, extent, 7)),
            outlier_rate: 0.5,
            noise: 0.5,
        },
    )
    .with_seeds(0, 3);
    let sweep = sweep_presets(&s, &[1000, 2000, 3000, 5000, 8000, 10000]).unwrap();
    let elapsed = start.elapsed();
    let meds: Vec<String> =
        sweep.trend.iter().map(|t| format!("{}:{}", t.preset, t.median_matches_final.unwrap_or(f64::NAN))).collect();
    outcome(
        sweep.non_decreasing && elapsed < TREND_LIMIT,
        format!("median matches_final {}, {elapsed:?} (limit {TREND_LIMIT:?})", meds.join(" ")),
    )
}

fn same_model(a: &Model, b: &Model) -> bool {
    a.kind == b.kind
        && a.matrix.iter().zip(b.matrix.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
        && a.inlier_mask == b.inlier_mask
        && a.inlier_count == b.inlier_count
        && a.iterations_used == b.iterations_used
}

fn ratio_one() -> Outcome {
    let mut differing = Vec::new();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(50..600);
        let n_out = (n as f64 * rng.random_range(0.1..0.7)) as usize;
        let (pairs, gt) =
            synth_correspondences(n - n_out, n_out, &default_synthetic_homography(), 0.5, Dims::new(640, 480), seed).unwrap();
        let cands: Vec<Candidate> = pairs
            .iter()
            .zip(&gt.inlier_labels)
            .enumerate()
            .map(|(i, ((a, b), &inl))| Candidate {
                src: *a,
                dst: *b,
                confidence: if inl { rng.random_range(3..30) } else { rng.random_range(0..10) },
                distance: rng.random_range(0..64),
                idx_a: i,
            })
            .collect();
        let cfg = RansacConfig { group_ratio: 1.0, ..RansacConfig::new(ModelKind::Homography).with_seed(seed) };
        let u = ransac(&cands, &cfg, SamplingMode::Uniform);
        let p = ransac(&cands, &cfg, SamplingMode::Prioritized);
        let same = match (&u, &p) {
            (Ok(a), Ok(b)) => same_model(a, b),
            (Err(a), Err(b)) => a == b,
            _ => false,
        };
        if !same {
            differing.push(seed);
        }
    }
    outcome(differing.is_empty(), format!("50 seeded runs, {} differ {differing:?}", differing.len()))
}

fn determinism() -> Outcome {
    let extent = Dims::new(640, 480);
    let scenarios = [
        Scenario::new(
            "warped",
            Source::Warped { extent, scene_seed: None, homography: None, outlier_rate: 0.5, noise: 0.5 },
        )
        .with_preset(2000)
        .with_seeds(11, 6),
        {
            let mut s = Scenario::new(
                "synthetic",
                Source::Synthetic {
                    homography: default_synthetic_homography(),
                    n_inliers: 800,
                    n_outliers: 1200,
                    noise: 0.5,
                    extent,
                },
            )
            .with_seeds(3, 20);
            s.gms.reject = false;
            s
        },
    ];
    let csv = |rows: &[RunRecord]| {
        let stripped: Vec<RunRecord> = rows.iter().map(RunRecord::without_timing).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &stripped).unwrap();
        buf
    };
    let mut differing = Vec::new();
    let mut rows = 0;
    for s in &scenarios {
        let first = csv(&run_scenario(s).unwrap());
        let second = csv(&run_scenario(s).unwrap());
        rows += s.seeds.len();
        if first != second {
            differing.push(s.id.clone());
        }
    }
    outcome(differing.is_empty(), format!("{} scenarios, {rows} rows, differing {differing:?}", scenarios.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("iteration count formula", iteration_formula),
        ("gms equals quadratic recount", gms_equivalence),
        ("ransac reaches exhaustive optimum", small_ransac),
        ("warped pair accuracy", warped_accuracy),
        ("prioritized speedup", speedup),
        ("preset trend", preset_trend),
        ("ratio one equals uniform", ratio_one),
        ("rerun determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
