//! Command-line front end for the bench harness.
//!
//! Exit codes: 0 on success, 1 when any run failed, 2 on configuration errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gms_ransac::bench::{
    self, compare_methods, run_scenario, sweep_presets, sweep_ratios, BenchConfig, ConfigMap, Format, RunRecord, Source,
};
use gms_ransac::imageio::synth_correspondences;

#[derive(Parser)]
#[command(name = "gms-bench", version, about = "GMS + prioritized RANSAC benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario over all seeds.
    Run,
    /// Run the scenario once per configured preset and report the trend.
    SweepPresets,
    /// Run the scenario for every (ratio, preset) pair.
    SweepRatios,
    /// Run every configured method and report time reductions.
    Compare,
    /// Write a synthetic scenario's correspondences and labels as CSV.
    Synth,
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    repeats: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    preset: Option<usize>,
    /// Grouping ratio as p/q or a decimal.
    #[arg(long, global = true)]
    ratio: Option<String>,
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    single_worker: bool,
    /// Any other config key, as key=value. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load_config(flags: &Flags) -> Result<BenchConfig, String> {
    let mut map = match &flags.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            ConfigMap::parse(&text).map_err(|e| e.to_string())?
        }
        None => ConfigMap::default(),
    };
    let mut set = |k: &str, v: String| map.set(k, &v).map_err(|e| e.to_string());
    if let Some(v) = flags.seed {
        set("seed", v.to_string())?;
    }
    if let Some(v) = flags.repeats {
        set("repeats", v.to_string())?;
    }
    if flags.seed.is_some() || flags.repeats.is_some() {
        // explicit seed flags replace a seed list from the file
        set("seeds", String::new())?;
    }
    if let Some(v) = &flags.out {
        set("out", v.display().to_string())?;
    }
    if let Some(v) = &flags.format {
        set("format", v.clone())?;
    }
    if let Some(v) = flags.preset {
        set("preset", v.to_string())?;
    }
    if let Some(v) = &flags.ratio {
        set("ratio", v.clone())?;
    }
    if let Some(v) = &flags.method {
        set("method", v.clone())?;
    }
    if flags.single_worker {
        set("single_worker", "true".into())?;
    }
    for kv in &flags.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        set(k.trim(), v.trim().to_string())?;
    }
    BenchConfig::from_map(&map).map_err(|e| e.to_string())
}

fn open_out(cfg: &BenchConfig) -> std::io::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit(cfg: &BenchConfig, records: &[RunRecord]) -> Result<(), bench::BenchError> {
    let out = open_out(cfg)?;
    match cfg.format {
        Format::Csv => bench::write_csv(out, records),
        Format::Jsonl => bench::write_jsonl(out, records),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}

fn synth(cfg: &BenchConfig) -> Result<(), String> {
    let Source::Synthetic { homography, n_inliers, n_outliers, noise, extent } = &cfg.base.source else {
        return Err("synth needs source = synthetic".into());
    };
    let seed = cfg.base.seeds[0];
    let (pairs, gt) =
        synth_correspondences(*n_inliers, *n_outliers, homography, *noise, *extent, seed).map_err(|e| e.to_string())?;
    let out = open_out(cfg).map_err(|e| e.to_string())?;
    let mut w = csv::Writer::from_writer(out);
    let mut run = || -> Result<(), csv::Error> {
        w.write_record(["x_a", "y_a", "x_b", "y_b", "inlier"])?;
        for ((p, q), l) in pairs.iter().zip(&gt.inlier_labels) {
            w.write_record([p.x.to_string(), p.y.to_string(), q.x.to_string(), q.y.to_string(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    run().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli.flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    let records = match cli.command {
        Command::Synth => {
            return match synth(&cfg) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Run => run_scenario(&cfg.base),
        Command::SweepPresets => sweep_presets(&cfg.base, &cfg.presets).map(|sweep| {
            for t in &sweep.trend {
                eprintln!(
                    "preset {:>6}  median matches_final {}  median total ms {}",
                    t.preset,
                    fmt_opt(t.median_matches_final),
                    fmt_opt(t.median_total_ms)
                );
            }
            eprintln!("matches_final non-decreasing in preset: {}", sweep.non_decreasing);
            sweep.records
        }),
        Command::SweepRatios => sweep_ratios(&cfg.base, &cfg.ratios, &cfg.presets),
        Command::Compare => compare_methods(&cfg.base, &cfg.methods, &cfg.presets).map(|cmp| {
            for s in &cmp.summaries {
                eprintln!(
                    "{:<24} ok {:>4} failed {:>4}  median total ms {}  median ransac ms {}  median iterations {}  mean precision {}  mean recall {}",
                    s.method.name(),
                    s.runs_ok,
                    s.runs_failed,
                    fmt_opt(s.median_total_ms),
                    fmt_opt(s.median_ransac_ms),
                    fmt_opt(s.median_iterations),
                    fmt_opt(s.mean_precision),
                    fmt_opt(s.mean_recall)
                );
            }
            for r in &cmp.reductions {
                eprintln!("time reduction of {} vs {}: {:.2}%", r.method.name(), r.baseline.name(), r.percent);
            }
            cmp.records
        }),
    };

    let records = match records {
        Ok(r) => r,
        Err(e @ (bench::BenchError::InvalidScenario(_) | bench::BenchError::Config(_))) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = emit(&cfg, &records) {
        eprintln!("error writing output: {e}");
        return ExitCode::FAILURE;
    }
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", records.len());
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
