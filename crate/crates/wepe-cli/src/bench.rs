//! Direct-evaluation vs LUT-query benchmark.
//!
//! Reports per-evaluation nanoseconds and their ratio; wall-clock numbers are
//! machine-dependent, the ratio is the portable claim. Runs single-threaded
//! unless `--threads` switches batch evaluation to aggregate-throughput mode.

use std::path::PathBuf;

use serde::Serialize;
use wepe::encoder::GridEncoder;
use wepe::lut::Lut;
use wepe::util::QuasiRandom2;

use crate::{commands::load_config, CliError};

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub n_points: usize,
    pub repeats: usize,
    pub direct_ns_per_eval: f64,
    pub lut_ns_per_query: f64,
    pub speedup: f64,
    pub trunc_m_n: (u32, u32),
    pub resolution: u32,
    /// LUT query time with the truncation window raised to 48x48; queries
    /// must not depend on it.
    pub lut48_ns_per_query: f64,
    pub decoupling_ratio: f64,
    pub decoupling_ok: bool,
    pub threads: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

pub fn run(
    config: Option<PathBuf>,
    res: u32,
    n_points: usize,
    repeats: usize,
    threads: Option<usize>,
    json: bool,
) -> Result<(), CliError> {
    if n_points < 1000 {
        return Err(CliError::Usage(format!(
            "--n-points must be at least 1000, got {n_points}"
        )));
    }
    if repeats < 1 {
        return Err(CliError::Usage("--repeats must be >= 1".into()));
    }
    let run_cfg = load_config(config)?;
    let enc_cfg = run_cfg.encoder_config();
    let n_threads = threads.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n_threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut seq = QuasiRandom2::new();
    let points: Vec<(f64, f64)> = (0..n_points).map(|_| seq.next_point()).collect();

    let enc = GridEncoder::new(&enc_cfg);
    let lut = Lut::build(&enc_cfg, res).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut cfg48 = enc_cfg.clone();
    cfg48.lattice.trunc_m = 48;
    cfg48.lattice.trunc_n = 48;
    let lut48 = Lut::build(&cfg48, res).map_err(|e| CliError::Usage(e.to_string()))?;

    let time_direct = || {
        let start = std::time::Instant::now();
        let sink: f64 = if n_threads > 1 {
            pool.install(|| {
                use rayon::prelude::*;
                points
                    .par_iter()
                    .map(|&(u, v)| enc.features_at(u, v).f1)
                    .sum()
            })
        } else {
            points.iter().map(|&(u, v)| enc.features_at(u, v).f1).sum()
        };
        std::hint::black_box(sink);
        start.elapsed().as_nanos() as f64 / n_points as f64
    };
    let time_lut = |table: &Lut| {
        let start = std::time::Instant::now();
        let sink: f64 = if n_threads > 1 {
            pool.install(|| {
                use rayon::prelude::*;
                points
                    .par_iter()
                    .map(|&(u, v)| table.query_bilinear(u, v).unwrap().f1)
                    .sum()
            })
        } else {
            points
                .iter()
                .map(|&(u, v)| table.query_bilinear(u, v).unwrap().f1)
                .sum()
        };
        std::hint::black_box(sink);
        start.elapsed().as_nanos() as f64 / n_points as f64
    };

    // Warm-up pass for each path, then interleaved timed repeats so load
    // noise cancels in the decoupling ratio.
    time_direct();
    time_lut(&lut);
    time_lut(&lut48);
    let mut direct_times = Vec::with_capacity(repeats);
    let mut q12_times = Vec::with_capacity(repeats);
    let mut ratios = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        direct_times.push(time_direct());
        let q12 = time_lut(&lut);
        let q48 = time_lut(&lut48);
        q12_times.push(q12);
        ratios.push(q48 / q12);
    }
    let direct_ns = median(direct_times);
    let lut_ns = median(q12_times);
    let decoupling_ratio = median(ratios);
    let lut48_ns = lut_ns * decoupling_ratio;
    let report = BenchReport {
        n_points,
        repeats,
        direct_ns_per_eval: direct_ns,
        lut_ns_per_query: lut_ns,
        speedup: direct_ns / lut_ns,
        trunc_m_n: (enc_cfg.lattice.trunc_m, enc_cfg.lattice.trunc_n),
        resolution: res,
        lut48_ns_per_query: lut48_ns,
        decoupling_ratio,
        decoupling_ok: (0.8..=1.2).contains(&decoupling_ratio),
        threads: n_threads,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!(
            "bench: n={} M=N={} res={} direct={:.1} ns/eval lut={:.1} ns/query speedup={:.1}x lut48={:.1} ns decoupling={:.3}{}",
            report.n_points,
            report.trunc_m_n.0,
            report.resolution,
            report.direct_ns_per_eval,
            report.lut_ns_per_query,
            report.speedup,
            report.lut48_ns_per_query,
            report.decoupling_ratio,
            if report.decoupling_ok { "" } else { " (DECOUPLING VIOLATED)" }
        );
    }
    if !report.decoupling_ok {
        return Err(CliError::Verification(format!(
            "LUT query time moved by {:.1}% when the truncation window changed",
            (decoupling_ratio - 1.0).abs() * 100.0
        )));
    }
    Ok(())
}
