//! Subcommand implementations (all but `bench`).

use std::io::Write;
use std::path::PathBuf;

use wepe::config::{RunConfig, RunMode};
use wepe::encoder::{normalize_coords, EncoderConfig, Encodings, FeatureField, ProjectionSpec};
use wepe::lut::{ConfigSnapshot, Lut};
use wepe::surrogate::{ft_features, project_finetune, SurrogateConfig};
use wepe::verify::run_suite;
use wepe::{analysis, encoder};

use crate::{CliError, FormatArg, ModeArg, ReportArg};

pub fn load_config(path: Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => RunConfig::from_file(&p).map_err(|e| match e {
            wepe::config::ConfigError::Io(io) => {
                CliError::Io(format!("{}: {io}", p.display()))
            }
            other => CliError::Usage(format!("{}: {other}", p.display())),
        }),
    }
}

fn effective_mode(cfg: &RunConfig, flag: Option<ModeArg>) -> RunMode {
    match flag {
        Some(ModeArg::Pretrain) => RunMode::Pretrain,
        Some(ModeArg::Finetune) => RunMode::Finetune,
        None => cfg.mode,
    }
}

fn surrogate_field_grid(cfg: &SurrogateConfig, h: u32, w: u32) -> FeatureField {
    let mut data = Vec::with_capacity((h * w) as usize);
    for i in 0..h {
        for j in 0..w {
            let (u, v) = normalize_coords(i, j, h, w).expect("indices in range");
            data.push(ft_features(u, v, cfg));
        }
    }
    FeatureField::new(h as usize, w as usize, data)
}

fn field_for(run: &RunConfig, mode: RunMode, enc_cfg: &EncoderConfig) -> FeatureField {
    match mode {
        RunMode::Pretrain => encoder::encode_grid(enc_cfg),
        RunMode::Finetune => surrogate_field_grid(&run.surrogate, enc_cfg.grid_h, enc_cfg.grid_w),
    }
}

pub fn gen_lut(
    config: Option<PathBuf>,
    res: u32,
    out: PathBuf,
    mode: Option<ModeArg>,
) -> Result<(), CliError> {
    if res < 2 {
        return Err(CliError::Usage(format!("--res must be >= 2, got {res}")));
    }
    let run = load_config(config)?;
    let start = std::time::Instant::now();
    let lut = match effective_mode(&run, mode) {
        RunMode::Pretrain => Lut::build(&run.encoder_config(), res),
        RunMode::Finetune => Lut::build_surrogate(&run.surrogate, res),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let build_time = start.elapsed();
    lut.write_file(&out)
        .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let bytes = std::fs::metadata(&out).map(|m| m.len()).unwrap_or(0);
    println!(
        "lut written: res={res} bytes={bytes} build_time_ms={:.1} path={}",
        build_time.as_secs_f64() * 1e3,
        out.display()
    );
    Ok(())
}

fn parse_grid(s: &str) -> Result<(u32, u32), CliError> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Usage(format!("--grid expects HxW, got '{s}'")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| CliError::Usage(format!("--grid expects HxW, got '{s}'")))
    };
    let (h, w) = (parse(h)?, parse(w)?);
    if h < 1 || w < 1 {
        return Err(CliError::Usage("grid dimensions must be >= 1".into()));
    }
    Ok((h, w))
}

enum Output {
    Field(FeatureField, EncoderConfig),
    Projected(Encodings),
}

pub fn encode(
    config: Option<PathBuf>,
    grid: Option<String>,
    mode: Option<ModeArg>,
    format: FormatArg,
    out: Option<PathBuf>,
    project: bool,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let run = load_config(config)?;
    let mut enc_cfg = run.encoder_config();
    if let Some(g) = grid {
        let (h, w) = parse_grid(&g)?;
        enc_cfg.grid_h = h;
        enc_cfg.grid_w = w;
    }
    if let Some(s) = seed {
        enc_cfg.proj_seed = s;
    }
    let mode = effective_mode(&run, mode);
    let field = field_for(&run, mode, &enc_cfg);
    let output = if project {
        let spec = ProjectionSpec::seeded(enc_cfg.proj_dim as usize, enc_cfg.proj_seed);
        let enc = match mode {
            RunMode::Pretrain => encoder::project(&field, &spec, &enc_cfg)
                .map_err(|e| CliError::Usage(e.to_string()))?,
            RunMode::Finetune => {
                project_finetune(&field, &spec, &[]).map_err(|e| CliError::Usage(e.to_string()))?
            }
        };
        Output::Projected(enc)
    } else {
        Output::Field(field, enc_cfg)
    };

    match format {
        FormatArg::Csv => write_text(out, render_csv(&output)?),
        FormatArg::Json => write_text(out, render_json(&output)?),
        FormatArg::Bin => {
            let out = out.ok_or_else(|| CliError::Usage("--format bin requires --out".into()))?;
            let Output::Field(field, cfg) = &output else {
                return Err(CliError::Usage(
                    "--format bin stores the 4-channel field; drop --project".into(),
                ));
            };
            if field.h() != field.w() {
                return Err(CliError::Usage(format!(
                    "--format bin requires a square grid, got {}x{}",
                    field.h(),
                    field.w()
                )));
            }
            let data: Vec<f32> = field.components().map(|x| x as f32).collect();
            let snapshot = match mode {
                RunMode::Pretrain => ConfigSnapshot::Pretrain(cfg.clone()),
                RunMode::Finetune => ConfigSnapshot::Finetune(run.surrogate.clone()),
            };
            let lut = Lut::from_parts(field.h() as u32, snapshot, data)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            lut.write_file(&out)
                .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
            println!("field written: {}", out.display());
            Ok(())
        }
    }
}

fn rows_of(output: &Output) -> (usize, usize, Vec<Vec<f64>>) {
    match output {
        Output::Field(field, _) => {
            let mut rows = Vec::new();
            for i in 0..field.h() {
                for j in 0..field.w() {
                    rows.push(field.at(i, j).as_array().to_vec());
                }
            }
            (field.h(), field.w(), rows)
        }
        Output::Projected(enc) => {
            let rows = (0..enc.n_positions()).map(|p| enc.row(p).to_vec()).collect();
            (enc.h(), enc.w(), rows)
        }
    }
}

fn render_csv(output: &Output) -> Result<String, CliError> {
    let (h, w, rows) = rows_of(output);
    let n_values = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut s = String::from("i,j,u,v");
    if n_values == 4 {
        s.push_str(",f1,f2,f3,f4");
    } else {
        for k in 0..n_values {
            s.push_str(&format!(",e{k}"));
        }
    }
    s.push('\n');
    for (pos, row) in rows.iter().enumerate() {
        let (i, j) = (pos / w, pos % w);
        let (u, v) = normalize_coords(i as u32, j as u32, h as u32, w as u32)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        s.push_str(&format!("{i},{j},{u},{v}"));
        for x in row {
            s.push_str(&format!(",{x}"));
        }
        s.push('\n');
    }
    Ok(s)
}

fn render_json(output: &Output) -> Result<String, CliError> {
    let (h, w, rows) = rows_of(output);
    let mut items = Vec::with_capacity(rows.len());
    for (pos, row) in rows.iter().enumerate() {
        let (i, j) = (pos / w, pos % w);
        let (u, v) = normalize_coords(i as u32, j as u32, h as u32, w as u32)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        items.push(serde_json::json!({
            "i": i, "j": j, "u": u, "v": v, "values": row,
        }));
    }
    serde_json::to_string_pretty(&items).map_err(|e| CliError::Io(e.to_string()))
}

fn write_text(out: Option<PathBuf>, text: String) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
        Some(p) => {
            std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
    }
}

pub fn analyze(
    config: Option<PathBuf>,
    report: ReportArg,
    json: bool,
    out: Option<PathBuf>,
    seed: Option<u64>,
    fuse: bool,
) -> Result<(), CliError> {
    let run = load_config(config)?;
    let mut enc_cfg = run.encoder_config();
    if let Some(s) = seed {
        enc_cfg.proj_seed = s;
    }
    let field = field_for(&run, run.mode, &enc_cfg);
    match report {
        ReportArg::Decay => {
            let spec = ProjectionSpec::seeded(enc_cfg.proj_dim as usize, enc_cfg.proj_seed);
            let enc = match run.mode {
                RunMode::Pretrain => encoder::project(&field, &spec, &enc_cfg)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                RunMode::Finetune => project_finetune(&field, &spec, &[])
                    .map_err(|e| CliError::Usage(e.to_string()))?,
            };
            let rep = if fuse {
                analysis::distance_decay_report_fused(&enc, enc_cfg.proj_seed)
            } else {
                analysis::distance_decay_report(&enc)
            }
            .map_err(|e| CliError::Usage(e.to_string()))?;
            if let Some(p) = &out {
                let mut s = String::from("bin_center,bin_mean,bin_count\n");
                for k in 0..rep.bin_centers.len() {
                    s.push_str(&format!(
                        "{},{},{}\n",
                        rep.bin_centers[k], rep.bin_means[k], rep.bin_counts[k]
                    ));
                }
                std::fs::write(p, s).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            } else {
                println!(
                    "decay: n_pairs={} binned_rho={:.4} unbinned_rho={:.4} monotonicity={:.3} sim_range=[{:.4}, {:.4}]{}",
                    rep.n_pairs,
                    rep.pearson_rho,
                    rep.unbinned_rho,
                    rep.monotonicity_fraction,
                    rep.raw_sim_min,
                    rep.raw_sim_max,
                    if rep.degenerate { " (degenerate)" } else { "" }
                );
            }
        }
        ReportArg::Sensitivity => {
            let rho = analysis::dissimilarity_correlation(&field)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let stats = analysis::feature_stats(&field);
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "dissimilarity_rho": rho,
                        "feature_stats": stats,
                    })
                );
            } else {
                println!(
                    "sensitivity: rho={:.4} mean_abs={:.4} std={:.4} sat={:.2}% zero={:.2}%",
                    rho,
                    stats.mean_abs,
                    stats.std,
                    stats.sat_frac * 100.0,
                    stats.zero_frac * 100.0
                );
            }
        }
        ReportArg::Attenuation => {
            let rep = analysis::local_attenuation_check(
                &enc_cfg,
                0.3,
                50,
                &[0.0125, 0.025, 0.05, 0.1, 0.15, 0.2],
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            } else {
                let min_r2 = rep.fit_r2.iter().cloned().fold(f64::INFINITY, f64::min);
                println!(
                    "attenuation: bases={} violations={} min_gap={:.2e} min_fit_r2={:.4}",
                    rep.n_base, rep.violations, rep.min_gap, min_r2
                );
            }
        }
        ReportArg::Stats => {
            let stats = analysis::feature_stats(&field);
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).unwrap());
            } else {
                println!(
                    "stats: mean_abs={:.4} std={:.4} sat={:.2}% zero={:.2}%",
                    stats.mean_abs,
                    stats.std,
                    stats.sat_frac * 100.0,
                    stats.zero_frac * 100.0
                );
            }
        }
    }
    Ok(())
}

pub fn verify(suite: &str, json: bool) -> Result<(), CliError> {
    let results = run_suite(suite).map_err(|e| CliError::Usage(e.to_string()))?;
    if json {
        println!("{}", serde_json::to_string_pretty(&results).unwrap());
    } else {
        for r in &results {
            println!(
                "{} {}/{}: {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.suite,
                r.id,
                r.detail
            );
        }
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}/{}", r.suite, r.id))
        .collect();
    if failed.is_empty() {
        if !json {
            println!("all {} checks passed", results.len());
        }
        let _ = std::io::stdout().flush();
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
