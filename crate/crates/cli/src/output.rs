use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use baryopt::bench::RunSummary;
use baryopt::rng::{GENERATOR, STREAM_RULE};
use baryopt::RunTrace;

use crate::error::CliError;
use crate::spec::RunSpec;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::write(dir))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(CliError::write(path))
}

pub fn stem(spec: &RunSpec, seed: u64) -> String {
    format!("{}_seed{seed}", spec.kind.as_str())
}

/// Trace CSV: `n, x.., f_value, xhat.., sigma, z.., best_f`, one row per query.
pub fn trace_csv(trace: &RunTrace, dim: usize) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.push("f_value".into());
    header.extend((1..=dim).map(|i| format!("xhat{i}")));
    header.push("sigma".into());
    header.extend((1..=dim).map(|i| format!("z{i}")));
    header.push("best_f".into());
    w.write_record(&header).expect("in-memory write");
    for r in &trace.records {
        let mut row = vec![r.n.to_string()];
        row.extend(r.x.iter().map(f64::to_string));
        row.push(r.f_value.to_string());
        row.extend(r.estimate.iter().map(f64::to_string));
        row.push(r.sigma.to_string());
        row.extend(r.z.iter().map(f64::to_string));
        row.push(r.best_f.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Two columns, evaluation count and best value so far, for gnuplot.
pub fn best_f_dat(trace: &RunTrace) -> Vec<u8> {
    let mut s = String::from("# n best_f\n");
    for r in &trace.records {
        s.push_str(&format!("{} {}\n", r.n, r.best_f));
    }
    s.into_bytes()
}

pub fn meta_json(spec: &RunSpec, seed: u64, noise_seed: Option<u64>, trace: &RunTrace) -> Vec<u8> {
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "spec": spec.to_json(),
        "run_seed": seed,
        "run_noise_seed": noise_seed,
        "generator": GENERATOR,
        "stream_rule": STREAM_RULE,
        "rows": trace.records.len(),
        "best_f": trace.best_f,
        "best_x": trace.best_x,
        "aborted": trace.aborted.as_ref().map(|a| json!({"step": a.step, "reason": a.reason})),
    });
    let mut bytes = serde_json::to_vec_pretty(&meta).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// Writes the trace, its metadata and optionally the gnuplot export; returns
/// the trace path.
pub fn write_run(dir: &Path, spec: &RunSpec, seed: u64, noise_seed: Option<u64>, trace: &RunTrace, gnuplot: bool) -> Result<PathBuf, CliError> {
    let stem = stem(spec, seed);
    let csv_path = dir.join(format!("{stem}.csv"));
    write_file(&csv_path, &trace_csv(trace, spec.config.dim()))?;
    write_file(&dir.join(format!("{stem}.meta.json")), &meta_json(spec, seed, noise_seed, trace))?;
    if gnuplot {
        write_file(&dir.join(format!("{stem}.best.dat")), &best_f_dat(trace))?;
    }
    Ok(csv_path)
}

/// Per-run table: seed, best_f, final_f, final estimate components.
pub fn runs_table(runs: &[RunSummary], dim: usize) -> String {
    let mut s = String::from("seed\tbest_observed\tbest_f\tfinal_f");
    for i in 1..=dim {
        s.push_str(&format!("\txhat{i}"));
    }
    s.push('\n');
    for r in runs {
        s.push_str(&format!("{}\t{}\t{}\t{}", r.seed, r.best_observed, r.best_f, r.final_f));
        for v in &r.final_estimate {
            s.push_str(&format!("\t{v}"));
        }
        s.push('\n');
    }
    s
}
