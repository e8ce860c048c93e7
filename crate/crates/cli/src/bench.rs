//! Batch runs with one CSV row per instance.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::ValueEnum;

use crate::{load, run_optimize, run_reference, run_solve, Report, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Engine,
    Reference,
    Upper,
    Lower,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Engine => "engine",
            Mode::Reference => "reference",
            Mode::Upper => "upper",
            Mode::Lower => "lower",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub mode: Mode,
    pub outcome: String,
    pub cost: Option<String>,
    pub time_s: f64,
    pub oracle_calls: usize,
    pub iterations: usize,
}

fn count(rep: &Report, key: &str) -> usize {
    rep.stats.get(key).and_then(|v| v.as_u64()).unwrap_or(0) as usize
}

/// Levels from highest to lowest as `level:cost` pairs.
fn cost_field(rep: &Report) -> Option<String> {
    rep.cost.as_ref().map(|c| {
        c.entries
            .iter()
            .rev()
            .map(|(l, v)| format!("{l}:{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    })
}

fn bench_one(path: &Path, mode: Mode, rc: &RunConfig) -> BenchRow {
    let start = Instant::now();
    let res = load(path).and_then(|qp| match mode {
        Mode::Engine => run_solve(&qp, rc),
        Mode::Reference => run_reference(&qp, rc),
        Mode::Upper => run_optimize(&qp, rc, true),
        Mode::Lower => run_optimize(&qp, rc, false),
    });
    let time_s = start.elapsed().as_secs_f64();
    let instance = path.display().to_string();
    match res {
        Ok(rep) => BenchRow {
            instance,
            mode,
            outcome: rep.status.to_lowercase(),
            cost: cost_field(&rep),
            time_s,
            oracle_calls: count(&rep, "oracle_calls"),
            iterations: count(&rep, "iterations"),
        },
        Err(f) => {
            log::warn!("{instance}: {}", f.msg);
            BenchRow {
                instance,
                mode,
                outcome: if f.code == crate::EXIT_UNKNOWN {
                    "unknown"
                } else {
                    "error"
                }
                .to_string(),
                cost: None,
                time_s,
                oracle_calls: 0,
                iterations: 0,
            }
        }
    }
}

/// Solves every instance, `jobs` at a time. Rows come back in input order.
pub fn run_bench(files: &[PathBuf], mode: Mode, rc: &RunConfig, jobs: usize) -> Vec<BenchRow> {
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<BenchRow>>> = Mutex::new(vec![None; files.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, files.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = files.get(i) else { break };
                let row = bench_one(path, mode, rc);
                rows.lock().unwrap()[i] = Some(row);
            });
        }
    });
    rows.into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every instance is processed"))
        .collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "instance",
        "mode",
        "outcome",
        "cost",
        "time_s",
        "oracle_calls",
        "iterations",
    ])?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.mode.name().to_string(),
            r.outcome.clone(),
            r.cost.clone().unwrap_or_default(),
            format!("{:.3}", r.time_s),
            r.oracle_calls.to_string(),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
