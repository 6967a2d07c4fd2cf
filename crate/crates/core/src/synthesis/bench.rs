//! Benchmark sweep over fixtures, configurations and seeds.
//!
//! Emits three CSV files into the output directory:
//!   results.csv   one row per (fixture, srm, k, seed) run
//!   aggregate.csv per-configuration means over seeds
//!   timings.csv   wall-clock per run
//!
//! results.csv and aggregate.csv are byte-deterministic for fixed inputs;
//! timing lives in its own file so reruns can be diffed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::Result;
use crate::smooth_semantics::{SmoothConfig, Srm};
use crate::synthesis::{build_scp, optimize, OptimizeOpts};

pub struct BenchOutputs {
    pub results: PathBuf,
    pub aggregate: PathBuf,
    pub timings: PathBuf,
}

const COLUMNS: &str =
    "scp,srm,k1,k2,seed,control_cost,smooth_cost,smooth_rho,L,U,width,exact_rho,exact_cost,iters";

struct Row {
    scp: u8,
    srm: Srm,
    k: f64,
    seed: u64,
    metrics: [f64; 9], // control_cost, smooth_cost, smooth_rho, L, U, width, exact_rho, exact_cost, iters
}

pub fn run_benchmark(
    scp_ids: &[u8],
    srms: &[Srm],
    ks: &[f64],
    realizations: usize,
    max_iters: usize,
    out_dir: &Path,
) -> Result<BenchOutputs> {
    assert!(realizations >= 1, "need at least one realization");
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    let mut timings = String::from("scp,srm,k1,k2,seed,wall_ms\n");
    for &scp in scp_ids {
        let prob = build_scp(scp);
        for &srm in srms {
            for &k in ks {
                let cfg = SmoothConfig::new(srm).with_k(k, k);
                for seed in 0..realizations as u64 {
                    let opts = OptimizeOpts { max_iters, ..OptimizeOpts::seeded(seed) };
                    let started = Instant::now();
                    let r = optimize(&prob, &cfg, &opts)?;
                    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                    let control_cost = r.smooth_value - r.smooth_cost;
                    rows.push(Row {
                        scp,
                        srm,
                        k,
                        seed,
                        metrics: [
                            control_cost,
                            r.smooth_cost,
                            r.smooth_value,
                            r.error_interval.lo,
                            r.error_interval.hi,
                            r.error_interval.width(),
                            r.exact_value,
                            r.exact_cost,
                            r.iterations as f64,
                        ],
                    });
                    writeln!(timings, "{scp},{srm},{k},{k},{seed},{wall_ms}").unwrap();
                }
            }
        }
    }

    let mut results = String::from(COLUMNS);
    results.push('\n');
    for row in &rows {
        write!(results, "{},{},{},{},{}", row.scp, row.srm, row.k, row.k, row.seed).unwrap();
        for v in row.metrics {
            write!(results, ",{v}").unwrap();
        }
        results.push('\n');
    }

    let mut aggregate = String::from(
        "scp,srm,k1,k2,runs,control_cost,smooth_cost,smooth_rho,L,U,width,exact_rho,exact_cost,iters",
    );
    aggregate.push('\n');
    // rows are generated in (scp, srm, k) blocks of `realizations` seeds
    for chunk in rows.chunks(realizations) {
        let first = &chunk[0];
        let mut means = [0.0f64; 9];
        for row in chunk {
            for (m, v) in means.iter_mut().zip(row.metrics) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= chunk.len() as f64;
        }
        write!(
            aggregate,
            "{},{},{},{},{}",
            first.scp,
            first.srm,
            first.k,
            first.k,
            chunk.len()
        )
        .unwrap();
        for m in means {
            write!(aggregate, ",{m}").unwrap();
        }
        aggregate.push('\n');
    }

    let out = BenchOutputs {
        results: out_dir.join("results.csv"),
        aggregate: out_dir.join("aggregate.csv"),
        timings: out_dir.join("timings.csv"),
    };
    std::fs::write(&out.results, results)?;
    std::fs::write(&out.aggregate, aggregate)?;
    std::fs::write(&out.timings, timings)?;
    Ok(out)
}
