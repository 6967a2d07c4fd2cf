//! `smooth-stl`: evaluate, bound, synthesize and benchmark STL
//! specifications under smooth robustness semantics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use smooth_stl::synthesis::{
    load_problem, optimize, optimize_switching, run_benchmark, warm_start_chain, LoadedProblem,
    OptimizeOpts, SolveResult,
};
use smooth_stl::{
    certify, error_interval, error_interval_signal_free, finite_diff_grad, grad_wrt_controls,
    parse, robustness, rollout, smooth_robustness, Formula, Predicate, PredicateTable, Signal,
    SmoothConfig, Srm,
};

#[derive(Parser)]
#[command(name = "smooth-stl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Smooth-configuration overrides shared by several subcommands.
#[derive(Args)]
struct SmoothArgs {
    /// Smooth robustness measure (SRM1..SRM4)
    #[arg(long)]
    srm: Option<Srm>,
    /// Sharpness for min-type operators
    #[arg(long)]
    k1: Option<f64>,
    /// Sharpness for max-type operators
    #[arg(long)]
    k2: Option<f64>,
}

impl SmoothArgs {
    fn apply(&self, mut cfg: SmoothConfig) -> SmoothConfig {
        if let Some(srm) = self.srm {
            cfg.srm = srm;
        }
        if let Some(k1) = self.k1 {
            cfg.k1 = k1;
        }
        if let Some(k2) = self.k2 {
            cfg.k2 = k2;
        }
        cfg
    }

    fn build(&self) -> SmoothConfig {
        self.apply(SmoothConfig::new(Srm::Srm3))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate exact and smooth robustness of a formula over a signal
    Eval {
        /// Formula: a file path or the formula text itself
        #[arg(long)]
        formula: String,
        /// Predicate definitions (JSON: name -> {"c": [...], "b": ..})
        #[arg(long)]
        predicates: PathBuf,
        /// Signal CSV with header t,s0,s1,...
        #[arg(long)]
        signal: PathBuf,
        /// Evaluation time index
        #[arg(long, default_value_t = 0)]
        t: usize,
        #[command(flatten)]
        smooth: SmoothArgs,
    },
    /// Signal-free error interval of a smooth configuration on a formula
    Bounds {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        predicates: PathBuf,
        /// Bound on the value spread seen by soft operators
        #[arg(long)]
        range_bound: Option<f64>,
        #[command(flatten)]
        smooth: SmoothArgs,
    },
    /// Synthesize a control sequence for a problem file
    Synth {
        /// Problem JSON file
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.1)]
        step_size: f64,
        /// Certified early stop once exact robustness provably exceeds this
        #[arg(long)]
        target: Option<f64>,
        /// Alternate SRM2/SRM3 every this many iterations and report the gap
        #[arg(long)]
        switch_period: Option<usize>,
        /// Refine with a sharp SRM1 stage warm-started from the main solve
        #[arg(long)]
        warm_start: bool,
        /// Re-tune smooth parameters every this many iterations
        #[arg(long)]
        tune_every: Option<usize>,
        /// Directory for result.json, trajectory.csv and trace.csv
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        smooth: SmoothArgs,
    },
    /// Benchmark sweep over the built-in SCP fixtures
    Bench {
        /// Fixture ids, comma separated
        #[arg(long, default_value = "1,2,3,4", value_delimiter = ',')]
        scp: Vec<u8>,
        /// SRMs, comma separated, or "all"
        #[arg(long, default_value = "all")]
        srm: String,
        /// Sharpness values, comma separated
        #[arg(long, default_value = "1,3,5,7,9", value_delimiter = ',')]
        k: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        realizations: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the explicit control gradient against finite differences
    GradCheck {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        smooth: SmoothArgs,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredicateDef {
    c: Vec<f64>,
    b: f64,
    #[serde(default)]
    noise: Option<(f64, f64)>,
}

fn load_predicates(path: &Path) -> Result<(PredicateTable, bool)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading predicates from {}", path.display()))?;
    let defs: BTreeMap<String, PredicateDef> =
        serde_json::from_str(&text).context("parsing predicate definitions")?;
    let mut table = PredicateTable::new();
    let mut noisy = false;
    for (name, def) in defs {
        let mut p = Predicate::affine(name, def.c, def.b);
        if let Some((lo, hi)) = def.noise {
            p = p.with_noise(lo, hi);
            noisy = true;
        }
        table.insert(p);
    }
    Ok((table, noisy))
}

/// `--formula` accepts either a file containing the formula or the
/// formula text itself.
fn load_formula(spec: &str, table: &PredicateTable) -> Result<Formula> {
    let text = if Path::new(spec).is_file() {
        fs::read_to_string(spec)?
    } else {
        spec.to_string()
    };
    let f = parse(text.trim(), table).with_context(|| format!("parsing formula `{}`", text.trim()))?;
    Ok(f.to_nnf()?)
}

fn cmd_eval(
    formula: &str,
    predicates: &Path,
    signal: &Path,
    t: usize,
    smooth: &SmoothArgs,
) -> Result<()> {
    let (table, noisy) = load_predicates(predicates)?;
    let f = load_formula(formula, &table)?;
    let s = Signal::load_csv(signal, None)?;
    let mut cfg = smooth.build();
    cfg.noise_enabled = noisy;
    let exact = robustness(&f, &s, t)?;
    let value = smooth_robustness(&f, &s, &cfg, t)?;
    let report = error_interval(&f, &s, &cfg)?;
    let certified = certify(value, &report);
    println!("exact rho:    {exact}");
    println!("smooth rho:   {value}  ({}, k1={}, k2={})", cfg.srm, cfg.k1, cfg.k2);
    println!("error [L,U]:  [{}, {}]", report.interval.lo, report.interval.hi);
    println!("certified:    exact in [{}, {}]", certified.lo, certified.hi);
    Ok(())
}

fn cmd_bounds(
    formula: &str,
    predicates: &Path,
    range_bound: Option<f64>,
    smooth: &SmoothArgs,
) -> Result<()> {
    let (table, noisy) = load_predicates(predicates)?;
    let f = load_formula(formula, &table)?;
    let mut cfg = smooth.build();
    cfg.noise_enabled = noisy;
    let needs_range = cfg.srm != Srm::Srm1;
    let range = match (range_bound, needs_range) {
        (Some(r), _) => r,
        (None, false) => 0.0, // quasi-only bands never read it
        (None, true) => bail!("--range-bound is required for {} (soft operators)", cfg.srm),
    };
    let report = error_interval_signal_free(&f, &cfg, range)?;
    println!("signal-free [L,U]: [{}, {}]", report.interval.lo, report.interval.hi);
    println!("width:             {}", report.width());
    Ok(())
}

fn write_trace(result: &SolveResult, path: &Path) -> Result<()> {
    let mut out = String::from("iter,smooth,exact,L,U,grad_norm\n");
    for (i, r) in result.trace.iter().enumerate() {
        writeln!(out, "{},{},{},{},{},{}", i, r.smooth, r.exact, r.lo, r.hi, r.grad_norm)?;
    }
    fs::write(path, out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    problem: &Path,
    seed: u64,
    max_iters: usize,
    step_size: f64,
    target: Option<f64>,
    switch_period: Option<usize>,
    warm_start: bool,
    tune_every: Option<usize>,
    out: &Path,
    smooth: &SmoothArgs,
) -> Result<()> {
    let LoadedProblem { problem: prob, smooth: file_cfg } = load_problem(problem)?;
    let cfg = smooth.apply(file_cfg);
    let opts = OptimizeOpts {
        max_iters,
        step_size,
        seed,
        stop_threshold: target,
        tune_every,
        ..OptimizeOpts::seeded(seed)
    };

    let result = if let Some(period) = switch_period {
        let under = SmoothConfig { srm: Srm::Srm2, ..cfg.clone() };
        let over = SmoothConfig { srm: Srm::Srm3, ..cfg.clone() };
        let sr = optimize_switching(&prob, &under, &over, period, &opts)?;
        println!(
            "switching gap: {} (under {}, over {})",
            sr.gap, sr.under_value, sr.over_value
        );
        sr.result
    } else if warm_start {
        // refinement stage: SRM1 sharp enough that its own bias cannot
        // drag the iterate off the warm start
        let sharp = SmoothConfig {
            srm: Srm::Srm1,
            k1: cfg.k1.max(10.0),
            k2: cfg.k2.max(10.0),
            ..cfg.clone()
        };
        let runs = warm_start_chain(&prob, &[(cfg, opts.clone()), (sharp, opts)])?;
        for (i, r) in runs.iter().enumerate() {
            println!("stage {i}: exact rho {}", r.exact_value);
        }
        runs.into_iter().last().expect("two stages ran")
    } else {
        optimize(&prob, &cfg, &opts)?
    };

    fs::create_dir_all(out)?;
    let json_path = out.join("result.json");
    fs::write(&json_path, serde_json::to_string_pretty(&result)?)?;
    let traj_path = out.join("trajectory.csv");
    rollout(&prob.system, &result.u_star, &prob.x0)?.save_csv(&traj_path)?;
    let trace_path = out.join("trace.csv");
    write_trace(&result, &trace_path)?;

    println!("exact rho:   {}", result.exact_value);
    println!("smooth rho:  {}", result.smooth_value);
    println!(
        "error [L,U]: [{}, {}]",
        result.error_interval.lo, result.error_interval.hi
    );
    println!("iterations:  {}{}", result.iterations, if result.certified_stop { " (certified stop)" } else { "" });
    println!(
        "wrote {}, {}, {}",
        json_path.display(),
        traj_path.display(),
        trace_path.display()
    );
    Ok(())
}

fn parse_srms(spec: &str) -> Result<Vec<Srm>> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(Srm::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<Srm>().map_err(anyhow::Error::msg))
        .collect()
}

fn cmd_bench(
    scp: &[u8],
    srm: &str,
    k: &[f64],
    realizations: usize,
    max_iters: usize,
    out: &Path,
) -> Result<()> {
    let srms = parse_srms(srm)?;
    if scp.iter().any(|id| !(1..=4).contains(id)) {
        bail!("fixture ids are 1..=4");
    }
    let outputs = run_benchmark(scp, &srms, k, realizations, max_iters, out)?;
    println!("wrote {}", outputs.results.display());
    println!("wrote {}", outputs.aggregate.display());
    println!("wrote {}", outputs.timings.display());
    Ok(())
}

fn cmd_grad_check(problem: &Path, trials: usize, seed: u64, smooth: &SmoothArgs) -> Result<()> {
    let LoadedProblem { problem: prob, smooth: file_cfg } = load_problem(problem)?;
    let cfg = smooth.apply(file_cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel = 0.0f64;
    let mut explicit_time = 0.0;
    let mut fd_time = 0.0;
    for _ in 0..trials {
        let u: Vec<Vec<f64>> = (0..=prob.horizon)
            .map(|_| (0..prob.system.m).map(|_| rng.gen_range(-0.5..0.5)).collect())
            .collect();
        let started = Instant::now();
        let g = grad_wrt_controls(&prob.formula, &prob.system, &u, &prob.x0, &cfg)?;
        explicit_time += started.elapsed().as_secs_f64();

        let flat: Vec<f64> = u.iter().flatten().copied().collect();
        let m = prob.system.m;
        let started = Instant::now();
        let fd = finite_diff_grad(
            &|z: &[f64]| {
                let uz: Vec<Vec<f64>> = z.chunks(m).map(|c| c.to_vec()).collect();
                let s = rollout(&prob.system, &uz, &prob.x0)?;
                smooth_robustness(&prob.formula, &s, &cfg, 0)
            },
            &flat,
            1e-6,
        )?;
        fd_time += started.elapsed().as_secs_f64();

        let scale = fd.iter().map(|x| x.abs()).fold(1.0f64, f64::max);
        for (a, b) in g.iter().zip(&fd) {
            max_rel = max_rel.max((a - b).abs() / scale);
        }
    }
    println!("trials:                    {trials}");
    println!("max relative error:        {max_rel:e}");
    println!("wall-time ratio (fd/expl): {:.1}", fd_time / explicit_time);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Eval { formula, predicates, signal, t, smooth } => {
            cmd_eval(&formula, &predicates, &signal, t, &smooth)
        }
        Command::Bounds { formula, predicates, range_bound, smooth } => {
            cmd_bounds(&formula, &predicates, range_bound, &smooth)
        }
        Command::Synth {
            problem,
            seed,
            max_iters,
            step_size,
            target,
            switch_period,
            warm_start,
            tune_every,
            out,
            smooth,
        } => cmd_synth(
            &problem,
            seed,
            max_iters,
            step_size,
            target,
            switch_period,
            warm_start,
            tune_every,
            &out,
            &smooth,
        ),
        Command::Bench { scp, srm, k, realizations, max_iters, out } => {
            cmd_bench(&scp, &srm, &k, realizations, max_iters, &out)
        }
        Command::GradCheck { problem, trials, seed, smooth } => {
            cmd_grad_check(&problem, trials, seed, &smooth)
        }
    }
}
