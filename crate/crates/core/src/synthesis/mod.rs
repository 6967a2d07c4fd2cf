//! Control synthesis by gradient ascent on smooth robustness, plus
//! operator-parameter tuning and benchmark fixtures.

mod bench;
mod problem;
mod scp;

pub use bench::{run_benchmark, BenchOutputs};
pub use problem::{load_problem, parse_problem, LoadedProblem};
pub use scp::{build_scp, build_scp_with_noise, SCP_RANGE_BOUND};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout, ControlSequence, System};
use crate::error::{Error, Result};
use crate::error_semantics::{error_interval, error_interval_signal_free, termination_threshold};
use crate::gradient_engine::grad_wrt_controls;
use crate::semantics::robustness;
use crate::smooth_ops::Interval;
use crate::smooth_semantics::{smooth_robustness, SmoothConfig};
use crate::stl_ast::{Formula, PredicateTable};

/// One synthesis instance: maximize smooth robustness of `formula` over
/// the control sequence, minus a quadratic control penalty.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub system: System,
    pub x0: Vec<f64>,
    /// Horizon T; control sequences have T + 1 entries.
    pub horizon: usize,
    pub formula: Formula,
    pub predicates: PredicateTable,
    pub control_penalty: f64,
}

impl SynthesisProblem {
    pub fn validate(&self) -> Result<()> {
        if self.formula.horizon() as usize > self.horizon {
            return Err(Error::InvalidProblem(format!(
                "formula horizon {} exceeds problem horizon {}",
                self.formula.horizon(),
                self.horizon
            )));
        }
        if self.control_penalty < 0.0 {
            return Err(Error::InvalidProblem(
                "control_penalty must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Zero,
    RandomUniform(f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeOpts {
    pub max_iters: usize,
    pub step_size: f64,
    pub seed: u64,
    pub init: Init,
    /// Certified early stop: halt once the smooth value provably puts the
    /// exact robustness above this target.
    pub stop_threshold: Option<f64>,
    /// Re-tune (k1, k2) from the signal-free width every this many
    /// iterations. Off by default.
    pub tune_every: Option<usize>,
}

impl Default for OptimizeOpts {
    fn default() -> OptimizeOpts {
        OptimizeOpts {
            max_iters: 500,
            step_size: 0.1,
            seed: 0,
            init: Init::RandomUniform(-0.1, 0.1),
            stop_threshold: None,
            tune_every: None,
        }
    }
}

impl OptimizeOpts {
    pub fn seeded(seed: u64) -> OptimizeOpts {
        OptimizeOpts { seed, ..OptimizeOpts::default() }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterRecord {
    pub smooth: f64,
    pub exact: f64,
    pub lo: f64,
    pub hi: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub u_star: ControlSequence,
    pub smooth_value: f64,
    pub exact_value: f64,
    pub smooth_cost: f64,
    pub exact_cost: f64,
    pub error_interval: Interval,
    pub iterations: usize,
    pub certified_stop: bool,
    pub trace: Vec<IterRecord>,
    pub seed: u64,
}

fn initial_controls(prob: &SynthesisProblem, opts: &OptimizeOpts) -> ControlSequence {
    let steps = prob.horizon + 1;
    match opts.init {
        Init::Zero => vec![vec![0.0; prob.system.m]; steps],
        Init::RandomUniform(lo, hi) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..steps)
                .map(|_| (0..prob.system.m).map(|_| rng.gen_range(lo..hi)).collect())
                .collect()
        }
    }
}

fn norm_sq(u: &ControlSequence) -> f64 {
    u.iter().flatten().map(|x| x * x).sum()
}

fn finish(
    prob: &SynthesisProblem,
    cfg: &SmoothConfig,
    u: ControlSequence,
    iterations: usize,
    certified_stop: bool,
    trace: Vec<IterRecord>,
    seed: u64,
) -> Result<SolveResult> {
    let s = rollout(&prob.system, &u, &prob.x0)?;
    let smooth_value = smooth_robustness(&prob.formula, &s, cfg, 0)?;
    let exact_value = robustness(&prob.formula, &s, 0)?;
    let report = error_interval(&prob.formula, &s, cfg)?;
    let penalty = prob.control_penalty * norm_sq(&u);
    Ok(SolveResult {
        smooth_cost: smooth_value - penalty,
        exact_cost: exact_value - penalty,
        smooth_value,
        exact_value,
        error_interval: report.interval,
        iterations,
        certified_stop,
        trace,
        u_star: u,
        seed,
    })
}

/// Adam-style ascent core. `cfg_at` selects the active configuration per
/// iteration; returns the final controls, iteration count and whether the
/// certified early stop fired.
fn ascend(
    prob: &SynthesisProblem,
    cfg_at: &dyn Fn(usize) -> SmoothConfig,
    opts: &OptimizeOpts,
    mut u: ControlSequence,
) -> Result<(ControlSequence, usize, bool, Vec<IterRecord>)> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    let dim = u.len() * prob.system.m;
    let m_ctrl = prob.system.m;
    let mut mom = vec![0.0; dim];
    let mut vel = vec![0.0; dim];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut certified = false;
    for iter in 0..opts.max_iters {
        let cfg = cfg_at(iter);
        let s = rollout(&prob.system, &u, &prob.x0)?;
        let smooth = smooth_robustness(&prob.formula, &s, &cfg, 0)?;
        if !smooth.is_finite() {
            return Err(Error::Diverged(iter));
        }
        let exact = robustness(&prob.formula, &s, 0)?;
        let report = error_interval(&prob.formula, &s, &cfg)?;
        let mut g = grad_wrt_controls(&prob.formula, &prob.system, &u, &prob.x0, &cfg)?;
        for (gi, ui) in g.iter_mut().zip(u.iter().flatten()) {
            *gi -= 2.0 * prob.control_penalty * ui;
        }
        let grad_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        trace.push(IterRecord {
            smooth,
            exact,
            lo: report.interval.lo,
            hi: report.interval.hi,
            grad_norm,
        });
        iterations = iter + 1;
        if let Some(target) = opts.stop_threshold {
            if smooth >= termination_threshold(target, &report) {
                certified = true;
                break;
            }
        }
        if grad_norm < 1e-6 {
            break;
        }
        let bc1 = 1.0 - BETA1.powi(iter as i32 + 1);
        let bc2 = 1.0 - BETA2.powi(iter as i32 + 1);
        for (j, gj) in g.iter().enumerate() {
            mom[j] = BETA1 * mom[j] + (1.0 - BETA1) * gj;
            vel[j] = BETA2 * vel[j] + (1.0 - BETA2) * gj * gj;
            let step = opts.step_size * (mom[j] / bc1) / ((vel[j] / bc2).sqrt() + EPS);
            u[j / m_ctrl][j % m_ctrl] += step;
        }
    }
    Ok((u, iterations, certified, trace))
}

/// Gradient ascent on smooth robustness minus the control penalty.
/// Deterministic given the seed.
pub fn optimize(
    prob: &SynthesisProblem,
    cfg: &SmoothConfig,
    opts: &OptimizeOpts,
) -> Result<SolveResult> {
    prob.validate()?;
    let u0 = initial_controls(prob, opts);
    let tuned = std::cell::RefCell::new(cfg.clone());
    let cfg_at = |iter: usize| {
        if let Some(every) = opts.tune_every {
            if every > 0 && iter > 0 && iter % every == 0 {
                let now = tuned.borrow().clone();
                let next =
                    tune_parameters(&prob.formula, &now, 0.01, TuneMode::Global, 20.0)
                        .unwrap_or(now);
                *tuned.borrow_mut() = next;
            }
        }
        tuned.borrow().clone()
    };
    let (u, iterations, certified, trace) = ascend(prob, &cfg_at, opts, u0)?;
    let final_cfg = tuned.borrow().clone();
    finish(prob, &final_cfg, u, iterations, certified, trace, opts.seed)
}

/// Result of [`optimize_switching`]: the solve under the sound
/// configuration plus the converged over/under bracket width.
#[derive(Debug, Clone, Serialize)]
pub struct SwitchingResult {
    pub result: SolveResult,
    /// Converged over-approximation minus under-approximation; brackets
    /// the exact robustness when noise is off.
    pub gap: f64,
    pub under_value: f64,
    pub over_value: f64,
}

/// Alternates between an under-approximating and an over-approximating
/// configuration every `period` iterations, then reports both converged
/// values and their gap.
pub fn optimize_switching(
    prob: &SynthesisProblem,
    cfg_under: &SmoothConfig,
    cfg_over: &SmoothConfig,
    period: usize,
    opts: &OptimizeOpts,
) -> Result<SwitchingResult> {
    prob.validate()?;
    if period == 0 {
        return Err(Error::InvalidProblem("switching period must be positive".into()));
    }
    let u0 = initial_controls(prob, opts);
    let cfg_at = |iter: usize| {
        if (iter / period) % 2 == 0 {
            cfg_under.clone()
        } else {
            cfg_over.clone()
        }
    };
    let (u, iterations, certified, trace) = ascend(prob, &cfg_at, opts, u0)?;
    let s = rollout(&prob.system, &u, &prob.x0)?;
    let under_value = smooth_robustness(&prob.formula, &s, cfg_under, 0)?;
    let over_value = smooth_robustness(&prob.formula, &s, cfg_over, 0)?;
    let result = finish(prob, cfg_under, u, iterations, certified, trace, opts.seed)?;
    Ok(SwitchingResult {
        result,
        gap: over_value - under_value,
        under_value,
        over_value,
    })
}

/// Runs each stage's optimizer from the previous stage's solution. The
/// first stage initializes per its own options.
pub fn warm_start_chain(
    prob: &SynthesisProblem,
    stages: &[(SmoothConfig, OptimizeOpts)],
) -> Result<Vec<SolveResult>> {
    prob.validate()?;
    if stages.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut results: Vec<SolveResult> = Vec::with_capacity(stages.len());
    let mut u = initial_controls(prob, &stages[0].1);
    for (cfg, opts) in stages {
        let (next_u, iterations, certified, trace) =
            ascend(prob, &|_| cfg.clone(), opts, u)?;
        results.push(finish(prob, cfg, next_u.clone(), iterations, certified, trace, opts.seed)?);
        u = next_u;
    }
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMode {
    /// One (k1, k2) pair for the whole tree.
    Global,
    /// Independent overrides per node path.
    PerNode,
}

fn free_width(f: &Formula, cfg: &SmoothConfig, range_bound: f64) -> f64 {
    error_interval_signal_free(f, cfg, range_bound)
        .map(|r| r.width())
        .unwrap_or(f64::INFINITY)
}

fn theta_norm_sq(cfg: &SmoothConfig) -> f64 {
    let mut s = cfg.k1 * cfg.k1 + cfg.k2 * cfg.k2;
    for (a, b) in cfg.overrides.values() {
        s += a * a + b * b;
    }
    s
}

/// Coordinate-descent refinement of one positive parameter: try
/// multiplicative perturbations, keep improvements, shrink the move set.
fn refine(mut value: f64, objective: &dyn Fn(f64) -> f64) -> f64 {
    let mut best = objective(value);
    let mut factor = 4.0;
    while factor > 1.0005 {
        let mut moved = false;
        for cand in [value * factor, value / factor] {
            if cand > 0.0 && cand.is_finite() {
                let obj = objective(cand);
                if obj < best {
                    best = obj;
                    value = cand;
                    moved = true;
                }
            }
        }
        if !moved {
            factor = factor.sqrt();
        }
    }
    value
}

/// Minimizes signal-free error width plus `alpha` times the squared
/// parameter norm over the smooth-operator parameters. Log-spaced grid
/// seeding, then coordinate descent; the input configuration is always a
/// candidate, so the result never has a worse objective.
pub fn tune_parameters(
    f: &Formula,
    cfg: &SmoothConfig,
    alpha: f64,
    mode: TuneMode,
    range_bound: f64,
) -> Result<SmoothConfig> {
    assert!(alpha > 0.0, "alpha must be positive");
    let objective =
        |candidate: &SmoothConfig| free_width(f, candidate, range_bound) + alpha * theta_norm_sq(candidate);
    match mode {
        TuneMode::Global => {
            let grid: Vec<f64> = (-4..=14).map(|i| 10f64.powf(i as f64 / 2.0 - 1.0)).collect();
            let mut best = cfg.clone();
            best.overrides.clear();
            best.k1 = cfg.k1;
            best.k2 = cfg.k2;
            let mut best_obj = objective(&best).min(objective(cfg));
            if objective(cfg) <= best_obj {
                best = cfg.clone();
                best_obj = objective(cfg);
            }
            for &k1 in &grid {
                for &k2 in &grid {
                    let cand = SmoothConfig { k1, k2, overrides: Default::default(), ..cfg.clone() };
                    let obj = objective(&cand);
                    if obj < best_obj {
                        best_obj = obj;
                        best = cand;
                    }
                }
            }
            for _ in 0..4 {
                let base = best.clone();
                best.k1 = refine(base.k1, &|k| {
                    objective(&SmoothConfig { k1: k, ..base.clone() })
                });
                let base = best.clone();
                best.k2 = refine(base.k2, &|k| {
                    objective(&SmoothConfig { k2: k, ..base.clone() })
                });
            }
            Ok(if objective(&best) <= objective(cfg) { best } else { cfg.clone() })
        }
        TuneMode::PerNode => {
            let compiled = crate::compiled::compile(f, cfg)?;
            let paths: Vec<String> =
                compiled.nodes.iter().map(|n| n.path.clone()).collect();
            let mut best = cfg.clone();
            for path in &paths {
                best.overrides.entry(path.clone()).or_insert((cfg.k1, cfg.k2));
            }
            for _ in 0..3 {
                for path in &paths {
                    for coord in 0..2 {
                        let seed = best.overrides[path];
                        let current = if coord == 0 { seed.0 } else { seed.1 };
                        let tuned = refine(current, &|k| {
                            let mut cand = best.clone();
                            let pair = cand.overrides.get_mut(path).unwrap();
                            if coord == 0 {
                                pair.0 = k;
                            } else {
                                pair.1 = k;
                            }
                            objective(&cand)
                        });
                        let pair = best.overrides.get_mut(path).unwrap();
                        if coord == 0 {
                            pair.0 = tuned;
                        } else {
                            pair.1 = tuned;
                        }
                    }
                }
            }
            Ok(if objective(&best) <= objective(cfg) { best } else { cfg.clone() })
        }
    }
}
