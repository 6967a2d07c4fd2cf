//! Shared setup for the criterion benchmarks: the first benchmark
//! fixture plus a deterministic control sequence to differentiate at.

use smooth_stl::synthesis::{build_scp, SynthesisProblem};
use smooth_stl::ControlSequence;

pub fn fixture() -> (SynthesisProblem, ControlSequence) {
    let prob = build_scp(1);
    // deterministic mildly curved input, no RNG dependency
    let u = (0..=prob.horizon)
        .map(|t| {
            let x = t as f64 / prob.horizon as f64;
            vec![0.4 * (1.0 - x), 0.3 * x]
        })
        .collect();
    (prob, u)
}
