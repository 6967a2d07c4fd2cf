//! Problem-file parsing. A problem is a JSON object:
//!
//! ```json
//! {
//!   "system": {"type": "single_integrator_2d", "dt": 1.0},
//!   "x0": [1.0, 1.0],
//!   "T": 20,
//!   "formula": "G[0,20] safe & F[0,20] goal",
//!   "predicates": {
//!     "safe": {"type": "affine", "c": [1,0,0,0,0,0], "b": 0.0},
//!     "goal": {"type": "affine", "c": [0,1,0,0,0,0], "b": -5.0, "noise": [-0.01, 0.01]}
//!   },
//!   "control_penalty": 0.01,
//!   "smooth": {"srm": "SRM3", "k1": 3.0, "k2": 3.0}
//! }
//! ```
//!
//! Linear systems use `{"type": "linear", "A": [[..]], "B": .., "C": ..,
//! "D": ..}`. Predicate coefficient vectors index the composite sample
//! `[y; x; u]`. The formula is rewritten to negation normal form on load.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::dynamics::{double_integrator_2d, linear_system, single_integrator_2d, System};
use crate::error::{Error, Result};
use crate::smooth_semantics::{SmoothConfig, Srm};
use crate::stl_ast::{parse, Predicate, PredicateTable};
use crate::synthesis::SynthesisProblem;

#[derive(Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum RawSystem {
    #[serde(rename = "single_integrator_2d")]
    SingleIntegrator { dt: f64 },
    #[serde(rename = "double_integrator_2d")]
    DoubleIntegrator { dt: f64 },
    #[serde(rename = "linear")]
    Linear {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        #[serde(rename = "D")]
        d: Vec<Vec<f64>>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPredicate {
    #[serde(rename = "type")]
    kind: String,
    c: Vec<f64>,
    b: f64,
    #[serde(default)]
    noise: Option<(f64, f64)>,
}

fn default_penalty() -> f64 {
    0.01
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    system: RawSystem,
    x0: Vec<f64>,
    #[serde(rename = "T")]
    horizon: usize,
    formula: String,
    predicates: BTreeMap<String, RawPredicate>,
    #[serde(default = "default_penalty")]
    control_penalty: f64,
    #[serde(default)]
    smooth: Option<SmoothConfig>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidProblem(format!(
            "matrix {what} must be rectangular and nonempty"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn build_system(raw: &RawSystem) -> Result<System> {
    Ok(match raw {
        RawSystem::SingleIntegrator { dt } => {
            if *dt <= 0.0 {
                return Err(Error::InvalidProblem("dt must be positive".into()));
            }
            single_integrator_2d(*dt)
        }
        RawSystem::DoubleIntegrator { dt } => {
            if *dt <= 0.0 {
                return Err(Error::InvalidProblem("dt must be positive".into()));
            }
            double_integrator_2d(*dt)
        }
        RawSystem::Linear { a, b, c, d } => {
            let (a, b) = (matrix(a, "A")?, matrix(b, "B")?);
            let (c, d) = (matrix(c, "C")?, matrix(d, "D")?);
            let n = a.nrows();
            if a.ncols() != n
                || b.nrows() != n
                || c.ncols() != n
                || d.nrows() != c.nrows()
                || d.ncols() != b.ncols()
            {
                return Err(Error::InvalidProblem("linear system shapes disagree".into()));
            }
            linear_system(a, b, c, d)
        }
    })
}

/// A parsed problem plus the smooth configuration that came with it.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: SynthesisProblem,
    pub smooth: SmoothConfig,
}

pub fn parse_problem(json: &str) -> Result<LoadedProblem> {
    let raw: RawProblem =
        serde_json::from_str(json).map_err(|e| Error::InvalidProblem(e.to_string()))?;
    let system = build_system(&raw.system)?;
    if raw.x0.len() != system.n {
        return Err(Error::InvalidProblem(format!(
            "x0 has length {}, state dimension is {}",
            raw.x0.len(),
            system.n
        )));
    }
    let mut table = PredicateTable::new();
    for (name, rp) in &raw.predicates {
        if rp.kind != "affine" {
            return Err(Error::InvalidProblem(format!(
                "predicate `{name}` has unsupported type `{}`",
                rp.kind
            )));
        }
        if rp.c.len() != system.q() {
            return Err(Error::InvalidProblem(format!(
                "predicate `{name}` coefficient length {} does not match q = {}",
                rp.c.len(),
                system.q()
            )));
        }
        let mut pred = Predicate::affine(name.clone(), rp.c.clone(), rp.b);
        if let Some((lo, hi)) = rp.noise {
            if lo > hi {
                return Err(Error::InvalidProblem(format!(
                    "predicate `{name}` noise interval is reversed"
                )));
            }
            pred = pred.with_noise(lo, hi);
        }
        table.insert(pred);
    }
    let formula = parse(&raw.formula, &table)
        .map_err(Error::Parse)?
        .to_nnf()?;
    let mut smooth = raw
        .smooth
        .unwrap_or_else(|| SmoothConfig::new(Srm::Srm3));
    if raw.predicates.values().any(|p| p.noise.is_some()) {
        smooth.noise_enabled = true;
    }
    smooth.validate()?;
    let problem = SynthesisProblem {
        system,
        x0: raw.x0,
        horizon: raw.horizon,
        formula,
        predicates: table,
        control_penalty: raw.control_penalty,
    };
    problem.validate()?;
    Ok(LoadedProblem { problem, smooth })
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    parse_problem(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_semantics::Srm;

    fn sample_json() -> String {
        r#"{
            "system": {"type": "single_integrator_2d", "dt": 1.0},
            "x0": [1.0, 1.0],
            "T": 20,
            "formula": "G[0,20] safe & F[0,20] goal",
            "predicates": {
                "safe": {"type": "affine", "c": [1,0,0,0,0,0], "b": 0.0},
                "goal": {"type": "affine", "c": [0,1,0,0,0,0], "b": -5.0}
            },
            "control_penalty": 0.01,
            "smooth": {"srm": "SRM2", "k1": 4.0, "k2": 5.0}
        }"#
        .to_string()
    }

    #[test]
    fn parses_sample_problem() {
        let lp = parse_problem(&sample_json()).unwrap();
        assert_eq!(lp.problem.horizon, 20);
        assert_eq!(lp.problem.formula.horizon(), 20);
        assert_eq!(lp.smooth.srm, Srm::Srm2);
        assert_eq!(lp.smooth.k_for(""), (4.0, 5.0));
        assert!(!lp.smooth.noise_enabled);
    }

    #[test]
    fn defaults_apply() {
        let json = sample_json()
            .replace(r#""control_penalty": 0.01,"#, "")
            .replace(
                r#""smooth": {"srm": "SRM2", "k1": 4.0, "k2": 5.0}"#,
                r#""smooth": {"srm": "SRM1"}"#,
            );
        let lp = parse_problem(&json).unwrap();
        assert_eq!(lp.problem.control_penalty, 0.01);
        assert_eq!(lp.smooth.k_for(""), (3.0, 3.0));
    }

    #[test]
    fn noise_turns_error_semantics_on() {
        let json = sample_json().replace(
            r#""b": -5.0"#,
            r#""b": -5.0, "noise": [-0.01, 0.01]"#,
        );
        let lp = parse_problem(&json).unwrap();
        assert!(lp.smooth.noise_enabled);
    }

    #[test]
    fn formula_is_normalized() {
        let json = sample_json().replace("G[0,20] safe", "!F[0,20](!safe)");
        let lp = parse_problem(&json).unwrap();
        assert!(lp.problem.formula.is_nnf());
        assert!(lp.problem.formula.to_text().contains("G[0,20]"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad_dim = sample_json().replace("[1,0,0,0,0,0]", "[1,0]");
        assert!(matches!(parse_problem(&bad_dim), Err(Error::InvalidProblem(_))));
        let bad_horizon = sample_json().replace(r#""T": 20"#, r#""T": 5"#);
        assert!(matches!(parse_problem(&bad_horizon), Err(Error::InvalidProblem(_))));
        let bad_pred = sample_json().replace("F[0,20] goal", "F[0,20] nope");
        assert!(matches!(parse_problem(&bad_pred), Err(Error::Parse(_))));
    }

    #[test]
    fn linear_system_round_trip() {
        let json = r#"{
            "system": {"type": "linear",
                "A": [[1.0, 0.1], [0.0, 1.0]],
                "B": [[0.0], [1.0]],
                "C": [[1.0, 0.0]],
                "D": [[0.0]]},
            "x0": [0.0, 0.0],
            "T": 10,
            "formula": "F[0,10] up",
            "predicates": {"up": {"type": "affine", "c": [1,0,0,0], "b": -1.0}}
        }"#;
        let lp = parse_problem(json).unwrap();
        assert_eq!(lp.problem.system.n, 2);
        assert_eq!(lp.problem.system.q(), 4);
        assert_eq!(lp.smooth.srm, Srm::Srm3);
    }
}
