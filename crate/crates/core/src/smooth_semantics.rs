//! Smooth robustness: exact min/max replaced by one of four smooth
//! operator pairings selected by [`Srm`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compiled::{check_horizon, compile, eval_values};
use crate::error::{Error, Result};
use crate::semantics::Signal;
use crate::smooth_ops::OpKind;
use crate::stl_ast::Formula;

/// Smooth robustness measure: which operator stands in for min and which
/// for max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Srm {
    Srm1,
    Srm2,
    Srm3,
    Srm4,
}

impl Srm {
    pub const ALL: [Srm; 4] = [Srm::Srm1, Srm::Srm2, Srm::Srm3, Srm::Srm4];

    /// (min replacement, max replacement).
    pub fn kinds(self) -> (OpKind, OpKind) {
        match self {
            Srm::Srm1 => (OpKind::QuasiMin, OpKind::QuasiMax),
            Srm::Srm2 => (OpKind::QuasiMin, OpKind::SoftMax),
            Srm::Srm3 => (OpKind::SoftMin, OpKind::QuasiMax),
            Srm::Srm4 => (OpKind::SoftMin, OpKind::SoftMax),
        }
    }
}

impl std::fmt::Display for Srm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Srm::Srm1 => write!(f, "SRM1"),
            Srm::Srm2 => write!(f, "SRM2"),
            Srm::Srm3 => write!(f, "SRM3"),
            Srm::Srm4 => write!(f, "SRM4"),
        }
    }
}

impl std::str::FromStr for Srm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Srm, String> {
        match s.to_ascii_uppercase().as_str() {
            "SRM1" | "1" => Ok(Srm::Srm1),
            "SRM2" | "2" => Ok(Srm::Srm2),
            "SRM3" | "3" => Ok(Srm::Srm3),
            "SRM4" | "4" => Ok(Srm::Srm4),
            other => Err(format!("unknown SRM `{other}`")),
        }
    }
}

fn default_k() -> f64 {
    3.0
}

/// Operator selection plus sharpness parameters. `k1` applies to min-type
/// operators (conjunction, always, the inner until minima), `k2` to
/// max-type ones (disjunction, eventually, the outer until maximum).
/// `overrides` replaces the pair at individual nodes, keyed by the node's
/// root path: dotted child indices, `""` for the root, `"0.1"` for the
/// second child of the first child.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothConfig {
    pub srm: Srm,
    #[serde(default = "default_k")]
    pub k1: f64,
    #[serde(default = "default_k")]
    pub k2: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, (f64, f64)>,
    /// When set, predicate noise bands feed the error semantics. The smooth
    /// value itself never includes noise.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub noise_enabled: bool,
}

impl SmoothConfig {
    pub fn new(srm: Srm) -> SmoothConfig {
        SmoothConfig {
            srm,
            k1: default_k(),
            k2: default_k(),
            overrides: BTreeMap::new(),
            noise_enabled: false,
        }
    }

    pub fn with_k(mut self, k1: f64, k2: f64) -> SmoothConfig {
        self.k1 = k1;
        self.k2 = k2;
        self
    }

    pub fn with_override(mut self, path: impl Into<String>, k1: f64, k2: f64) -> SmoothConfig {
        self.overrides.insert(path.into(), (k1, k2));
        self
    }

    pub fn with_noise(mut self) -> SmoothConfig {
        self.noise_enabled = true;
        self
    }

    /// Effective (k1, k2) at a node path.
    pub fn k_for(&self, path: &str) -> (f64, f64) {
        self.overrides
            .get(path)
            .copied()
            .unwrap_or((self.k1, self.k2))
    }

    pub fn validate(&self) -> Result<()> {
        for &k in [self.k1, self.k2]
            .iter()
            .chain(self.overrides.values().flat_map(|(a, b)| [a, b]))
        {
            if k <= 0.0 || !k.is_finite() {
                return Err(Error::NonPositiveK(k));
            }
        }
        Ok(())
    }
}

/// Which one-sided guarantee the configuration carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Soundness {
    /// Smooth value never exceeds the exact one: a positive smooth value
    /// certifies satisfaction.
    Sound,
    /// Smooth value never falls below the exact one: a negative smooth
    /// value certifies violation.
    ReverseSound,
    /// Neither inequality holds; guarantees come only from the error
    /// interval.
    AsymptoticOnly,
}

/// One-sidedness of the configuration. Enabled predicate noise voids both
/// one-sided guarantees regardless of the operator pairing.
pub fn classify(cfg: &SmoothConfig) -> Soundness {
    if cfg.noise_enabled {
        return Soundness::AsymptoticOnly;
    }
    match cfg.srm {
        Srm::Srm2 => Soundness::Sound,
        Srm::Srm3 => Soundness::ReverseSound,
        Srm::Srm1 | Srm::Srm4 => Soundness::AsymptoticOnly,
    }
}

/// Smooth robustness of `f` (in negation normal form) over the suffix of
/// `s` starting at `t`. Predicate noise never enters the value.
pub fn smooth_robustness(f: &Formula, s: &Signal, cfg: &SmoothConfig, t: usize) -> Result<f64> {
    let c = compile(f, cfg)?;
    check_horizon(&c, s, t)?;
    let values = eval_values(&c, s);
    let v = values[0][t];
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("smooth robustness at t={t}")));
    }
    Ok(v)
}
