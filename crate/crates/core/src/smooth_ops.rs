//! The four smooth min/max operators, their gradients and approximation
//! error bands, computed with max-subtraction stabilization so that no
//! intermediate overflows even for large `k * a` magnitudes.
//!
//! Error convention throughout: band intervals contain `exact - smooth`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    QuasiMin,
    QuasiMax,
    SoftMin,
    SoftMax,
}

impl OpKind {
    pub fn approximates_min(self) -> bool {
        matches!(self, OpKind::QuasiMin | OpKind::SoftMin)
    }
}

/// Closed real interval with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo <= hi, "interval requires lo <= hi, got [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn contains_interval(self, other: Interval, slack: f64) -> bool {
        other.lo >= self.lo - slack && other.hi <= self.hi + slack
    }

    pub fn shift(self, by: f64) -> Interval {
        Interval { lo: self.lo + by, hi: self.hi + by }
    }

    pub fn add(self, other: Interval) -> Interval {
        Interval { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    /// Smallest interval containing both.
    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

fn validate(a: &[f64], k: f64) -> Result<()> {
    if k <= 0.0 || !k.is_finite() {
        return Err(Error::NonPositiveK(k));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = a.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("smooth operator input {bad}")));
    }
    Ok(())
}

fn max_of(a: &[f64]) -> f64 {
    a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(a: &[f64]) -> f64 {
    a.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `-(1/k) log sum exp(-k a_i)`, shifted so the sum is over non-positive
/// exponents anchored at the minimum.
fn quasi_min(a: &[f64], k: f64) -> f64 {
    let m = min_of(a);
    let s: f64 = a.iter().map(|&x| (-k * (x - m)).exp()).sum();
    m - s.ln() / k
}

fn quasi_max(a: &[f64], k: f64) -> f64 {
    let m = max_of(a);
    let s: f64 = a.iter().map(|&x| (k * (x - m)).exp()).sum();
    m + s.ln() / k
}

/// Exponentially weighted average with weights `exp(-k a_i)`.
fn soft_min(a: &[f64], k: f64) -> f64 {
    let m = min_of(a);
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in a {
        let w = (-k * (x - m)).exp();
        num += x * w;
        den += w;
    }
    num / den
}

fn soft_max(a: &[f64], k: f64) -> f64 {
    let m = max_of(a);
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in a {
        let w = (k * (x - m)).exp();
        num += x * w;
        den += w;
    }
    num / den
}

pub fn smooth_op(kind: OpKind, a: &[f64], k: f64) -> Result<f64> {
    validate(a, k)?;
    Ok(smooth_op_unchecked(kind, a, k))
}

pub(crate) fn smooth_op_unchecked(kind: OpKind, a: &[f64], k: f64) -> f64 {
    match kind {
        OpKind::QuasiMin => quasi_min(a, k),
        OpKind::QuasiMax => quasi_max(a, k),
        OpKind::SoftMin => soft_min(a, k),
        OpKind::SoftMax => soft_max(a, k),
    }
}

/// Softmax-style weights `exp(sign k (a_i - anchor)) / sum`, stabilized.
fn weights(a: &[f64], k: f64, toward_max: bool) -> Vec<f64> {
    let anchor = if toward_max { max_of(a) } else { min_of(a) };
    let sign = if toward_max { 1.0 } else { -1.0 };
    let mut w: Vec<f64> = a.iter().map(|&x| (sign * k * (x - anchor)).exp()).collect();
    let s: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= s;
    }
    w
}

pub fn smooth_op_grad(kind: OpKind, a: &[f64], k: f64) -> Result<Vec<f64>> {
    validate(a, k)?;
    Ok(smooth_op_grad_unchecked(kind, a, k))
}

pub(crate) fn smooth_op_grad_unchecked(kind: OpKind, a: &[f64], k: f64) -> Vec<f64> {
    match kind {
        OpKind::QuasiMin => weights(a, k, false),
        OpKind::QuasiMax => weights(a, k, true),
        OpKind::SoftMin => {
            let v = soft_min(a, k);
            let mut w = weights(a, k, false);
            for (wi, &ai) in w.iter_mut().zip(a) {
                *wi *= 1.0 - k * (ai - v);
            }
            w
        }
        OpKind::SoftMax => {
            let v = soft_max(a, k);
            let mut w = weights(a, k, true);
            for (wi, &ai) in w.iter_mut().zip(a) {
                *wi *= 1.0 - k * (v - ai);
            }
            w
        }
    }
}

/// Extremal statistics of a vector: the two largest and two smallest
/// entries. For a single entry all four coincide.
fn extremes(a: &[f64]) -> (f64, f64, f64, f64) {
    let mut hi1 = f64::NEG_INFINITY; // largest
    let mut hi2 = f64::NEG_INFINITY; // second largest
    let mut lo1 = f64::INFINITY; // smallest
    let mut lo2 = f64::INFINITY; // second smallest
    for &x in a {
        if x > hi1 {
            hi2 = hi1;
            hi1 = x;
        } else if x > hi2 {
            hi2 = x;
        }
        if x < lo1 {
            lo2 = lo1;
            lo1 = x;
        } else if x < lo2 {
            lo2 = x;
        }
    }
    if a.len() == 1 {
        (hi1, hi1, hi1, hi1)
    } else {
        (hi1, hi2, lo2, lo1)
    }
}

/// Data-dependent (tight) band containing `exact - smooth` for the given
/// input vector. Duplicated extrema need no special casing: the gap simply
/// degenerates to zero.
pub fn error_band(kind: OpKind, a: &[f64], k: f64) -> Result<Interval> {
    validate(a, k)?;
    Ok(error_band_unchecked(kind, a, k))
}

pub(crate) fn error_band_unchecked(kind: OpKind, a: &[f64], k: f64) -> Interval {
    let m = a.len() as f64;
    if a.len() == 1 {
        return Interval::ZERO;
    }
    let (a1, a2, am1, am) = extremes(a); // a1 >= a2, am1 >= am
    match kind {
        OpKind::QuasiMin => {
            let hi = (1.0 + (m - 1.0) * (-k * (am1 - am)).exp()).ln() / k;
            Interval::new(0.0, hi)
        }
        OpKind::QuasiMax => {
            let lo = -(1.0 + (m - 1.0) * (-k * (a1 - a2)).exp()).ln() / k;
            Interval::new(lo, 0.0)
        }
        OpKind::SoftMin => {
            let s: f64 = a.iter().map(|&x| (-k * (x - am)).exp()).sum();
            let lo = -(a1 - am) * (1.0 - 1.0 / s);
            Interval::new(lo.min(0.0), 0.0)
        }
        OpKind::SoftMax => {
            let s: f64 = a.iter().map(|&x| (-k * (a1 - x)).exp()).sum();
            let hi = (a1 - am) * (1.0 - 1.0 / s);
            Interval::new(0.0, hi.max(0.0))
        }
    }
}

/// Range information a caller supplies for the signal-free soft-operator
/// bands: `range >= a_1 - a_m` and a lower bound `gap` on the relevant
/// extremal gap (zero is always valid).
#[derive(Debug, Clone, Copy)]
pub struct SoftRangeBound {
    pub range: f64,
    pub gap: f64,
}

impl SoftRangeBound {
    pub fn new(range: f64) -> SoftRangeBound {
        SoftRangeBound { range, gap: 0.0 }
    }
}

/// Signal-free band containing `exact - smooth` for any input of `m`
/// entries. Quasi bands depend only on `(m, k)`; soft bands additionally
/// need a caller-supplied range bound.
pub fn error_band_value_free(
    kind: OpKind,
    m: usize,
    k: f64,
    soft: Option<SoftRangeBound>,
) -> Result<Interval> {
    if k <= 0.0 || !k.is_finite() {
        return Err(Error::NonPositiveK(k));
    }
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    if m == 1 {
        return Ok(Interval::ZERO);
    }
    let mf = m as f64;
    Ok(match kind {
        OpKind::QuasiMin => Interval::new(0.0, mf.ln() / k),
        OpKind::QuasiMax => Interval::new(-mf.ln() / k, 0.0),
        OpKind::SoftMin | OpKind::SoftMax => {
            let bound = soft.ok_or(Error::MissingRangeBound)?;
            let w = bound.range / (1.0 + (k * bound.gap).exp() / (mf - 1.0));
            if kind == OpKind::SoftMin {
                Interval::new(-w, 0.0)
            } else {
                Interval::new(0.0, w)
            }
        }
    })
}
