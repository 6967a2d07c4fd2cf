//! Certified intervals containing `exact - smooth` robustness, propagated
//! bottom-up through the formula tree.
//!
//! Two variants: the signal-dependent path evaluates tight operator bands
//! on the actual smoothed child values; the signal-free path uses bands
//! that depend only on operator arity and k (soft operators additionally
//! need a caller-supplied range bound), so the result holds for every
//! signal.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, SerializeStruct, Serializer};
use serde::Serialize;

use crate::compiled::{
    check_horizon, compile, eval_values, until_pair_values, CKind, Compiled,
};
use crate::error::{Error, Result};
use crate::semantics::Signal;
use crate::smooth_ops::{
    error_band_unchecked, error_band_value_free, smooth_op_unchecked, Interval, OpKind,
    SoftRangeBound,
};
use crate::smooth_semantics::SmoothConfig;
use crate::stl_ast::Formula;

/// Interval on `exact - smooth` for the whole formula, plus per-node
/// diagnostics. Node keys are root paths (`""` is the root); a non-root
/// entry is the hull of that node's interval over its admissible times.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub interval: Interval,
    pub per_node: BTreeMap<String, Interval>,
}

impl ErrorReport {
    fn new(interval: Interval, per_node: BTreeMap<String, Interval>) -> ErrorReport {
        ErrorReport { interval, per_node }
    }

    /// A report carrying only a root interval; useful when the bound comes
    /// from somewhere other than the propagation (tests, external data).
    pub fn from_interval(interval: Interval) -> ErrorReport {
        let mut per_node = BTreeMap::new();
        per_node.insert(String::new(), interval);
        ErrorReport { interval, per_node }
    }

    pub fn width(&self) -> f64 {
        self.interval.width()
    }
}

impl Serialize for ErrorReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct PerNode<'a>(&'a BTreeMap<String, Interval>);
        impl Serialize for PerNode<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0 {
                    map.serialize_entry(k, &[v.lo, v.hi])?;
                }
                map.end()
            }
        }
        let mut st = serializer.serialize_struct("ErrorReport", 4)?;
        st.serialize_field("lo", &self.interval.lo)?;
        st.serialize_field("hi", &self.interval.hi)?;
        st.serialize_field("width", &self.width())?;
        st.serialize_field("per_node", &PerNode(&self.per_node))?;
        st.end()
    }
}

fn pred_noise(c: &Compiled, i: usize, noise_enabled: bool, sample: Option<&[f64]>) -> Result<(f64, f64)> {
    let CKind::Pred(p) = &c.nodes[i].kind else {
        unreachable!("noise queried on a non-predicate node");
    };
    if !noise_enabled {
        return Ok((0.0, 0.0));
    }
    match sample {
        Some(s) => Ok(p.noise.bounds_at(s)),
        None => p
            .noise
            .constant_bounds()
            .ok_or_else(|| Error::SampleDependentNoise(p.name.clone())),
    }
}

/// Signal-dependent error intervals, one per node per admissible time,
/// with tight operator bands evaluated on the smoothed child values.
fn tight_intervals(c: &Compiled, s: &Signal, values: &[Vec<f64>], noise: bool) -> Result<Vec<Vec<Interval>>> {
    let big_t = s.horizon();
    let mut iv: Vec<Vec<Interval>> = c.nodes.iter().map(|_| Vec::new()).collect();
    for i in (0..c.nodes.len()).rev() {
        let node = &c.nodes[i];
        let last_t = big_t - node.horizon as usize;
        let mut out = Vec::with_capacity(last_t + 1);
        for t in 0..=last_t {
            let interval = match &node.kind {
                CKind::Pred(_) => {
                    let (lo, hi) = pred_noise(c, i, noise, Some(s.sample(t)))?;
                    Interval::new(-hi, -lo)
                }
                CKind::Not(child) => {
                    let ci = iv[*child][t];
                    Interval::new(-ci.hi, -ci.lo)
                }
                CKind::And(cs) | CKind::Or(cs) => {
                    let is_and = matches!(node.kind, CKind::And(_));
                    let (kind, k) = if is_and {
                        (c.min_kind, node.k1)
                    } else {
                        (c.max_kind, node.k2)
                    };
                    let vals: Vec<f64> = cs.iter().map(|&ci| values[ci][t]).collect();
                    let band = error_band_unchecked(kind, &vals, k);
                    stack(band, cs.iter().map(|&ci| iv[ci][t]))
                }
                CKind::Eventually(t1, t2, child) | CKind::Always(t1, t2, child) => {
                    let is_always = matches!(node.kind, CKind::Always(..));
                    let (kind, k) = if is_always {
                        (c.min_kind, node.k1)
                    } else {
                        (c.max_kind, node.k2)
                    };
                    let window = t + *t1 as usize..=t + *t2 as usize;
                    let band = error_band_unchecked(kind, &values[*child][window.clone()], k);
                    stack(band, window.map(|tau| iv[*child][tau]))
                }
                CKind::Until(t1, t2, l, r) => {
                    until_tight(c, values, &iv, i, t, *t1, *t2, *l, *r)
                }
            };
            out.push(interval);
        }
        iv[i] = out;
    }
    Ok(iv)
}

/// Operator band plus the hull of the child intervals it acts over.
fn stack(band: Interval, children: impl IntoIterator<Item = Interval>) -> Interval {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ci in children {
        lo = lo.min(ci.lo);
        hi = hi.max(ci.hi);
    }
    Interval::new(band.lo + lo, band.hi + hi)
}

#[allow(clippy::too_many_arguments)]
fn until_tight(
    c: &Compiled,
    values: &[Vec<f64>],
    iv: &[Vec<Interval>],
    i: usize,
    t: usize,
    t1: u32,
    t2: u32,
    l: usize,
    r: usize,
) -> Interval {
    let node = &c.nodes[i];
    let start = t + t1 as usize;
    let end = t + t2 as usize;
    // running hull of the right operand's intervals over the prefix
    let mut r_lo = f64::INFINITY;
    let mut r_hi = f64::NEG_INFINITY;
    let mut inner = Vec::with_capacity(end - start + 1);
    for tau in start..=end {
        r_lo = r_lo.min(iv[r][tau].lo);
        r_hi = r_hi.max(iv[r][tau].hi);
        let run_slice = &values[r][start..=tau];
        let run_band = error_band_unchecked(c.min_kind, run_slice, node.k1);
        let i3 = Interval::new(run_band.lo + r_lo, run_band.hi + r_hi);
        let run = smooth_op_unchecked(c.min_kind, run_slice, node.k1);
        let pair_vals = [values[l][tau], run];
        let pair_band = error_band_unchecked(c.min_kind, &pair_vals, node.k1);
        let li = iv[l][tau];
        inner.push(Interval::new(
            pair_band.lo + li.lo.min(i3.lo),
            pair_band.hi + li.hi.max(i3.hi),
        ));
    }
    let pairs = until_pair_values(c, values, i, t, t1, t2, l, r);
    let outer_band = error_band_unchecked(c.max_kind, &pairs, node.k2);
    stack(outer_band, inner)
}

/// Certified interval containing `robustness - smooth_robustness` for `f`
/// over `s` evaluated at t = 0, with tight operator bands.
pub fn error_interval(f: &Formula, s: &Signal, cfg: &SmoothConfig) -> Result<ErrorReport> {
    let c = compile(f, cfg)?;
    check_horizon(&c, s, 0)?;
    let values = eval_values(&c, s);
    let iv = tight_intervals(&c, s, &values, cfg.noise_enabled)?;
    let mut per_node = BTreeMap::new();
    per_node.insert(String::new(), iv[0][0]);
    for (i, node) in c.nodes.iter().enumerate().skip(1) {
        let hull = iv[i]
            .iter()
            .copied()
            .reduce(Interval::hull)
            .expect("node has at least one admissible time");
        per_node.insert(node.path.clone(), hull);
    }
    Ok(ErrorReport::new(iv[0][0], per_node))
}

type BandFn<'a> = dyn Fn(OpKind, usize, f64) -> Result<Interval> + 'a;

fn free_node(c: &Compiled, i: usize, band: &BandFn, noise: bool, out: &mut BTreeMap<String, Interval>) -> Result<Interval> {
    let node = &c.nodes[i];
    let interval = match &node.kind {
        CKind::Pred(_) => {
            let (lo, hi) = pred_noise(c, i, noise, None)?;
            Interval::new(-hi, -lo)
        }
        CKind::Not(child) => {
            let ci = free_node(c, *child, band, noise, out)?;
            Interval::new(-ci.hi, -ci.lo)
        }
        CKind::And(cs) | CKind::Or(cs) => {
            let is_and = matches!(node.kind, CKind::And(_));
            let (kind, k) = if is_and {
                (c.min_kind, node.k1)
            } else {
                (c.max_kind, node.k2)
            };
            let children = cs
                .iter()
                .map(|&ci| free_node(c, ci, band, noise, out))
                .collect::<Result<Vec<_>>>()?;
            stack(band(kind, cs.len(), k)?, children)
        }
        CKind::Eventually(t1, t2, child) | CKind::Always(t1, t2, child) => {
            let is_always = matches!(node.kind, CKind::Always(..));
            let (kind, k) = if is_always {
                (c.min_kind, node.k1)
            } else {
                (c.max_kind, node.k2)
            };
            let m = (*t2 - *t1 + 1) as usize;
            let ci = free_node(c, *child, band, noise, out)?;
            stack(band(kind, m, k)?, [ci])
        }
        CKind::Until(t1, t2, l, r) => {
            let window = (*t2 - *t1 + 1) as usize;
            let li = free_node(c, *l, band, noise, out)?;
            let ri = free_node(c, *r, band, noise, out)?;
            // hull over prefix lengths of the running-min stage, then the
            // pairwise stage, then the outer max over the window
            let mut inner_hull: Option<Interval> = None;
            for w in 1..=window {
                let i3 = stack(band(c.min_kind, w, node.k1)?, [ri]);
                let i4 = stack(band(c.min_kind, 2, node.k1)?, [li, i3]);
                inner_hull = Some(match inner_hull {
                    Some(h) => h.hull(i4),
                    None => i4,
                });
            }
            stack(band(c.max_kind, window, node.k2)?, inner_hull)
        }
    };
    out.insert(node.path.clone(), interval);
    Ok(interval)
}

fn free_report(f: &Formula, cfg: &SmoothConfig, band: &BandFn) -> Result<ErrorReport> {
    let c = compile(f, cfg)?;
    let mut per_node = BTreeMap::new();
    let root = free_node(&c, 0, band, cfg.noise_enabled, &mut per_node)?;
    Ok(ErrorReport::new(root, per_node))
}

/// Signal-independent error interval. `range_bound` bounds the spread
/// (max minus min) of the values any single operator in the tree can see;
/// soft-operator bands need it, quasi bands ignore it.
pub fn error_interval_signal_free(
    f: &Formula,
    cfg: &SmoothConfig,
    range_bound: f64,
) -> Result<ErrorReport> {
    let soft = SoftRangeBound::new(range_bound);
    free_report(f, cfg, &move |kind, m, k| {
        error_band_value_free(kind, m, k, Some(soft))
    })
}

/// Interval from predicate noise alone, with every operator treated as
/// exact. Bounds the error of a non-smooth evaluation over noisy
/// predicate readings.
pub fn noise_only_interval(f: &Formula, cfg: &SmoothConfig) -> Result<ErrorReport> {
    free_report(f, cfg, &|_, _, _| Ok(Interval::ZERO))
}

/// Interval guaranteed to contain the exact robustness, from the smooth
/// value and its error report.
pub fn certify(smooth_value: f64, report: &ErrorReport) -> Interval {
    report.interval.shift(smooth_value)
}

/// Smallest smooth value that certifies exact robustness above `target`:
/// `smooth >= target - lo` implies `exact >= smooth + lo >= target`.
pub fn termination_threshold(target: f64, report: &ErrorReport) -> f64 {
    target - report.interval.lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::robustness;
    use crate::smooth_semantics::{smooth_robustness, Srm};
    use crate::stl_ast::{parse, Predicate, PredicateTable};

    const LN_2: f64 = std::f64::consts::LN_2;

    fn table() -> PredicateTable {
        let mut t = PredicateTable::new();
        t.insert(Predicate::affine("p", vec![1.0, 0.0], 0.0));
        t.insert(Predicate::affine("q", vec![0.0, 1.0], 0.0));
        t.insert(Predicate::affine("noisy", vec![1.0, 0.0], 0.0).with_noise(-0.01, 0.01));
        t
    }

    fn pair_signal(rows: &[(f64, f64)]) -> Signal {
        Signal::flat(rows.iter().map(|&(a, b)| vec![a, b]).collect()).unwrap()
    }

    #[test]
    fn conjunction_band_at_tied_children() {
        // equal child values make the tight quasi-min band hit ln 2
        let t = table();
        let f = parse("p & q", &t).unwrap();
        let s = pair_signal(&[(0.4, 0.4)]);
        let cfg = SmoothConfig::new(Srm::Srm1).with_k(1.0, 1.0);
        let r = error_interval(&f, &s, &cfg).unwrap();
        assert!((r.interval.lo).abs() < 1e-12);
        assert!((r.interval.hi - LN_2).abs() < 1e-9);
    }

    #[test]
    fn predicate_noise_interval() {
        let t = table();
        let f = parse("noisy", &t).unwrap();
        let s = pair_signal(&[(1.0, 0.0)]);
        let cfg = SmoothConfig::new(Srm::Srm1).with_noise();
        let r = error_interval(&f, &s, &cfg).unwrap();
        assert_eq!(r.interval, Interval::new(-0.01, 0.01));
        // noise disabled: exact leaf
        let cfg_off = SmoothConfig::new(Srm::Srm1);
        assert_eq!(
            error_interval(&f, &s, &cfg_off).unwrap().interval,
            Interval::ZERO
        );
    }

    #[test]
    fn srm2_lower_endpoint_is_zero_noiseless() {
        let t = table();
        let f = parse("G[0,2](p & q) | F[1,3] p", &t).unwrap();
        let s = pair_signal(&[(0.5, 1.0), (1.8, -0.2), (-0.3, 0.4), (2.5, 0.0)]);
        for k in [0.5, 3.0, 10.0] {
            let cfg = SmoothConfig::new(Srm::Srm2).with_k(k, k);
            let r = error_interval(&f, &s, &cfg).unwrap();
            assert_eq!(r.interval.lo, 0.0, "k={k}");
            assert!(r.interval.hi >= 0.0);
        }
    }

    #[test]
    fn signal_free_always_window_band() {
        let t = table();
        let f = parse("G[0,20] p", &t).unwrap();
        let cfg = SmoothConfig::new(Srm::Srm1).with_k(3.0, 3.0);
        let r = error_interval_signal_free(&f, &cfg, 10.0).unwrap();
        assert_eq!(r.interval.lo, 0.0);
        assert!((r.interval.hi - 21f64.ln() / 3.0).abs() < 1e-12);
        assert!((r.interval.hi - 1.0148).abs() < 1e-4);
        // doubling k halves the width exactly
        let r2 = error_interval_signal_free(
            &f,
            &SmoothConfig::new(Srm::Srm1).with_k(6.0, 6.0),
            10.0,
        )
        .unwrap();
        assert!((r2.width() - r.width() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn containment_spot_check() {
        let t = table();
        let f = parse("(p U[0,2] q) & G[0,3](p | q)", &t).unwrap();
        let s = pair_signal(&[(0.4, -0.6), (-1.2, 0.9), (2.0, 0.3), (0.1, -0.2)]);
        let exact = robustness(&f, &s, 0).unwrap();
        for srm in Srm::ALL {
            for k in [0.5, 1.0, 3.0, 10.0] {
                let cfg = SmoothConfig::new(srm).with_k(k, k);
                let smooth = smooth_robustness(&f, &s, &cfg, 0).unwrap();
                let r = error_interval(&f, &s, &cfg).unwrap();
                assert!(
                    r.interval.contains(exact - smooth, 1e-9),
                    "{srm} k={k}: {} not in [{}, {}]",
                    exact - smooth,
                    r.interval.lo,
                    r.interval.hi
                );
            }
        }
    }

    #[test]
    fn tight_within_signal_free() {
        let t = table();
        let f = parse("F[0,2](p & q) | G[1,3] p", &t).unwrap();
        let s = pair_signal(&[(0.4, -0.6), (-1.2, 0.9), (2.0, 0.3), (0.1, -0.2)]);
        // child values live in roughly [-2, 2]; 10 safely bounds every
        // operator's spread
        for srm in Srm::ALL {
            for k in [1.0, 3.0] {
                let cfg = SmoothConfig::new(srm).with_k(k, k);
                let tight = error_interval(&f, &s, &cfg).unwrap();
                let free = error_interval_signal_free(&f, &cfg, 10.0).unwrap();
                assert!(
                    free.interval.contains_interval(tight.interval, 1e-9),
                    "{srm} k={k}: tight {:?} vs free {:?}",
                    tight.interval,
                    free.interval
                );
            }
        }
    }

    #[test]
    fn certify_shifts_interval() {
        let r = ErrorReport::from_interval(Interval::new(-0.01, 4.245));
        let c = certify(-0.772, &r);
        assert!((c.lo - (-0.782)).abs() < 1e-12);
        assert!((c.hi - 3.473).abs() < 1e-12);
        assert!(c.contains(0.338, 0.0));

        let r3 = ErrorReport::from_interval(Interval::new(-3.982, 0.01));
        let c3 = certify(0.698, &r3);
        assert!(c3.contains(0.401, 0.0));
    }

    #[test]
    fn termination_threshold_arithmetic() {
        let r = ErrorReport::from_interval(Interval::new(-0.01, 4.245));
        assert!((termination_threshold(-1.0, &r) - (-0.99)).abs() < 1e-12);
        let r0 = ErrorReport::from_interval(Interval::new(0.0, 1.0));
        assert_eq!(termination_threshold(0.0, &r0), 0.0);
        let r5 = ErrorReport::from_interval(Interval::new(-0.5, 0.5));
        assert_eq!(termination_threshold(0.0, &r5), 0.5);
    }

    #[test]
    fn noise_only_is_pure_noise_hull() {
        let t = table();
        let f = parse("G[0,5] noisy", &t).unwrap();
        let cfg = SmoothConfig::new(Srm::Srm1).with_noise();
        let r = noise_only_interval(&f, &cfg).unwrap();
        assert_eq!(r.interval, Interval::new(-0.01, 0.01));
        // noiseless formula collapses to a point
        let f2 = parse("G[0,5](p | q)", &t).unwrap();
        assert_eq!(
            noise_only_interval(&f2, &cfg).unwrap().interval,
            Interval::ZERO
        );
    }

    #[test]
    fn report_serializes_to_flat_json() {
        let t = table();
        let f = parse("p & q", &t).unwrap();
        let s = pair_signal(&[(0.4, 0.4)]);
        let cfg = SmoothConfig::new(Srm::Srm1).with_k(1.0, 1.0);
        let r = error_interval(&f, &s, &cfg).unwrap();
        let json: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(json["lo"], 0.0);
        assert!((json["width"].as_f64().unwrap() - LN_2).abs() < 1e-9);
        assert_eq!(json["per_node"][""][0], 0.0);
        assert!(json["per_node"]["0"].is_array());
        assert!(json["per_node"]["1"].is_array());
    }

    #[test]
    fn per_node_root_matches_interval() {
        let t = table();
        let f = parse("p U[1,3] q | G[0,2] p", &t).unwrap();
        let s = pair_signal(&[(0.4, -0.6), (-1.2, 0.9), (2.0, 0.3), (0.1, -0.2)]);
        let cfg = SmoothConfig::new(Srm::Srm4).with_k(2.0, 2.0);
        let r = error_interval(&f, &s, &cfg).unwrap();
        assert_eq!(r.per_node[""], r.interval);
        assert!(r.width() >= 0.0);
    }

    #[test]
    fn signal_free_rejects_sample_dependent_noise() {
        use crate::stl_ast::Noise;
        use std::sync::Arc;
        let mut t = PredicateTable::new();
        let mut pred = Predicate::affine("sd", vec![1.0], 0.0);
        pred.noise = Noise::SampleDependent {
            lo: Arc::new(|s: &[f64]| -s[0].abs()),
            hi: Arc::new(|s: &[f64]| s[0].abs()),
        };
        t.insert(pred);
        let f = parse("G[0,2] sd", &t).unwrap();
        let cfg = SmoothConfig::new(Srm::Srm1).with_noise();
        assert!(matches!(
            error_interval_signal_free(&f, &cfg, 1.0),
            Err(Error::SampleDependentNoise(name)) if name == "sd"
        ));
    }
}
