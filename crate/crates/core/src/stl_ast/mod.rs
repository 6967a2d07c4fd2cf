//! STL formula trees: predicates, boolean and bounded temporal operators,
//! a textual parser, negation-normal-form rewriting and structural queries.
//!
//! Formulas are immutable after construction and safe to share across threads.

mod parser;

pub use parser::parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Noise attached to a predicate: a per-sample interval the predicate value
/// may deviate by. Constant noise keeps error bounds signal-independent.
#[derive(Clone)]
pub enum Noise {
    Constant(f64, f64),
    SampleDependent {
        lo: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        hi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    },
}

impl Noise {
    pub const NONE: Noise = Noise::Constant(0.0, 0.0);

    pub fn bounds_at(&self, sample: &[f64]) -> (f64, f64) {
        match self {
            Noise::Constant(lo, hi) => (*lo, *hi),
            Noise::SampleDependent { lo, hi } => (lo(sample), hi(sample)),
        }
    }

    pub fn constant_bounds(&self) -> Option<(f64, f64)> {
        match self {
            Noise::Constant(lo, hi) => Some((*lo, *hi)),
            Noise::SampleDependent { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Noise::Constant(lo, hi) if *lo == 0.0 && *hi == 0.0)
    }
}

/// A predicate `mu(s_t) >= 0` over one composite sample, with its gradient
/// and an optional noise band.
#[derive(Clone)]
pub struct Predicate {
    pub name: String,
    pub mu: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub mu_grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    pub noise: Noise,
}

impl Predicate {
    /// Affine predicate `c . s_t + b >= 0`.
    pub fn affine(name: impl Into<String>, c: Vec<f64>, b: f64) -> Predicate {
        let grad = c.clone();
        Predicate {
            name: name.into(),
            mu: Arc::new(move |s| c.iter().zip(s).map(|(ci, si)| ci * si).sum::<f64>() + b),
            mu_grad: Arc::new(move |_| grad.clone()),
            noise: Noise::NONE,
        }
    }

    pub fn with_noise(mut self, lo: f64, hi: f64) -> Predicate {
        assert!(lo <= hi, "noise_lo must not exceed noise_hi");
        self.noise = Noise::Constant(lo, hi);
        self
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate({})", self.name)
    }
}

impl PartialEq for Predicate {
    // Identifiers are unique within a table; structural comparisons go by name.
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

/// Named predicates available to the parser, with helpers for the common
/// axis-aligned rectangle constructions.
#[derive(Debug, Clone, Default)]
pub struct PredicateTable {
    preds: BTreeMap<String, Arc<Predicate>>,
}

impl PredicateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a predicate; identifiers must be unique.
    pub fn insert(&mut self, pred: Predicate) -> Arc<Predicate> {
        let name = pred.name.clone();
        assert!(
            !self.preds.contains_key(&name),
            "duplicate predicate identifier `{name}`"
        );
        let arc = Arc::new(pred);
        self.preds.insert(name, arc.clone());
        arc
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Predicate>> {
        self.preds.get(name)
    }

    /// Membership in `[x_lo,x_hi] x [y_lo,y_hi]` read off channels
    /// `(ch_x, ch_y)` of the composite sample, as a conjunction of four
    /// affine predicates. Registers `<name>_{l,r,b,t}` and returns the
    /// conjunction.
    pub fn add_box_inside(
        &mut self,
        name: &str,
        q: usize,
        (ch_x, ch_y): (usize, usize),
        (x_lo, x_hi): (f64, f64),
        (y_lo, y_hi): (f64, f64),
    ) -> Formula {
        let sides = self.box_sides(name, q, (ch_x, ch_y), (x_lo, x_hi), (y_lo, y_hi));
        Formula::and(sides.into_iter().map(Formula::Pred).collect())
    }

    /// Avoidance of the same rectangle: the disjunction of the four
    /// outward-facing half-planes (already in negation normal form).
    pub fn add_box_outside(
        &mut self,
        name: &str,
        q: usize,
        (ch_x, ch_y): (usize, usize),
        (x_lo, x_hi): (f64, f64),
        (y_lo, y_hi): (f64, f64),
    ) -> Formula {
        let mut ex = vec![0.0; q];
        ex[ch_x] = 1.0;
        let mut ey = vec![0.0; q];
        ey[ch_y] = 1.0;
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let sides = vec![
            Predicate::affine(format!("{name}_l"), neg(&ex), x_lo), // x <= x_lo
            Predicate::affine(format!("{name}_r"), ex.clone(), -x_hi), // x >= x_hi
            Predicate::affine(format!("{name}_b"), neg(&ey), y_lo), // y <= y_lo
            Predicate::affine(format!("{name}_t"), ey.clone(), -y_hi), // y >= y_hi
        ];
        Formula::or(
            sides
                .into_iter()
                .map(|p| Formula::Pred(self.insert(p)))
                .collect(),
        )
    }

    fn box_sides(
        &mut self,
        name: &str,
        q: usize,
        (ch_x, ch_y): (usize, usize),
        (x_lo, x_hi): (f64, f64),
        (y_lo, y_hi): (f64, f64),
    ) -> Vec<Arc<Predicate>> {
        let mut ex = vec![0.0; q];
        ex[ch_x] = 1.0;
        let mut ey = vec![0.0; q];
        ey[ch_y] = 1.0;
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        vec![
            Predicate::affine(format!("{name}_l"), ex.clone(), -x_lo), // x >= x_lo
            Predicate::affine(format!("{name}_r"), neg(&ex), x_hi),    // x <= x_hi
            Predicate::affine(format!("{name}_b"), ey.clone(), -y_lo), // y >= y_lo
            Predicate::affine(format!("{name}_t"), neg(&ey), y_hi),    // y <= y_hi
        ]
        .into_iter()
        .map(|p| self.insert(p))
        .collect()
    }
}

/// Bounded-time STL formula. `And`/`Or` are n-ary (binary is the n = 2 case);
/// temporal intervals are discrete and finite with `t1 <= t2`.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Pred(Arc<Predicate>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Eventually(u32, u32, Box<Formula>),
    Always(u32, u32, Box<Formula>),
    Until(u32, u32, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn pred(p: Arc<Predicate>) -> Formula {
        Formula::Pred(p)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(children: Vec<Formula>) -> Formula {
        assert!(children.len() >= 2, "And requires at least two children");
        Formula::And(children)
    }

    pub fn or(children: Vec<Formula>) -> Formula {
        assert!(children.len() >= 2, "Or requires at least two children");
        Formula::Or(children)
    }

    pub fn eventually(t1: u32, t2: u32, f: Formula) -> Formula {
        assert!(t1 <= t2, "interval requires t1 <= t2");
        Formula::Eventually(t1, t2, Box::new(f))
    }

    pub fn always(t1: u32, t2: u32, f: Formula) -> Formula {
        assert!(t1 <= t2, "interval requires t1 <= t2");
        Formula::Always(t1, t2, Box::new(f))
    }

    pub fn until(t1: u32, t2: u32, left: Formula, right: Formula) -> Formula {
        assert!(t1 <= t2, "interval requires t1 <= t2");
        Formula::Until(t1, t2, Box::new(left), Box::new(right))
    }

    /// Maximum sum of nested upper interval bounds. A signal of length
    /// `T + 1` can evaluate the formula at `t = 0` iff `horizon(f) <= T`.
    pub fn horizon(&self) -> u32 {
        match self {
            Formula::Pred(_) => 0,
            Formula::Not(c) => c.horizon(),
            Formula::And(cs) | Formula::Or(cs) => {
                cs.iter().map(Formula::horizon).max().unwrap_or(0)
            }
            Formula::Eventually(_, t2, c) | Formula::Always(_, t2, c) => t2 + c.horizon(),
            Formula::Until(_, t2, l, r) => t2 + l.horizon().max(r.horizon()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Formula::Pred(_) => 1,
            Formula::Not(c) => 1 + c.node_count(),
            Formula::And(cs) | Formula::Or(cs) => {
                1 + cs.iter().map(Formula::node_count).sum::<usize>()
            }
            Formula::Eventually(_, _, c) | Formula::Always(_, _, c) => 1 + c.node_count(),
            Formula::Until(_, _, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// True when negations sit only directly above predicates.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::Pred(_) => true,
            Formula::Not(c) => matches!(**c, Formula::Pred(_)),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().all(Formula::is_nnf),
            Formula::Eventually(_, _, c) | Formula::Always(_, _, c) => c.is_nnf(),
            Formula::Until(_, _, l, r) => l.is_nnf() && r.is_nnf(),
        }
    }

    /// Rewrites to negation normal form. Negated until is rejected: the
    /// syntax has no dual for it, so there is nothing to push the negation
    /// into.
    pub fn to_nnf(&self) -> Result<Formula> {
        self.nnf_inner(false)
    }

    fn nnf_inner(&self, negated: bool) -> Result<Formula> {
        Ok(match self {
            Formula::Pred(p) => {
                if negated {
                    Formula::not(Formula::Pred(p.clone()))
                } else {
                    Formula::Pred(p.clone())
                }
            }
            Formula::Not(c) => c.nnf_inner(!negated)?,
            Formula::And(cs) => {
                let children = cs
                    .iter()
                    .map(|c| c.nnf_inner(negated))
                    .collect::<Result<Vec<_>>>()?;
                if negated {
                    Formula::Or(children)
                } else {
                    Formula::And(children)
                }
            }
            Formula::Or(cs) => {
                let children = cs
                    .iter()
                    .map(|c| c.nnf_inner(negated))
                    .collect::<Result<Vec<_>>>()?;
                if negated {
                    Formula::And(children)
                } else {
                    Formula::Or(children)
                }
            }
            Formula::Eventually(t1, t2, c) => {
                let child = Box::new(c.nnf_inner(negated)?);
                if negated {
                    Formula::Always(*t1, *t2, child)
                } else {
                    Formula::Eventually(*t1, *t2, child)
                }
            }
            Formula::Always(t1, t2, c) => {
                let child = Box::new(c.nnf_inner(negated)?);
                if negated {
                    Formula::Eventually(*t1, *t2, child)
                } else {
                    Formula::Always(*t1, *t2, child)
                }
            }
            Formula::Until(t1, t2, l, r) => {
                if negated {
                    return Err(Error::NegatedUntil);
                }
                Formula::Until(
                    *t1,
                    *t2,
                    Box::new(l.nnf_inner(false)?),
                    Box::new(r.nnf_inner(false)?),
                )
            }
        })
    }

    /// Merges nested same-kind And/Or nodes into single n-ary nodes.
    ///
    /// Off by default everywhere: it changes the operator arity m, and with
    /// it smooth values and error bands.
    pub fn flatten_bool(&self) -> Formula {
        match self {
            Formula::Pred(p) => Formula::Pred(p.clone()),
            Formula::Not(c) => Formula::not(c.flatten_bool()),
            Formula::And(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    match c.flatten_bool() {
                        Formula::And(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                Formula::And(out)
            }
            Formula::Or(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    match c.flatten_bool() {
                        Formula::Or(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                Formula::Or(out)
            }
            Formula::Eventually(t1, t2, c) => Formula::eventually(*t1, *t2, c.flatten_bool()),
            Formula::Always(t1, t2, c) => Formula::always(*t1, *t2, c.flatten_bool()),
            Formula::Until(t1, t2, l, r) => {
                Formula::until(*t1, *t2, l.flatten_bool(), r.flatten_bool())
            }
        }
    }

    /// Canonical text form; `parse` on the output reproduces the tree.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out, 0);
        out
    }

    // prec: 0 = or context, 1 = and context, 2 = unary/atom context
    fn write_text(&self, out: &mut String, prec: u8) {
        let own = match self {
            Formula::Or(_) => 0,
            Formula::And(_) => 1,
            _ => 2,
        };
        let parens = own < prec;
        if parens {
            out.push('(');
        }
        match self {
            Formula::Pred(p) => out.push_str(&p.name),
            Formula::Not(c) => {
                out.push('!');
                c.write_text(out, 2);
            }
            Formula::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" & ");
                    }
                    c.write_text(out, 2);
                }
            }
            Formula::Or(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" | ");
                    }
                    c.write_text(out, 1);
                }
            }
            Formula::Eventually(t1, t2, c) => {
                out.push_str(&format!("F[{t1},{t2}] "));
                c.write_text(out, 2);
            }
            Formula::Always(t1, t2, c) => {
                out.push_str(&format!("G[{t1},{t2}] "));
                c.write_text(out, 2);
            }
            Formula::Until(t1, t2, l, r) => {
                // until operands are atoms in the grammar
                match **l {
                    Formula::Pred(_) => l.write_text(out, 2),
                    _ => {
                        out.push('(');
                        l.write_text(out, 0);
                        out.push(')');
                    }
                }
                out.push_str(&format!(" U[{t1},{t2}] "));
                match **r {
                    Formula::Pred(_) => r.write_text(out, 2),
                    _ => {
                        out.push('(');
                        r.write_text(out, 0);
                        out.push(')');
                    }
                }
            }
        }
        if parens {
            out.push(')');
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
