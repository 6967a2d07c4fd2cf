//! Flattened formula representation shared by the smooth, error-interval
//! and gradient evaluators.
//!
//! Nodes are stored in pre-order, so iterating forward visits parents
//! before children and iterating backward visits children first. Each node
//! carries its root path (dotted child indices, root is the empty string),
//! which keys per-node operator-parameter overrides and the per-node
//! entries of error reports.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::semantics::Signal;
use crate::smooth_ops::{smooth_op_unchecked, OpKind};
use crate::smooth_semantics::SmoothConfig;
use crate::stl_ast::{Formula, Predicate};

pub(crate) enum CKind {
    Pred(Arc<Predicate>),
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Eventually(u32, u32, usize),
    Always(u32, u32, usize),
    Until(u32, u32, usize, usize),
}

pub(crate) struct CNode {
    pub kind: CKind,
    pub path: String,
    pub k1: f64,
    pub k2: f64,
    pub horizon: u32,
}

pub(crate) struct Compiled {
    pub nodes: Vec<CNode>,
    pub min_kind: OpKind,
    pub max_kind: OpKind,
}

impl Compiled {
    pub fn root_horizon(&self) -> u32 {
        self.nodes[0].horizon
    }
}

fn child_path(parent: &str, i: usize) -> String {
    if parent.is_empty() {
        i.to_string()
    } else {
        format!("{parent}.{i}")
    }
}

fn push(f: &Formula, path: String, cfg: &SmoothConfig, out: &mut Vec<CNode>) -> usize {
    let (k1, k2) = cfg.k_for(&path);
    let idx = out.len();
    // kind is patched below once the children are numbered
    out.push(CNode {
        kind: CKind::Not(usize::MAX),
        path: path.clone(),
        k1,
        k2,
        horizon: f.horizon(),
    });
    let kind = match f {
        Formula::Pred(p) => CKind::Pred(p.clone()),
        Formula::Not(c) => CKind::Not(push(c, child_path(&path, 0), cfg, out)),
        Formula::And(cs) => CKind::And(
            cs.iter()
                .enumerate()
                .map(|(i, c)| push(c, child_path(&path, i), cfg, out))
                .collect(),
        ),
        Formula::Or(cs) => CKind::Or(
            cs.iter()
                .enumerate()
                .map(|(i, c)| push(c, child_path(&path, i), cfg, out))
                .collect(),
        ),
        Formula::Eventually(t1, t2, c) => {
            CKind::Eventually(*t1, *t2, push(c, child_path(&path, 0), cfg, out))
        }
        Formula::Always(t1, t2, c) => {
            CKind::Always(*t1, *t2, push(c, child_path(&path, 0), cfg, out))
        }
        Formula::Until(t1, t2, l, r) => {
            let li = push(l, child_path(&path, 0), cfg, out);
            let ri = push(r, child_path(&path, 1), cfg, out);
            CKind::Until(*t1, *t2, li, ri)
        }
    };
    out[idx].kind = kind;
    idx
}

pub(crate) fn compile(f: &Formula, cfg: &SmoothConfig) -> Result<Compiled> {
    if !f.is_nnf() {
        return Err(Error::NotInNnf);
    }
    cfg.validate()?;
    let mut nodes = Vec::with_capacity(f.node_count());
    push(f, String::new(), cfg, &mut nodes);
    let (min_kind, max_kind) = cfg.srm.kinds();
    Ok(Compiled { nodes, min_kind, max_kind })
}

pub(crate) fn check_horizon(c: &Compiled, s: &Signal, t: usize) -> Result<()> {
    let horizon = c.root_horizon() as usize;
    if t + horizon > s.horizon() {
        return Err(Error::HorizonExceeded {
            horizon,
            signal_horizon: s.horizon(),
            t,
        });
    }
    Ok(())
}

/// Smooth value of every node at every admissible time: `values[i][t]` for
/// `t` in `0..=T - horizon(i)`. Computed children-first (reverse pre-order).
pub(crate) fn eval_values(c: &Compiled, s: &Signal) -> Vec<Vec<f64>> {
    let big_t = s.horizon();
    let mut values: Vec<Vec<f64>> = c
        .nodes
        .iter()
        .map(|n| Vec::with_capacity(big_t + 1 - n.horizon as usize))
        .collect();
    for i in (0..c.nodes.len()).rev() {
        let node = &c.nodes[i];
        let last_t = big_t - node.horizon as usize;
        let mut vals = Vec::with_capacity(last_t + 1);
        for t in 0..=last_t {
            vals.push(node_value(c, &values, i, s, t));
        }
        values[i] = vals;
    }
    values
}

fn node_value(c: &Compiled, values: &[Vec<f64>], i: usize, s: &Signal, t: usize) -> f64 {
    let node = &c.nodes[i];
    match &node.kind {
        CKind::Pred(p) => (p.mu)(s.sample(t)),
        CKind::Not(child) => -values[*child][t],
        CKind::And(cs) => {
            let a: Vec<f64> = cs.iter().map(|&ci| values[ci][t]).collect();
            smooth_op_unchecked(c.min_kind, &a, node.k1)
        }
        CKind::Or(cs) => {
            let a: Vec<f64> = cs.iter().map(|&ci| values[ci][t]).collect();
            smooth_op_unchecked(c.max_kind, &a, node.k2)
        }
        CKind::Eventually(t1, t2, child) => {
            let a = &values[*child][t + *t1 as usize..=t + *t2 as usize];
            smooth_op_unchecked(c.max_kind, a, node.k2)
        }
        CKind::Always(t1, t2, child) => {
            let a = &values[*child][t + *t1 as usize..=t + *t2 as usize];
            smooth_op_unchecked(c.min_kind, a, node.k1)
        }
        CKind::Until(t1, t2, l, r) => {
            let pairs = until_pair_values(c, values, i, t, *t1, *t2, *l, *r);
            smooth_op_unchecked(c.max_kind, &pairs, node.k2)
        }
    }
}

/// The per-`tau` inner values of an until node at time `t`: the smooth min
/// of the left operand at `tau` and the running smooth min of the right
/// operand from the window start through `tau`.
pub(crate) fn until_pair_values(
    c: &Compiled,
    values: &[Vec<f64>],
    i: usize,
    t: usize,
    t1: u32,
    t2: u32,
    l: usize,
    r: usize,
) -> Vec<f64> {
    let node = &c.nodes[i];
    let start = t + t1 as usize;
    let end = t + t2 as usize;
    let mut pairs = Vec::with_capacity(end - start + 1);
    for tau in start..=end {
        let run = smooth_op_unchecked(c.min_kind, &values[r][start..=tau], node.k1);
        let pair = smooth_op_unchecked(c.min_kind, &[values[l][tau], run], node.k1);
        pairs.push(pair);
    }
    pairs
}
