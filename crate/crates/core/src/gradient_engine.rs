//! Exact gradients of smooth robustness: with respect to the signal
//! (reverse sweep over the formula tree) and with respect to the control
//! sequence (adjoint sweep through the dynamics, with a dense
//! Jacobian-product path kept for cross-checking).

use nalgebra::DMatrix;

use crate::compiled::{check_horizon, compile, eval_values, until_pair_values, CKind, Compiled};
use crate::dynamics::{rollout, ControlSequence, System};
use crate::error::{Error, Result};
use crate::semantics::Signal;
use crate::smooth_ops::smooth_op_grad_unchecked;
use crate::smooth_semantics::SmoothConfig;
use crate::stl_ast::Formula;

/// Row gradient of smooth robustness with respect to every signal entry,
/// blocked per time step: entry `t * q + j` is the sensitivity to channel
/// `j` of sample `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGradient {
    pub data: Vec<f64>,
    pub q: usize,
}

impl SignalGradient {
    pub fn block(&self, t: usize) -> &[f64] {
        &self.data[t * self.q..(t + 1) * self.q]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Gradient of the smooth robustness of `f` over the suffix of `s`
/// starting at `t`, with respect to all `(T + 1) * q` signal entries.
/// Entries before `t * q` are exactly zero.
pub fn grad_wrt_signal(
    f: &Formula,
    s: &Signal,
    cfg: &SmoothConfig,
    t: usize,
) -> Result<SignalGradient> {
    let c = compile(f, cfg)?;
    check_horizon(&c, s, t)?;
    let values = eval_values(&c, s);
    Ok(backward(&c, s, &values, t))
}

/// Reverse sweep. Nodes are in pre-order, so iterating forward sees every
/// node after its unique parent; each node's adjoint is complete by the
/// time it distributes to its children.
fn backward(c: &Compiled, s: &Signal, values: &[Vec<f64>], t0: usize) -> SignalGradient {
    let q = s.q();
    let mut result = vec![0.0; s.len() * q];
    let mut adj: Vec<Vec<f64>> = values.iter().map(|v| vec![0.0; v.len()]).collect();
    adj[0][t0] = 1.0;
    for i in 0..c.nodes.len() {
        let node = &c.nodes[i];
        for t in 0..adj[i].len() {
            let a = adj[i][t];
            if a == 0.0 {
                continue;
            }
            match &node.kind {
                CKind::Pred(p) => {
                    let g = (p.mu_grad)(s.sample(t));
                    for (j, gj) in g.iter().take(q).enumerate() {
                        result[t * q + j] += a * gj;
                    }
                }
                CKind::Not(child) => adj[*child][t] -= a,
                CKind::And(cs) | CKind::Or(cs) => {
                    let is_and = matches!(node.kind, CKind::And(_));
                    let (kind, k) = if is_and {
                        (c.min_kind, node.k1)
                    } else {
                        (c.max_kind, node.k2)
                    };
                    let vals: Vec<f64> = cs.iter().map(|&ci| values[ci][t]).collect();
                    let w = smooth_op_grad_unchecked(kind, &vals, k);
                    for (&ci, wi) in cs.iter().zip(&w) {
                        adj[ci][t] += a * wi;
                    }
                }
                CKind::Eventually(t1, t2, child) | CKind::Always(t1, t2, child) => {
                    let is_always = matches!(node.kind, CKind::Always(..));
                    let (kind, k) = if is_always {
                        (c.min_kind, node.k1)
                    } else {
                        (c.max_kind, node.k2)
                    };
                    let start = t + *t1 as usize;
                    let end = t + *t2 as usize;
                    let w = smooth_op_grad_unchecked(kind, &values[*child][start..=end], k);
                    for (tau, wi) in (start..=end).zip(&w) {
                        adj[*child][tau] += a * wi;
                    }
                }
                CKind::Until(t1, t2, l, r) => {
                    let start = t + *t1 as usize;
                    let end = t + *t2 as usize;
                    let pairs = until_pair_values(c, values, i, t, *t1, *t2, *l, *r);
                    let w = smooth_op_grad_unchecked(c.max_kind, &pairs, node.k2);
                    for (tau, w_tau) in (start..=end).zip(&w) {
                        let run_slice = &values[*r][start..=tau];
                        let run = crate::smooth_ops::smooth_op_unchecked(
                            c.min_kind, run_slice, node.k1,
                        );
                        let pg = smooth_op_grad_unchecked(
                            c.min_kind,
                            &[values[*l][tau], run],
                            node.k1,
                        );
                        adj[*l][tau] += a * w_tau * pg[0];
                        let z = smooth_op_grad_unchecked(c.min_kind, run_slice, node.k1);
                        for (delta, zi) in (start..=tau).zip(&z) {
                            adj[*r][delta] += a * w_tau * pg[1] * zi;
                        }
                    }
                }
            }
        }
    }
    SignalGradient { data: result, q }
}

/// Block sensitivity of the composite signal to the control sequence.
/// Block `(t, tau)` (rows `t q .. (t+1) q`, columns `tau m .. (tau+1) m`)
/// stacks the output, state and control sensitivities; the control part is
/// the identity exactly when `t = tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalJacobian {
    pub matrix: DMatrix<f64>,
    pub q: usize,
    pub m: usize,
}

impl SignalJacobian {
    pub fn block(&self, t: usize, tau: usize) -> DMatrix<f64> {
        self.matrix
            .view((t * self.q, tau * self.m), (self.q, self.m))
            .into()
    }
}

struct Linearization {
    a: Vec<DMatrix<f64>>, // jac_f_x at (x_t, u_t)
    b: Vec<DMatrix<f64>>, // jac_f_u
    c: Vec<DMatrix<f64>>, // jac_g_x
    d: Vec<DMatrix<f64>>, // jac_g_u
}

fn linearize(sys: &System, u: &ControlSequence, x0: &[f64]) -> Linearization {
    let mut x = x0.to_vec();
    let mut lin = Linearization {
        a: Vec::with_capacity(u.len()),
        b: Vec::with_capacity(u.len()),
        c: Vec::with_capacity(u.len()),
        d: Vec::with_capacity(u.len()),
    };
    for ut in u {
        lin.a.push((sys.jac_f_x)(&x, ut));
        lin.b.push((sys.jac_f_u)(&x, ut));
        lin.c.push((sys.jac_g_x)(&x, ut));
        lin.d.push((sys.jac_g_u)(&x, ut));
        x = (sys.f)(&x, ut);
    }
    lin
}

/// Dense `(T+1)q x (T+1)m` sensitivity, built by the forward recursion
/// `S_{t+1} = jac_f_x|_t S_t + [t = tau] jac_f_u|_t` per source time `tau`.
pub fn signal_jacobian(sys: &System, u: &ControlSequence, x0: &[f64]) -> Result<SignalJacobian> {
    // validates dimensions as a side effect
    rollout(sys, u, x0)?;
    let lin = linearize(sys, u, x0);
    let (n, m, p) = (sys.n, sys.m, sys.p);
    let q = sys.q();
    let steps = u.len();
    let mut matrix = DMatrix::zeros(steps * q, steps * m);
    for tau in 0..steps {
        // u-block identity at t = tau
        for j in 0..m {
            matrix[(tau * q + p + n + j, tau * m + j)] = 1.0;
        }
        // y-block at t = tau is the feedthrough
        for i in 0..p {
            for j in 0..m {
                matrix[(tau * q + i, tau * m + j)] = lin.d[tau][(i, j)];
            }
        }
        // forward sensitivity of later states and outputs
        let mut s_mat = lin.b[tau].clone(); // dx_{tau+1}/du_tau
        for t in tau + 1..steps {
            let y_sens = &lin.c[t] * &s_mat;
            for i in 0..p {
                for j in 0..m {
                    matrix[(t * q + i, tau * m + j)] = y_sens[(i, j)];
                }
            }
            for i in 0..n {
                for j in 0..m {
                    matrix[(t * q + p + i, tau * m + j)] = s_mat[(i, j)];
                }
            }
            s_mat = &lin.a[t] * s_mat;
        }
    }
    Ok(SignalJacobian { matrix, q, m })
}

fn row_times(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    debug_assert_eq!(v.len(), m.nrows());
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| v[i] * m[(i, j)]).sum())
        .collect()
}

fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Gradient of `u -> smooth_robustness(f, rollout(sys, u, x0), cfg, 0)`
/// as a flat row of length `(T+1) m`, via a backward adjoint pass through
/// the dynamics (the signal Jacobian is never materialized).
pub fn grad_wrt_controls(
    f: &Formula,
    sys: &System,
    u: &ControlSequence,
    x0: &[f64],
    cfg: &SmoothConfig,
) -> Result<Vec<f64>> {
    let s = rollout(sys, u, x0)?;
    let gs = grad_wrt_signal(f, &s, cfg, 0)?;
    let lin = linearize(sys, u, x0);
    let (n, m, p) = (sys.n, sys.m, sys.p);
    let steps = u.len();
    let mut grad = vec![0.0; steps * m];
    let mut lambda = vec![0.0; n]; // row adjoint, lambda_{t+1}
    for t in (0..steps).rev() {
        let block = gs.block(t);
        let (gy, rest) = block.split_at(p);
        let (gx, gu) = rest.split_at(n);
        // du: direct + feedthrough + propagated state adjoint
        let mut du = gu.to_vec();
        add_assign(&mut du, &row_times(gy, &lin.d[t]));
        add_assign(&mut du, &row_times(&lambda, &lin.b[t]));
        grad[t * m..(t + 1) * m].copy_from_slice(&du);
        // lambda_t = gx + gy jac_g_x + lambda_{t+1} jac_f_x
        let mut new_lambda = gx.to_vec();
        add_assign(&mut new_lambda, &row_times(gy, &lin.c[t]));
        add_assign(&mut new_lambda, &row_times(&lambda, &lin.a[t]));
        lambda = new_lambda;
    }
    Ok(grad)
}

/// Same product computed densely: grad_wrt_signal times signal_jacobian.
/// Quadratic in the horizon; kept as an independent cross-check.
pub fn grad_wrt_controls_dense(
    f: &Formula,
    sys: &System,
    u: &ControlSequence,
    x0: &[f64],
    cfg: &SmoothConfig,
) -> Result<Vec<f64>> {
    let s = rollout(sys, u, x0)?;
    let gs = grad_wrt_signal(f, &s, cfg, 0)?;
    let jac = signal_jacobian(sys, u, x0)?;
    Ok(row_times(&gs.data, &jac.matrix))
}

/// Central finite differences of `objective` around `point`.
pub fn finite_diff_grad(
    objective: &dyn Fn(&[f64]) -> Result<f64>,
    point: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::NonFinite(format!("finite difference step {step}")));
    }
    let mut grad = Vec::with_capacity(point.len());
    let mut work = point.to_vec();
    for j in 0..point.len() {
        work[j] = point[j] + step;
        let fp = objective(&work)?;
        work[j] = point[j] - step;
        let fm = objective(&work)?;
        work[j] = point[j];
        grad.push((fp - fm) / (2.0 * step));
    }
    Ok(grad)
}
