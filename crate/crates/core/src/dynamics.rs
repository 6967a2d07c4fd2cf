//! Discrete-time controlled systems and rollout to composite signals.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::semantics::Signal;

pub type ControlSequence = Vec<Vec<f64>>;

type VecFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;

/// `x_{t+1} = f(x_t, u_t)`, `y_t = g(x_t, u_t)` with Jacobian evaluators
/// for the sensitivity recursions. Dimensions: state n, control m,
/// output p.
#[derive(Clone)]
pub struct System {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub f: VecFn,
    pub g: VecFn,
    /// n x n
    pub jac_f_x: JacFn,
    /// n x m
    pub jac_f_u: JacFn,
    /// p x n
    pub jac_g_x: JacFn,
    /// p x m
    pub jac_g_u: JacFn,
}

impl std::fmt::Debug for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "System(n={}, m={}, p={})", self.n, self.m, self.p)
    }
}

impl System {
    /// Composite sample width p + n + m.
    pub fn q(&self) -> usize {
        self.p + self.n + self.m
    }
}

/// Simulates the system under the control sequence and stacks
/// `[y_t; x_t; u_t]` samples. The signal has one sample per control, so a
/// sequence of length T + 1 yields time indices 0..=T.
pub fn rollout(sys: &System, u: &ControlSequence, x0: &[f64]) -> Result<Signal> {
    if x0.len() != sys.n {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, state dimension is {}",
            x0.len(),
            sys.n
        )));
    }
    if u.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (t, ut) in u.iter().enumerate() {
        if ut.len() != sys.m {
            return Err(Error::DimensionMismatch(format!(
                "u_{t} has length {}, control dimension is {}",
                ut.len(),
                sys.m
            )));
        }
    }
    let mut x = x0.to_vec();
    let mut samples = Vec::with_capacity(u.len());
    for (t, ut) in u.iter().enumerate() {
        let y = (sys.g)(&x, ut);
        debug_assert_eq!(y.len(), sys.p);
        let mut sample = Vec::with_capacity(sys.q());
        sample.extend_from_slice(&y);
        sample.extend_from_slice(&x);
        sample.extend_from_slice(ut);
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("rollout sample at t={t}")));
        }
        samples.push(sample);
        x = (sys.f)(&x, ut);
        debug_assert_eq!(x.len(), sys.n);
    }
    Signal::new(samples, (sys.p, sys.n, sys.m))
}

/// Velocity-controlled planar point: `x_{t+1} = x_t + dt u_t`, `y = x`.
pub fn single_integrator_2d(dt: f64) -> System {
    assert!(dt > 0.0, "dt must be positive");
    let eye = DMatrix::identity(2, 2);
    let dt_eye = &eye * dt;
    let zero = DMatrix::zeros(2, 2);
    System {
        n: 2,
        m: 2,
        p: 2,
        f: Arc::new(move |x, u| vec![x[0] + dt * u[0], x[1] + dt * u[1]]),
        g: Arc::new(|x, _| x.to_vec()),
        jac_f_x: {
            let eye = eye.clone();
            Arc::new(move |_, _| eye.clone())
        },
        jac_f_u: Arc::new(move |_, _| dt_eye.clone()),
        jac_g_x: Arc::new(move |_, _| eye.clone()),
        jac_g_u: Arc::new(move |_, _| zero.clone()),
    }
}

/// Acceleration-controlled planar point: state (position, velocity),
/// output is the position.
pub fn double_integrator_2d(dt: f64) -> System {
    assert!(dt > 0.0, "dt must be positive");
    let mut a = DMatrix::identity(4, 4);
    a[(0, 2)] = dt;
    a[(1, 3)] = dt;
    let mut b = DMatrix::zeros(4, 2);
    b[(2, 0)] = dt;
    b[(3, 1)] = dt;
    let mut c = DMatrix::zeros(2, 4);
    c[(0, 0)] = 1.0;
    c[(1, 1)] = 1.0;
    linear_system(a, b, c, DMatrix::zeros(2, 2))
}

/// `x_{t+1} = A x + B u`, `y = C x + D u`.
pub fn linear_system(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> System {
    let n = a.nrows();
    let m = b.ncols();
    let p = c.nrows();
    assert_eq!(a.ncols(), n, "A must be square");
    assert_eq!(b.nrows(), n, "B rows must match state dimension");
    assert_eq!(c.ncols(), n, "C columns must match state dimension");
    assert_eq!((d.nrows(), d.ncols()), (p, m), "D must be p x m");
    let apply = |mat: &DMatrix<f64>, v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; mat.nrows()];
        for i in 0..mat.nrows() {
            out[i] = (0..mat.ncols()).map(|j| mat[(i, j)] * v[j]).sum();
        }
        out
    };
    System {
        n,
        m,
        p,
        f: {
            let (a, b) = (a.clone(), b.clone());
            Arc::new(move |x, u| {
                apply(&a, x)
                    .iter()
                    .zip(apply(&b, u))
                    .map(|(ax, bu)| ax + bu)
                    .collect()
            })
        },
        g: {
            let (c, d) = (c.clone(), d.clone());
            Arc::new(move |x, u| {
                apply(&c, x)
                    .iter()
                    .zip(apply(&d, u))
                    .map(|(cx, du)| cx + du)
                    .collect()
            })
        },
        jac_f_x: Arc::new(move |_, _| a.clone()),
        jac_f_u: Arc::new(move |_, _| b.clone()),
        jac_g_x: Arc::new(move |_, _| c.clone()),
        jac_g_u: Arc::new(move |_, _| d.clone()),
    }
}
