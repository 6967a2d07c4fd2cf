//! Smooth robustness measures for signal temporal logic.
//!
//! The crate evaluates STL formulas over discrete-time signals four ways:
//! exactly (min/max), smoothly (differentiable surrogates), with certified
//! error intervals around the smooth value, and with exact gradients of the
//! smooth value with respect to the signal or the control inputs that
//! generated it. A small synthesis layer runs gradient ascent on top.

pub mod dynamics;
pub mod error;
pub mod error_semantics;
pub mod gradient_engine;
pub mod semantics;
pub mod smooth_ops;
pub mod smooth_semantics;
pub mod stl_ast;
pub mod synthesis;

mod compiled;

pub use dynamics::{
    double_integrator_2d, linear_system, rollout, single_integrator_2d, ControlSequence, System,
};
pub use error::{Error, ParseError, Result};
pub use error_semantics::{
    certify, error_interval, error_interval_signal_free, noise_only_interval,
    termination_threshold, ErrorReport,
};
pub use gradient_engine::{
    finite_diff_grad, grad_wrt_controls, grad_wrt_controls_dense, grad_wrt_signal,
    signal_jacobian, SignalGradient, SignalJacobian,
};
pub use semantics::{robustness, satisfies, Satisfaction, Signal};
pub use smooth_ops::{Interval, OpKind, SoftRangeBound};
pub use smooth_semantics::{classify, smooth_robustness, SmoothConfig, Soundness, Srm};
pub use stl_ast::{parse, Formula, Noise, Predicate, PredicateTable};
