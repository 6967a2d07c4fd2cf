//! Benchmark fixtures: planar reach-avoid problems on the unit-step
//! single integrator over a [0,10] x [0,10] workspace, horizon 20,
//! starting at (1, 1).
//!
//! Rectangle coordinates are fixture choices, documented here:
//!   SCP1: target [7,9]x[7,9], obstacle [2,4]x[5,7].
//!   SCP2: same target, obstacles [4,6]x[0,3.5] and [4,6]x[6.5,10]
//!         (a passage between them).
//!   SCP3: targets [4,6]x[0,2] in [0,6], [8,10]x[4,6] in [6,12],
//!         [4,6]x[8,10] in [14,20]; obstacles [2,3.5]x[4,6], [2,4]x[7,9].
//!   SCP4: SCP3 with the third target window widened to [12,20].
//!
//! Every fixture conjoins obstacle avoidance over the whole horizon and
//! per-coordinate control bounds -1 <= u <= 1.

use crate::dynamics::single_integrator_2d;
use crate::stl_ast::{Formula, Predicate, PredicateTable};
use crate::synthesis::SynthesisProblem;

const Q: usize = 6; // (y, x, u) with p = n = m = 2
const T: usize = 20;
const X0: [f64; 2] = [1.0, 1.0];

struct Builder {
    table: PredicateTable,
    noise: Option<(f64, f64)>,
}

impl Builder {
    fn pred(&mut self, name: String, c: Vec<f64>, b: f64) -> Formula {
        let mut p = Predicate::affine(name, c, b);
        if let Some((lo, hi)) = self.noise {
            p = p.with_noise(lo, hi);
        }
        Formula::Pred(self.table.insert(p))
    }

    fn axis(ch: usize, sign: f64) -> Vec<f64> {
        let mut c = vec![0.0; Q];
        c[ch] = sign;
        c
    }

    /// Conjunction: output inside the rectangle.
    fn target(&mut self, name: &str, (x_lo, x_hi): (f64, f64), (y_lo, y_hi): (f64, f64)) -> Formula {
        Formula::and(vec![
            self.pred(format!("{name}_l"), Self::axis(0, 1.0), -x_lo),
            self.pred(format!("{name}_r"), Self::axis(0, -1.0), x_hi),
            self.pred(format!("{name}_b"), Self::axis(1, 1.0), -y_lo),
            self.pred(format!("{name}_t"), Self::axis(1, -1.0), y_hi),
        ])
    }

    /// Disjunction of outward half-planes: output outside the rectangle.
    fn obstacle(&mut self, name: &str, (x_lo, x_hi): (f64, f64), (y_lo, y_hi): (f64, f64)) -> Formula {
        Formula::or(vec![
            self.pred(format!("{name}_l"), Self::axis(0, -1.0), x_lo),
            self.pred(format!("{name}_r"), Self::axis(0, 1.0), -x_hi),
            self.pred(format!("{name}_b"), Self::axis(1, -1.0), y_lo),
            self.pred(format!("{name}_t"), Self::axis(1, 1.0), -y_hi),
        ])
    }

    /// -1 <= u <= 1 per control coordinate (channels 4 and 5).
    fn control_bounds(&mut self) -> Formula {
        Formula::and(vec![
            self.pred("u0_min".into(), Self::axis(4, 1.0), 1.0),
            self.pred("u0_max".into(), Self::axis(4, -1.0), 1.0),
            self.pred("u1_min".into(), Self::axis(5, 1.0), 1.0),
            self.pred("u1_max".into(), Self::axis(5, -1.0), 1.0),
        ])
    }

    fn avoid_always(&mut self, obstacles: Vec<Formula>) -> Formula {
        let body = if obstacles.len() == 1 {
            obstacles.into_iter().next().unwrap()
        } else {
            Formula::and(obstacles)
        };
        Formula::always(0, T as u32, body)
    }
}

/// Fixture with ±`noise` on every predicate reading, for studying noisy
/// error bounds. `None` builds the noiseless fixture.
pub fn build_scp_with_noise(id: u8, noise: Option<(f64, f64)>) -> SynthesisProblem {
    let mut b = Builder { table: PredicateTable::new(), noise };
    let phi_u = Formula::always(0, T as u32, b.control_bounds());
    let formula = match id {
        1 => {
            let obs = b.obstacle("obs1", (2.0, 4.0), (5.0, 7.0));
            let tar = b.target("tar1", (7.0, 9.0), (7.0, 9.0));
            Formula::and(vec![b.avoid_always(vec![obs]), phi_u, Formula::eventually(0, 20, tar)])
        }
        2 => {
            let obs1 = b.obstacle("obs1", (4.0, 6.0), (0.0, 3.5));
            let obs2 = b.obstacle("obs2", (4.0, 6.0), (6.5, 10.0));
            let tar = b.target("tar1", (7.0, 9.0), (7.0, 9.0));
            Formula::and(vec![
                b.avoid_always(vec![obs1, obs2]),
                phi_u,
                Formula::eventually(0, 20, tar),
            ])
        }
        3 | 4 => {
            let obs1 = b.obstacle("obs1", (2.0, 3.5), (4.0, 6.0));
            let obs2 = b.obstacle("obs2", (2.0, 4.0), (7.0, 9.0));
            let tar1 = b.target("tar1", (4.0, 6.0), (0.0, 2.0));
            let tar2 = b.target("tar2", (8.0, 10.0), (4.0, 6.0));
            let tar3 = b.target("tar3", (4.0, 6.0), (8.0, 10.0));
            let third_start = if id == 3 { 14 } else { 12 };
            Formula::and(vec![
                b.avoid_always(vec![obs1, obs2]),
                phi_u,
                Formula::eventually(0, 6, tar1),
                Formula::eventually(6, 12, tar2),
                Formula::eventually(third_start, 20, tar3),
            ])
        }
        other => panic!("no SCP fixture with id {other}"),
    };
    SynthesisProblem {
        system: single_integrator_2d(1.0),
        x0: X0.to_vec(),
        horizon: T,
        formula,
        predicates: b.table,
        control_penalty: 0.01,
    }
}

/// Noiseless benchmark fixture, ids 1 through 4.
pub fn build_scp(id: u8) -> SynthesisProblem {
    build_scp_with_noise(id, None)
}

/// All predicate values any fixture operator can see stay within the
/// workspace-derived spread; a safe range bound for signal-free error
/// intervals on these fixtures.
pub const SCP_RANGE_BOUND: f64 = 22.0;
