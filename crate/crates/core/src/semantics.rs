//! Discrete-time signals and exact (non-smooth) robustness.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::stl_ast::Formula;

/// A finite discrete-time trace of composite samples. Each sample stacks
/// the output, state and control vectors as `[y_t; x_t; u_t]`, so the
/// sample width is `q = p + n + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Vec<f64>>,
    /// (p, n, m): output, state and control dimensions.
    dims: (usize, usize, usize),
}

impl Signal {
    pub fn new(samples: Vec<Vec<f64>>, dims: (usize, usize, usize)) -> Result<Signal> {
        let q = dims.0 + dims.1 + dims.2;
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (index, s) in samples.iter().enumerate() {
            if s.len() != q {
                return Err(Error::RaggedSignal {
                    index,
                    got: s.len(),
                    expected: q,
                });
            }
        }
        Ok(Signal { samples, dims })
    }

    /// A signal whose samples carry no dimension split: everything counts
    /// as output. Convenient for tests and raw CSV data.
    pub fn flat(samples: Vec<Vec<f64>>) -> Result<Signal> {
        let q = samples.first().map_or(0, Vec::len);
        Signal::new(samples, (q, 0, 0))
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn q(&self) -> usize {
        self.dims.0 + self.dims.1 + self.dims.2
    }

    /// Number of samples, `T + 1`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest valid time index `T`.
    pub fn horizon(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn sample(&self, t: usize) -> &[f64] {
        &self.samples[t]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// Output block `y_t` of the composite sample.
    pub fn output(&self, t: usize) -> &[f64] {
        &self.samples[t][..self.dims.0]
    }

    /// State block `x_t`.
    pub fn state(&self, t: usize) -> &[f64] {
        let (p, n, _) = self.dims;
        &self.samples[t][p..p + n]
    }

    /// Control block `u_t`.
    pub fn control(&self, t: usize) -> &[f64] {
        let (p, n, _) = self.dims;
        &self.samples[t][p + n..]
    }

    /// Writes `t,s0,...,s{q-1}` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for i in 0..self.q() {
            write!(w, ",s{i}")?;
        }
        writeln!(w)?;
        for (t, s) in self.samples.iter().enumerate() {
            write!(w, "{t}")?;
            for v in s {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads the CSV form back. The header fixes `q`; the dimension split
    /// is the caller's to assert (defaults to all-output when `None`).
    pub fn read_csv<R: BufRead>(r: R, dims: Option<(usize, usize, usize)>) -> Result<Signal> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::EmptyInput)??;
        let q = header.split(',').count().saturating_sub(1);
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let _t = fields.next();
            let row: Vec<f64> = fields
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidProblem(format!("csv row {i}: {e}")))
                })
                .collect::<Result<_>>()?;
            samples.push(row);
        }
        let dims = dims.unwrap_or((q, 0, 0));
        if dims.0 + dims.1 + dims.2 != q {
            return Err(Error::DimensionMismatch(format!(
                "csv has q = {q}, dims sum to {}",
                dims.0 + dims.1 + dims.2
            )));
        }
        Signal::new(samples, dims)
    }

    pub fn load_csv(path: impl AsRef<Path>, dims: Option<(usize, usize, usize)>) -> Result<Signal> {
        Signal::read_csv(std::io::BufReader::new(std::fs::File::open(path)?), dims)
    }
}

/// Three-valued verdict from the sign of the robustness degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Satisfaction {
    Sat,
    Unsat,
    Boundary,
}

fn check_horizon(f: &Formula, s: &Signal, t: usize) -> Result<()> {
    let horizon = f.horizon() as usize;
    if t + horizon > s.horizon() {
        return Err(Error::HorizonExceeded {
            horizon,
            signal_horizon: s.horizon(),
            t,
        });
    }
    Ok(())
}

/// Robustness degree of `f` over the suffix of `s` starting at `t`.
///
/// Conjunction takes the minimum over children, disjunction the maximum;
/// `G`/`F` fold min/max over the shifted window. Until takes, over each
/// candidate time `tau` in the window, the minimum of the left operand at
/// `tau` and the right operand over every time from the window start
/// through `tau`, then maximizes over `tau`.
pub fn robustness(f: &Formula, s: &Signal, t: usize) -> Result<f64> {
    check_horizon(f, s, t)?;
    Ok(rob(f, s, t))
}

pub(crate) fn rob(f: &Formula, s: &Signal, t: usize) -> f64 {
    match f {
        Formula::Pred(p) => (p.mu)(s.sample(t)),
        Formula::Not(c) => -rob(c, s, t),
        Formula::And(cs) => cs
            .iter()
            .map(|c| rob(c, s, t))
            .fold(f64::INFINITY, f64::min),
        Formula::Or(cs) => cs
            .iter()
            .map(|c| rob(c, s, t))
            .fold(f64::NEG_INFINITY, f64::max),
        Formula::Eventually(t1, t2, c) => (t + *t1 as usize..=t + *t2 as usize)
            .map(|tau| rob(c, s, tau))
            .fold(f64::NEG_INFINITY, f64::max),
        Formula::Always(t1, t2, c) => (t + *t1 as usize..=t + *t2 as usize)
            .map(|tau| rob(c, s, tau))
            .fold(f64::INFINITY, f64::min),
        Formula::Until(t1, t2, l, r) => {
            let start = t + *t1 as usize;
            let end = t + *t2 as usize;
            let mut best = f64::NEG_INFINITY;
            let mut right_running = f64::INFINITY;
            for tau in start..=end {
                right_running = right_running.min(rob(r, s, tau));
                best = best.max(rob(l, s, tau).min(right_running));
            }
            best
        }
    }
}

pub fn satisfies(f: &Formula, s: &Signal, t: usize) -> Result<Satisfaction> {
    let rho = robustness(f, s, t)?;
    Ok(if rho > 0.0 {
        Satisfaction::Sat
    } else if rho < 0.0 {
        Satisfaction::Unsat
    } else {
        Satisfaction::Boundary
    })
}
