//! Normalised subgradient descent and DCA.
//!
//! Both minimisers consume the same [`DcObjective`]: descent follows
//! `∂J = ∂f - ∂g`, DCA freezes `∂g` at each outer point and descends the
//! convex surrogate `f(θ) - <θ, ∂g(θ_k)>`.

use std::io::Write;
use std::path::Path;

use crate::criteria::DcObjective;
use crate::error::{check_dim, Error, Result};

/// Gradients with norm at or below this are treated as stationary.
pub const STATIONARY_NORM: f64 = 1e-12;

/// Step sizes `α_p`, indexed from the first update.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSizes {
    Constant(f64),
    /// One entry per update; must be at least as long as the update count.
    Explicit(Vec<f64>),
}

impl StepSizes {
    fn validate(&self, updates: usize) -> Result<()> {
        let ok = match self {
            StepSizes::Constant(a) => *a > 0.0 && a.is_finite(),
            StepSizes::Explicit(steps) => {
                steps.len() >= updates && steps.iter().all(|a| *a > 0.0 && a.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid step sizes for {updates} updates")))
        }
    }

    #[inline]
    fn at(&self, p: usize) -> f64 {
        match self {
            StepSizes::Constant(a) => *a,
            StepSizes::Explicit(steps) => steps[p],
        }
    }
}

impl Default for StepSizes {
    fn default() -> Self {
        StepSizes::Constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub num_updates: usize,
    pub step_sizes: StepSizes,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            num_updates: 100,
            step_sizes: StepSizes::default(),
        }
    }
}

impl GdConfig {
    pub fn with_updates(num_updates: usize) -> Self {
        Self {
            num_updates,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_updates == 0 {
            return Err(Error::invalid("num_updates must be at least 1"));
        }
        self.step_sizes.validate(self.num_updates)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcaConfig {
    pub outer_steps: usize,
    pub inner_updates: usize,
    pub inner_step_sizes: StepSizes,
}

impl Default for DcaConfig {
    fn default() -> Self {
        Self {
            outer_steps: 10,
            inner_updates: 10,
            inner_step_sizes: StepSizes::default(),
        }
    }
}

impl DcaConfig {
    pub fn new(outer_steps: usize, inner_updates: usize) -> Self {
        Self {
            outer_steps,
            inner_updates,
            ..Self::default()
        }
    }

    /// Total inner update budget `K * N`.
    pub fn budget(&self) -> usize {
        self.outer_steps * self.inner_updates
    }

    fn validate(&self) -> Result<()> {
        if self.outer_steps == 0 || self.inner_updates == 0 {
            return Err(Error::invalid("outer_steps and inner_updates must be at least 1"));
        }
        self.inner_step_sizes.validate(self.inner_updates)
    }
}

/// Objective values at every outer evaluation point, plus the best and last iterates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizationTrace {
    pub objective_values: Vec<f64>,
    pub best_theta: Vec<f64>,
    pub best_value: f64,
    pub final_theta: Vec<f64>,
    pub final_value: f64,
    pub update_count: usize,
}

impl OptimizationTrace {
    fn start(theta: &[f64], value: f64) -> Self {
        Self {
            objective_values: vec![value],
            best_theta: theta.to_vec(),
            best_value: value,
            final_theta: theta.to_vec(),
            final_value: value,
            update_count: 0,
        }
    }

    fn record(&mut self, theta: &[f64], value: f64) {
        self.objective_values.push(value);
        if value < self.best_value {
            self.best_value = value;
            self.best_theta.clear();
            self.best_theta.extend_from_slice(theta);
        }
        self.final_theta.clear();
        self.final_theta.extend_from_slice(theta);
        self.final_value = value;
    }

    fn fail(self, message: String) -> Error {
        Error::NumericalFailure {
            message,
            trace: Some(Box::new(self)),
        }
    }

    /// Writes `update,objective` rows, one per outer evaluation point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "update,objective")?;
        for (i, v) in self.objective_values.iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf)
            .and_then(|_| buf.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `theta -= step * dir / |dir|`; returns false when `dir` is stationary.
fn normalized_step(theta: &mut [f64], dir: &[f64], step: f64) -> bool {
    let n = norm(dir);
    if n <= STATIONARY_NORM {
        return false;
    }
    let scale = step / n;
    for (t, d) in theta.iter_mut().zip(dir) {
        *t -= scale * d;
    }
    true
}

/// Normalised subgradient descent on `J`, returning the best iterate seen.
pub fn subgradient_descent<O: DcObjective + ?Sized>(
    objective: &O,
    theta0: &[f64],
    cfg: &GdConfig,
) -> Result<(Vec<f64>, OptimizationTrace)> {
    check_dim(objective.dimension(), theta0.len())?;
    cfg.validate()?;

    let mut theta = theta0.to_vec();
    let value = objective.eval_j(&theta);
    let mut trace = OptimizationTrace::start(&theta, value);
    if !value.is_finite() {
        return Err(trace.fail(format!("objective is {value} at the start point")));
    }
    for p in 0..cfg.num_updates {
        let dir = objective.subgrad_j(&theta);
        if !normalized_step(&mut theta, &dir, cfg.step_sizes.at(p)) {
            break;
        }
        trace.update_count += 1;
        let value = objective.eval_j(&theta);
        trace.record(&theta, value);
        if !value.is_finite() {
            return Err(trace.fail(format!("objective is {value} after update {}", p + 1)));
        }
    }
    Ok((trace.best_theta.clone(), trace))
}

/// DCA with normalised-subgradient inner solves.
///
/// Each inner solve is warm-started at `θ_k` and returns the iterate with the
/// lowest surrogate value, `θ_k` included, so `J(θ_k)` never increases.
pub fn dca<O: DcObjective + ?Sized>(
    objective: &O,
    theta0: &[f64],
    cfg: &DcaConfig,
) -> Result<(Vec<f64>, OptimizationTrace)> {
    check_dim(objective.dimension(), theta0.len())?;
    cfg.validate()?;

    let mut theta = theta0.to_vec();
    let value = objective.eval_j(&theta);
    let mut trace = OptimizationTrace::start(&theta, value);
    if !value.is_finite() {
        return Err(trace.fail(format!("objective is {value} at the start point")));
    }
    for k in 0..cfg.outer_steps {
        let linear = objective.subgrad_g(&theta);
        let surrogate = |x: &[f64]| objective.eval_f(x) - dot(x, &linear);

        let mut inner = theta.clone();
        let mut best = theta.clone();
        let mut best_value = surrogate(&theta);
        for p in 0..cfg.inner_updates {
            let mut dir = objective.subgrad_f(&inner);
            for (d, l) in dir.iter_mut().zip(&linear) {
                *d -= l;
            }
            if !normalized_step(&mut inner, &dir, cfg.inner_step_sizes.at(p)) {
                break;
            }
            trace.update_count += 1;
            let v = surrogate(&inner);
            if !v.is_finite() {
                return Err(trace.fail(format!("surrogate is {v} in outer step {k}")));
            }
            if v < best_value {
                best_value = v;
                best.clone_from(&inner);
            }
        }
        theta = best;
        let value = objective.eval_j(&theta);
        trace.record(&theta, value);
        if !value.is_finite() {
            return Err(trace.fail(format!("objective is {value} after outer step {}", k + 1)));
        }
    }
    Ok((trace.best_theta.clone(), trace))
}
