//! Frank-Wolfe maximization over the unit simplex and the capped simplex.
//!
//! Each iteration linearizes the objective, moves toward the best vertex of
//! the feasible set and picks the step with an exact line search. Starting
//! from a vertex, after `l` iterations the iterate has at most `l + 1`
//! nonzero coordinates.

use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{InferenceReport, SolverConfig, Start, TopicProportion};
use crate::objective::{Domain, Objective, Segment};

/// Weights below this are dropped from full-simplex iterates.
pub const PRUNE_BELOW: f64 = 1e-15;

/// Largest step allowed toward a boundary point when the objective is only
/// defined on the interior.
pub const INTERIOR_STEP_LIMIT: f64 = 1.0 - 1e-9;

/// Tolerance on the capped region's total mass.
const CAP_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub nnz: usize,
    /// Vertex moved toward; for the start record, the starting vertex if any.
    pub vertex: Option<usize>,
    pub alpha: f64,
}

/// Per-iteration history of a solve. Record 0 is the starting point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub const CSV_HEADER: &'static str = "iteration,objective,nnz,vertex,alpha";

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let vertex = r.vertex.map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", r.iteration, r.objective, r.nnz, vertex, r.alpha)?;
        }
        Ok(())
    }
}

/// Maximizes a concave segment function over `[0, 1]`.
pub fn line_search(segment: &dyn Segment, cfg: &SolverConfig) -> Result<f64> {
    line_search_on(segment, 1.0, cfg)
}

/// Maximizes over `[0, hi]`.
///
/// With a derivative available this bisects on its sign; otherwise it falls
/// back to golden-section search on the values.
pub fn line_search_on(segment: &dyn Segment, hi: f64, cfg: &SolverConfig) -> Result<f64> {
    match segment.derivative(0.0) {
        Some(d0) => bisect_slope(segment, d0, hi, cfg),
        None => golden_section(segment, hi, cfg),
    }
}

fn nan_check(x: f64, what: &str, at: f64) -> Result<f64> {
    if x.is_nan() {
        Err(Error::NumericFailure(format!("line search {what} is NaN at alpha = {at}")))
    } else {
        Ok(x)
    }
}

fn bisect_slope(segment: &dyn Segment, d0: f64, hi: f64, cfg: &SolverConfig) -> Result<f64> {
    let slope = |a: f64| -> Result<f64> {
        let d = segment.derivative(a).unwrap_or(f64::NAN);
        nan_check(d, "derivative", a)
    };
    if nan_check(d0, "derivative", 0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = hi;
    if slope(hi)? >= 0.0 {
        return Ok(hi);
    }
    let mut lo = 0.0;
    for _ in 0..cfg.line_search_max_steps {
        if hi - lo <= cfg.line_search_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let d = slope(mid)?;
        if d > 0.0 {
            lo = mid;
        } else if d < 0.0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden_section(segment: &dyn Segment, hi: f64, cfg: &SolverConfig) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let value = |a: f64| nan_check(segment.value(a), "value", a);
    let (mut a, mut b) = (0.0, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = value(x1)?;
    let mut f2 = value(x2)?;
    for _ in 0..cfg.line_search_max_steps {
        if b - a <= cfg.line_search_tol {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = value(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = value(x2)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, value(mid)?);
    for end in [0.0, hi] {
        let v = value(end)?;
        if v >= best.1 {
            best = (end, v);
        }
    }
    Ok(best.0)
}

/// Solves `max c^T s` over `{s in simplex : s_k <= caps_k}` greedily: fill
/// coordinates in order of decreasing `c` (lowest index first on ties).
pub fn capped_linear_oracle(c: &[f64], caps: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].total_cmp(&c[a]));
    let mut s = vec![0.0; c.len()];
    let mut remaining = 1.0;
    for k in order {
        if remaining <= 0.0 {
            break;
        }
        let take = caps[k].min(remaining);
        s[k] = take;
        remaining -= take;
    }
    s
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

enum Oracle<'a> {
    Vertex,
    Capped(&'a [f64]),
}

struct Iterate {
    theta: Vec<f64>,
    support: Vec<bool>,
    nnz: usize,
}

impl Iterate {
    fn new(theta: Vec<f64>) -> Self {
        let support: Vec<bool> = theta.iter().map(|&t| t > 0.0).collect();
        let nnz = support.iter().filter(|&&s| s).count();
        Self { theta, support, nnz }
    }

    fn step_to_vertex(&mut self, vertex: usize, alpha: f64) {
        for (t, _) in self.theta.iter_mut().zip(&self.support).filter(|(_, &s)| s) {
            *t *= 1.0 - alpha;
        }
        self.theta[vertex] += alpha;
        if !self.support[vertex] && self.theta[vertex] > 0.0 {
            self.support[vertex] = true;
            self.nnz += 1;
        }
    }

    fn step_to_point(&mut self, target: &[f64], alpha: f64) {
        for ((t, s), &x) in self.theta.iter_mut().zip(self.support.iter_mut()).zip(target) {
            *t = (1.0 - alpha) * *t + alpha * x;
            *s = *t > 0.0;
        }
        self.nnz = self.support.iter().filter(|&&s| s).count();
    }

    fn prune(&mut self) {
        let mut pruned = false;
        for (t, s) in self.theta.iter_mut().zip(self.support.iter_mut()) {
            if *s && *t < PRUNE_BELOW {
                *t = 0.0;
                *s = false;
                self.nnz -= 1;
                pruned = true;
            }
        }
        if pruned {
            let sum: f64 = self.theta.iter().sum();
            for t in &mut self.theta {
                *t /= sum;
            }
        }
    }
}

fn relative_change(old: f64, new: f64) -> f64 {
    if old.abs() < 1e-12 {
        (new - old).abs()
    } else {
        (new - old).abs() / old.abs()
    }
}

fn finite_value<O: Objective + ?Sized>(f: &O, theta: &[f64]) -> Result<f64> {
    let v = f.value(theta)?;
    if v.is_nan() {
        return Err(Error::NumericFailure("objective evaluated to NaN".into()));
    }
    Ok(v)
}

/// Maximizes `f` over the unit simplex with the Frank-Wolfe algorithm.
///
/// Objectives defined only on the interior must use [`Start::Barycenter`].
pub fn fw_solve<O: Objective + ?Sized>(f: &O, cfg: &SolverConfig) -> Result<(InferenceReport, Trace)> {
    cfg.validate()?;
    let k = f.num_topics();
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let started = Instant::now();
    let (theta, vertex) = match cfg.start {
        Start::BestVertex => {
            if f.domain() == Domain::InteriorOnly {
                return Err(Error::InvalidConfig(
                    "objective is undefined on the simplex boundary; use the barycenter start".into(),
                ));
            }
            let mut e = vec![0.0; k];
            let mut values = Vec::with_capacity(k);
            for i in 0..k {
                e[i] = 1.0;
                values.push(finite_value(f, &e)?);
                e[i] = 0.0;
            }
            let best = argmax_lowest(&values);
            e[best] = 1.0;
            (e, Some(best))
        }
        Start::Barycenter => (vec![1.0 / k as f64; k], None),
    };
    run(f, cfg, Oracle::Vertex, theta, vertex, started)
}

/// Maximizes `f` over `{theta in simplex : theta_k <= caps_k}`.
///
/// The start is always the interior point `caps / sum(caps)`.
pub fn fw_solve_capped<O: Objective + ?Sized>(
    f: &O,
    caps: &[f64],
    cfg: &SolverConfig,
) -> Result<(InferenceReport, Trace)> {
    cfg.validate()?;
    let k = f.num_topics();
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if caps.len() != k {
        return Err(Error::InvalidArgument(format!("{} caps given for K={k}", caps.len())));
    }
    if let Some(bad) = caps.iter().find(|&&u| !(u > 0.0 && u <= 1.0)) {
        return Err(Error::InvalidArgument(format!("cap {bad} outside (0, 1]")));
    }
    let cap_sum: f64 = caps.iter().sum();
    if cap_sum < 1.0 - CAP_SUM_TOL {
        return Err(Error::InfeasibleRegion { cap_sum });
    }
    let started = Instant::now();
    let theta = caps.iter().map(|u| u / cap_sum).collect();
    run(f, cfg, Oracle::Capped(caps), theta, None, started)
}

fn run<O: Objective + ?Sized>(
    f: &O,
    cfg: &SolverConfig,
    oracle: Oracle<'_>,
    theta: Vec<f64>,
    start_vertex: Option<usize>,
    started: Instant,
) -> Result<(InferenceReport, Trace)> {
    let k = theta.len();
    let interior = f.domain() == Domain::InteriorOnly;
    let hi = if interior { INTERIOR_STEP_LIMIT } else { 1.0 };
    let mut it = Iterate::new(theta);
    let mut objective = finite_value(f, &it.theta)?;
    let mut trace = Trace {
        records: vec![TraceRecord {
            iteration: 0,
            objective,
            nnz: it.nnz,
            vertex: start_vertex,
            alpha: 0.0,
        }],
    };
    let mut grad = vec![0.0; k];
    let mut target = vec![0.0; k];
    let mut iterations = 0;
    let budget = cfg.iteration_budget();

    while iterations < budget {
        f.gradient(&it.theta, &mut grad)?;
        if grad.iter().any(|g| g.is_nan()) {
            return Err(Error::NumericFailure(format!("gradient is NaN at iteration {iterations}")));
        }
        let vertex = match oracle {
            Oracle::Vertex => {
                let v = argmax_lowest(&grad);
                target.fill(0.0);
                target[v] = 1.0;
                v
            }
            Oracle::Capped(caps) => {
                target = capped_linear_oracle(&grad, caps);
                argmax_lowest(&grad)
            }
        };
        let alpha = {
            let segment = f.segment(&it.theta, &target)?;
            line_search_on(&*segment, hi, cfg)?
        };

        let previous = it.theta.clone();
        let (prev_support, prev_nnz) = (it.support.clone(), it.nnz);
        match oracle {
            Oracle::Vertex => it.step_to_vertex(vertex, alpha),
            Oracle::Capped(_) => it.step_to_point(&target, alpha),
        }
        if !interior {
            it.prune();
        }
        let mut next = finite_value(f, &it.theta)?;
        let mut taken = alpha;
        if next < objective {
            // Rounding made the step a loss; stay put.
            it.theta = previous;
            it.support = prev_support;
            it.nnz = prev_nnz;
            next = objective;
            taken = 0.0;
        }
        iterations += 1;
        trace.records.push(TraceRecord {
            iteration: iterations,
            objective: next,
            nnz: it.nnz,
            vertex: Some(vertex),
            alpha: taken,
        });
        let change = relative_change(objective, next);
        objective = next;
        if change < cfg.rel_tol {
            break;
        }
    }

    let theta = TopicProportion::from_dense(&it.theta)?;
    let nnz = theta.nnz();
    Ok((
        InferenceReport {
            theta,
            iterations,
            objective,
            elapsed: started.elapsed(),
            nnz,
        },
        trace,
    ))
}
