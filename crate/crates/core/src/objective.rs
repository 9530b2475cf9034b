//! Concave objectives over the topic simplex.
//!
//! Every inference target is expressed as an [`Objective`]: a concave,
//! differentiable function of a dense proportion vector. The solver only
//! needs values, gradients and restrictions to a segment ([`Segment`]).
//!
//! Concrete objectives:
//! - [`MlObjective`]: document log-likelihood `sum_j d_j log sum_k theta_k beta_kj`.
//! - [`LdaMapObjective`]: likelihood plus `sum_k (alpha_k - 1) log theta_k`, alpha >= 1.
//! - [`CtmMapObjective`]: likelihood plus `-1/2 (log theta - mu)^T P (log theta - mu)`.
//! - [`PenalizedObjective`]: `base + lambda * h` for any pair of objectives.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Document, TopicMatrix};

/// Lower clamp applied to `theta_k` inside `log` by interior-only objectives.
pub const INTERIOR_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Defined and differentiable on the whole closed simplex.
    FullSimplex,
    /// Defined only where every (penalized) coordinate is strictly positive.
    InteriorOnly,
}

impl Domain {
    pub fn join(self, other: Domain) -> Domain {
        if self == Domain::InteriorOnly || other == Domain::InteriorOnly {
            Domain::InteriorOnly
        } else {
            Domain::FullSimplex
        }
    }
}

/// A concave function of the topic proportion.
pub trait Objective: Sync {
    fn num_topics(&self) -> usize;

    fn domain(&self) -> Domain;

    fn value(&self, theta: &[f64]) -> Result<f64>;

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()>;

    /// Restriction `g(a) = f((1 - a) from + a to)` for `a` in `[0, 1]`.
    ///
    /// The default evaluates the full objective at every query; concrete
    /// objectives override it with cheaper incremental forms.
    fn segment<'s>(&'s self, from: &[f64], to: &[f64]) -> Result<Box<dyn Segment + 's>> {
        check_len(from, self.num_topics())?;
        check_len(to, self.num_topics())?;
        Ok(Box::new(GenericSegment {
            objective: self,
            from: from.to_vec(),
            to: to.to_vec(),
            scratch: RefCell::new((vec![0.0; from.len()], vec![0.0; from.len()])),
        }))
    }
}

/// A scalar function on `[0, 1]`, concave, optionally with its derivative.
///
/// Points outside the objective's domain evaluate to `-inf`.
pub trait Segment {
    fn value(&self, alpha: f64) -> f64;

    fn derivative(&self, _alpha: f64) -> Option<f64> {
        None
    }
}

/// Wraps a plain closure as a derivative-free [`Segment`].
pub struct FnSegment<F>(pub F);

impl<F: Fn(f64) -> f64> Segment for FnSegment<F> {
    fn value(&self, alpha: f64) -> f64 {
        (self.0)(alpha)
    }
}

struct GenericSegment<'s, O: ?Sized> {
    objective: &'s O,
    from: Vec<f64>,
    to: Vec<f64>,
    scratch: RefCell<(Vec<f64>, Vec<f64>)>,
}

impl<O: Objective + ?Sized> Segment for GenericSegment<'_, O> {
    fn value(&self, alpha: f64) -> f64 {
        let mut scratch = self.scratch.borrow_mut();
        interpolate(&self.from, &self.to, alpha, &mut scratch.0);
        self.objective.value(&scratch.0).unwrap_or(f64::NEG_INFINITY)
    }

    fn derivative(&self, alpha: f64) -> Option<f64> {
        let mut scratch = self.scratch.borrow_mut();
        let (point, grad) = &mut *scratch;
        interpolate(&self.from, &self.to, alpha, point);
        if self.objective.gradient(point, grad).is_err() {
            return Some(f64::NEG_INFINITY);
        }
        Some(
            grad.iter()
                .zip(self.from.iter().zip(&self.to))
                .map(|(g, (f, t))| g * (t - f))
                .sum(),
        )
    }
}

fn interpolate(from: &[f64], to: &[f64], alpha: f64, out: &mut [f64]) {
    for ((o, f), t) in out.iter_mut().zip(from).zip(to) {
        *o = (1.0 - alpha) * f + alpha * t;
    }
}

fn check_len(theta: &[f64], k: usize) -> Result<()> {
    if theta.len() != k {
        return Err(Error::InvalidArgument(format!(
            "proportion has {} components, objective expects {k}",
            theta.len()
        )));
    }
    Ok(())
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.comp
    }
}

/// Log-likelihood of one document under fixed topics.
#[derive(Debug, Clone)]
pub struct MlObjective {
    num_topics: usize,
    counts: Vec<f64>,
    /// `columns[i * K + k] = beta_{k, j_i}` for the i-th observed term.
    columns: Vec<f64>,
}

/// Builds the likelihood objective of `doc` under `topics`.
pub fn ml_objective(doc: &Document, topics: &TopicMatrix) -> Result<MlObjective> {
    MlObjective::new(doc, topics)
}

impl MlObjective {
    pub fn new(doc: &Document, topics: &TopicMatrix) -> Result<Self> {
        if doc.min_vocab_size() > topics.vocab_size() {
            return Err(Error::InvalidArgument(format!(
                "document uses term id {} but topics cover only {} terms",
                doc.min_vocab_size() - 1,
                topics.vocab_size()
            )));
        }
        let k = topics.num_topics();
        let mut columns = Vec::with_capacity(doc.num_unique() * k);
        let mut counts = Vec::with_capacity(doc.num_unique());
        for &(j, c) in doc.entries() {
            counts.push(c);
            columns.extend((0..k).map(|t| topics.get(t, j)));
        }
        Ok(Self {
            num_topics: k,
            counts,
            columns,
        })
    }

    /// Word probabilities `p_j = sum_k theta_k beta_kj` for the observed terms.
    pub fn word_probabilities(&self, theta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let k = self.num_topics;
        out.extend(
            self.columns
                .chunks_exact(k)
                .map(|col| col.iter().zip(theta).map(|(b, t)| b * t).sum::<f64>()),
        );
    }

    fn value_from_probs(&self, probs: impl Iterator<Item = f64>) -> f64 {
        let mut acc = CompensatedSum::default();
        for (c, p) in self.counts.iter().zip(probs) {
            acc.add(c * p.ln());
        }
        acc.total()
    }

    fn ml_segment(&self, from: &[f64], to: &[f64]) -> MlSegment {
        let mut p_from = Vec::new();
        let mut p_to = Vec::new();
        self.word_probabilities(from, &mut p_from);
        self.word_probabilities(to, &mut p_to);
        MlSegment {
            counts: self.counts.clone(),
            p_from,
            p_to,
        }
    }
}

impl Objective for MlObjective {
    fn num_topics(&self) -> usize {
        self.num_topics
    }

    fn domain(&self) -> Domain {
        Domain::FullSimplex
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        check_len(theta, self.num_topics)?;
        let k = self.num_topics;
        Ok(self.value_from_probs(
            self.columns
                .chunks_exact(k)
                .map(|col| col.iter().zip(theta).map(|(b, t)| b * t).sum::<f64>()),
        ))
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        check_len(theta, self.num_topics)?;
        check_len(grad, self.num_topics)?;
        grad.fill(0.0);
        for (col, c) in self.columns.chunks_exact(self.num_topics).zip(&self.counts) {
            let p: f64 = col.iter().zip(theta).map(|(b, t)| b * t).sum();
            let w = c / p;
            for (g, b) in grad.iter_mut().zip(col) {
                *g += w * b;
            }
        }
        Ok(())
    }

    fn segment<'s>(&'s self, from: &[f64], to: &[f64]) -> Result<Box<dyn Segment + 's>> {
        check_len(from, self.num_topics)?;
        check_len(to, self.num_topics)?;
        Ok(Box::new(self.ml_segment(from, to)))
    }
}

struct MlSegment {
    counts: Vec<f64>,
    p_from: Vec<f64>,
    p_to: Vec<f64>,
}

impl MlSegment {
    fn value(&self, alpha: f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for ((c, a), b) in self.counts.iter().zip(&self.p_from).zip(&self.p_to) {
            acc.add(c * ((1.0 - alpha) * a + alpha * b).ln());
        }
        acc.total()
    }

    fn derivative(&self, alpha: f64) -> f64 {
        self.counts
            .iter()
            .zip(&self.p_from)
            .zip(&self.p_to)
            .map(|((c, a), b)| c * (b - a) / ((1.0 - alpha) * a + alpha * b))
            .sum()
    }
}

impl Segment for MlSegment {
    fn value(&self, alpha: f64) -> f64 {
        MlSegment::value(self, alpha)
    }

    fn derivative(&self, alpha: f64) -> Option<f64> {
        Some(MlSegment::derivative(self, alpha))
    }
}

/// `h(theta) = 0`; the identity element for [`PenalizedObjective`].
#[derive(Debug, Clone, Copy)]
pub struct ZeroPenalty {
    pub num_topics: usize,
}

impl Objective for ZeroPenalty {
    fn num_topics(&self) -> usize {
        self.num_topics
    }

    fn domain(&self) -> Domain {
        Domain::FullSimplex
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        check_len(theta, self.num_topics)?;
        Ok(0.0)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        check_len(theta, self.num_topics)?;
        grad.fill(0.0);
        Ok(())
    }
}

/// Dirichlet log-density kernel `sum_k (alpha_k - 1) log theta_k`, alpha >= 1.
#[derive(Debug, Clone)]
pub struct DirichletPenalty {
    weights: Vec<f64>,
}

impl DirichletPenalty {
    pub fn new(alpha: &[f64]) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("alpha must have K >= 1 entries".into()));
        }
        if let Some((topic, &a)) = alpha.iter().enumerate().find(|(_, &a)| !(a >= 1.0)) {
            return Err(Error::NonconcavePrior { topic, alpha: a });
        }
        Ok(Self {
            weights: alpha.iter().map(|a| a - 1.0).collect(),
        })
    }

    fn eval(&self, theta: &[f64]) -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for (k, (&w, &t)) in self.weights.iter().zip(theta).enumerate() {
            if w == 0.0 {
                continue;
            }
            if !(t > 0.0) {
                return Err(Error::DomainViolation(format!("theta[{k}] = {t} on the boundary")));
            }
            acc.add(w * t.max(INTERIOR_CLAMP).ln());
        }
        Ok(acc.total())
    }

    fn eval_gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        for (k, ((g, &w), &t)) in grad.iter_mut().zip(&self.weights).zip(theta).enumerate() {
            if w == 0.0 {
                *g = 0.0;
                continue;
            }
            if !(t > 0.0) {
                return Err(Error::DomainViolation(format!("theta[{k}] = {t} on the boundary")));
            }
            *g = w / t;
        }
        Ok(())
    }
}

impl Objective for DirichletPenalty {
    fn num_topics(&self) -> usize {
        self.weights.len()
    }

    fn domain(&self) -> Domain {
        if self.weights.iter().any(|&w| w > 0.0) {
            Domain::InteriorOnly
        } else {
            Domain::FullSimplex
        }
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        check_len(theta, self.weights.len())?;
        self.eval(theta)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        check_len(theta, self.weights.len())?;
        check_len(grad, self.weights.len())?;
        self.eval_gradient(theta, grad)
    }
}

/// Logistic-normal prior on `x = log theta`, given by its precision matrix.
#[derive(Debug, Clone)]
pub struct CtmPrior {
    precision: DMatrix<f64>,
    mean: Option<DVector<f64>>,
}

impl CtmPrior {
    /// Precision must be symmetric (within 1e-9) and positive definite.
    pub fn new(precision: DMatrix<f64>, mean: Option<Vec<f64>>) -> Result<Self> {
        let k = precision.nrows();
        if k == 0 || precision.ncols() != k {
            return Err(Error::InvalidArgument(format!(
                "precision must be square and non-empty, got {}x{}",
                precision.nrows(),
                precision.ncols()
            )));
        }
        for i in 0..k {
            for j in 0..i {
                if (precision[(i, j)] - precision[(j, i)]).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("precision not symmetric at ({i}, {j})")));
                }
            }
        }
        if precision.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument("precision matrix is not positive definite".into()));
        }
        let mean = match mean {
            Some(m) if m.len() != k => {
                return Err(Error::InvalidArgument(format!("mean has {} entries, expected {k}", m.len())))
            }
            Some(m) if m.iter().any(|x| !x.is_finite()) => {
                return Err(Error::InvalidArgument("mean must be finite".into()))
            }
            m => m.map(DVector::from_vec),
        };
        Ok(Self { precision, mean })
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(DMatrix::identity(k, k), None)
    }

    pub fn num_topics(&self) -> usize {
        self.precision.nrows()
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }

    /// Upper bounds `u_k = min(exp(mu_k), 1)` of the region
    /// `{theta : log theta_k <= mu_k}`. `None` for the zero-mean form.
    pub fn caps(&self) -> Option<Vec<f64>> {
        self.mean.as_ref().map(|m| m.iter().map(|x| x.exp().min(1.0)).collect())
    }

    /// Parses K lines of K reals (the precision), optionally followed by a
    /// line of K reals (the mean). Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("prior line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("prior rows must all hold K reals".into()));
        }
        let mean = match rows.len() {
            n if n == k => None,
            n if n == k + 1 => rows.pop(),
            n => {
                return Err(Error::InvalidArgument(format!(
                    "prior has {n} rows; expected {k} or {}",
                    k + 1
                )))
            }
        };
        let precision = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
        Self::new(precision, mean)
    }

    /// `z = log(max(theta, clamp)) - mu`; errors on a zero coordinate.
    fn centered_log(&self, theta: &[f64]) -> Result<DVector<f64>> {
        let k = self.num_topics();
        check_len(theta, k)?;
        let mut z = DVector::zeros(k);
        for (i, &t) in theta.iter().enumerate() {
            if !(t > 0.0) {
                return Err(Error::DomainViolation(format!("theta[{i}] = {t} on the boundary")));
            }
            z[i] = t.max(INTERIOR_CLAMP).ln() - self.mean.as_ref().map_or(0.0, |m| m[i]);
        }
        Ok(z)
    }

    fn penalty(&self, theta: &[f64]) -> Result<f64> {
        let z = self.centered_log(theta)?;
        Ok(-0.5 * z.dot(&(&self.precision * &z)))
    }

    fn penalty_gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        let z = self.centered_log(theta)?;
        let pz = &self.precision * z;
        for ((g, &t), v) in grad.iter_mut().zip(theta).zip(pz.iter()) {
            *g = -v / t;
        }
        Ok(())
    }
}

/// The prior term alone, `-1/2 (log theta - mu)^T P (log theta - mu)`.
#[derive(Debug, Clone)]
pub struct CtmPenalty {
    prior: CtmPrior,
}

impl CtmPenalty {
    pub fn new(prior: CtmPrior) -> Self {
        Self { prior }
    }
}

impl Objective for CtmPenalty {
    fn num_topics(&self) -> usize {
        self.prior.num_topics()
    }

    fn domain(&self) -> Domain {
        Domain::InteriorOnly
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        self.prior.penalty(theta)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        check_len(grad, self.prior.num_topics())?;
        self.prior.penalty_gradient(theta, grad)
    }
}

/// Hessian of the logistic-normal penalty,
/// `-diag(1/theta) [P - diag(P z)] diag(1/theta)` with `z = log theta - mu`.
pub fn ctm_penalty_hessian(theta: &[f64], prior: &CtmPrior) -> Result<DMatrix<f64>> {
    let z = prior.centered_log(theta)?;
    let pz = prior.precision() * z;
    let k = theta.len();
    Ok(DMatrix::from_fn(k, k, |i, j| {
        let inner = prior.precision()[(i, j)] - if i == j { pz[i] } else { 0.0 };
        -inner / (theta[i] * theta[j])
    }))
}

/// `base + lambda * h`.
pub struct PenalizedObjective<B, H> {
    base: B,
    penalty: H,
    lambda: f64,
}

pub fn penalized_objective<B: Objective, H: Objective>(base: B, penalty: H, lambda: f64) -> Result<PenalizedObjective<B, H>> {
    PenalizedObjective::new(base, penalty, lambda)
}

impl<B: Objective, H: Objective> PenalizedObjective<B, H> {
    pub fn new(base: B, penalty: H, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if base.num_topics() != penalty.num_topics() {
            return Err(Error::InvalidArgument(format!(
                "base has K={} but penalty has K={}",
                base.num_topics(),
                penalty.num_topics()
            )));
        }
        Ok(Self { base, penalty, lambda })
    }
}

impl<B: Objective, H: Objective> Objective for PenalizedObjective<B, H> {
    fn num_topics(&self) -> usize {
        self.base.num_topics()
    }

    fn domain(&self) -> Domain {
        self.base.domain().join(self.penalty.domain())
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let base = self.base.value(theta)?;
        if self.lambda == 0.0 {
            return Ok(base);
        }
        Ok(base + self.lambda * self.penalty.value(theta)?)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        self.base.gradient(theta, grad)?;
        if self.lambda == 0.0 {
            return Ok(());
        }
        let mut extra = vec![0.0; grad.len()];
        self.penalty.gradient(theta, &mut extra)?;
        for (g, e) in grad.iter_mut().zip(extra) {
            *g += self.lambda * e;
        }
        Ok(())
    }

    fn segment<'s>(&'s self, from: &[f64], to: &[f64]) -> Result<Box<dyn Segment + 's>> {
        Ok(Box::new(PenalizedSegment {
            base: self.base.segment(from, to)?,
            penalty: self.penalty.segment(from, to)?,
            lambda: self.lambda,
        }))
    }
}

struct PenalizedSegment<'s> {
    base: Box<dyn Segment + 's>,
    penalty: Box<dyn Segment + 's>,
    lambda: f64,
}

impl Segment for PenalizedSegment<'_> {
    fn value(&self, alpha: f64) -> f64 {
        let base = self.base.value(alpha);
        if self.lambda == 0.0 {
            return base;
        }
        base + self.lambda * self.penalty.value(alpha)
    }

    fn derivative(&self, alpha: f64) -> Option<f64> {
        let base = self.base.derivative(alpha)?;
        if self.lambda == 0.0 {
            return Some(base);
        }
        Some(base + self.lambda * self.penalty.derivative(alpha)?)
    }
}

/// LDA posterior kernel: likelihood plus Dirichlet(alpha) log-density, alpha >= 1.
#[derive(Debug, Clone)]
pub struct LdaMapObjective {
    ml: MlObjective,
    prior: DirichletPenalty,
}

pub fn lda_map_objective(doc: &Document, topics: &TopicMatrix, alpha: &[f64]) -> Result<LdaMapObjective> {
    let prior = DirichletPenalty::new(alpha)?;
    if alpha.len() != topics.num_topics() {
        return Err(Error::InvalidArgument(format!(
            "alpha has {} entries, expected K={}",
            alpha.len(),
            topics.num_topics()
        )));
    }
    Ok(LdaMapObjective {
        ml: MlObjective::new(doc, topics)?,
        prior,
    })
}

impl Objective for LdaMapObjective {
    fn num_topics(&self) -> usize {
        self.ml.num_topics
    }

    fn domain(&self) -> Domain {
        self.prior.domain()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let penalty = self.prior.value(theta)?;
        Ok(self.ml.value(theta)? + penalty)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        let mut extra = vec![0.0; grad.len()];
        self.prior.gradient(theta, &mut extra)?;
        self.ml.gradient(theta, grad)?;
        for (g, e) in grad.iter_mut().zip(extra) {
            *g += e;
        }
        Ok(())
    }

    fn segment<'s>(&'s self, from: &[f64], to: &[f64]) -> Result<Box<dyn Segment + 's>> {
        check_len(from, self.ml.num_topics)?;
        check_len(to, self.ml.num_topics)?;
        Ok(Box::new(PointPenaltySegment {
            ml: self.ml.ml_segment(from, to),
            from: from.to_vec(),
            to: to.to_vec(),
            scratch: RefCell::new((vec![0.0; from.len()], vec![0.0; from.len()])),
            penalty: |t: &[f64]| self.prior.eval(t),
            penalty_gradient: |t: &[f64], g: &mut [f64]| self.prior.eval_gradient(t, g),
        }))
    }
}

/// Correlated-topic-model posterior kernel with a logistic-normal prior.
#[derive(Debug, Clone)]
pub struct CtmMapObjective {
    ml: MlObjective,
    prior: CtmPrior,
}

/// Builds the logistic-normal MAP objective. With a mean present, solve it
/// with the capped solver so iterates stay in `{theta : log theta_k <= mu_k}`.
/// The prior term is concave where `P (log theta - mu) <= 0`, which holds on
/// that region when `P` has no negative entries but not for every SPD `P`.
pub fn ctm_map_objective(doc: &Document, topics: &TopicMatrix, prior: &CtmPrior) -> Result<CtmMapObjective> {
    if prior.num_topics() != topics.num_topics() {
        return Err(Error::InvalidArgument(format!(
            "prior has K={} but topics have K={}",
            prior.num_topics(),
            topics.num_topics()
        )));
    }
    Ok(CtmMapObjective {
        ml: MlObjective::new(doc, topics)?,
        prior: prior.clone(),
    })
}

impl CtmMapObjective {
    pub fn prior(&self) -> &CtmPrior {
        &self.prior
    }
}

impl Objective for CtmMapObjective {
    fn num_topics(&self) -> usize {
        self.ml.num_topics
    }

    fn domain(&self) -> Domain {
        Domain::InteriorOnly
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let penalty = self.prior.penalty(theta)?;
        Ok(self.ml.value(theta)? + penalty)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<()> {
        let mut extra = vec![0.0; grad.len()];
        self.prior.penalty_gradient(theta, &mut extra)?;
        self.ml.gradient(theta, grad)?;
        for (g, e) in grad.iter_mut().zip(extra) {
            *g += e;
        }
        Ok(())
    }

    fn segment<'s>(&'s self, from: &[f64], to: &[f64]) -> Result<Box<dyn Segment + 's>> {
        check_len(from, self.ml.num_topics)?;
        check_len(to, self.ml.num_topics)?;
        Ok(Box::new(PointPenaltySegment {
            ml: self.ml.ml_segment(from, to),
            from: from.to_vec(),
            to: to.to_vec(),
            scratch: RefCell::new((vec![0.0; from.len()], vec![0.0; from.len()])),
            penalty: |t: &[f64]| self.prior.penalty(t),
            penalty_gradient: |t: &[f64], g: &mut [f64]| self.prior.penalty_gradient(t, g),
        }))
    }
}

/// Incremental likelihood segment plus a penalty evaluated pointwise.
struct PointPenaltySegment<P, G> {
    ml: MlSegment,
    from: Vec<f64>,
    to: Vec<f64>,
    scratch: RefCell<(Vec<f64>, Vec<f64>)>,
    penalty: P,
    penalty_gradient: G,
}

impl<P, G> Segment for PointPenaltySegment<P, G>
where
    P: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn value(&self, alpha: f64) -> f64 {
        let mut scratch = self.scratch.borrow_mut();
        interpolate(&self.from, &self.to, alpha, &mut scratch.0);
        match (self.penalty)(&scratch.0) {
            Ok(p) => self.ml.value(alpha) + p,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn derivative(&self, alpha: f64) -> Option<f64> {
        let mut scratch = self.scratch.borrow_mut();
        let (point, grad) = &mut *scratch;
        interpolate(&self.from, &self.to, alpha, point);
        if (self.penalty_gradient)(point, grad).is_err() {
            return Some(f64::NEG_INFINITY);
        }
        let along: f64 = grad
            .iter()
            .zip(self.from.iter().zip(&self.to))
            .map(|(g, (f, t))| g * (t - f))
            .sum();
        Some(self.ml.derivative(alpha) + along)
    }
}

/// Which objective to build per document.
#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    Likelihood,
    LdaMap { alpha: Vec<f64> },
    Ctm { prior: CtmPrior },
}

impl ObjectiveKind {
    pub fn build<'a>(&'a self, doc: &Document, topics: &TopicMatrix) -> Result<Box<dyn Objective + 'a>> {
        Ok(match self {
            ObjectiveKind::Likelihood => Box::new(ml_objective(doc, topics)?),
            ObjectiveKind::LdaMap { alpha } => Box::new(lda_map_objective(doc, topics, alpha)?),
            ObjectiveKind::Ctm { prior } => Box::new(ctm_map_objective(doc, topics, prior)?),
        })
    }

    /// Caps to enforce, for the full-mean logistic-normal prior.
    pub fn caps(&self) -> Option<Vec<f64>> {
        match self {
            ObjectiveKind::Ctm { prior } => prior.caps(),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Likelihood => "ml",
            ObjectiveKind::LdaMap { .. } => "lda-map",
            ObjectiveKind::Ctm { .. } => "ctm",
        }
    }
}
