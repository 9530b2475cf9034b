//! Reference inference methods for fixed topics: folding-in (EM on the
//! proportion) and variational Bayes under a Dirichlet prior.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{Document, InferenceReport, SolverConfig, TopicMatrix, TopicProportion};
use crate::objective::{MlObjective, Objective};

/// Digamma function for `x > 0`.
///
/// Shifts the argument above 10 with `psi(x) = psi(x + 1) - 1/x`, then sums
/// the asymptotic series.
pub fn digamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    shift + x.ln() - 0.5 * inv - series
}

fn relative_change(old: f64, new: f64) -> f64 {
    if old.abs() < 1e-12 {
        (new - old).abs()
    } else {
        (new - old).abs() / old.abs()
    }
}

/// Folding-in: EM fixed point `theta_k <- theta_k * sum_j d_j beta_kj / p_j / |d|`
/// from the barycenter, stopping on the relative change of the likelihood.
pub fn folding_in(doc: &Document, topics: &TopicMatrix, cfg: &SolverConfig) -> Result<InferenceReport> {
    folding_in_traced(doc, topics, cfg).map(|(report, _)| report)
}

/// [`folding_in`] that also returns the likelihood after every iterate,
/// starting with the barycenter.
pub fn folding_in_traced(
    doc: &Document,
    topics: &TopicMatrix,
    cfg: &SolverConfig,
) -> Result<(InferenceReport, Vec<f64>)> {
    cfg.validate()?;
    let started = Instant::now();
    let f = MlObjective::new(doc, topics)?;
    let k = topics.num_topics();
    let length = doc.length();
    let mut theta = vec![1.0 / k as f64; k];
    let mut grad = vec![0.0; k];
    let mut likelihood = f.value(&theta)?;
    let mut trace = vec![likelihood];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        f.gradient(&theta, &mut grad)?;
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t *= g / length;
        }
        let sum: f64 = theta.iter().sum();
        for t in &mut theta {
            *t /= sum;
        }
        let next = f.value(&theta)?;
        if next.is_nan() {
            return Err(Error::NumericFailure("folding-in likelihood is NaN".into()));
        }
        iterations += 1;
        trace.push(next);
        let change = relative_change(likelihood, next);
        likelihood = next;
        if change < cfg.rel_tol {
            break;
        }
    }
    let theta = TopicProportion::from_dense(&theta)?;
    let nnz = theta.nnz();
    Ok((
        InferenceReport {
            theta,
            iterations,
            objective: likelihood,
            elapsed: started.elapsed(),
            nnz,
        },
        trace,
    ))
}

/// Variational Dirichlet parameters for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct VbState {
    pub gamma: Vec<f64>,
}

impl VbState {
    /// Posterior-mean proportion `gamma / sum(gamma)`.
    pub fn proportion(&self) -> Vec<f64> {
        let sum: f64 = self.gamma.iter().sum();
        self.gamma.iter().map(|g| g / sum).collect()
    }
}

/// Mean-field variational inference of the proportion under Dirichlet(alpha).
///
/// Starts from uniform responsibilities, then alternates
/// `phi_jk ∝ beta_kj exp(psi(gamma_k))` and `gamma_k = alpha_k + sum_j d_j phi_jk`
/// until the mean relative change of gamma drops below `cfg.rel_tol`.
/// The reported objective is the document log-likelihood at `gamma / sum(gamma)`.
pub fn vb_infer(doc: &Document, topics: &TopicMatrix, alpha: &[f64], cfg: &SolverConfig) -> Result<InferenceReport> {
    vb_infer_state(doc, topics, alpha, cfg).map(|(report, _)| report)
}

pub fn vb_infer_state(
    doc: &Document,
    topics: &TopicMatrix,
    alpha: &[f64],
    cfg: &SolverConfig,
) -> Result<(InferenceReport, VbState)> {
    cfg.validate()?;
    let k = topics.num_topics();
    if alpha.len() != k {
        return Err(Error::InvalidArgument(format!("alpha has {} entries, expected K={k}", alpha.len())));
    }
    if let Some(a) = alpha.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {a}")));
    }
    let started = Instant::now();
    let f = MlObjective::new(doc, topics)?;
    let length = doc.length();
    let mut gamma: Vec<f64> = alpha.iter().map(|a| a + length / k as f64).collect();
    let mut weights = vec![0.0; k];
    let mut phi = vec![0.0; k];
    let mut next = vec![0.0; k];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let psi: Vec<f64> = gamma.iter().map(|&g| digamma(g)).collect();
        let psi_max = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (w, p) in weights.iter_mut().zip(&psi) {
            *w = (p - psi_max).exp();
        }
        next.copy_from_slice(alpha);
        for &(j, count) in doc.entries() {
            let mut norm = 0.0;
            for (t, (ph, w)) in phi.iter_mut().zip(&weights).enumerate() {
                *ph = topics.get(t, j) * w;
                norm += *ph;
            }
            for (n, ph) in next.iter_mut().zip(&phi) {
                *n += count * ph / norm;
            }
        }
        if next.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericFailure("variational parameters diverged".into()));
        }
        let change = next
            .iter()
            .zip(&gamma)
            .map(|(n, g)| ((n - g) / g).abs())
            .sum::<f64>()
            / k as f64;
        std::mem::swap(&mut gamma, &mut next);
        iterations += 1;
        if change < cfg.rel_tol {
            break;
        }
    }
    let state = VbState { gamma };
    let dense = state.proportion();
    let objective = f.value(&dense)?;
    let theta = TopicProportion::from_dense(&dense)?;
    let nnz = theta.nnz();
    Ok((
        InferenceReport {
            theta,
            iterations,
            objective,
            elapsed: started.elapsed(),
            nnz,
        },
        state,
    ))
}
