//! Held-out evaluation: perplexity, sparsity, timing, method comparison and
//! the iteration-cap trade-off sweep.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::baselines::{folding_in, vb_infer};
use crate::error::{Error, Result};
use crate::model::{Corpus, Document, InferenceReport, SolverConfig, Start, TopicMatrix, TopicProportion};
use crate::objective::{ml_objective, Domain, Objective, ObjectiveKind};
use crate::solver::{fw_solve, fw_solve_capped};

/// An inference procedure for one document under fixed topics.
#[derive(Debug, Clone)]
pub enum Inference {
    /// Frank-Wolfe on the given objective. Objectives undefined on the
    /// boundary always start from the barycenter; a logistic-normal prior
    /// with a mean is solved over its capped region.
    FrankWolfe { objective: ObjectiveKind, solver: SolverConfig },
    FoldingIn { solver: SolverConfig },
    VariationalBayes { alpha: Vec<f64>, solver: SolverConfig },
}

impl Inference {
    pub fn name(&self) -> &'static str {
        match self {
            Inference::FrankWolfe { .. } => "fw",
            Inference::FoldingIn { .. } => "folding",
            Inference::VariationalBayes { .. } => "vb",
        }
    }

    pub fn solver(&self) -> &SolverConfig {
        match self {
            Inference::FrankWolfe { solver, .. }
            | Inference::FoldingIn { solver }
            | Inference::VariationalBayes { solver, .. } => solver,
        }
    }

    pub fn infer(&self, doc: &Document, topics: &TopicMatrix) -> Result<InferenceReport> {
        match self {
            Inference::FrankWolfe { objective, solver } => {
                let f = objective.build(doc, topics)?;
                let mut cfg = solver.clone();
                if f.domain() == Domain::InteriorOnly {
                    cfg.start = Start::Barycenter;
                }
                let (report, _) = match objective.caps() {
                    Some(caps) => fw_solve_capped(&*f, &caps, &cfg)?,
                    None => fw_solve(&*f, &cfg)?,
                };
                Ok(report)
            }
            Inference::FoldingIn { solver } => folding_in(doc, topics, solver),
            Inference::VariationalBayes { alpha, solver } => vb_infer(doc, topics, alpha, solver),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRow {
    pub doc_id: usize,
    pub log_likelihood: f64,
    /// Value of the inference objective at the returned proportion.
    pub objective: f64,
    pub nnz: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub method: String,
    pub cap: Option<usize>,
    pub perplexity: f64,
    pub mean_sparsity: f64,
    pub mean_nnz: f64,
    pub total_time: Duration,
    pub rows: Vec<DocumentRow>,
    pub thetas: Vec<TopicProportion>,
}

/// Fraction of nonzero topics, `nnz / K`.
pub fn sparsity(theta: &TopicProportion, num_topics: usize) -> f64 {
    theta.nnz() as f64 / num_topics as f64
}

/// `exp(-sum_d log P(d) / sum_d |d|)` with `log P(d) = sum_j d_j log sum_k theta_dk beta_kj`.
pub fn perplexity_of(testset: &Corpus, topics: &TopicMatrix, thetas: &[TopicProportion]) -> Result<f64> {
    if testset.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if thetas.len() != testset.len() {
        return Err(Error::InvalidArgument(format!(
            "{} proportions for {} documents",
            thetas.len(),
            testset.len()
        )));
    }
    let mut log_prob = 0.0;
    for (doc, theta) in testset.documents().iter().zip(thetas) {
        log_prob += ml_objective(doc, topics)?.value(&theta.to_dense())?;
    }
    Ok((-log_prob / testset.total_length()).exp())
}

/// Infers every document of `testset` with `method`, then scores it.
pub fn perplexity(testset: &Corpus, topics: &TopicMatrix, method: &Inference) -> Result<f64> {
    evaluate(testset, topics, method, 1).map(|r| r.perplexity)
}

/// Runs `method` over the test set and aggregates perplexity, sparsity and
/// wall-clock time. `threads == 1` runs serially, which is what timing
/// comparisons should use.
pub fn evaluate(testset: &Corpus, topics: &TopicMatrix, method: &Inference, threads: usize) -> Result<EvalReport> {
    if testset.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let docs = testset.documents();
    let started = Instant::now();
    let reports: Vec<InferenceReport> = if threads <= 1 {
        docs.iter().map(|d| method.infer(d, topics)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| docs.par_iter().map(|d| method.infer(d, topics)).collect::<Result<_>>())?
    };
    let total_time = started.elapsed();

    let k = topics.num_topics();
    let mut rows = Vec::with_capacity(docs.len());
    let mut thetas = Vec::with_capacity(docs.len());
    let mut log_prob = 0.0;
    for ((doc, id), report) in docs.iter().zip(testset.doc_ids()).zip(reports) {
        let ll = ml_objective(doc, topics)?.value(&report.theta.to_dense())?;
        log_prob += ll;
        rows.push(DocumentRow {
            doc_id: *id,
            log_likelihood: ll,
            objective: report.objective,
            nnz: report.nnz,
            iterations: report.iterations,
        });
        thetas.push(report.theta);
    }
    let n = rows.len() as f64;
    Ok(EvalReport {
        method: method.name().to_string(),
        cap: None,
        perplexity: (-log_prob / testset.total_length()).exp(),
        mean_sparsity: thetas.iter().map(|t| sparsity(t, k)).sum::<f64>() / n,
        mean_nnz: rows.iter().map(|r| r.nnz as f64).sum::<f64>() / n,
        total_time,
        rows,
        thetas,
    })
}

/// Frank-Wolfe under increasing caps on the number of vertices.
///
/// Cap `c` allows at most `c` distinct vertices, i.e. `c - 1` iterations
/// after the start (`cap = 1` returns the best single vertex). Caps must be
/// strictly increasing and at least 1.
pub fn tradeoff_sweep(
    testset: &Corpus,
    topics: &TopicMatrix,
    objective: &ObjectiveKind,
    caps: &[usize],
    solver: &SolverConfig,
) -> Result<Vec<EvalReport>> {
    if caps.is_empty() || caps[0] == 0 || caps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "caps must be a non-empty, strictly increasing list of positive integers".into(),
        ));
    }
    caps.iter()
        .map(|&cap| {
            let method = Inference::FrankWolfe {
                objective: objective.clone(),
                solver: solver.clone().with_max_nnz(cap),
            };
            let mut report = evaluate(testset, topics, &method, 1)?;
            report.cap = Some(cap);
            Ok(report)
        })
        .collect()
}

/// Frank-Wolfe (likelihood), folding-in and variational Bayes under the
/// same stopping rule, on the same topics.
pub fn compare_methods(
    testset: &Corpus,
    topics: &TopicMatrix,
    alpha: &[f64],
    solver: &SolverConfig,
) -> Result<Vec<EvalReport>> {
    let methods = [
        Inference::FrankWolfe {
            objective: ObjectiveKind::Likelihood,
            solver: solver.clone(),
        },
        Inference::FoldingIn { solver: solver.clone() },
        Inference::VariationalBayes {
            alpha: alpha.to_vec(),
            solver: solver.clone(),
        },
    ];
    methods
        .iter()
        .map(|m| {
            let mut report = evaluate(testset, topics, m, 1)?;
            report.cap = Some(solver.max_iters);
            Ok(report)
        })
        .collect()
}

pub const REPORT_CSV_HEADER: &str = "method,cap,perplexity,sparsity,mean_nnz,seconds";

pub fn write_report_csv<W: Write>(reports: &[EvalReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        let cap = r.cap.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            cap,
            r.perplexity,
            r.mean_sparsity,
            r.mean_nnz,
            r.total_time.as_secs_f64()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Vocabulary;

    fn corpus(docs: Vec<Vec<(usize, f64)>>, v: usize) -> Corpus {
        Corpus::new(
            Vocabulary::anonymous(v).unwrap(),
            docs.into_iter().map(|d| Document::new(d).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_model_perplexity_is_vocab_size() {
        let c = corpus(vec![vec![(0, 3.0), (57, 1.0)], vec![(99, 2.0)]], 100);
        let topics = TopicMatrix::uniform(3, 100).unwrap();
        let method = Inference::FrankWolfe {
            objective: ObjectiveKind::Likelihood,
            solver: SolverConfig::default(),
        };
        let p = perplexity(&c, &topics, &method).unwrap();
        assert!((p - 100.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn single_term_perplexity() {
        let c = corpus(vec![vec![(1, 5.0)]], 2);
        let topics = TopicMatrix::from_rows(&[vec![0.75, 0.25], vec![0.4, 0.6]]).unwrap();
        let theta = TopicProportion::new(2, vec![(0, 0.5), (1, 0.5)]).unwrap();
        let p_word = 0.5 * 0.25 + 0.5 * 0.6;
        let p = perplexity_of(&c, &topics, &[theta]).unwrap();
        assert!((p - 1.0 / p_word).abs() < 1e-12);
    }

    #[test]
    fn sparsity_values() {
        assert_eq!(sparsity(&TopicProportion::vertex(10, 3).unwrap(), 10), 0.1);
        assert_eq!(sparsity(&crate::model::simplex_barycenter(4).unwrap(), 4), 1.0);
    }

    #[test]
    fn caps_must_increase() {
        let c = corpus(vec![vec![(0, 1.0)]], 2);
        let topics = TopicMatrix::uniform(2, 2).unwrap();
        let cfg = SolverConfig::default();
        for caps in [&[][..], &[0][..], &[2, 2][..], &[3, 1][..]] {
            assert!(tradeoff_sweep(&c, &topics, &ObjectiveKind::Likelihood, caps, &cfg).is_err());
        }
    }

    #[test]
    fn empty_thetas_rejected() {
        let c = corpus(vec![vec![(0, 1.0)]], 2);
        let topics = TopicMatrix::uniform(2, 2).unwrap();
        assert!(perplexity_of(&c, &topics, &[]).is_err());
    }

    #[test]
    fn report_csv_header() {
        let mut buf = Vec::new();
        write_report_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "method,cap,perplexity,sparsity,mean_nnz,seconds\n");
    }
}
