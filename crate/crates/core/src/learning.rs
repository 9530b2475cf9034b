//! EM training of topics with Frank-Wolfe in the E-step, and a synthetic
//! corpus generator for desk-scale experiments.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Corpus, Document, SolverConfig, TopicMatrix, TopicProportion, Vocabulary};
use crate::objective::{ml_objective, Objective};
use crate::solver::fw_solve;

/// How the M-step turns inferred proportions into topic-word counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MStep {
    /// `n_kj += d_j theta_k beta_kj / sum_i theta_i beta_ij`; monotone EM.
    #[default]
    Responsibilities,
    /// `n_kj += d_j theta_k`; no monotonicity guarantee.
    Hard,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub num_topics: usize,
    pub em_iters: usize,
    pub em_rel_tol: f64,
    pub solver: SolverConfig,
    /// Added to every expected count before normalizing.
    pub smoothing: f64,
    pub seed: u64,
    /// Worker count for the E-step; results are reproducible for a fixed value.
    pub threads: usize,
    pub m_step: MStep,
}

impl TrainConfig {
    pub fn new(num_topics: usize) -> Self {
        Self {
            num_topics,
            em_iters: 50,
            em_rel_tol: 1e-4,
            solver: SolverConfig::default(),
            smoothing: 1e-10,
            seed: 0,
            threads: 1,
            m_step: MStep::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if !(self.smoothing > 0.0) {
            return Err(Error::InvalidConfig("smoothing must be positive".into()));
        }
        if self.em_iters == 0 || self.threads == 0 {
            return Err(Error::InvalidConfig("em_iters and threads must be positive".into()));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub topics: TopicMatrix,
    /// Corpus log-likelihood after each E-step.
    pub log_likelihood: Vec<f64>,
    /// Proportions from the last E-step, one per document.
    pub thetas: Vec<TopicProportion>,
}

/// Seeded random positive topics.
pub fn random_topics(num_topics: usize, vocab_size: usize, seed: u64) -> Result<TopicMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..num_topics * vocab_size)
        .map(|_| 0.5 + rng.random::<f64>())
        .collect();
    TopicMatrix::from_weights(num_topics, vocab_size, data)
}

struct PartialStats {
    counts: Vec<f64>,
    log_likelihood: f64,
    thetas: Vec<TopicProportion>,
}

fn e_step_range(
    docs: &[Document],
    previous: Option<&[TopicProportion]>,
    topics: &TopicMatrix,
    cfg: &TrainConfig,
) -> Result<PartialStats> {
    let (k, v) = (topics.num_topics(), topics.vocab_size());
    let mut counts = vec![0.0; k * v];
    let mut log_likelihood = 0.0;
    let mut thetas = Vec::with_capacity(docs.len());
    for (i, doc) in docs.iter().enumerate() {
        let f = ml_objective(doc, topics)?;
        let (report, _) = fw_solve(&f, &cfg.solver)?;
        let (mut theta, mut value) = (report.theta, report.objective);
        // FW stops on a relative tolerance; never accept a worse point than last round's.
        if let Some(prev) = previous.map(|p| &p[i]) {
            let prev_value = f.value(&prev.to_dense())?;
            if prev_value > value {
                theta = prev.clone();
                value = prev_value;
            }
        }
        log_likelihood += value;
        for &(j, count) in doc.entries() {
            match cfg.m_step {
                MStep::Responsibilities => {
                    let p: f64 = theta.entries().iter().map(|&(t, w)| w * topics.get(t, j)).sum();
                    for &(t, w) in theta.entries() {
                        counts[t * v + j] += count * w * topics.get(t, j) / p;
                    }
                }
                MStep::Hard => {
                    for &(t, w) in theta.entries() {
                        counts[t * v + j] += count * w;
                    }
                }
            }
        }
        thetas.push(theta);
    }
    Ok(PartialStats {
        counts,
        log_likelihood,
        thetas,
    })
}

/// Fixed contiguous document ranges, one per worker.
fn ranges(n: usize, workers: usize) -> Vec<std::ops::Range<usize>> {
    let workers = workers.min(n).max(1);
    let base = n / workers;
    let extra = n % workers;
    let mut out = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Learns `cfg.num_topics` topics from `corpus` by EM.
///
/// The E-step infers each document's proportion with Frank-Wolfe on the
/// likelihood; the M-step re-estimates topics from the expected counts,
/// adds `cfg.smoothing` and renormalizes. Partial statistics are merged in
/// ascending document order, so a fixed seed and worker count reproduce
/// the topics bit for bit.
pub fn train(corpus: &Corpus, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty corpus".into()));
    }
    let (k, v) = (cfg.num_topics, corpus.vocab_size());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let docs = corpus.documents();
    let parts = ranges(docs.len(), cfg.threads);

    let mut topics = random_topics(k, v, cfg.seed)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut thetas: Option<Vec<TopicProportion>> = None;

    for _ in 0..cfg.em_iters {
        let partials: Vec<PartialStats> = pool.install(|| {
            parts
                .par_iter()
                .map(|r| {
                    let prev = thetas.as_deref().map(|t| &t[r.clone()]);
                    e_step_range(&docs[r.clone()], prev, &topics, cfg)
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut counts = vec![cfg.smoothing; k * v];
        let mut log_likelihood = 0.0;
        let mut next_thetas = Vec::with_capacity(docs.len());
        for part in partials {
            for (c, p) in counts.iter_mut().zip(&part.counts) {
                *c += p;
            }
            log_likelihood += part.log_likelihood;
            next_thetas.extend(part.thetas);
        }
        log::debug!("em iteration {}: log-likelihood {log_likelihood}", trace.len());
        let converged = trace
            .last()
            .is_some_and(|&prev| (log_likelihood - prev).abs() < cfg.em_rel_tol * prev.abs());
        trace.push(log_likelihood);
        thetas = Some(next_thetas);
        if converged {
            break;
        }
        topics = TopicMatrix::from_weights(k, v, counts)?;
    }

    Ok(TrainOutput {
        topics,
        log_likelihood: trace,
        thetas: thetas.unwrap_or_default(),
    })
}

/// Corpus log-likelihood `sum_d sum_j d_j log sum_k theta_dk beta_kj`.
pub fn corpus_log_likelihood(corpus: &Corpus, topics: &TopicMatrix, thetas: &[TopicProportion]) -> Result<f64> {
    if thetas.len() != corpus.len() {
        return Err(Error::InvalidArgument("one proportion per document required".into()));
    }
    corpus
        .documents()
        .iter()
        .zip(thetas)
        .map(|(d, t)| ml_objective(d, topics)?.value(&t.to_dense()))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_topics: usize,
    pub vocab_size: usize,
    pub num_docs: usize,
    pub doc_length: usize,
    /// Symmetric Dirichlet parameter for document proportions.
    pub doc_concentration: f64,
    /// Symmetric Dirichlet parameter for topics.
    pub topic_concentration: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(
        num_topics: usize,
        vocab_size: usize,
        num_docs: usize,
        doc_length: usize,
        doc_concentration: f64,
        seed: u64,
    ) -> Self {
        Self {
            num_topics,
            vocab_size,
            num_docs,
            doc_length,
            doc_concentration,
            topic_concentration: 0.1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_topics == 0 || self.vocab_size == 0 || self.num_docs == 0 {
            return Err(Error::InvalidArgument("K, V and M must be at least 1".into()));
        }
        if self.doc_length == 0 {
            return Err(Error::InvalidArgument("empty document: doc_length must be at least 1".into()));
        }
        if !(self.doc_concentration > 0.0 && self.topic_concentration > 0.0) {
            return Err(Error::InvalidArgument("Dirichlet parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub topics: TopicMatrix,
    pub thetas: Vec<TopicProportion>,
    pub config: SynthConfig,
}

impl SyntheticCorpus {
    /// Draws further documents from the same topics, e.g. a held-out set.
    pub fn sample_documents(&self, num_docs: usize, seed: u64) -> Result<(Corpus, Vec<TopicProportion>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_documents(&self.topics, num_docs, &self.config, &mut rng)
    }
}

fn sample_dirichlet<R: Rng>(dim: usize, concentration: f64, rng: &mut R) -> Result<Vec<f64>> {
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut x: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = x.iter().sum();
    if sum > 0.0 {
        x.iter_mut().for_each(|v| *v /= sum);
    } else {
        // every draw underflowed; fall back to a random vertex
        x.fill(0.0);
        x[rng.random_range(0..dim)] = 1.0;
    }
    Ok(x)
}

fn sample_documents<R: Rng>(
    topics: &TopicMatrix,
    num_docs: usize,
    cfg: &SynthConfig,
    rng: &mut R,
) -> Result<(Corpus, Vec<TopicProportion>)> {
    let (k, v) = (topics.num_topics(), topics.vocab_size());
    let mut docs = Vec::with_capacity(num_docs);
    let mut thetas = Vec::with_capacity(num_docs);
    let mut mixture = vec![0.0; v];
    for _ in 0..num_docs {
        let theta = sample_dirichlet(k, cfg.doc_concentration, rng)?;
        mixture.fill(0.0);
        for (t, &w) in theta.iter().enumerate() {
            for (m, b) in mixture.iter_mut().zip(topics.row(t)) {
                *m += w * b;
            }
        }
        let words = WeightedIndex::new(&mixture).map_err(|e| Error::NumericFailure(e.to_string()))?;
        let mut counts = vec![0.0; v];
        for _ in 0..cfg.doc_length {
            counts[words.sample(rng)] += 1.0;
        }
        let entries = counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0.0)
            .collect();
        docs.push(Document::new(entries)?);
        thetas.push(TopicProportion::from_dense(&theta)?);
    }
    Ok((Corpus::new(Vocabulary::anonymous(v)?, docs)?, thetas))
}

/// Samples topics from a symmetric Dirichlet, proportions from
/// Dirichlet(doc_concentration), and word counts multinomially.
pub fn generate_synthetic_corpus(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::with_capacity(cfg.num_topics * cfg.vocab_size);
    for _ in 0..cfg.num_topics {
        data.extend(sample_dirichlet(cfg.vocab_size, cfg.topic_concentration, &mut rng)?);
    }
    let topics = TopicMatrix::from_weights(cfg.num_topics, cfg.vocab_size, data)?;
    let (corpus, thetas) = sample_documents(&topics, cfg.num_docs, cfg, &mut rng)?;
    Ok(SyntheticCorpus {
        corpus,
        topics,
        thetas,
        config: cfg.clone(),
    })
}
