//! Shared data types: vocabulary, documents, corpora, topics and topic proportions.
//!
//! Every type here is immutable once constructed and validates its
//! invariants in the constructor, so downstream modules can rely on them.

use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use crate::error::{Error, Result};

/// Positivity floor applied to every topic-word probability.
pub const TOPIC_FLOOR: f64 = 1e-10;

/// Tolerance on simplex sums (topic rows and topic proportions).
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("vocabulary must hold at least one term".into()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (id, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), id).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary term {term:?}")));
            }
        }
        Ok(Self { terms, index })
    }

    /// Vocabulary of `size` placeholder terms `w0, w1, ...`.
    pub fn anonymous(size: usize) -> Result<Self> {
        Self::new((0..size).map(|j| format!("w{j}")).collect())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Sparse bag-of-words document. Counts are positive reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    entries: Vec<(usize, f64)>,
    length: f64,
}

impl Document {
    /// Builds a document from `(term_id, count)` pairs in any order.
    /// Repeated term ids are merged by summing their counts.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("document has no entries".into()));
        }
        for &(term, count) in &entries {
            if !(count > 0.0 && count.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "term {term} has non-positive or non-finite count {count}"
                )));
            }
        }
        entries.sort_by_key(|&(term, _)| term);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (term, count) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == term => last.1 += count,
                _ => merged.push((term, count)),
            }
        }
        let length = merged.iter().map(|&(_, c)| c).sum();
        Ok(Self { entries: merged, length })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Sum of counts.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn num_unique(&self) -> usize {
        self.entries.len()
    }

    /// Largest term id plus one.
    pub fn min_vocab_size(&self) -> usize {
        self.entries.last().map_or(0, |&(t, _)| t + 1)
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    vocabulary: Vocabulary,
    documents: Vec<Document>,
    doc_ids: Vec<usize>,
}

impl Corpus {
    /// Documents are labelled `1..=M` in order.
    pub fn new(vocabulary: Vocabulary, documents: Vec<Document>) -> Result<Self> {
        let ids = (1..=documents.len()).collect();
        Self::with_ids(vocabulary, documents, ids)
    }

    /// Like [`Corpus::new`] but with explicit external document labels.
    pub fn with_ids(vocabulary: Vocabulary, documents: Vec<Document>, doc_ids: Vec<usize>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::InvalidArgument("corpus must hold at least one document".into()));
        }
        if doc_ids.len() != documents.len() {
            return Err(Error::InvalidArgument("one label per document required".into()));
        }
        let v = vocabulary.len();
        for (i, doc) in documents.iter().enumerate() {
            if doc.min_vocab_size() > v {
                return Err(Error::InvalidArgument(format!(
                    "document {} uses term id {} outside a vocabulary of {v} terms",
                    doc_ids[i],
                    doc.min_vocab_size() - 1
                )));
            }
        }
        Ok(Self {
            vocabulary,
            documents,
            doc_ids,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn doc_ids(&self) -> &[usize] {
        &self.doc_ids
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn total_length(&self) -> f64 {
        self.documents.iter().map(Document::length).sum()
    }

    /// Sub-corpus made of the documents in `range`, sharing the vocabulary.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::with_ids(
            self.vocabulary.clone(),
            self.documents[range.clone()].to_vec(),
            self.doc_ids[range].to_vec(),
        )
    }
}

/// A broken topic-matrix invariant, as reported by [`validate_topic_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape { expected: usize, found: usize },
    RowSum { row: usize, sum: f64 },
    Positivity { row: usize, col: usize, value: f64 },
}

impl Violation {
    /// Short machine-friendly tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Shape { .. } => "shape",
            Violation::RowSum { .. } => "row-sum",
            Violation::Positivity { .. } => "positivity",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { expected, found } => {
                write!(f, "shape: expected {expected} entries, found {found}")
            }
            Violation::RowSum { row, sum } => write!(f, "row-sum: row {row} sums to {sum}"),
            Violation::Positivity { row, col, value } => {
                write!(f, "positivity: entry ({row}, {col}) = {value} below floor {TOPIC_FLOOR}")
            }
        }
    }
}

/// Checks a row-major `num_topics x vocab_size` buffer against the topic
/// invariants. Returns every violation found; empty means valid.
pub fn validate_topic_matrix(num_topics: usize, vocab_size: usize, data: &[f64]) -> Vec<Violation> {
    let mut out = Vec::new();
    if data.len() != num_topics * vocab_size || num_topics == 0 || vocab_size == 0 {
        out.push(Violation::Shape {
            expected: num_topics * vocab_size,
            found: data.len(),
        });
        return out;
    }
    for (row, values) in data.chunks_exact(vocab_size).enumerate() {
        let sum: f64 = values.iter().sum();
        if !((sum - 1.0).abs() <= SIMPLEX_TOL) {
            out.push(Violation::RowSum { row, sum });
        }
        for (col, &value) in values.iter().enumerate() {
            if !(value >= TOPIC_FLOOR) {
                out.push(Violation::Positivity { row, col, value });
            }
        }
    }
    out
}

/// Projects a non-negative row onto `{x : sum x = 1, x >= TOPIC_FLOOR}`
/// by pinning small entries at the floor and rescaling the rest.
fn floor_and_normalize(row: &mut [f64]) {
    let n = row.len();
    let mut pinned = vec![false; n];
    loop {
        let free_mass: f64 = row.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(x, _)| x.max(0.0)).sum();
        let npinned = pinned.iter().filter(|&&p| p).count();
        let budget = 1.0 - npinned as f64 * TOPIC_FLOOR;
        let scale = if free_mass > 0.0 { budget / free_mass } else { 0.0 };
        let mut changed = false;
        for j in 0..n {
            if !pinned[j] && row[j].max(0.0) * scale < TOPIC_FLOOR {
                pinned[j] = true;
                changed = true;
            }
        }
        if !changed {
            for j in 0..n {
                row[j] = if pinned[j] { TOPIC_FLOOR } else { row[j] * scale };
            }
            return;
        }
        if pinned.iter().all(|&p| p) {
            row.fill(1.0 / n as f64);
            return;
        }
    }
}

/// K topics over a V-term vocabulary, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMatrix {
    num_topics: usize,
    vocab_size: usize,
    data: Vec<f64>,
}

impl TopicMatrix {
    /// Wraps a row-major buffer, rejecting it unless every invariant holds.
    pub fn new(num_topics: usize, vocab_size: usize, data: Vec<f64>) -> Result<Self> {
        let violations = validate_topic_matrix(num_topics, vocab_size, &data);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(Self {
            num_topics,
            vocab_size,
            data,
        })
    }

    /// Normalizes arbitrary non-negative weights into valid topics,
    /// enforcing the positivity floor.
    pub fn from_weights(num_topics: usize, vocab_size: usize, mut data: Vec<f64>) -> Result<Self> {
        if num_topics == 0 || vocab_size == 0 || data.len() != num_topics * vocab_size {
            return Err(Error::InvalidArgument(format!(
                "expected {num_topics}x{vocab_size} weights, found {}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument("topic weights must be finite and non-negative".into()));
        }
        for row in data.chunks_exact_mut(vocab_size) {
            floor_and_normalize(row);
        }
        Self::new(num_topics, vocab_size, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let v = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != v) {
            return Err(Error::InvalidArgument("ragged topic rows".into()));
        }
        Self::new(k, v, rows.concat())
    }

    /// Every topic equal to the uniform distribution over V terms.
    pub fn uniform(num_topics: usize, vocab_size: usize) -> Result<Self> {
        Self::new(
            num_topics,
            vocab_size,
            vec![1.0 / vocab_size as f64; num_topics * vocab_size],
        )
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.vocab_size + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn violations(&self) -> Vec<Violation> {
        validate_topic_matrix(self.num_topics, self.vocab_size, &self.data)
    }

    /// Column `j` as a dense K-vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.num_topics).map(|k| self.get(k, j)).collect()
    }
}

/// Sparse point on the K-simplex; only nonzero weights are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicProportion {
    num_topics: usize,
    entries: Vec<(usize, f64)>,
}

impl TopicProportion {
    pub fn new(num_topics: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(k, _)| k);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate topic id in proportion".into()));
        }
        if let Some(&(k, _)) = entries.iter().find(|&&(k, _)| k >= num_topics) {
            return Err(Error::InvalidArgument(format!("topic id {k} out of range for K={num_topics}")));
        }
        if entries.iter().any(|&(_, w)| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("topic weights must be positive and finite".into()));
        }
        let sum: f64 = entries.iter().map(|&(_, w)| w).sum();
        if !((sum - 1.0).abs() <= SIMPLEX_TOL) {
            return Err(Error::InvalidArgument(format!("topic weights sum to {sum}, not 1")));
        }
        Ok(Self { num_topics, entries })
    }

    /// Keeps the strictly positive coordinates of a dense simplex point.
    pub fn from_dense(theta: &[f64]) -> Result<Self> {
        let entries = theta
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| (k, w))
            .collect();
        Self::new(theta.len(), entries)
    }

    pub fn vertex(num_topics: usize, k: usize) -> Result<Self> {
        Self::new(num_topics, vec![(k, 1.0)])
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.entries
            .binary_search_by_key(&k, |&(t, _)| t)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_topics];
        for &(k, w) in &self.entries {
            out[k] = w;
        }
        out
    }

    /// Topic with the largest weight (lowest id on ties).
    pub fn dominant(&self) -> (usize, f64) {
        self.entries
            .iter()
            .copied()
            .fold((0, f64::NEG_INFINITY), |best, e| if e.1 > best.1 { e } else { best })
    }
}

/// The barycenter `(1/K, ..., 1/K)` of the K-simplex.
pub fn simplex_barycenter(num_topics: usize) -> Result<TopicProportion> {
    if num_topics == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let w = 1.0 / num_topics as f64;
    TopicProportion::new(num_topics, (0..num_topics).map(|k| (k, w)).collect())
}

/// Where the Frank-Wolfe iteration starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Start {
    /// The simplex vertex with the largest objective value.
    #[default]
    BestVertex,
    /// `(1/K, ..., 1/K)`; required for objectives undefined on the boundary.
    Barycenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Cap on nonzeros; the solver stops after `max_nnz - 1` iterations.
    pub max_nnz: Option<usize>,
    pub start: Start,
    pub line_search_tol: f64,
    pub line_search_max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            rel_tol: 1e-6,
            max_nnz: None,
            start: Start::BestVertex,
            line_search_tol: 1e-10,
            line_search_max_steps: 60,
        }
    }
}

impl SolverConfig {
    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_nnz(mut self, max_nnz: usize) -> Self {
        self.max_nnz = Some(max_nnz);
        self
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        if self.max_nnz == Some(0) {
            return Err(Error::InvalidConfig("max_nnz must be at least 1".into()));
        }
        if !(self.line_search_tol > 0.0) || self.line_search_max_steps == 0 {
            return Err(Error::InvalidConfig("line search tolerance and step budget must be positive".into()));
        }
        Ok(())
    }

    /// Iteration budget after folding in the sparsity cap.
    pub fn iteration_budget(&self) -> usize {
        match self.max_nnz {
            Some(cap) => self.max_iters.min(cap - 1),
            None => self.max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub theta: TopicProportion,
    pub iterations: usize,
    pub objective: f64,
    pub elapsed: Duration,
    pub nnz: usize,
}
