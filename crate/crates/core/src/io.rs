//! File formats: UCI bag-of-words corpora, the topic model text format,
//! logistic-normal prior files and proportion / CSV outputs.
//!
//! Model file layout:
//!
//! ```text
//! fwtopic-model 1
//! <K> <V>
//! # key = value        (optional metadata, any number of lines)
//! <V reals>            (K lines, one topic per line)
//! ```
//!
//! Reals are written in the shortest form that parses back to the same
//! double, so a save/load round trip is bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Corpus, Document, TopicMatrix, TopicProportion, Vocabulary};
use crate::objective::CtmPrior;

pub const MODEL_MAGIC: &str = "fwtopic-model";
pub const MODEL_VERSION: u32 = 1;

/// A corpus read from disk plus what was skipped while reading it.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    /// Documents declared in the header that had no entries.
    pub dropped_empty: usize,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a UCI bag-of-words corpus.
///
/// `docword` holds three header lines (D, W, NNZ) followed by NNZ lines
/// `docID wordID count` with 1-based ids. `vocab`, when given, holds W
/// terms, one per line; otherwise terms are named `w0 .. w{W-1}`.
/// Documents keep their 1-based ids; documents without entries are dropped.
pub fn load_uci_bow(docword: &Path, vocab: Option<&Path>) -> Result<LoadedCorpus> {
    let reader = BufReader::new(fs::File::open(docword)?);
    let mut header = [0usize; 3];
    let mut lines = reader.lines().enumerate();
    for (slot, name) in header.iter_mut().zip(["D", "W", "NNZ"]) {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| format_err(docword, format!("missing header line {name}")))?;
        let line = line?;
        *slot = line
            .trim()
            .parse()
            .map_err(|e| parse_err(docword, idx + 1, format!("header {name}: {e}")))?;
    }
    let [num_docs, num_words, nnz] = header;
    if nnz == 0 {
        return Err(format_err(docword, "no documents"));
    }
    if num_words == 0 {
        return Err(format_err(docword, "vocabulary size W is 0"));
    }

    let mut per_doc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_docs];
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(docword, lineno, format!("expected 3 fields, found {}", fields.len())));
        }
        let doc: usize = fields[0]
            .parse()
            .map_err(|e| parse_err(docword, lineno, format!("docID: {e}")))?;
        let word: usize = fields[1]
            .parse()
            .map_err(|e| parse_err(docword, lineno, format!("wordID: {e}")))?;
        let count: f64 = fields[2]
            .parse()
            .map_err(|e| parse_err(docword, lineno, format!("count: {e}")))?;
        if !(count > 0.0 && count.is_finite()) {
            return Err(parse_err(docword, lineno, format!("count must be positive, got {count}")));
        }
        if word == 0 || word > num_words {
            return Err(Error::Bounds {
                path: docword.to_path_buf(),
                line: lineno,
                message: format!("wordID {word} outside 1..={num_words}"),
            });
        }
        if doc == 0 || doc > num_docs {
            return Err(Error::Bounds {
                path: docword.to_path_buf(),
                line: lineno,
                message: format!("docID {doc} outside 1..={num_docs}"),
            });
        }
        per_doc[doc - 1].push((word - 1, count));
        seen += 1;
    }
    if seen != nnz {
        return Err(format_err(docword, format!("header declares NNZ={nnz} but found {seen} entries")));
    }

    let vocabulary = match vocab {
        Some(path) => {
            let terms: Vec<String> = fs::read_to_string(path)?
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect();
            if terms.len() != num_words {
                return Err(format_err(path, format!("expected {num_words} terms, found {}", terms.len())));
            }
            Vocabulary::new(terms)?
        }
        None => Vocabulary::anonymous(num_words)?,
    };

    let mut documents = Vec::new();
    let mut ids = Vec::new();
    let mut dropped_empty = 0;
    for (i, entries) in per_doc.into_iter().enumerate() {
        if entries.is_empty() {
            dropped_empty += 1;
            continue;
        }
        documents.push(Document::new(entries)?);
        ids.push(i + 1);
    }
    if dropped_empty > 0 {
        log::warn!("{}: dropped {dropped_empty} empty documents", docword.display());
    }
    Ok(LoadedCorpus {
        corpus: Corpus::with_ids(vocabulary, documents, ids)?,
        dropped_empty,
    })
}

/// Writes a corpus in UCI bag-of-words form (docword file, and the vocabulary if a path is given).
pub fn save_uci_bow(corpus: &Corpus, docword: &Path, vocab: Option<&Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(docword)?);
    let nnz: usize = corpus.documents().iter().map(Document::num_unique).sum();
    let num_docs = corpus.doc_ids().iter().copied().max().unwrap_or(0);
    writeln!(out, "{num_docs}\n{}\n{nnz}", corpus.vocab_size())?;
    for (doc, id) in corpus.documents().iter().zip(corpus.doc_ids()) {
        for &(j, c) in doc.entries() {
            writeln!(out, "{id} {} {c}", j + 1)?;
        }
    }
    out.flush()?;
    if let Some(path) = vocab {
        let mut out = BufWriter::new(fs::File::create(path)?);
        for term in corpus.vocabulary().terms() {
            writeln!(out, "{term}")?;
        }
        out.flush()?;
    }
    Ok(())
}

/// A topic matrix with free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub topics: TopicMatrix,
    pub metadata: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn new(topics: TopicMatrix) -> Self {
        Self {
            topics,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_model(model, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_model<W: Write>(model: &ModelFile, out: &mut W) -> std::io::Result<()> {
    let topics = &model.topics;
    writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}")?;
    writeln!(out, "{} {}", topics.num_topics(), topics.vocab_size())?;
    for (k, v) in &model.metadata {
        writeln!(out, "# {k} = {v}")?;
    }
    let mut line = String::new();
    for k in 0..topics.num_topics() {
        line.clear();
        for (j, x) in topics.row(k).iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&x.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    parse_model(&fs::read_to_string(path)?, path)
}

/// Parses the model text format; `path` is only used in error messages.
pub fn parse_model(text: &str, path: &Path) -> Result<ModelFile> {
    let mut lines = text.lines().enumerate().peekable();
    let (_, first) = lines.next().ok_or_else(|| format_err(path, "empty model file"))?;
    let mut head = first.split_whitespace();
    if head.next() != Some(MODEL_MAGIC) {
        return Err(parse_err(path, 1, format!("expected `{MODEL_MAGIC} <version>` header")));
    }
    let version = head.next().unwrap_or("");
    if version != MODEL_VERSION.to_string() {
        return Err(Error::UnsupportedVersion {
            found: version.to_string(),
            expected: MODEL_VERSION,
        });
    }
    let (idx, dims) = lines.next().ok_or_else(|| format_err(path, "missing `K V` line"))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(path, idx + 1, format!("dimensions: {e}")))?;
    let [k, v] = dims[..] else {
        return Err(parse_err(path, idx + 1, "expected `K V`"));
    };

    let mut metadata = BTreeMap::new();
    while let Some((_, line)) = lines.peek() {
        let Some(rest) = line.trim_start().strip_prefix('#') else { break };
        if let Some((key, value)) = rest.split_once('=') {
            metadata.insert(key.trim().to_string(), value.trim().to_string());
        }
        lines.next();
    }

    let mut data = Vec::with_capacity(k * v);
    for row in 0..k {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| format_err(path, format!("missing topic row {} of {k}", row + 1)))?;
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|e| parse_err(path, idx + 1, format!("topic row {}: {e}", row + 1)))?,
            );
        }
        if data.len() - before != v {
            return Err(parse_err(
                path,
                idx + 1,
                format!("topic row {} has {} entries, expected {v}", row + 1, data.len() - before),
            ));
        }
    }
    if let Some((idx, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(path, idx + 1, format!("unexpected trailing content {:?}", line.trim())));
    }
    Ok(ModelFile {
        topics: TopicMatrix::new(k, v, data)?,
        metadata,
    })
}

pub fn load_prior(path: &Path) -> Result<CtmPrior> {
    CtmPrior::from_text(&fs::read_to_string(path)?)
}

/// One line per document: `docID k:w k:w ...` with 0-based topic ids.
pub fn write_thetas<W: Write>(ids: &[usize], thetas: &[TopicProportion], mut out: W) -> std::io::Result<()> {
    for (id, theta) in ids.iter().zip(thetas) {
        write!(out, "{id}")?;
        for &(k, w) in theta.entries() {
            write!(out, " {k}:{w}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Parses the output of [`write_thetas`].
pub fn read_thetas(text: &str, num_topics: usize) -> Result<Vec<(usize, TopicProportion)>> {
    let path = PathBuf::from("<thetas>");
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            let mut fields = line.split_whitespace();
            let id = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| parse_err(&path, idx + 1, "missing docID"))?;
            let entries = fields
                .map(|f| {
                    let (k, w) = f.split_once(':').ok_or_else(|| parse_err(&path, idx + 1, "expected k:w"))?;
                    let k = k.parse().map_err(|_| parse_err(&path, idx + 1, "bad topic id"))?;
                    let w = w.parse().map_err(|_| parse_err(&path, idx + 1, "bad weight"))?;
                    Ok((k, w))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((id, TopicProportion::new(num_topics, entries)?))
        })
        .collect()
}
