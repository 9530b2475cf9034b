//! The `fwtopic` command line: `train`, `infer`, `eval`, `tradeoff`, `synth`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::{evaluate, tradeoff_sweep, write_report_csv, Inference};
use crate::io::{load_model, load_prior, load_uci_bow, save_model, save_uci_bow, write_thetas, ModelFile};
use crate::learning::{generate_synthetic_corpus, train, SynthConfig, TrainConfig};
use crate::model::{Corpus, SolverConfig, Start};
use crate::objective::{Domain, ObjectiveKind};

#[derive(Debug, Parser)]
#[command(name = "fwtopic", version, about = "Sparse Frank-Wolfe inference for topic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Ml,
    LdaMap,
    Ctm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StartArg {
    Vertex,
    Barycenter,
}

#[derive(Debug, clap::Args)]
struct CorpusArgs {
    /// UCI docword file
    #[arg(long)]
    corpus: PathBuf,
    /// UCI vocabulary file
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SolverArgs {
    /// Relative change of the objective at which a solve stops
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Maximum iterations per document
    #[arg(long, default_value_t = 1000)]
    iters: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig::default().with_rel_tol(self.tol).with_max_iters(self.iters)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn topics by EM and write a model plus its likelihood trace
    Train {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long)]
        topics: usize,
        #[arg(long, default_value_t = 50)]
        em_iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        em_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Model path; the trace goes to `<out>.likelihood.csv`
        #[arg(long)]
        out: PathBuf,
    },
    /// Infer sparse topic proportions, one line `docID k:w ...` per document
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long, value_enum, default_value = "ml")]
        objective: ObjectiveArg,
        /// Symmetric Dirichlet parameter (>= 1) for lda-map
        #[arg(long)]
        alpha: Option<f64>,
        /// Precision matrix file (optionally followed by a mean row) for ctm
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long)]
        max_nnz: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum)]
        start: Option<StartArg>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare inference methods on a test corpus
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long, value_delimiter = ',', default_value = "fw,folding,vb")]
        methods: Vec<String>,
        /// Symmetric Dirichlet parameter for variational Bayes
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep Frank-Wolfe over caps on the number of nonzero topics
    Tradeoff {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        caps: Vec<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus and its ground truth
    Synth {
        #[arg(long)]
        topics: usize,
        #[arg(long)]
        vocab: usize,
        #[arg(long)]
        docs: usize,
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dirichlet parameter of document proportions
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Writes `<p>.docword.txt`, `<p>.vocab.txt`, `<p>.model`, `<p>.theta.txt`
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 2 on usage errors, 1 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_corpus(input: &CorpusArgs) -> Result<Corpus> {
    let loaded = load_uci_bow(&input.corpus, input.vocab.as_deref())?;
    if loaded.dropped_empty > 0 {
        eprintln!("warning: {}: dropped {} empty documents", input.corpus.display(), loaded.dropped_empty);
    }
    Ok(loaded.corpus)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train {
            input,
            topics,
            em_iters,
            em_tol,
            seed,
            threads,
            out,
        } => {
            let corpus = load_corpus(&input)?;
            let mut cfg = TrainConfig::new(topics);
            cfg.em_iters = em_iters;
            cfg.em_rel_tol = em_tol;
            cfg.seed = seed;
            cfg.threads = threads;
            let trained = train(&corpus, &cfg)?;
            let model = ModelFile::new(trained.topics)
                .with_meta("seed", seed)
                .with_meta("em_iters", em_iters)
                .with_meta("corpus", input.corpus.display());
            save_model(&model, &out)?;
            let mut trace = create(&with_suffix(&out, ".likelihood.csv"))?;
            writeln!(trace, "iteration,log_likelihood")?;
            for (i, ll) in trained.log_likelihood.iter().enumerate() {
                writeln!(trace, "{i},{ll}")?;
            }
            trace.flush()?;
        }
        Command::Infer {
            model,
            input,
            objective,
            alpha,
            prior,
            max_nnz,
            solver,
            start,
            threads,
            out,
        } => {
            let topics = load_model(&model)?.topics;
            let k = topics.num_topics();
            let corpus = load_corpus(&input)?;
            let kind = match (objective, alpha, prior) {
                (ObjectiveArg::Ml, None, None) => ObjectiveKind::Likelihood,
                (ObjectiveArg::LdaMap, Some(a), None) => ObjectiveKind::LdaMap { alpha: vec![a; k] },
                (ObjectiveArg::Ctm, None, Some(p)) => ObjectiveKind::Ctm { prior: load_prior(&p)? },
                (ObjectiveArg::LdaMap, None, _) => {
                    return Err(Error::InvalidConfig("--objective lda-map requires --alpha".into()))
                }
                (ObjectiveArg::Ctm, _, None) => {
                    return Err(Error::InvalidConfig("--objective ctm requires --prior".into()))
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "--alpha applies only to lda-map and --prior only to ctm".into(),
                    ))
                }
            };
            let mut cfg = solver.config();
            cfg.max_nnz = max_nnz;
            let interior = kind.build(&corpus.documents()[0], &topics)?.domain() == Domain::InteriorOnly;
            cfg.start = match start {
                Some(StartArg::Vertex) if interior => {
                    return Err(Error::InvalidConfig(
                        "this objective is undefined on the simplex boundary; use --start barycenter".into(),
                    ))
                }
                Some(StartArg::Vertex) => Start::BestVertex,
                Some(StartArg::Barycenter) => Start::Barycenter,
                None if interior => Start::Barycenter,
                None => Start::BestVertex,
            };
            let method = Inference::FrankWolfe { objective: kind, solver: cfg };
            let report = evaluate(&corpus, &topics, &method, threads)?;
            let mut w = create(&out)?;
            write_thetas(corpus.doc_ids(), &report.thetas, &mut w)?;
            w.flush()?;
        }
        Command::Eval {
            model,
            input,
            methods,
            alpha,
            solver,
            out,
        } => {
            let topics = load_model(&model)?.topics;
            let corpus = load_corpus(&input)?;
            let cfg = solver.config();
            let alpha = vec![alpha; topics.num_topics()];
            let mut picked = Vec::new();
            for m in &methods {
                let method = match m.trim() {
                    "fw" => Inference::FrankWolfe {
                        objective: ObjectiveKind::Likelihood,
                        solver: cfg.clone(),
                    },
                    "folding" => Inference::FoldingIn { solver: cfg.clone() },
                    "vb" => Inference::VariationalBayes {
                        alpha: alpha.clone(),
                        solver: cfg.clone(),
                    },
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown method {other:?}; expected fw, folding or vb"
                        )))
                    }
                };
                let mut report = evaluate(&corpus, &topics, &method, 1)?;
                report.cap = Some(cfg.max_iters);
                picked.push(report);
            }
            let mut w = create(&out)?;
            write_report_csv(&picked, &mut w)?;
            w.flush()?;
        }
        Command::Tradeoff {
            model,
            input,
            caps,
            solver,
            out,
        } => {
            let topics = load_model(&model)?.topics;
            let corpus = load_corpus(&input)?;
            let rows = tradeoff_sweep(&corpus, &topics, &ObjectiveKind::Likelihood, &caps, &solver.config())?;
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    write_report_csv(&rows, &mut w)?;
                    w.flush()?;
                }
                None => write_report_csv(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Synth {
            topics,
            vocab,
            docs,
            len,
            seed,
            alpha,
            out_prefix,
        } => {
            let synth = generate_synthetic_corpus(&SynthConfig::new(topics, vocab, docs, len, alpha, seed))?;
            save_uci_bow(
                &synth.corpus,
                &with_suffix(&out_prefix, ".docword.txt"),
                Some(&with_suffix(&out_prefix, ".vocab.txt")),
            )?;
            let model = ModelFile::new(synth.topics.clone())
                .with_meta("source", "synthetic ground truth")
                .with_meta("seed", seed);
            save_model(&model, &with_suffix(&out_prefix, ".model"))?;
            let mut w = create(&with_suffix(&out_prefix, ".theta.txt"))?;
            write_thetas(synth.corpus.doc_ids(), &synth.thetas, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
