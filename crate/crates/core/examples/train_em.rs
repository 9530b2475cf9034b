//! Learning topics by EM with sparse Frank-Wolfe E-steps, then checking how
//! well the learned topics explain held-out text.
//!
//! ```text
//! cargo run --release --example train_em
//! ```

use fwtopic::eval::{perplexity, Inference};
use fwtopic::learning::{generate_synthetic_corpus, train, SynthConfig, TrainConfig};
use fwtopic::objective::ObjectiveKind;
use fwtopic::SolverConfig;

fn main() -> fwtopic::Result<()> {
    let synth = generate_synthetic_corpus(&SynthConfig::new(8, 150, 300, 80, 0.1, 21))?;
    let mut cfg = TrainConfig::new(8);
    cfg.em_iters = 30;
    cfg.threads = 4;
    cfg.seed = 3;
    let out = train(&synth.corpus, &cfg)?;
    for (i, ll) in out.log_likelihood.iter().enumerate() {
        println!("iter {i:>2}  log-likelihood {ll:.3}");
    }

    let (heldout, _) = synth.sample_documents(100, 22)?;
    let fw = Inference::FrankWolfe {
        objective: ObjectiveKind::Likelihood,
        solver: SolverConfig::default(),
    };
    println!("held-out perplexity, learned topics: {:.3}", perplexity(&heldout, &out.topics, &fw)?);
    println!("held-out perplexity, true topics:    {:.3}", perplexity(&heldout, &synth.topics, &fw)?);
    println!("vocabulary size:                     {}", heldout.vocab_size());

    let mean_nnz = out.thetas.iter().map(|t| t.nnz() as f64).sum::<f64>() / out.thetas.len() as f64;
    println!("mean topics per training document:   {mean_nnz:.2}");
    Ok(())
}
