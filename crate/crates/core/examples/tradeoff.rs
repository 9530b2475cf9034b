//! Perplexity and sparsity as the number of Frank-Wolfe iterations grows.
//!
//! ```text
//! cargo run --release --example tradeoff
//! ```

use fwtopic::eval::tradeoff_sweep;
use fwtopic::learning::{generate_synthetic_corpus, SynthConfig};
use fwtopic::objective::ObjectiveKind;
use fwtopic::SolverConfig;

fn main() -> fwtopic::Result<()> {
    let synth = generate_synthetic_corpus(&SynthConfig::new(50, 400, 10, 100, 0.05, 5))?;
    let (heldout, _) = synth.sample_documents(100, 6)?;
    let caps = [1, 2, 3, 5, 10, 20, 50, 200];
    let rows = tradeoff_sweep(
        &heldout,
        &synth.topics,
        &ObjectiveKind::Likelihood,
        &caps,
        &SolverConfig::default(),
    )?;
    println!("{:>5} {:>11} {:>9} {:>9}", "cap", "perplexity", "mean nnz", "ms");
    for r in &rows {
        println!(
            "{:>5} {:>11.4} {:>9.2} {:>9.2}",
            r.cap.unwrap_or(0),
            r.perplexity,
            r.mean_nnz,
            r.total_time.as_secs_f64() * 1e3
        );
    }
    Ok(())
}
