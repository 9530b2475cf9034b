//! Frank-Wolfe, folding-in and variational Bayes on a held-out synthetic set.
//!
//! ```text
//! cargo run --release --example compare_methods
//! ```

use fwtopic::eval::{compare_methods, write_report_csv};
use fwtopic::learning::{generate_synthetic_corpus, SynthConfig};
use fwtopic::SolverConfig;

fn main() -> fwtopic::Result<()> {
    let synth = generate_synthetic_corpus(&SynthConfig::new(10, 200, 100, 100, 0.1, 1))?;
    let (heldout, _) = synth.sample_documents(200, 2)?;
    let cfg = SolverConfig::default().with_rel_tol(1e-6).with_max_iters(1000);
    let reports = compare_methods(&heldout, &synth.topics, &[0.1; 10], &cfg)?;
    for r in &reports {
        println!(
            "{:<8} perplexity {:>8.3}  sparsity {:.3}  {:>8.2} ms",
            r.method,
            r.perplexity,
            r.mean_sparsity,
            r.total_time.as_secs_f64() * 1e3
        );
    }
    println!();
    write_report_csv(&reports, std::io::stdout().lock())?;
    Ok(())
}
