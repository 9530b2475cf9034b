//! Sparse maximum-likelihood inference of one document's topic proportions.
//!
//! ```text
//! cargo run --example infer_sparse
//! ```

use fwtopic::learning::{generate_synthetic_corpus, SynthConfig};
use fwtopic::objective::ml_objective;
use fwtopic::{fw_solve, SolverConfig};

fn main() -> fwtopic::Result<()> {
    let synth = generate_synthetic_corpus(&SynthConfig::new(20, 300, 5, 150, 0.1, 11))?;
    let topics = &synth.topics;
    let cfg = SolverConfig::default();

    for (d, doc) in synth.corpus.documents().iter().enumerate() {
        let f = ml_objective(doc, topics)?;
        let (report, trace) = fw_solve(&f, &cfg)?;
        println!(
            "doc {d}: {} iterations, log-likelihood {:.4}, {} of {} topics nonzero",
            report.iterations,
            report.objective,
            report.nnz,
            topics.num_topics()
        );
        let truth: Vec<String> = synth.thetas[d]
            .entries()
            .iter()
            .filter(|(_, w)| *w > 0.01)
            .map(|(k, w)| format!("{k}:{w:.2}"))
            .collect();
        let found: Vec<String> = report.theta.entries().iter().map(|(k, w)| format!("{k}:{w:.2}")).collect();
        println!("  true  {}", truth.join(" "));
        println!("  found {}", found.join(" "));
        if d == 0 {
            trace.write_csv(std::io::stdout().lock())?;
        }
    }

    // A cap on the support: at most 3 topics per document.
    let doc = &synth.corpus.documents()[0];
    let (capped, _) = fw_solve(&ml_objective(doc, topics)?, &cfg.clone().with_max_nnz(3))?;
    println!("with max_nnz = 3: nnz {} objective {:.4}", capped.nnz, capped.objective);
    Ok(())
}
