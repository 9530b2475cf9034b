//! MAP inference under a Dirichlet prior and under a logistic-normal prior,
//! the latter with and without a mean (which turns on the capped simplex).
//!
//! ```text
//! cargo run --example map_priors
//! ```

use fwtopic::model::{Document, Start};
use fwtopic::objective::{ctm_map_objective, lda_map_objective, ml_objective, CtmPrior, Objective};
use fwtopic::{fw_solve, fw_solve_capped, SolverConfig, TopicMatrix};
use nalgebra::DMatrix;

fn show(label: &str, theta: &[f64], value: f64) {
    let parts: Vec<String> = theta.iter().map(|x| format!("{x:.4}")).collect();
    println!("{label:<22} f = {value:>10.5}  theta = [{}]", parts.join(", "));
}

fn main() -> fwtopic::Result<()> {
    let topics = TopicMatrix::from_rows(&[
        vec![0.70, 0.10, 0.10, 0.05, 0.05],
        vec![0.05, 0.70, 0.10, 0.10, 0.05],
        vec![0.05, 0.05, 0.10, 0.10, 0.70],
    ])?;
    let doc = Document::new(vec![(0, 6.0), (1, 2.0), (3, 1.0)])?;
    let cfg = SolverConfig::default();

    let (ml, _) = fw_solve(&ml_objective(&doc, &topics)?, &cfg)?;
    show("likelihood", &ml.theta.to_dense(), ml.objective);

    // alpha = 1 is the likelihood itself; larger alpha pulls toward the center.
    let bary = cfg.clone().with_start(Start::Barycenter);
    for alpha in [1.0, 1.5, 3.0] {
        let f = lda_map_objective(&doc, &topics, &[alpha; 3])?;
        let run = if alpha > 1.0 { &bary } else { &cfg };
        let (r, _) = fw_solve(&f, run)?;
        show(&format!("dirichlet alpha={alpha}"), &r.theta.to_dense(), r.objective);
    }
    match lda_map_objective(&doc, &topics, &[0.5; 3]) {
        Err(e) => println!("alpha=0.5 rejected: {e}"),
        Ok(_) => unreachable!(),
    }

    // Topics 0 and 1 positively correlated under the prior.
    let precision = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
    let prior = CtmPrior::new(precision.clone(), None)?;
    let f = ctm_map_objective(&doc, &topics, &prior)?;
    let (r, _) = fw_solve(&f, &bary)?;
    show("logistic-normal", &r.theta.to_dense(), r.objective);

    // A mean bounds each coordinate by exp(mu_k).
    let prior = CtmPrior::new(precision, Some(vec![(0.45f64).ln(), (0.6f64).ln(), 0.0]))?;
    let caps = prior.caps().expect("prior has a mean");
    let f = ctm_map_objective(&doc, &topics, &prior)?;
    let (r, _) = fw_solve_capped(&f, &caps, &cfg)?;
    show("logistic-normal, mean", &r.theta.to_dense(), r.objective);
    println!("caps = {caps:.3?}, domain {:?}", f.domain());
    Ok(())
}
