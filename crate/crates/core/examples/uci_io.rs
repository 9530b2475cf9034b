//! Reading and writing UCI bag-of-words corpora, model files and proportions.
//!
//! ```text
//! cargo run --example uci_io
//! ```

use fwtopic::eval::{evaluate, Inference};
use fwtopic::io::{load_model, load_uci_bow, read_thetas, save_model, write_thetas, ModelFile};
use fwtopic::learning::{train, TrainConfig};
use fwtopic::objective::ObjectiveKind;
use fwtopic::SolverConfig;

const DOCWORD: &str = "4\n6\n9\n1 1 3\n1 2 2\n1 3 1\n2 4 2\n2 5 3\n3 1 1\n3 6 2\n4 2 4\n4 3 1\n";
const VOCAB: &str = "apple\nbanana\ncherry\nhammer\nnail\nsaw\n";

fn main() -> fwtopic::Result<()> {
    let dir = std::env::temp_dir().join(format!("fwtopic-uci-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (dw, vocab) = (dir.join("docword.txt"), dir.join("vocab.txt"));
    std::fs::write(&dw, DOCWORD)?;
    std::fs::write(&vocab, VOCAB)?;

    let loaded = load_uci_bow(&dw, Some(&vocab))?;
    let corpus = &loaded.corpus;
    println!("{} documents, {} terms, {} tokens", corpus.len(), corpus.vocab_size(), corpus.total_length());

    let mut cfg = TrainConfig::new(2);
    cfg.seed = 1;
    let trained = train(corpus, &cfg)?;
    let path = dir.join("topics.model");
    save_model(&ModelFile::new(trained.topics).with_meta("seed", 1), &path)?;
    print!("{}", std::fs::read_to_string(&path)?);

    let model = load_model(&path)?;
    for k in 0..model.topics.num_topics() {
        let mut terms: Vec<(usize, f64)> = model.topics.row(k).iter().copied().enumerate().collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<&str> = terms[..3].iter().filter_map(|(j, _)| corpus.vocabulary().term(*j)).collect();
        println!("topic {k}: {}", top.join(" "));
    }

    let fw = Inference::FrankWolfe {
        objective: ObjectiveKind::Likelihood,
        solver: SolverConfig::default(),
    };
    let report = evaluate(corpus, &model.topics, &fw, 1)?;
    let mut buf = Vec::new();
    write_thetas(corpus.doc_ids(), &report.thetas, &mut buf)?;
    let text = String::from_utf8_lossy(&buf);
    print!("{text}");
    assert_eq!(read_thetas(&text, 2)?.len(), corpus.len());

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
