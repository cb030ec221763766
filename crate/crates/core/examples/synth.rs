//! Generate a synthetic corpus with planted ground truth and write it out.

use teamscope::synth::{generate, Archetype, SynthConfig};

fn main() -> teamscope::Result<()> {
    let cfg = SynthConfig {
        n_docs: 300,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg)?;
    let dir = std::env::temp_dir().join("teamscope-synth-example");
    corpus.write(&dir)?;
    println!(
        "{} docs, {} journals, {} labelled, {} diffuse authors -> {}",
        corpus.docs.len(),
        corpus.journals.len(),
        corpus.labels.len(),
        corpus.authors_of(Archetype::Diffuse).len(),
        dir.display()
    );
    Ok(())
}
