//! Exploratory profiles and team composition on a synthetic corpus.

use teamscope::cognitive::{
    fit_thresholds, threshold_sample, CognitiveEngine, ProfileParams, ThresholdBasis,
};
use teamscope::synth::{generate, Archetype, SynthConfig};

fn main() -> teamscope::Result<()> {
    let corpus = generate(&SynthConfig {
        n_docs: 600,
        n_authors: 90,
        ..SynthConfig::default()
    })?;
    let index = corpus.index()?;
    let store = corpus.store()?;
    let engine = CognitiveEngine::new(&index, &store, ProfileParams::default());
    let scores = corpus
        .docs
        .iter()
        .map(|d| engine.team_scores(&d.doc_id))
        .collect::<Result<Vec<_>, _>>()?;
    let th = fit_thresholds(&threshold_sample(&scores, ThresholdBasis::AuthorScores))?;
    println!(
        "cutoffs: exploratory >= {:.4}, exploitative <= {:.4}",
        th.exploratory_cutoff, th.exploitative_cutoff
    );

    let diffuse = corpus.authors_of(Archetype::Diffuse);
    for d in corpus.docs.iter().rev().take(5) {
        let m = engine.team_composition(&d.doc_id, &th)?;
        let planted = d.author_ids.iter().filter(|a| diffuse.contains(*a)).count();
        println!(
            "{}: intra {:?} inter {:?} exploratory {:.2} exploitative {:.2} (planted diffuse {planted}/{})",
            d.doc_id, m.intra_fp, m.inter_fp, m.share_exploratory, m.share_exploitative, m.team_size
        );
    }
    Ok(())
}
