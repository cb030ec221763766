//! All five novelty indicators for the journal-pair view of a synthetic corpus.

use std::collections::BTreeMap;

use teamscope::cooc::{null_resample, EntityKind, NullConfig, YearTables};
use teamscope::novelty::{partitions_by_year, NoveltyEngine, NoveltyParams};
use teamscope::synth::{generate, SynthConfig};

fn main() -> teamscope::Result<()> {
    let corpus = generate(&SynthConfig {
        n_docs: 400,
        ..SynthConfig::default()
    })?;
    let index = corpus.index()?;
    let store = corpus.store()?;
    let params = NoveltyParams::default();
    let kind = EntityKind::Journal;
    let tables = YearTables::build(&index, kind);
    let years: Vec<i32> = tables.counts.keys().copied().collect();
    let mut nulls = BTreeMap::new();
    for &y in &years {
        let cfg = NullConfig {
            resamples: 20,
            swap_factor: 10,
            seed: y as u64,
        };
        nulls.insert(y, null_resample(&index, &tables.vocab, kind, y, &cfg)?);
    }
    let parts = partitions_by_year(&tables, years.iter().copied(), &params, 5);
    let engine = NoveltyEngine::new(&index, &store, &tables, &nulls, &parts, params);
    for d in corpus.docs.iter().skip(150).take(6) {
        let s = engine.score(d)?;
        println!(
            "{} ({}): uzzi {:?} lee {:?} foster {:?} wang {:?} shibayama {:?} missing {:?}",
            d.doc_id, d.year, s.uzzi, s.lee, s.foster, s.wang, s.shibayama, s.missing
        );
    }
    Ok(())
}
