//! Pair counts, commonness and the citation-switching null model for one year.

use teamscope::cooc::{
    commonness, resample_tables, EntityKind, NullConfig, NullModelStats, SlotLayout, YearTables,
};
use teamscope::synth::{generate, SynthConfig};

fn main() -> teamscope::Result<()> {
    let corpus = generate(&SynthConfig {
        n_docs: 400,
        ..SynthConfig::default()
    })?;
    let index = corpus.index()?;
    let tables = YearTables::build(&index, EntityKind::Journal);
    let year = *tables.counts.keys().last().unwrap();
    let observed = tables.table(year).unwrap();
    let layout = SlotLayout::build(&index, &tables.vocab, EntityKind::Journal, year);
    let cfg = NullConfig {
        resamples: 50,
        swap_factor: 10,
        seed: 1,
    };
    let null =
        NullModelStats::from_tables(&layout.table(), &resample_tables(&layout, &cfg), cfg.seed)?;

    let mut pairs: Vec<_> = observed.iter().collect();
    pairs.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
    println!(
        "{year}: {} slots, {} pairs",
        layout.n_slots(),
        observed.n_cells()
    );
    for ((i, j), n) in pairs.into_iter().take(8) {
        let (mean, sd) = null.get(i, j).unwrap();
        println!(
            "{} x {}: n={n} commonness={:.3} null mean={mean:.2} sd={sd:.2}",
            tables.vocab.name(i),
            tables.vocab.name(j),
            commonness(observed, i, j)
        );
    }
    Ok(())
}
