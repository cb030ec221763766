//! Citation-switching null model.
//!
//! Within the citing papers of one year, two reference slots whose cited items
//! share a publication year exchange their entities. Each paper keeps its
//! reference count and the year profile of what it cites; only the journal
//! combinations move. MeSH slots have no cited year and form a single stratum.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EntityKind, EntityVocabulary, Pair, PairCountTable};
use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::quantile::ordered_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullConfig {
    pub resamples: usize,
    /// Swap attempts per resample, as a multiple of the slot count.
    pub swap_factor: usize,
    pub seed: u64,
}

impl Default for NullConfig {
    fn default() -> Self {
        Self {
            resamples: 20,
            swap_factor: 10,
            seed: 0,
        }
    }
}

/// Stratum key of a reference slot: cited-item year, `None` when unknown.
pub type Stratum = Option<i32>;

/// Entity slots of every citing paper of one year, in doc-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotLayout {
    pub year: i32,
    pub doc_ids: Vec<String>,
    pub slots: Vec<Vec<(u32, Stratum)>>,
}

impl SlotLayout {
    pub fn build(
        index: &CorpusIndex,
        vocab: &EntityVocabulary,
        kind: EntityKind,
        year: i32,
    ) -> Self {
        let mut doc_ids = Vec::new();
        let mut slots = Vec::new();
        for doc in index.docs_in_year(year) {
            let s: Vec<(u32, Stratum)> = match kind {
                EntityKind::Journal => doc
                    .ref_journal_issns
                    .iter()
                    .enumerate()
                    .filter(|(_, issn)| !issn.is_empty())
                    .filter_map(|(k, issn)| Some((vocab.id(issn)?, index.ref_year(doc, k))))
                    .collect(),
                EntityKind::Mesh => doc
                    .mesh_terms
                    .iter()
                    .filter_map(|m| Some((vocab.id(m)?, Some(0))))
                    .collect(),
            };
            doc_ids.push(doc.doc_id.clone());
            slots.push(s);
        }
        Self {
            year,
            doc_ids,
            slots,
        }
    }

    pub fn n_slots(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }

    pub fn table(&self) -> PairCountTable {
        let mut t = PairCountTable::new(self.year);
        for s in &self.slots {
            let ents: Vec<u32> = s.iter().map(|(e, _)| *e).collect();
            t.add_entities(&ents);
        }
        t
    }
}

/// One citation-switching resample of `layout`.
pub fn resample_once<R: Rng>(layout: &SlotLayout, swap_factor: usize, rng: &mut R) -> SlotLayout {
    let mut flat: Vec<(usize, u32, Stratum)> = Vec::with_capacity(layout.n_slots());
    for (d, s) in layout.slots.iter().enumerate() {
        flat.extend(s.iter().map(|(e, st)| (d, *e, *st)));
    }
    let mut strata: BTreeMap<Stratum, Vec<usize>> = BTreeMap::new();
    for (k, (_, _, st)) in flat.iter().enumerate() {
        strata.entry(*st).or_default().push(k);
    }
    let n = flat.len();
    if n > 1 {
        for _ in 0..swap_factor * n {
            let a = rng.gen_range(0..n);
            let group = &strata[&flat[a].2];
            if group.len() < 2 {
                continue;
            }
            let b = group[rng.gen_range(0..group.len())];
            if flat[a].0 == flat[b].0 {
                continue;
            }
            let ea = flat[a].1;
            flat[a].1 = flat[b].1;
            flat[b].1 = ea;
        }
    }
    let mut slots: Vec<Vec<(u32, Stratum)>> = layout
        .slots
        .iter()
        .map(|s| Vec::with_capacity(s.len()))
        .collect();
    for (d, e, st) in flat {
        slots[d].push((e, st));
    }
    SlotLayout {
        year: layout.year,
        doc_ids: layout.doc_ids.clone(),
        slots,
    }
}

/// `resamples` independent resampled tables; resample `r` is seeded with
/// `seed + r`, so the result does not depend on scheduling.
pub fn resample_tables(layout: &SlotLayout, cfg: &NullConfig) -> Vec<PairCountTable> {
    (0..cfg.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
            resample_once(layout, cfg.swap_factor, &mut rng).table()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullModelStats {
    pub year: i32,
    pub resamples: usize,
    pub seed: u64,
    /// Pair -> (mean, sample standard deviation) over the resamples.
    pub stats: BTreeMap<Pair, (f64, f64)>,
}

impl NullModelStats {
    /// Per-pair mean and sample standard deviation over `tables`, for every
    /// pair seen in `observed` or any resample.
    pub fn from_tables(
        observed: &PairCountTable,
        tables: &[PairCountTable],
        seed: u64,
    ) -> Result<Self> {
        let m = tables.len();
        if m < 2 {
            return Err(Error::invalid("null model needs at least 2 resamples"));
        }
        let mut keys: BTreeMap<Pair, ()> = observed.iter().map(|(p, _)| (p, ())).collect();
        for t in tables {
            keys.extend(t.iter().map(|(p, _)| (p, ())));
        }
        let stats = keys
            .into_keys()
            .map(|(i, j)| {
                let xs: Vec<f64> = tables.iter().map(|t| t.get(i, j) as f64).collect();
                let mean = ordered_sum(&xs) / m as f64;
                let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
                let var = ordered_sum(&dev) / (m - 1) as f64;
                ((i, j), (mean, var.sqrt()))
            })
            .collect();
        Ok(Self {
            year: observed.year,
            resamples: m,
            seed,
            stats,
        })
    }

    pub fn get(&self, i: u32, j: u32) -> Option<(f64, f64)> {
        self.stats.get(&super::ordered(i, j)).copied()
    }
}

pub fn null_resample(
    index: &CorpusIndex,
    vocab: &EntityVocabulary,
    kind: EntityKind,
    year: i32,
    cfg: &NullConfig,
) -> Result<NullModelStats> {
    if cfg.resamples < 2 {
        return Err(Error::invalid("null model needs at least 2 resamples"));
    }
    let layout = SlotLayout::build(index, vocab, kind, year);
    let tables = resample_tables(&layout, cfg);
    NullModelStats::from_tables(&layout.table(), &tables, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(slots: Vec<Vec<(u32, Stratum)>>) -> SlotLayout {
        SlotLayout {
            year: 2000,
            doc_ids: (0..slots.len()).map(|i| format!("d{i}")).collect(),
            slots,
        }
    }

    #[test]
    fn identical_docs_give_zero_sigma() {
        let l = layout(vec![vec![(0, Some(1990)), (1, Some(1991))]; 4]);
        let cfg = NullConfig {
            resamples: 20,
            swap_factor: 10,
            seed: 5,
        };
        let tables = resample_tables(&l, &cfg);
        let s = NullModelStats::from_tables(&l.table(), &tables, 5).unwrap();
        for (mu, sd) in s.stats.values() {
            assert_eq!(*sd, 0.0);
            assert!(*mu > 0.0);
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let l = layout(vec![
            vec![(0, Some(1)), (1, Some(2)), (2, Some(1))],
            vec![(3, Some(1)), (4, Some(2))],
            vec![(5, Some(2)), (0, Some(1)), (1, Some(1))],
        ]);
        let cfg = NullConfig {
            resamples: 20,
            swap_factor: 10,
            seed: 99,
        };
        let a = NullModelStats::from_tables(&l.table(), &resample_tables(&l, &cfg), 99).unwrap();
        let b = NullModelStats::from_tables(&l.table(), &resample_tables(&l, &cfg), 99).unwrap();
        assert_eq!(a, b);
        assert!(NullModelStats::from_tables(
            &l.table(),
            &resample_tables(
                &l,
                &NullConfig {
                    resamples: 1,
                    ..cfg
                }
            ),
            0
        )
        .is_err());
    }

    #[test]
    fn two_swappable_slots_reach_only_two_matchings() {
        // d0 = [A(1990), B(1995)], d1 = [C(1990), D(2001)], d2 = [E(2002), F(2003)].
        // Only the two 1990 slots can trade, so every resample is either the
        // observed layout or the one with A and C exchanged.
        let l = layout(vec![
            vec![(0, Some(1990)), (1, Some(1995))],
            vec![(2, Some(1990)), (3, Some(2001))],
            vec![(4, Some(2002)), (5, Some(2003))],
        ]);
        let swapped = layout(vec![
            vec![(2, Some(1990)), (1, Some(1995))],
            vec![(0, Some(1990)), (3, Some(2001))],
            vec![(4, Some(2002)), (5, Some(2003))],
        ]);
        let cfg = NullConfig {
            resamples: 40,
            swap_factor: 10,
            seed: 1,
        };
        let tables = resample_tables(&l, &cfg);
        let (t_obs, t_swap) = (l.table(), swapped.table());
        let k = tables.iter().filter(|t| **t == t_obs).count();
        assert_eq!(
            k + tables.iter().filter(|t| **t == t_swap).count(),
            tables.len()
        );
        let s = NullModelStats::from_tables(&t_obs, &tables, 1).unwrap();
        let frac_obs = k as f64 / tables.len() as f64;
        // enumeration over the two matchings: N_AB is 1 in the observed one only
        assert!((s.get(0, 1).unwrap().0 - frac_obs).abs() < 1e-12);
        assert!((s.get(1, 2).unwrap().0 - (1.0 - frac_obs)).abs() < 1e-12);
        assert_eq!(s.get(4, 5).unwrap(), (1.0, 0.0));
    }
}
