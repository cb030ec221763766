//! Combinatorial novelty indicators on reference journals or MeSH terms.
//!
//! Scores are oriented so that larger means more novel. Uzzi and Lee
//! summarise the tail of a per-pair distribution; Foster counts pairs that
//! bridge communities; Wang sums the difficulty of new pairs that are later
//! reused; Shibayama measures the semantic spread of the cited works.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cooc::{
    commonness, community_partition, pair_multiset, CommunityPartition, EntityKind, NullModelStats,
    Pair, PairCountTable, ProfileMatrix, YearTables,
};
use crate::corpus::{CorpusIndex, DocumentRecord};
use crate::embed::{unit_distance, VectorStore};
use crate::error::{Error, Result};
use crate::quantile::{ordered_mean, ordered_sum, percentile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method", content = "q")]
pub enum Aggregation {
    Mean,
    Percentile(f64),
}

impl Aggregation {
    pub fn apply(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        match self {
            Aggregation::Mean => ordered_mean(values),
            Aggregation::Percentile(q) => percentile(values, q).ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoveltyParams {
    pub uzzi: Aggregation,
    pub lee: Aggregation,
    pub shibayama: Aggregation,
    pub reuse_window: i32,
    pub min_reuse: u64,
    pub profile_window: i32,
    /// Years before the focal year accumulated for the community partition.
    pub foster_window: i32,
    pub resolution: f64,
}

impl Default for NoveltyParams {
    fn default() -> Self {
        Self {
            uzzi: Aggregation::Percentile(10.0),
            lee: Aggregation::Percentile(10.0),
            shibayama: Aggregation::Percentile(90.0),
            reuse_window: 3,
            min_reuse: 1,
            profile_window: 3,
            foster_window: 5,
            resolution: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingReason {
    FewEntities,
    NoValidPair,
    ZeroCommonness,
    NoPartition,
    NoLookahead,
    FewEmbeddedRefs,
}

impl MissingReason {
    pub fn as_str(self) -> &'static str {
        match self {
            MissingReason::FewEntities => "few_entities",
            MissingReason::NoValidPair => "no_valid_pair",
            MissingReason::ZeroCommonness => "zero_commonness",
            MissingReason::NoPartition => "no_partition",
            MissingReason::NoLookahead => "no_lookahead",
            MissingReason::FewEmbeddedRefs => "few_embedded_refs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoveltyScores {
    pub doc_id: String,
    pub kind: EntityKind,
    pub uzzi: Option<f64>,
    pub lee: Option<f64>,
    pub foster: Option<f64>,
    pub wang: Option<f64>,
    pub shibayama: Option<f64>,
    /// indicator name -> why it is missing
    pub missing: BTreeMap<&'static str, MissingReason>,
}

/// `-agg(z)` over the document's pairs with positive null deviation.
pub fn uzzi_score(
    entities: &[u32],
    table: &PairCountTable,
    null: &NullModelStats,
    agg: Aggregation,
) -> Option<f64> {
    let zs: Vec<f64> = pair_multiset(entities)
        .into_iter()
        .filter_map(|(i, j)| {
            let (mu, sd) = null.get(i, j)?;
            (sd > 0.0).then(|| (table.get(i, j) as f64 - mu) / sd)
        })
        .collect();
    agg.apply(&zs).map(|z| -z)
}

/// `-ln(agg(commonness))`; missing when the aggregate is zero.
pub fn lee_score(entities: &[u32], table: &PairCountTable, agg: Aggregation) -> Option<f64> {
    let cs: Vec<f64> = pair_multiset(entities)
        .into_iter()
        .map(|(i, j)| commonness(table, i, j))
        .collect();
    let c = agg.apply(&cs)?;
    (c > 0.0).then(|| -c.ln())
}

/// Share of scorable pairs whose endpoints fall in different communities.
pub fn foster_score(entities: &[u32], partition: &CommunityPartition) -> Option<f64> {
    let mut scorable = 0usize;
    let mut bridging = 0usize;
    for (i, j) in pair_multiset(entities) {
        let (Some(ci), Some(cj)) = (partition.community(i), partition.community(j)) else {
            continue;
        };
        scorable += 1;
        if ci != cj {
            bridging += 1;
        }
    }
    (scorable > 0).then(|| bridging as f64 / scorable as f64)
}

/// Sum of `1 - profile similarity` over distinct pairs that are new at
/// `year` and reused by at least `min_reuse` documents in the following
/// `reuse_window` years.
pub fn wang_score(
    entities: &[u32],
    year: i32,
    tables: &YearTables,
    profiles: &ProfileMatrix,
    params: &NoveltyParams,
) -> Result<Option<f64>> {
    if entities.len() < 2 {
        return Ok(None);
    }
    let last = tables.year_span().map_or(i32::MIN, |(_, hi)| hi);
    if year + params.reuse_window > last {
        return Err(Error::MissingLookahead(format!(
            "year {year} needs tables through {}, have {last}",
            year + params.reuse_window
        )));
    }
    let distinct: BTreeSet<Pair> = pair_multiset(entities).into_iter().collect();
    let mut contributions = Vec::new();
    for p in distinct {
        if tables.first_year_before(p, year).is_some() {
            continue;
        }
        let reuse: u64 = (year + 1..=year + params.reuse_window)
            .filter_map(|y| tables.doc_frequency.get(&y))
            .map(|t| t.get(p.0, p.1))
            .sum();
        if reuse >= params.min_reuse {
            contributions.push(1.0 - profiles.similarity(p.0, p.1));
        }
    }
    Ok(Some(ordered_sum(&contributions)))
}

/// Distinct cited documents of `doc` that have a vector.
pub fn embedded_refs<'a>(doc: &'a DocumentRecord, store: &VectorStore) -> Vec<&'a str> {
    let set: BTreeSet<&str> = doc
        .ref_doc_ids
        .iter()
        .filter(|r| !r.is_empty() && store.get(r).is_some())
        .map(String::as_str)
        .collect();
    set.into_iter().collect()
}

/// Aggregated pairwise cosine distance among the embedded references.
pub fn shibayama_score(doc: &DocumentRecord, store: &VectorStore, agg: Aggregation) -> Option<f64> {
    let refs = embedded_refs(doc, store);
    let mut ds = Vec::new();
    for (k, a) in refs.iter().enumerate() {
        for b in &refs[k + 1..] {
            ds.push(unit_distance(&store.get(a)?.values, &store.get(b)?.values));
        }
    }
    agg.apply(&ds)
}

/// Fit one partition per focal year on the preceding `foster_window` years.
pub fn partitions_by_year(
    tables: &YearTables,
    years: impl IntoIterator<Item = i32>,
    params: &NoveltyParams,
    seed: u64,
) -> BTreeMap<i32, CommunityPartition> {
    let mut out = BTreeMap::new();
    for t in years {
        let window: Vec<&PairCountTable> = tables.range(t - params.foster_window, t - 1).collect();
        if let Ok(p) = community_partition(window, params.resolution, seed) {
            out.insert(t, p);
        }
    }
    out
}

/// Per-document scoring over precomputed tables, null statistics and partitions.
pub struct NoveltyEngine<'a> {
    pub index: &'a CorpusIndex,
    pub store: &'a VectorStore,
    pub tables: &'a YearTables,
    pub nulls: &'a BTreeMap<i32, NullModelStats>,
    pub partitions: &'a BTreeMap<i32, CommunityPartition>,
    pub params: NoveltyParams,
    profiles: BTreeMap<i32, ProfileMatrix>,
}

impl<'a> NoveltyEngine<'a> {
    pub fn new(
        index: &'a CorpusIndex,
        store: &'a VectorStore,
        tables: &'a YearTables,
        nulls: &'a BTreeMap<i32, NullModelStats>,
        partitions: &'a BTreeMap<i32, CommunityPartition>,
        params: NoveltyParams,
    ) -> Self {
        let profiles = tables
            .counts
            .keys()
            .map(|&t| {
                (
                    t,
                    ProfileMatrix::from_tables(tables.range(t - params.profile_window, t - 1)),
                )
            })
            .collect();
        Self {
            index,
            store,
            tables,
            nulls,
            partitions,
            params,
            profiles,
        }
    }

    pub fn score(&self, doc: &DocumentRecord) -> Result<NoveltyScores> {
        let kind = self.tables.kind;
        let entities = self.tables.vocab.encode(doc, kind);
        let mut missing = BTreeMap::new();
        let mut s = NoveltyScores {
            doc_id: doc.doc_id.clone(),
            kind,
            uzzi: None,
            lee: None,
            foster: None,
            wang: None,
            shibayama: shibayama_score(doc, self.store, self.params.shibayama),
            missing: BTreeMap::new(),
        };
        if s.shibayama.is_none() {
            missing.insert("shibayama", MissingReason::FewEmbeddedRefs);
        }
        if entities.len() < 2 {
            for k in ["uzzi", "lee", "foster", "wang"] {
                missing.insert(k, MissingReason::FewEntities);
            }
            s.missing = missing;
            return Ok(s);
        }
        let table = self.tables.table(doc.year).ok_or_else(|| Error::NotFound {
            kind: "pair table for year",
            id: doc.year.to_string(),
        })?;

        s.uzzi = self
            .nulls
            .get(&doc.year)
            .and_then(|null| uzzi_score(&entities, table, null, self.params.uzzi));
        if s.uzzi.is_none() {
            missing.insert("uzzi", MissingReason::NoValidPair);
        }
        s.lee = lee_score(&entities, table, self.params.lee);
        if s.lee.is_none() {
            missing.insert("lee", MissingReason::ZeroCommonness);
        }
        match self.partitions.get(&doc.year) {
            Some(p) => {
                s.foster = foster_score(&entities, p);
                if s.foster.is_none() {
                    missing.insert("foster", MissingReason::NoValidPair);
                }
            }
            None => {
                missing.insert("foster", MissingReason::NoPartition);
            }
        }
        let empty = ProfileMatrix::default();
        let profiles = self.profiles.get(&doc.year).unwrap_or(&empty);
        match wang_score(&entities, doc.year, self.tables, profiles, &self.params) {
            Ok(w) => s.wang = w,
            Err(Error::MissingLookahead(_)) => {
                missing.insert("wang", MissingReason::NoLookahead);
            }
            Err(e) => return Err(e),
        }
        s.missing = missing;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooc::{build_counts, EntityVocabulary};

    fn doc(id: &str, year: i32, journals: &[&str]) -> DocumentRecord {
        DocumentRecord {
            doc_id: id.into(),
            year,
            title: String::new(),
            abstract_text: String::new(),
            journal_issn: "X".into(),
            mesh_terms: vec![],
            author_ids: vec!["a".into(), "b".into()],
            ref_doc_ids: journals.iter().map(|_| String::new()).collect(),
            ref_journal_issns: journals.iter().map(|s| s.to_string()).collect(),
            ref_years: None,
        }
    }

    #[test]
    fn lee_on_one_doc_corpus_is_zero() {
        let ix = CorpusIndex::from_documents(vec![doc("d", 2000, &["A", "B"])]).unwrap();
        let v = EntityVocabulary::build(&ix, EntityKind::Journal);
        let t = build_counts(&ix, &v, EntityKind::Journal, 2000);
        let e = v.encode(ix.get("d").unwrap(), EntityKind::Journal);
        assert_eq!(lee_score(&e, &t, Aggregation::Percentile(10.0)), Some(0.0));
        assert_eq!(lee_score(&e[..1], &t, Aggregation::Percentile(10.0)), None);
    }

    #[test]
    fn uzzi_zero_and_missing_cases() {
        let mut t = PairCountTable::new(2000);
        t.add(0, 1, 3);
        t.add(1, 2, 5);
        let mut stats = BTreeMap::new();
        stats.insert((0, 1), (3.0, 1.5));
        stats.insert((1, 2), (5.0, 2.0));
        let null = NullModelStats {
            year: 2000,
            resamples: 20,
            seed: 0,
            stats,
        };
        assert_eq!(
            uzzi_score(&[0, 1, 2], &t, &null, Aggregation::Percentile(10.0)),
            Some(0.0)
        );
        let mut flat = null.clone();
        for v in flat.stats.values_mut() {
            v.1 = 0.0;
        }
        assert_eq!(
            uzzi_score(&[0, 1], &t, &flat, Aggregation::Percentile(10.0)),
            None
        );
    }

    #[test]
    fn foster_extremes() {
        let mut membership = BTreeMap::new();
        for (e, c) in [(0, 0), (1, 0), (2, 0), (3, 1), (4, 1), (5, 1)] {
            membership.insert(e, c);
        }
        let p = CommunityPartition {
            years: (1999, 1999),
            membership,
            modularity: 0.5,
            resolution: 1.0,
            seed: 0,
        };
        assert_eq!(foster_score(&[0, 1, 2], &p), Some(0.0));
        assert_eq!(foster_score(&[0, 3], &p), Some(1.0));
        // 4 refs across blocks: pairs (0,1) (0,3) (0,4) (1,3) (1,4) (3,4) -> 4 bridging of 6
        assert_eq!(foster_score(&[0, 1, 3, 4], &p), Some(4.0 / 6.0));
        assert_eq!(foster_score(&[7, 8], &p), None);
    }

    #[test]
    fn shibayama_singleton_and_collapsed() {
        let mut st = VectorStore::new(0);
        use crate::embed::DocVector;
        st.insert(DocVector::new("r1", vec![1.0, 0.0]).unwrap())
            .unwrap();
        st.insert(DocVector::new("r2", vec![0.63, (1.0f64 - 0.63 * 0.63).sqrt()]).unwrap())
            .unwrap();
        st.insert(DocVector::new("r3", vec![1.0, 0.0]).unwrap())
            .unwrap();
        let mut d = doc("d", 2000, &["A", "B"]);
        d.ref_doc_ids = vec!["r1".into(), "r2".into()];
        let expected = 1.0 - st.get("r2").unwrap().values[0];
        for agg in [Aggregation::Mean, Aggregation::Percentile(90.0)] {
            assert!((shibayama_score(&d, &st, agg).unwrap() - expected).abs() < 1e-15);
        }
        d.ref_doc_ids = vec!["r1".into(), "r3".into()];
        assert_eq!(shibayama_score(&d, &st, Aggregation::Mean), Some(0.0));
        d.ref_doc_ids = vec!["r1".into(), "zz".into()];
        assert_eq!(shibayama_score(&d, &st, Aggregation::Mean), None);
    }

    #[test]
    fn wang_needs_lookahead_and_scores_new_pairs() {
        let ix = CorpusIndex::from_documents(vec![
            doc("old", 1998, &["A", "B"]),
            doc("old2", 1998, &["C", "D"]),
            doc("f", 2000, &["A", "B", "C"]),
            doc("reuse", 2001, &["A", "C"]),
            doc("late", 2003, &["E", "F"]),
        ])
        .unwrap();
        let tables = YearTables::build(&ix, EntityKind::Journal);
        let params = NoveltyParams::default();
        let prof = ProfileMatrix::from_tables(tables.range(1997, 1999));
        let e = tables
            .vocab
            .encode(ix.get("f").unwrap(), EntityKind::Journal);
        // (A,B) already seen; (A,C) new and reused, profiles disjoint -> 1;
        // (B,C) new but never reused
        assert_eq!(
            wang_score(&e, 2000, &tables, &prof, &params).unwrap(),
            Some(1.0)
        );
        let e_old = tables
            .vocab
            .encode(ix.get("old").unwrap(), EntityKind::Journal);
        assert!(matches!(
            wang_score(&e_old, 2001, &tables, &prof, &params),
            Err(Error::MissingLookahead(_))
        ));
        assert_eq!(
            wang_score(&e[..1], 2000, &tables, &prof, &params).unwrap(),
            None
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_table(cells: &[(u32, u32, u64)]) -> PairCountTable {
            let mut t = PairCountTable::new(2000);
            for (i, j, n) in cells {
                t.add(*i, *j, *n);
            }
            t
        }

        fn random_null(cells: &[(u32, u32, u64)]) -> NullModelStats {
            let stats = cells
                .iter()
                .map(|(i, j, n)| {
                    (
                        crate::cooc::ordered(*i, *j),
                        (*n as f64 * 0.7, 1.0 + (*n % 5) as f64),
                    )
                })
                .collect();
            NullModelStats {
                year: 2000,
                resamples: 20,
                seed: 0,
                stats,
            }
        }

        proptest! {
            #[test]
            fn duplicated_scores_keep_extremes_and_mean(zs in prop::collection::vec(-50.0f64..50.0, 1..30)) {
                let twice: Vec<f64> = zs.iter().chain(zs.iter()).copied().collect();
                for agg in [Aggregation::Mean, Aggregation::Percentile(0.0), Aggregation::Percentile(100.0)] {
                    prop_assert_eq!(agg.apply(&zs), agg.apply(&twice));
                }
            }

            #[test]
            fn entity_order_does_not_matter(
                cells in prop::collection::vec((0u32..6, 0u32..6, 1u64..20), 1..25),
                entities in prop::collection::vec(0u32..6, 2..8),
                perm_seed in any::<u64>(),
            ) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let t = random_table(&cells);
                let null = random_null(&cells);
                let membership = (0..6).map(|e| (e, e % 2)).collect();
                let part = CommunityPartition { years: (1995, 1999), membership, modularity: 0.0, resolution: 1.0, seed: 0 };
                let mut shuffled = entities.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
                let agg = Aggregation::Percentile(10.0);
                prop_assert_eq!(lee_score(&entities, &t, agg), lee_score(&shuffled, &t, agg));
                prop_assert_eq!(uzzi_score(&entities, &t, &null, agg), uzzi_score(&shuffled, &t, &null, agg));
                prop_assert_eq!(foster_score(&entities, &part), foster_score(&shuffled, &part));
            }

            #[test]
            fn lee_decreases_in_pair_count_with_margins_fixed(a in 1u64..50, b in 0u64..50, c in 0u64..50, d in 0u64..50) {
                // moving one unit from (0,2),(1,3) to (0,1),(2,3) keeps every marginal and the total
                let before = random_table(&[(0, 1, a), (0, 2, b + 1), (1, 3, c + 1), (2, 3, d)]);
                let after = random_table(&[(0, 1, a + 1), (0, 2, b), (1, 3, c), (2, 3, d + 1)]);
                for e in 0..4 {
                    prop_assert_eq!(before.marginal(e), after.marginal(e));
                }
                prop_assert_eq!(before.total(), after.total());
                let l0 = lee_score(&[0, 1], &before, Aggregation::Mean).unwrap();
                let l1 = lee_score(&[0, 1], &after, Aggregation::Mean).unwrap();
                prop_assert!(l1 < l0);
            }
        }
    }
}
