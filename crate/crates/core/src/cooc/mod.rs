//! Per-year co-occurrence tables over reference journals or MeSH terms.
//!
//! A document contributes every unordered pair over its entity list, with
//! multiplicity: reference journals `[A, A, B]` yield `(A,A)`, `(A,B)`, `(A,B)`.
//! Diagonal pairs are ordinary cells of the table and count once towards the
//! entity's marginal.

mod community;
mod null;
pub mod persist;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use community::{community_partition, louvain, CommunityPartition, Graph};
pub use null::{
    null_resample, resample_once, resample_tables, NullConfig, NullModelStats, SlotLayout,
};

use crate::corpus::{CorpusIndex, DocumentRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Journal,
    Mesh,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Journal => "journal",
            EntityKind::Mesh => "mesh",
        }
    }

    pub const ALL: [EntityKind; 2] = [EntityKind::Journal, EntityKind::Mesh];
}

impl std::fmt::Display for EntityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EntityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "journal" => Ok(EntityKind::Journal),
            "mesh" => Ok(EntityKind::Mesh),
            other => Err(Error::invalid(format!("unknown entity kind `{other}`"))),
        }
    }
}

/// Entities of `doc` for `kind`. ISSN-less reference slots are skipped.
pub fn doc_entities(doc: &DocumentRecord, kind: EntityKind) -> Vec<&str> {
    match kind {
        EntityKind::Journal => doc
            .ref_journal_issns
            .iter()
            .filter(|s| !s.is_empty())
            .map(String::as_str)
            .collect(),
        EntityKind::Mesh => doc.mesh_terms.iter().map(String::as_str).collect(),
    }
}

/// All `C(m, 2)` unordered pairs over `entities`, each stored as `(min, max)`.
pub fn pair_multiset<T: Ord + Clone>(entities: &[T]) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(entities.len() * entities.len().saturating_sub(1) / 2);
    for (i, a) in entities.iter().enumerate() {
        for b in &entities[i + 1..] {
            if a <= b {
                out.push((a.clone(), b.clone()));
            } else {
                out.push((b.clone(), a.clone()));
            }
        }
    }
    out
}

/// Bijection between entity strings and dense ids, assigned in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityVocabulary {
    pub kind: Option<EntityKind>,
    names: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl EntityVocabulary {
    pub fn build(index: &CorpusIndex, kind: EntityKind) -> Self {
        let set: BTreeSet<&str> = index.docs().flat_map(|d| doc_entities(d, kind)).collect();
        Self::from_names(Some(kind), set.into_iter().map(str::to_string))
    }

    pub fn from_names(kind: Option<EntityKind>, names: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = names.into_iter().collect();
        let names: Vec<String> = set.into_iter().collect();
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Self { kind, names, ids }
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Entity ids of `doc`, in document order. Unknown entities are skipped.
    pub fn encode(&self, doc: &DocumentRecord, kind: EntityKind) -> Vec<u32> {
        doc_entities(doc, kind)
            .into_iter()
            .filter_map(|e| self.id(e))
            .collect()
    }
}

pub type Pair = (u32, u32);

pub fn ordered(i: u32, j: u32) -> Pair {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Symmetric non-negative pair counts for one year, stored as the upper
/// triangle including the diagonal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairCountTable {
    pub year: i32,
    counts: BTreeMap<Pair, u64>,
    marginals: BTreeMap<u32, u64>,
    total: u64,
}

impl PairCountTable {
    pub fn new(year: i32) -> Self {
        Self {
            year,
            ..Self::default()
        }
    }

    pub fn add(&mut self, i: u32, j: u32, n: u64) {
        if n == 0 {
            return;
        }
        let p = ordered(i, j);
        *self.counts.entry(p).or_default() += n;
        *self.marginals.entry(p.0).or_default() += n;
        if p.0 != p.1 {
            *self.marginals.entry(p.1).or_default() += n;
        }
        self.total += n;
    }

    pub fn add_entities(&mut self, entities: &[u32]) {
        for (a, b) in pair_multiset(entities) {
            self.add(a, b, 1);
        }
    }

    /// Associative merge of a partial table for the same year.
    pub fn merge(&mut self, other: &PairCountTable) {
        for (&(i, j), &n) in &other.counts {
            self.add(i, j, n);
        }
    }

    pub fn get(&self, i: u32, j: u32) -> u64 {
        self.counts.get(&ordered(i, j)).copied().unwrap_or(0)
    }

    pub fn marginal(&self, i: u32) -> u64 {
        self.marginals.get(&i).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n_cells(&self) -> usize {
        self.counts.len()
    }

    /// Non-zero cells in ascending `(i, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = (Pair, u64)> + '_ {
        self.counts.iter().map(|(p, n)| (*p, *n))
    }
}

/// Sum pair multisets over every document published in `year`.
pub fn build_counts(
    index: &CorpusIndex,
    vocab: &EntityVocabulary,
    kind: EntityKind,
    year: i32,
) -> PairCountTable {
    let mut t = PairCountTable::new(year);
    for doc in index.docs_in_year(year) {
        t.add_entities(&vocab.encode(doc, kind));
    }
    t
}

/// Number of documents of `year` containing each pair at least once.
pub fn build_doc_frequency(
    index: &CorpusIndex,
    vocab: &EntityVocabulary,
    kind: EntityKind,
    year: i32,
) -> PairCountTable {
    let mut t = PairCountTable::new(year);
    for doc in index.docs_in_year(year) {
        let distinct: BTreeSet<Pair> = pair_multiset(&vocab.encode(doc, kind))
            .into_iter()
            .collect();
        for (i, j) in distinct {
            t.add(i, j, 1);
        }
    }
    t
}

/// `N_ij * N_t / (N_i * N_j)`, zero for an unobserved pair.
pub fn commonness(table: &PairCountTable, i: u32, j: u32) -> f64 {
    let nij = table.get(i, j);
    if nij == 0 {
        return 0.0;
    }
    let (ni, nj) = (table.marginal(i), table.marginal(j));
    debug_assert!(ni > 0 && nj > 0, "observed pair with empty marginal");
    (nij as f64 * table.total() as f64) / (ni as f64 * nj as f64)
}

/// Earliest year in `history` where the pair was observed.
pub fn pair_first_year<'a>(
    history: impl IntoIterator<Item = &'a PairCountTable>,
    i: u32,
    j: u32,
) -> Option<i32> {
    history
        .into_iter()
        .filter(|t| t.get(i, j) > 0)
        .map(|t| t.year)
        .min()
}

/// Co-occurrence rows summed over a window of tables.
#[derive(Debug, Clone, Default)]
pub struct ProfileMatrix {
    rows: BTreeMap<u32, BTreeMap<u32, u64>>,
}

impl ProfileMatrix {
    pub fn from_tables<'a>(tables: impl IntoIterator<Item = &'a PairCountTable>) -> Self {
        let mut rows: BTreeMap<u32, BTreeMap<u32, u64>> = BTreeMap::new();
        for t in tables {
            for ((i, j), n) in t.iter() {
                *rows.entry(i).or_default().entry(j).or_default() += n;
                if i != j {
                    *rows.entry(j).or_default().entry(i).or_default() += n;
                }
            }
        }
        Self { rows }
    }

    /// Cosine similarity of the two rows; 0 when either row is empty.
    pub fn similarity(&self, i: u32, j: u32) -> f64 {
        let (Some(a), Some(b)) = (self.rows.get(&i), self.rows.get(&j)) else {
            return 0.0;
        };
        let dot: f64 = a
            .iter()
            .filter_map(|(k, x)| b.get(k).map(|y| *x as f64 * *y as f64))
            .sum();
        let na: f64 = a.values().map(|x| (*x as f64) * (*x as f64)).sum();
        let nb: f64 = b.values().map(|x| (*x as f64) * (*x as f64)).sum();
        dot / (na.sqrt() * nb.sqrt())
    }
}

pub fn profile_similarity<'a>(
    tables: impl IntoIterator<Item = &'a PairCountTable>,
    i: u32,
    j: u32,
) -> f64 {
    ProfileMatrix::from_tables(tables).similarity(i, j)
}

/// Pair-count and document-frequency tables for every corpus year.
#[derive(Debug, Clone)]
pub struct YearTables {
    pub kind: EntityKind,
    pub vocab: EntityVocabulary,
    pub counts: BTreeMap<i32, PairCountTable>,
    pub doc_frequency: BTreeMap<i32, PairCountTable>,
    first_seen: BTreeMap<Pair, i32>,
}

impl YearTables {
    pub fn build(index: &CorpusIndex, kind: EntityKind) -> Self {
        let vocab = EntityVocabulary::build(index, kind);
        let mut counts = BTreeMap::new();
        let mut doc_frequency = BTreeMap::new();
        if let Some((lo, hi)) = index.year_span() {
            for y in lo..=hi {
                counts.insert(y, build_counts(index, &vocab, kind, y));
                doc_frequency.insert(y, build_doc_frequency(index, &vocab, kind, y));
            }
        }
        Self::from_parts(kind, vocab, counts, doc_frequency)
    }

    pub fn from_parts(
        kind: EntityKind,
        vocab: EntityVocabulary,
        counts: BTreeMap<i32, PairCountTable>,
        doc_frequency: BTreeMap<i32, PairCountTable>,
    ) -> Self {
        let mut first_seen = BTreeMap::new();
        for (y, t) in &counts {
            for (p, _) in t.iter() {
                first_seen.entry(p).or_insert(*y);
            }
        }
        Self {
            kind,
            vocab,
            counts,
            doc_frequency,
            first_seen,
        }
    }

    pub fn year_span(&self) -> Option<(i32, i32)> {
        Some((
            *self.counts.keys().next()?,
            *self.counts.keys().next_back()?,
        ))
    }

    pub fn table(&self, year: i32) -> Option<&PairCountTable> {
        self.counts.get(&year)
    }

    /// First year the pair was observed, restricted to years before `t`.
    pub fn first_year_before(&self, pair: Pair, t: i32) -> Option<i32> {
        self.first_seen.get(&pair).copied().filter(|y| *y < t)
    }

    /// Tables for years in `[from, to]` that exist.
    pub fn range(&self, from: i32, to: i32) -> impl Iterator<Item = &PairCountTable> {
        self.counts.range(from..=to).map(|(_, t)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn pair_multiset_examples() {
        assert_eq!(pair_multiset(&["A", "B"]), vec![("A", "B")]);
        let mut got = pair_multiset(&["A", "A", "B"]);
        got.sort();
        assert_eq!(got, vec![("A", "A"), ("A", "B"), ("A", "B")]);
        assert!(pair_multiset(&["A"]).is_empty());
    }

    #[test]
    fn single_doc_table_and_commonness() {
        let mut t = PairCountTable::new(2000);
        t.add_entities(&[0, 1]);
        assert_eq!(
            (t.get(0, 1), t.marginal(0), t.marginal(1), t.total()),
            (1, 1, 1, 1)
        );
        assert_eq!(commonness(&t, 0, 1), 1.0);
        t.add_entities(&[0, 1]);
        assert_eq!(t.get(1, 0), 2);

        let mut t = PairCountTable::new(2000);
        t.add_entities(&[0, 1]);
        t.add_entities(&[2, 3]);
        assert_eq!(commonness(&t, 0, 1), 2.0);
        assert_eq!(commonness(&t, 0, 2), 0.0);
    }

    #[test]
    fn lone_diagonal_pair_has_unit_commonness() {
        let mut t = PairCountTable::new(2000);
        t.add_entities(&[4, 4]);
        assert_eq!(commonness(&t, 4, 4), 1.0);
    }

    #[test]
    fn counts_match_hashmap_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let docs: Vec<Vec<u32>> = (0..50)
            .map(|_| {
                (0..rng.gen_range(2..7))
                    .map(|_| rng.gen_range(0..12))
                    .collect()
            })
            .collect();
        let mut t = PairCountTable::new(2000);
        for d in &docs {
            t.add_entities(d);
        }
        let mut oracle: HashMap<(u32, u32), u64> = HashMap::new();
        for d in &docs {
            for a in 0..d.len() {
                for b in a + 1..d.len() {
                    let k = (d[a].min(d[b]), d[a].max(d[b]));
                    *oracle.entry(k).or_default() += 1;
                }
            }
        }
        assert_eq!(t.n_cells(), oracle.len());
        for (k, v) in &oracle {
            assert_eq!(t.get(k.0, k.1), *v);
        }
        // N_i sums the full symmetric row with the diagonal counted once
        for i in 0..12 {
            let row: u64 = (0..12).map(|j| t.get(i, j)).sum();
            assert_eq!(t.marginal(i), row);
        }
        let upper: u64 = oracle.values().sum();
        assert_eq!(t.total(), upper);
        // sharded merge equals the single pass
        let mut a = PairCountTable::new(2000);
        let mut b = PairCountTable::new(2000);
        for (k, d) in docs.iter().enumerate() {
            if k % 2 == 0 {
                a.add_entities(d)
            } else {
                b.add_entities(d)
            }
        }
        a.merge(&b);
        assert_eq!(a, t);
    }

    #[test]
    fn first_year_and_profiles() {
        let mut t98 = PairCountTable::new(1998);
        t98.add_entities(&[0, 1]);
        let mut t99 = PairCountTable::new(1999);
        t99.add_entities(&[0, 1, 2]);
        let hist = [t98.clone(), t99.clone()];
        assert_eq!(pair_first_year(&hist, 1, 0), Some(1998));
        assert_eq!(pair_first_year(&hist, 1, 2), Some(1999));
        assert_eq!(pair_first_year(&hist, 3, 4), None);

        let mut a = PairCountTable::new(2000);
        a.add(0, 2, 3);
        a.add(1, 2, 3);
        a.add(5, 6, 1);
        assert!((profile_similarity([&a], 0, 1) - 1.0).abs() < 1e-15);
        assert_eq!(profile_similarity([&a], 0, 5), 0.0);
        assert_eq!(profile_similarity([&a], 0, 9), 0.0);
    }
}
