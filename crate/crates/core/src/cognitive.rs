//! Exploratory profiles and team cognitive diversity.
//!
//! An author's exploratory profile at time `t` is the q-th percentile of the
//! pairwise cosine distances among their embedded publications from the
//! `b` years before `t`. A team's cognitive diversity pools the cross
//! distances between every pair of co-authors' past publications.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::embed::{unit_distance, DocVector, VectorStore};
use crate::error::{Error, Result};
pub use crate::quantile::percentile;
use crate::quantile::{ordered_mean, percentile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// Look-back window in years.
    pub window: u32,
    /// Percentile applied to distance distributions.
    pub q: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self { window: 5, q: 90.0 }
    }
}

/// Which score distribution the exploratory/exploitative cutoffs come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdBasis {
    /// Author-level intra scores pooled over all (author, focal paper) rows.
    #[default]
    AuthorScores,
    /// Team means (`intra_fp`), the literal reading of the classification rule.
    TeamMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthorDistanceDistribution {
    pub author_id: String,
    pub focal_doc_id: String,
    pub distances: Vec<f64>,
    /// Embedded past publications used for the distances.
    pub n_past_docs: usize,
    /// Past publications skipped for lack of a vector.
    pub n_unembedded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileThresholds {
    pub exploratory_cutoff: f64,
    pub exploitative_cutoff: f64,
}

/// Phase-one output for one focal paper: scores without classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamScores {
    pub focal_doc_id: String,
    /// Every team member in author-list order, `None` when undefined.
    pub per_author_intra: Vec<(String, Option<f64>)>,
    pub intra_fp: Option<f64>,
    pub inter_fp: Option<f64>,
}

impl TeamScores {
    pub fn defined_intra(&self) -> impl Iterator<Item = f64> + '_ {
        self.per_author_intra.iter().filter_map(|(_, s)| *s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamCognitiveMetrics {
    pub focal_doc_id: String,
    pub intra_fp: Option<f64>,
    pub inter_fp: Option<f64>,
    pub per_author_intra: BTreeMap<String, f64>,
    pub team_size: usize,
    pub n_authors_scored: usize,
    pub n_exploratory: usize,
    pub n_exploitative: usize,
    pub share_exploratory: f64,
    pub share_exploitative: f64,
    pub interaction: f64,
}

/// Cutoffs from the sample's score distribution: P90 for exploratory, P50 for
/// exploitative.
pub fn fit_thresholds(scores: &[f64]) -> Result<ProfileThresholds> {
    if scores.len() < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 defined scores to fit thresholds, got {}",
            scores.len()
        )));
    }
    Ok(ProfileThresholds {
        exploratory_cutoff: percentile(scores, 90.0)?,
        exploitative_cutoff: percentile(scores, 50.0)?,
    })
}

/// Classify team members against fitted cutoffs.
pub fn classify(scores: &TeamScores, thresholds: &ProfileThresholds) -> TeamCognitiveMetrics {
    let team_size = scores.per_author_intra.len();
    let mut n_exploratory = 0;
    let mut n_exploitative = 0;
    let mut per_author = BTreeMap::new();
    for (a, s) in &scores.per_author_intra {
        let Some(s) = *s else { continue };
        per_author.insert(a.clone(), s);
        if s >= thresholds.exploratory_cutoff {
            n_exploratory += 1;
        }
        if s <= thresholds.exploitative_cutoff {
            n_exploitative += 1;
        }
    }
    let share = |n: usize| {
        if team_size == 0 {
            0.0
        } else {
            n as f64 / team_size as f64
        }
    };
    let share_exploratory = share(n_exploratory);
    let share_exploitative = share(n_exploitative);
    TeamCognitiveMetrics {
        focal_doc_id: scores.focal_doc_id.clone(),
        intra_fp: scores.intra_fp,
        inter_fp: scores.inter_fp,
        n_authors_scored: per_author.len(),
        per_author_intra: per_author,
        team_size,
        n_exploratory,
        n_exploitative,
        share_exploratory,
        share_exploitative,
        interaction: share_exploratory * share_exploitative,
    }
}

/// Scores focal papers against an immutable index and vector store.
#[derive(Clone, Copy)]
pub struct CognitiveEngine<'a> {
    index: &'a CorpusIndex,
    store: &'a VectorStore,
    params: ProfileParams,
}

impl<'a> CognitiveEngine<'a> {
    pub fn new(index: &'a CorpusIndex, store: &'a VectorStore, params: ProfileParams) -> Self {
        Self {
            index,
            store,
            params,
        }
    }

    fn embedded_past(&self, author: &str, t: i32) -> (Vec<&'a DocVector>, usize) {
        let past = self.index.author_past_pubs(author, t, self.params.window);
        let total = past.len();
        let vecs: Vec<_> = past
            .into_iter()
            .filter_map(|id| self.store.get(id))
            .collect();
        let skipped = total - vecs.len();
        (vecs, skipped)
    }

    pub fn author_distribution(
        &self,
        author: &str,
        focal: &str,
    ) -> Result<AuthorDistanceDistribution> {
        let t = self.index.get(focal)?.year;
        let (vecs, n_unembedded) = self.embedded_past(author, t);
        let mut distances = Vec::with_capacity(vecs.len() * vecs.len().saturating_sub(1) / 2);
        for (i, u) in vecs.iter().enumerate() {
            for v in &vecs[i + 1..] {
                distances.push(unit_distance(&u.values, &v.values));
            }
        }
        Ok(AuthorDistanceDistribution {
            author_id: author.to_string(),
            focal_doc_id: focal.to_string(),
            distances,
            n_past_docs: vecs.len(),
            n_unembedded,
        })
    }

    /// Exploratory profile of `author` at the focal paper's year; `None` with
    /// fewer than two embedded past publications.
    pub fn intra_author(&self, author: &str, focal: &str) -> Result<Option<f64>> {
        let dist = self.author_distribution(author, focal)?;
        if dist.distances.is_empty() {
            return Ok(None);
        }
        percentile(&dist.distances, self.params.q).map(Some)
    }

    /// Mean of the defined author profiles of the focal team.
    pub fn team_intra(&self, focal: &str) -> Result<Option<f64>> {
        Ok(self.team_scores(focal)?.intra_fp)
    }

    /// Pooled cross-author distances over all unordered author pairs.
    pub fn inter_pool(&self, focal: &str) -> Result<Vec<f64>> {
        let doc = self.index.get(focal)?;
        let portfolios: Vec<Vec<&DocVector>> = doc
            .author_ids
            .iter()
            .map(|a| self.embedded_past(a, doc.year).0)
            .collect();
        let mut pool = Vec::new();
        for (i, pa) in portfolios.iter().enumerate() {
            for pe in &portfolios[i + 1..] {
                for u in pa {
                    for v in pe {
                        pool.push(unit_distance(&u.values, &v.values));
                    }
                }
            }
        }
        Ok(pool)
    }

    pub fn inter_author(&self, focal: &str) -> Result<Option<f64>> {
        let mut pool = self.inter_pool(focal)?;
        if pool.is_empty() {
            return Ok(None);
        }
        pool.sort_by(f64::total_cmp);
        Ok(Some(percentile_sorted(&pool, self.params.q)))
    }

    pub fn team_scores(&self, focal: &str) -> Result<TeamScores> {
        let doc = self.index.get(focal)?;
        let per_author_intra = doc
            .author_ids
            .iter()
            .map(|a| Ok((a.clone(), self.intra_author(a, focal)?)))
            .collect::<Result<Vec<_>>>()?;
        let defined: Vec<f64> = per_author_intra.iter().filter_map(|(_, s)| *s).collect();
        Ok(TeamScores {
            focal_doc_id: focal.to_string(),
            intra_fp: ordered_mean(&defined),
            inter_fp: self.inter_author(focal)?,
            per_author_intra,
        })
    }

    pub fn team_composition(
        &self,
        focal: &str,
        thresholds: &ProfileThresholds,
    ) -> Result<TeamCognitiveMetrics> {
        Ok(classify(&self.team_scores(focal)?, thresholds))
    }
}

/// Pick the score sample the thresholds are fitted on.
pub fn threshold_sample(rows: &[TeamScores], basis: ThresholdBasis) -> Vec<f64> {
    match basis {
        ThresholdBasis::AuthorScores => rows.iter().flat_map(TeamScores::defined_intra).collect(),
        ThresholdBasis::TeamMeans => rows.iter().filter_map(|r| r.intra_fp).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentRecord;

    fn doc(id: &str, year: i32, authors: &[&str]) -> DocumentRecord {
        DocumentRecord {
            doc_id: id.into(),
            year,
            title: String::new(),
            abstract_text: String::new(),
            journal_issn: "J".into(),
            mesh_terms: vec![],
            author_ids: authors.iter().map(|s| s.to_string()).collect(),
            ref_doc_ids: vec![],
            ref_journal_issns: vec![],
            ref_years: None,
        }
    }

    fn store(vs: &[(&str, Vec<f64>)]) -> VectorStore {
        let mut s = VectorStore::new(0);
        for (id, v) in vs {
            s.insert(DocVector::new(*id, v.clone()).unwrap()).unwrap();
        }
        s
    }

    #[test]
    fn two_past_docs_give_their_distance() {
        let ix = CorpusIndex::from_documents(vec![
            doc("p1", 2000, &["a", "x"]),
            doc("p2", 2001, &["a", "y"]),
            doc("f", 2003, &["a", "b"]),
        ])
        .unwrap();
        let st = store(&[("p1", vec![1.0, 0.0]), ("p2", vec![0.6, 0.8])]);
        let eng = CognitiveEngine::new(&ix, &st, ProfileParams::default());
        let s = eng.intra_author("a", "f").unwrap().unwrap();
        assert!((s - 0.4).abs() < 1e-15);
        assert_eq!(eng.intra_author("b", "f").unwrap(), None);
        // one scored author, one missing: the mean is that author's score
        assert_eq!(eng.team_intra("f").unwrap(), Some(s));
    }

    #[test]
    fn identical_vectors_give_zero() {
        let ix = CorpusIndex::from_documents(vec![
            doc("p1", 2000, &["a", "x"]),
            doc("p2", 2001, &["a", "y"]),
            doc("f", 2003, &["a", "b"]),
        ])
        .unwrap();
        let st = store(&[("p1", vec![0.3, 0.7]), ("p2", vec![0.3, 0.7])]);
        let eng = CognitiveEngine::new(&ix, &st, ProfileParams::default());
        assert_eq!(eng.intra_author("a", "f").unwrap(), Some(0.0));
    }

    #[test]
    fn inter_singleton_pool_and_shared_docs() {
        let ix = CorpusIndex::from_documents(vec![
            doc("pa", 2000, &["a", "x"]),
            doc("pb", 2000, &["b", "y"]),
            doc("shared", 2001, &["c", "d"]),
            doc("f", 2003, &["a", "b"]),
            doc("g", 2003, &["c", "d"]),
        ])
        .unwrap();
        let st = store(&[
            ("pa", vec![1.0, 0.0]),
            ("pb", vec![0.5, 0.75f64.sqrt()]),
            ("shared", vec![0.2, 0.9]),
        ]);
        let eng = CognitiveEngine::new(&ix, &st, ProfileParams::default());
        let expected = 1.0 - st.get("pb").unwrap().values[0];
        assert!((eng.inter_author("f").unwrap().unwrap() - expected).abs() < 1e-15);
        assert_eq!(eng.inter_pool("g").unwrap(), vec![0.0]);
    }

    #[test]
    fn composition_arithmetic() {
        let scores = TeamScores {
            focal_doc_id: "f".into(),
            per_author_intra: vec![
                ("a".into(), Some(0.9)),
                ("b".into(), Some(0.1)),
                ("c".into(), Some(0.1)),
                ("d".into(), None),
            ],
            intra_fp: None,
            inter_fp: None,
        };
        let th = ProfileThresholds {
            exploratory_cutoff: 0.8,
            exploitative_cutoff: 0.3,
        };
        let m = classify(&scores, &th);
        assert_eq!((m.share_exploratory, m.share_exploitative), (0.25, 0.5));
        assert_eq!(m.interaction, 0.125);
        assert_eq!(m.team_size, 4);
        assert_eq!(m.n_authors_scored, 3);

        let none = TeamScores {
            per_author_intra: vec![("a".into(), None), ("b".into(), None)],
            ..scores
        };
        let m = classify(&none, &th);
        assert_eq!(
            (m.share_exploratory, m.share_exploitative, m.interaction),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn thresholds_from_uniform_grid() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let th = fit_thresholds(&xs).unwrap();
        // sort oracle: P90 sits at position 89.1, P50 at 49.5
        assert!((th.exploratory_cutoff - (0.90 + 0.1 * 0.01)).abs() < 1e-12);
        assert!((th.exploitative_cutoff - (0.50 + 0.5 * 0.01)).abs() < 1e-12);
        let flat = vec![0.3; 12];
        let th = fit_thresholds(&flat).unwrap();
        assert_eq!((th.exploratory_cutoff, th.exploitative_cutoff), (0.3, 0.3));
        assert!(fit_thresholds(&xs[..9]).is_err());
    }
}
