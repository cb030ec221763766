//! Disruption and consolidation indicators for a focal document.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::CorpusIndex;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisruptionCounts {
    pub focal: String,
    pub n_refs: usize,
    /// level l -> (n_i, n_j): citers citing fewer than / at least l focal references.
    pub levels: BTreeMap<usize, (usize, usize)>,
    /// Non-citers (published in or after the focal year) citing at least one focal reference.
    pub n_k: usize,
    pub citer_ref_overlap: BTreeMap<String, usize>,
    /// Citer -> cites at least one other citer of the focal document.
    pub citer_mutual: BTreeMap<String, bool>,
}

impl DisruptionCounts {
    pub fn n_citers(&self) -> usize {
        self.citer_ref_overlap.len()
    }

    pub fn split(&self, l: usize) -> (usize, usize) {
        if let Some(s) = self.levels.get(&l) {
            return *s;
        }
        let n_j = self.citer_ref_overlap.values().filter(|o| **o >= l).count();
        (self.n_citers() - n_j, n_j)
    }
}

/// Citation-graph counts for `focal`. `horizon` caps citer years at
/// `focal.year + horizon`.
pub fn disruption_counts(
    index: &CorpusIndex,
    focal: &str,
    levels: &[usize],
    horizon: Option<i32>,
) -> Result<DisruptionCounts> {
    let doc = index.get(focal)?;
    let in_horizon = |id: &str| match horizon {
        Some(h) => index.doc(id).is_some_and(|d| d.year <= doc.year + h),
        None => true,
    };
    let refs = index.resolved_refs(focal)?;
    let citers: BTreeSet<&str> = index
        .citing_papers(focal)?
        .iter()
        .map(String::as_str)
        .filter(|c| in_horizon(c))
        .collect();

    let mut overlap = BTreeMap::new();
    let mut mutual = BTreeMap::new();
    for c in &citers {
        let crefs = index.resolved_refs(c)?;
        overlap.insert(c.to_string(), crefs.intersection(refs).count());
        let m = crefs.iter().any(|r| r != c && citers.contains(r.as_str()));
        mutual.insert(c.to_string(), m);
    }

    let mut k_set: BTreeSet<&str> = BTreeSet::new();
    for r in refs {
        for p in index.citing_papers(r)? {
            if p == focal || citers.contains(p.as_str()) || !in_horizon(p) {
                continue;
            }
            if index.doc(p).is_some_and(|d| d.year >= doc.year) {
                k_set.insert(p);
            }
        }
    }

    let levels = levels
        .iter()
        .map(|&l| {
            let n_j = overlap.values().filter(|o| **o >= l).count();
            (l, (citers.len() - n_j, n_j))
        })
        .collect();
    Ok(DisruptionCounts {
        focal: focal.to_string(),
        n_refs: refs.len(),
        levels,
        n_k: k_set.len(),
        citer_ref_overlap: overlap,
        citer_mutual: mutual,
    })
}

/// `(n_i - n_j) / (n_i + n_j + n_k)`, or without `n_k`.
pub fn di(counts: &DisruptionCounts, l: usize, with_k: bool) -> Option<f64> {
    let (ni, nj) = counts.split(l);
    let den = ni + nj + if with_k { counts.n_k } else { 0 };
    (den > 0).then(|| (ni as f64 - nj as f64) / den as f64)
}

/// Mean number of focal references cited by each citer.
pub fn dein(counts: &DisruptionCounts) -> Option<f64> {
    let n = counts.n_citers();
    (n > 0).then(|| counts.citer_ref_overlap.values().sum::<usize>() as f64 / n as f64)
}

/// `(breadth, depth)` where depth is the share of citers that cite another citer.
pub fn breadth_depth(counts: &DisruptionCounts) -> Option<(f64, f64)> {
    let n = counts.n_citers();
    if n == 0 {
        return None;
    }
    let depth = counts.citer_mutual.values().filter(|m| **m).count() as f64 / n as f64;
    Some((1.0 - depth, depth))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactScores {
    pub doc_id: String,
    pub citation_count: usize,
    pub di1: Option<f64>,
    pub di5: Option<f64>,
    pub di1nok: Option<f64>,
    pub dein: Option<f64>,
    pub breadth: Option<f64>,
    pub depth: Option<f64>,
}

pub fn impact_scores(
    index: &CorpusIndex,
    focal: &str,
    horizon: Option<i32>,
) -> Result<ImpactScores> {
    let c = disruption_counts(index, focal, &[1, 5], horizon)?;
    let bd = breadth_depth(&c);
    Ok(ImpactScores {
        doc_id: focal.to_string(),
        citation_count: c.n_citers(),
        di1: di(&c, 1, true),
        di5: di(&c, 5, true),
        di1nok: di(&c, 1, false),
        dein: dein(&c),
        breadth: bd.map(|b| b.0),
        depth: bd.map(|b| b.1),
    })
}
