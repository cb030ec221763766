//! Brute-force indicator oracles.
//!
//! Each function is a literal transcription of an indicator definition over
//! plain document slices: no indexes, entity strings instead of ids, linear
//! scans for every lookup, and sums taken exactly in rational arithmetic
//! before a single rounding. Only the Monte-Carlo components (resampled
//! tables, community partition) are shared with the engine.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::cooc::{CommunityPartition, EntityKind, EntityVocabulary, PairCountTable};
use crate::corpus::DocumentRecord;
use crate::embed::DocVector;
use crate::error::{Error, Result};
use crate::novelty::Aggregation;

pub fn exact_sum(values: &[f64]) -> f64 {
    let mut acc = BigRational::zero();
    for v in values {
        acc += BigRational::from_float(*v).expect("finite value");
    }
    acc.to_f64().expect("representable sum")
}

fn exact_mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| exact_sum(values) / values.len() as f64)
}

/// Linear interpolation between order statistics at `q/100 * (n - 1)`.
pub fn pct(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    if lo + 1 >= s.len() {
        return Some(s[lo]);
    }
    Some(s[lo] + (pos - lo as f64) * (s[lo + 1] - s[lo]))
}

fn aggregate(values: &[f64], agg: Aggregation) -> Option<f64> {
    match agg {
        Aggregation::Mean => exact_mean(values),
        Aggregation::Percentile(q) => pct(values, q),
    }
}

fn find<'a>(docs: &'a [DocumentRecord], id: &str) -> Option<&'a DocumentRecord> {
    docs.iter().find(|d| d.doc_id == id)
}

fn vector<'a>(vectors: &'a [DocVector], id: &str) -> Option<&'a [f64]> {
    vectors
        .iter()
        .find(|v| v.doc_id == id)
        .map(|v| v.values.as_slice())
}

/// Cosine distance between unit vectors.
pub fn distance(u: &[f64], v: &[f64]) -> f64 {
    if u == v {
        return 0.0;
    }
    let mut dot = 0.0;
    for k in 0..u.len() {
        dot += u[k] * v[k];
    }
    (1.0 - dot).clamp(0.0, 2.0)
}

fn focal<'a>(docs: &'a [DocumentRecord], id: &str) -> Result<&'a DocumentRecord> {
    find(docs, id).ok_or_else(|| Error::NotFound {
        kind: "document",
        id: id.to_string(),
    })
}

/// Embedded publications of `author` with year in `[t - b, t - 1]`.
fn past_vectors<'a>(
    docs: &[DocumentRecord],
    vectors: &'a [DocVector],
    author: &str,
    t: i32,
    b: i32,
) -> Vec<&'a [f64]> {
    docs.iter()
        .filter(|d| d.author_ids.iter().any(|a| a == author) && d.year >= t - b && d.year < t)
        .filter_map(|d| vector(vectors, &d.doc_id))
        .collect()
}

pub fn oracle_intra(
    docs: &[DocumentRecord],
    vectors: &[DocVector],
    author: &str,
    focal_id: &str,
    b: i32,
    q: f64,
) -> Result<Option<f64>> {
    let t = focal(docs, focal_id)?.year;
    let p = past_vectors(docs, vectors, author, t, b);
    let mut ds = Vec::new();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            ds.push(distance(p[i], p[j]));
        }
    }
    Ok(pct(&ds, q))
}

pub fn oracle_team_intra(
    docs: &[DocumentRecord],
    vectors: &[DocVector],
    focal_id: &str,
    b: i32,
    q: f64,
) -> Result<Option<f64>> {
    let f = focal(docs, focal_id)?;
    let mut defined = Vec::new();
    for a in &f.author_ids {
        if let Some(s) = oracle_intra(docs, vectors, a, focal_id, b, q)? {
            defined.push(s);
        }
    }
    Ok(exact_mean(&defined))
}

pub fn oracle_inter(
    docs: &[DocumentRecord],
    vectors: &[DocVector],
    focal_id: &str,
    b: i32,
    q: f64,
) -> Result<Option<f64>> {
    let f = focal(docs, focal_id)?;
    let portfolios: Vec<Vec<&[f64]>> = f
        .author_ids
        .iter()
        .map(|a| past_vectors(docs, vectors, a, f.year, b))
        .collect();
    let mut pool = Vec::new();
    for i in 0..portfolios.len() {
        for j in i + 1..portfolios.len() {
            for u in &portfolios[i] {
                for v in &portfolios[j] {
                    pool.push(distance(u, v));
                }
            }
        }
    }
    Ok(pct(&pool, q))
}

/// `(share exploratory, share exploitative, their product)` over the full team.
pub fn oracle_shares(
    docs: &[DocumentRecord],
    vectors: &[DocVector],
    focal_id: &str,
    b: i32,
    q: f64,
    exploratory_cutoff: f64,
    exploitative_cutoff: f64,
) -> Result<(f64, f64, f64)> {
    let f = focal(docs, focal_id)?;
    let (mut hi, mut lo) = (0usize, 0usize);
    for a in &f.author_ids {
        if let Some(s) = oracle_intra(docs, vectors, a, focal_id, b, q)? {
            hi += (s >= exploratory_cutoff) as usize;
            lo += (s <= exploitative_cutoff) as usize;
        }
    }
    let n = f.author_ids.len() as f64;
    let (se, sx) = if n == 0.0 {
        (0.0, 0.0)
    } else {
        (hi as f64 / n, lo as f64 / n)
    };
    Ok((se, sx, se * sx))
}

fn entities(d: &DocumentRecord, kind: EntityKind) -> Vec<String> {
    match kind {
        EntityKind::Journal => d
            .ref_journal_issns
            .iter()
            .filter(|s| !s.is_empty())
            .cloned()
            .collect(),
        EntityKind::Mesh => d.mesh_terms.clone(),
    }
}

fn pairs(ents: &[String]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for i in 0..ents.len() {
        for j in i + 1..ents.len() {
            let (a, b) = (&ents[i], &ents[j]);
            out.push(if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            });
        }
    }
    out
}

/// Every pair occurrence in documents of `year`.
fn year_pairs(docs: &[DocumentRecord], kind: EntityKind, year: i32) -> Vec<(String, String)> {
    docs.iter()
        .filter(|d| d.year == year)
        .flat_map(|d| pairs(&entities(d, kind)))
        .collect()
}

fn commonness(occ: &[(String, String)], a: &str, b: &str) -> f64 {
    let nab = occ.iter().filter(|(x, y)| x == a && y == b).count() as u64;
    if nab == 0 {
        return 0.0;
    }
    let touches = |e: &str| occ.iter().filter(|(x, y)| x == e || y == e).count() as u64;
    let total = occ.len() as u64;
    (nab as f64 * total as f64) / (touches(a) as f64 * touches(b) as f64)
}

pub fn oracle_lee(
    docs: &[DocumentRecord],
    kind: EntityKind,
    focal_id: &str,
    agg: Aggregation,
) -> Result<Option<f64>> {
    let f = focal(docs, focal_id)?;
    let occ = year_pairs(docs, kind, f.year);
    let cs: Vec<f64> = pairs(&entities(f, kind))
        .iter()
        .map(|(a, b)| commonness(&occ, a, b))
        .collect();
    Ok(aggregate(&cs, agg).filter(|c| *c > 0.0).map(|c| -c.ln()))
}

/// Uzzi score with the engine's resampled tables for the focal year as the
/// shared Monte-Carlo component; mean and deviation are recomputed here.
pub fn oracle_uzzi(
    docs: &[DocumentRecord],
    kind: EntityKind,
    focal_id: &str,
    vocab: &EntityVocabulary,
    resamples: &[PairCountTable],
    agg: Aggregation,
) -> Result<Option<f64>> {
    let f = focal(docs, focal_id)?;
    let occ = year_pairs(docs, kind, f.year);
    let m = resamples.len() as f64;
    let mut zs = Vec::new();
    for (a, b) in pairs(&entities(f, kind)) {
        let (Some(i), Some(j)) = (vocab.id(&a), vocab.id(&b)) else {
            continue;
        };
        let xs: Vec<f64> = resamples.iter().map(|t| t.get(i, j) as f64).collect();
        let mu = exact_sum(&xs) / m;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mu) * (x - mu)).collect();
        let sd = (exact_sum(&dev) / (m - 1.0)).sqrt();
        if sd > 0.0 {
            let observed = occ.iter().filter(|(x, y)| *x == a && *y == b).count() as f64;
            zs.push((observed - mu) / sd);
        }
    }
    Ok(aggregate(&zs, agg).map(|z| -z))
}

pub fn oracle_foster(
    docs: &[DocumentRecord],
    kind: EntityKind,
    focal_id: &str,
    vocab: &EntityVocabulary,
    partition: &CommunityPartition,
) -> Result<Option<f64>> {
    let f = focal(docs, focal_id)?;
    let community = |e: &str| {
        vocab
            .id(e)
            .and_then(|i| partition.membership.get(&i).copied())
    };
    let (mut scorable, mut bridging) = (0u32, 0u32);
    for (a, b) in pairs(&entities(f, kind)) {
        if let (Some(x), Some(y)) = (community(&a), community(&b)) {
            scorable += 1;
            bridging += (x != y) as u32;
        }
    }
    Ok((scorable > 0).then(|| bridging as f64 / scorable as f64))
}

fn contains_pair(d: &DocumentRecord, kind: EntityKind, a: &str, b: &str) -> bool {
    pairs(&entities(d, kind))
        .iter()
        .any(|(x, y)| x == a && y == b)
}

/// Cosine similarity of the co-occurrence rows of `a` and `b` accumulated
/// over documents with year in `[from, to]`.
fn profile_similarity(
    docs: &[DocumentRecord],
    kind: EntityKind,
    a: &str,
    b: &str,
    from: i32,
    to: i32,
) -> f64 {
    let occ: Vec<(String, String)> = docs
        .iter()
        .filter(|d| d.year >= from && d.year <= to)
        .flat_map(|d| pairs(&entities(d, kind)))
        .collect();
    let mut universe: Vec<&str> = occ
        .iter()
        .flat_map(|(x, y)| [x.as_str(), y.as_str()])
        .collect();
    universe.sort();
    universe.dedup();
    let row = |e: &str| -> Vec<f64> {
        universe
            .iter()
            .map(|k| {
                occ.iter()
                    .filter(|(x, y)| (x == e && y == k) || (y == e && x == k))
                    .count() as f64
            })
            .collect()
    };
    let (ra, rb) = (row(a), row(b));
    let na: f64 = ra.iter().map(|x| x * x).sum();
    let nb: f64 = rb.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = ra.iter().zip(&rb).map(|(x, y)| x * y).sum();
    dot / (na.sqrt() * nb.sqrt())
}

#[allow(clippy::too_many_arguments)]
pub fn oracle_wang(
    docs: &[DocumentRecord],
    kind: EntityKind,
    focal_id: &str,
    reuse_window: i32,
    min_reuse: u64,
    profile_window: i32,
) -> Result<Option<f64>> {
    let f = focal(docs, focal_id)?;
    let ents = entities(f, kind);
    if ents.len() < 2 {
        return Ok(None);
    }
    let last = docs.iter().map(|d| d.year).max().unwrap_or(i32::MIN);
    if f.year + reuse_window > last {
        return Err(Error::MissingLookahead(format!(
            "{focal_id} needs data through {}",
            f.year + reuse_window
        )));
    }
    let mut distinct = pairs(&ents);
    distinct.sort();
    distinct.dedup();
    let mut contributions = Vec::new();
    for (a, b) in distinct {
        let seen_before = docs
            .iter()
            .any(|d| d.year < f.year && contains_pair(d, kind, &a, &b));
        if seen_before {
            continue;
        }
        let reuse = docs
            .iter()
            .filter(|d| {
                d.year > f.year && d.year <= f.year + reuse_window && contains_pair(d, kind, &a, &b)
            })
            .count() as u64;
        if reuse >= min_reuse {
            contributions.push(
                1.0 - profile_similarity(docs, kind, &a, &b, f.year - profile_window, f.year - 1),
            );
        }
    }
    Ok(Some(exact_sum(&contributions)))
}

pub fn oracle_shibayama(
    docs: &[DocumentRecord],
    vectors: &[DocVector],
    focal_id: &str,
    agg: Aggregation,
) -> Result<Option<f64>> {
    let f = focal(docs, focal_id)?;
    let mut ids: Vec<&str> = Vec::new();
    for r in &f.ref_doc_ids {
        if !r.is_empty() && !ids.contains(&r.as_str()) && vector(vectors, r).is_some() {
            ids.push(r);
        }
    }
    let mut ds = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            ds.push(distance(
                vector(vectors, ids[i]).unwrap(),
                vector(vectors, ids[j]).unwrap(),
            ));
        }
    }
    Ok(aggregate(&ds, agg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleImpact {
    pub citation_count: usize,
    pub di1: Option<f64>,
    pub di5: Option<f64>,
    pub di1nok: Option<f64>,
    pub dein: Option<f64>,
    pub breadth: Option<f64>,
    pub depth: Option<f64>,
}

fn cites(d: &DocumentRecord, target: &str) -> bool {
    d.ref_doc_ids.iter().any(|r| r == target)
}

/// Disruption family by set comprehension over every document.
pub fn oracle_impact(docs: &[DocumentRecord], focal_id: &str) -> Result<OracleImpact> {
    let f = focal(docs, focal_id)?;
    let refs: Vec<&DocumentRecord> = docs.iter().filter(|d| cites(f, &d.doc_id)).collect();
    let citers: Vec<&DocumentRecord> = docs.iter().filter(|d| cites(d, focal_id)).collect();
    let overlap = |c: &DocumentRecord| refs.iter().filter(|r| cites(c, &r.doc_id)).count();
    let n_j = |l: usize| citers.iter().filter(|c| overlap(c) >= l).count();
    let n_k = docs
        .iter()
        .filter(|d| d.doc_id != focal_id && !cites(d, focal_id) && d.year >= f.year)
        .filter(|d| refs.iter().any(|r| cites(d, &r.doc_id)))
        .count();
    let n = citers.len();
    let di = |l: usize, k: usize| {
        let (nj, ni) = (n_j(l), n - n_j(l));
        (ni + nj + k > 0).then(|| (ni as f64 - nj as f64) / (ni + nj + k) as f64)
    };
    let mutual = citers
        .iter()
        .filter(|c| {
            citers
                .iter()
                .any(|o| o.doc_id != c.doc_id && cites(c, &o.doc_id))
        })
        .count();
    let total_overlap: usize = citers.iter().map(|c| overlap(c)).sum();
    let depth = (n > 0).then(|| mutual as f64 / n as f64);
    Ok(OracleImpact {
        citation_count: n,
        di1: di(1, n_k),
        di5: di(5, n_k),
        di1nok: di(1, 0),
        dein: (n > 0).then(|| total_overlap as f64 / n as f64),
        breadth: depth.map(|d| 1.0 - d),
        depth,
    })
}

/// Average-rank percentile within groups, by counting.
pub fn oracle_percentile_rank<K: PartialEq>(
    values: &[Option<f64>],
    groups: &[K],
) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| {
            let x = values[i]?;
            let peers: Vec<f64> = (0..values.len())
                .filter(|j| groups[*j] == groups[i])
                .filter_map(|j| values[j])
                .collect();
            let n = peers.len();
            if n == 1 {
                return Some(0.5);
            }
            let less = peers.iter().filter(|v| **v < x).count();
            let equal = peers.iter().filter(|v| **v == x).count();
            Some((2 * less + equal - 1) as f64 / (2 * (n - 1)) as f64)
        })
        .collect()
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..k {
        let p = (c..k).max_by(|x, y| m[*x][c].abs().total_cmp(&m[*y][c].abs()))?;
        if m[p][c] == 0.0 {
            return None;
        }
        m.swap(c, p);
        let piv = m[c][c];
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..k {
            if r != c {
                let factor = m[r][c];
                if factor != 0.0 {
                    let pivot_row = m[c].clone();
                    for (x, p) in m[r].iter_mut().zip(&pivot_row) {
                        *x -= factor * p;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[k..].to_vec()).collect())
}

/// Least-squares coefficients from the normal equations and CR1
/// cluster-robust standard errors from the sandwich formula.
pub fn oracle_clustered_ols(
    x: &[Vec<f64>],
    y: &[f64],
    clusters: &[String],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let (n, k) = (x.len(), x.first()?.len());
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            xty[a] += x[i][a] * y[i];
            for b in 0..k {
                xtx[a][b] += x[i][a] * x[i][b];
            }
        }
    }
    let inv = invert(&xtx)?;
    let beta: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum())
        .collect();
    let mut labels: Vec<&String> = clusters.iter().collect();
    labels.sort();
    labels.dedup();
    let mut meat = vec![vec![0.0; k]; k];
    for g in &labels {
        let mut s = vec![0.0; k];
        for i in (0..n).filter(|i| &clusters[*i] == *g) {
            let u = y[i] - (0..k).map(|a| x[i][a] * beta[a]).sum::<f64>();
            for a in 0..k {
                s[a] += x[i][a] * u;
            }
        }
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += s[a] * s[b];
            }
        }
    }
    let g = labels.len() as f64;
    let c = g / (g - 1.0) * (n as f64 - 1.0) / (n - k) as f64;
    let se = (0..k)
        .map(|a| {
            let mut v = 0.0;
            for p in 0..k {
                for q in 0..k {
                    v += inv[a][p] * meat[p][q] * inv[q][a];
                }
            }
            (c * v).sqrt()
        })
        .collect();
    Some((beta, se))
}
