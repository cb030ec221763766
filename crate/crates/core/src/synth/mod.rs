//! Seeded synthetic corpora with planted structure, plus brute-force oracles.
//!
//! Topics are orthonormal directions; each document vector is its topic
//! direction plus noise of bounded norm, so within- and cross-topic distances
//! are separated by a known margin. Authors are either concentrated (one home
//! topic), diffuse (lead papers on any topic) or mixed (two topics). Journals
//! belong to communities aligned with topics.

use std::collections::BTreeSet;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_jsonl, CorpusIndex, DocumentRecord, JournalRecord, LabelRecord};
use crate::embed::{DocVector, VectorStore};
use crate::error::{Error, Result};

pub mod oracle;

pub const LABEL_CATEGORIES: [&str; 8] = [
    "New Finding",
    "Technical Advance",
    "Interesting Hypothesis",
    "Novel Drug Target",
    "Confirmation",
    "Controversial",
    "Good for Teaching",
    "Negative/Null Results",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub n_authors: usize,
    pub n_journals: usize,
    /// Inclusive publication-year range.
    pub years: (i32, i32),
    pub dim: usize,
    pub seed: u64,
    pub n_topics: usize,
    pub diffuse_fraction: f64,
    pub concentrated_fraction: f64,
    /// Relative weight of a diffuse author when drawing a paper's lead author.
    pub diffuse_lead_weight: f64,
    /// Upper bound on the norm of the noise added to a topic direction.
    pub noise_radius: f64,
    pub communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Share of reference slots pointing at earlier corpus documents.
    pub citation_rate: f64,
    pub refs: (usize, usize),
    pub mesh: (usize, usize),
    pub team: (usize, usize),
    pub label_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_docs: 1000,
            n_authors: 150,
            n_journals: 40,
            years: (2000, 2009),
            dim: 32,
            seed: 7,
            n_topics: 5,
            diffuse_fraction: 0.2,
            concentrated_fraction: 0.8,
            diffuse_lead_weight: 2.0,
            noise_radius: 0.25,
            communities: 5,
            p_in: 0.85,
            p_out: 0.15,
            citation_rate: 0.6,
            refs: (4, 10),
            mesh: (2, 5),
            team: (2, 4),
            label_rate: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Archetype {
    Diffuse,
    Concentrated,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TruthRecord {
    Author {
        author_id: String,
        archetype: Archetype,
        home_topic: usize,
    },
    Journal {
        issn: String,
        community: usize,
    },
    Doc {
        doc_id: String,
        topic: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub docs: Vec<DocumentRecord>,
    pub journals: Vec<JournalRecord>,
    pub labels: Vec<LabelRecord>,
    pub vectors: Vec<DocVector>,
    pub truth: Vec<TruthRecord>,
}

impl SynthCorpus {
    pub fn index(&self) -> Result<CorpusIndex> {
        let index =
            CorpusIndex::from_documents(self.docs.clone())?.with_journals(self.journals.clone())?;
        Ok(index.with_labels(self.labels.clone())?.0)
    }

    pub fn store(&self) -> Result<VectorStore> {
        let mut s = VectorStore::new(self.config.dim);
        for v in &self.vectors {
            s.insert(v.clone())?;
        }
        Ok(s)
    }

    pub fn authors_of(&self, archetype: Archetype) -> BTreeSet<String> {
        self.truth
            .iter()
            .filter_map(|t| match t {
                TruthRecord::Author {
                    author_id,
                    archetype: a,
                    ..
                } if *a == archetype => Some(author_id.clone()),
                _ => None,
            })
            .collect()
    }

    /// Write `corpus.jsonl`, `journals.csv`, `labels.jsonl`, `vectors.jsonl`
    /// and `truth.jsonl` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.index()?.export(dir)?;
        self.store()?.save(&dir.join("vectors.jsonl"))?;
        write_jsonl(&dir.join("truth.jsonl"), &self.truth)
    }
}

/// Largest within-topic and smallest cross-topic cosine distance the
/// generator geometry allows for a noise radius `r < 1/sqrt(2)`.
pub fn cluster_distance_bounds(noise_radius: f64) -> (f64, f64) {
    let a = 2.0 * noise_radius.asin();
    (1.0 - a.cos(), 1.0 - a.sin())
}

fn check(cfg: &SynthConfig) -> Result<()> {
    let bad = |m: &str| Err(Error::invalid(format!("infeasible synth config: {m}")));
    if cfg.n_docs == 0
        || cfg.n_authors == 0
        || cfg.n_journals == 0
        || cfg.n_topics == 0
        || cfg.communities == 0
    {
        return bad("all counts must be positive");
    }
    if cfg.years.1 < cfg.years.0 {
        return bad("empty year range");
    }
    if cfg.dim < cfg.n_topics.max(8) {
        return bad("dim must be at least max(n_topics, 8)");
    }
    for f in [
        cfg.diffuse_fraction,
        cfg.concentrated_fraction,
        cfg.citation_rate,
        cfg.label_rate,
        cfg.p_in,
        cfg.p_out,
    ] {
        if !(0.0..=1.0).contains(&f) {
            return bad("fractions and probabilities must lie in [0, 1]");
        }
    }
    if cfg.diffuse_fraction + cfg.concentrated_fraction > 1.0 + 1e-12 {
        return bad("archetype fractions sum above 1");
    }
    if !(cfg.diffuse_lead_weight.is_finite() && cfg.diffuse_lead_weight > 0.0) {
        return bad("diffuse_lead_weight must be positive");
    }
    if cfg.p_in + cfg.p_out == 0.0 {
        return bad("p_in and p_out are both zero");
    }
    if !(0.0..std::f64::consts::FRAC_1_SQRT_2).contains(&cfg.noise_radius) {
        return bad("noise_radius must lie in [0, 1/sqrt(2))");
    }
    for (name, (lo, hi)) in [("refs", cfg.refs), ("mesh", cfg.mesh), ("team", cfg.team)] {
        if lo < 2 || hi < lo {
            return Err(Error::invalid(format!(
                "infeasible synth config: {name} range must satisfy 2 <= lo <= hi"
            )));
        }
    }
    if cfg.refs.1 > cfg.n_journals {
        return bad("more references per document than distinct journals");
    }
    if cfg.communities > cfg.n_journals {
        return bad("more journal communities than journals");
    }
    Ok(())
}

fn unit_noise(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

fn pick_community(rng: &mut ChaCha8Rng, home: usize, cfg: &SynthConfig) -> usize {
    if cfg.communities == 1 || rng.gen::<f64>() < cfg.p_in / (cfg.p_in + cfg.p_out) {
        home
    } else {
        let other = rng.gen_range(0..cfg.communities - 1);
        if other >= home {
            other + 1
        } else {
            other
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    check(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut truth = Vec::new();

    let issn = |k: usize| format!("{:04}-{:04}", 1000 + k / 10_000, k % 10_000);
    let journals: Vec<JournalRecord> = (0..cfg.n_journals)
        .map(|k| JournalRecord {
            issn: issn(k),
            sjr: (rng.gen_range(0.2..5.0f64) * 1000.0).round() / 1000.0,
            category: format!("field{}", k % cfg.communities),
        })
        .collect();
    for (k, j) in journals.iter().enumerate() {
        truth.push(TruthRecord::Journal {
            issn: j.issn.clone(),
            community: k % cfg.communities,
        });
    }
    let by_community: Vec<Vec<usize>> = (0..cfg.communities)
        .map(|c| {
            (0..cfg.n_journals)
                .filter(|k| k % cfg.communities == c)
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..cfg.n_authors).collect();
    order.shuffle(&mut rng);
    let n_diffuse = (cfg.diffuse_fraction * cfg.n_authors as f64).round() as usize;
    let n_conc = ((cfg.concentrated_fraction * cfg.n_authors as f64).round() as usize)
        .min(cfg.n_authors - n_diffuse);
    let mut archetype = vec![Archetype::Mixed; cfg.n_authors];
    for (rank, a) in order.iter().enumerate() {
        archetype[*a] = if rank < n_diffuse {
            Archetype::Diffuse
        } else if rank < n_diffuse + n_conc {
            Archetype::Concentrated
        } else {
            Archetype::Mixed
        };
    }
    let home: Vec<usize> = (0..cfg.n_authors).map(|a| a % cfg.n_topics).collect();
    let author_id = |a: usize| format!("A{a:04}");
    for a in 0..cfg.n_authors {
        truth.push(TruthRecord::Author {
            author_id: author_id(a),
            archetype: archetype[a],
            home_topic: home[a],
        });
    }
    let coauthor_pool: Vec<Vec<usize>> = (0..cfg.n_topics)
        .map(|t| {
            (0..cfg.n_authors)
                .filter(|a| home[*a] == t && archetype[*a] != Archetype::Diffuse)
                .collect()
        })
        .collect();
    if coauthor_pool.iter().any(|p| p.len() < cfg.team.1) {
        return Err(Error::invalid(format!(
            "infeasible synth config: every topic needs at least {} non-diffuse authors",
            cfg.team.1
        )));
    }

    let weights = archetype.iter().map(|a| {
        if *a == Archetype::Diffuse {
            cfg.diffuse_lead_weight
        } else {
            1.0
        }
    });
    let lead_draw =
        WeightedIndex::new(weights).map_err(|e| Error::invalid(format!("lead weights: {e}")))?;

    let n_years = (cfg.years.1 - cfg.years.0 + 1) as usize;
    let mut docs: Vec<DocumentRecord> = Vec::with_capacity(cfg.n_docs);
    let mut topics: Vec<usize> = Vec::with_capacity(cfg.n_docs);
    let mut vectors = Vec::with_capacity(cfg.n_docs);
    let mut labels = Vec::new();
    let mut first_of_year = 0;
    for i in 0..cfg.n_docs {
        let year = cfg.years.0 + (i * n_years / cfg.n_docs) as i32;
        if i > 0 && docs[i - 1].year != year {
            first_of_year = i;
        }
        let lead = lead_draw.sample(&mut rng);
        let topic = match archetype[lead] {
            Archetype::Concentrated => home[lead],
            Archetype::Diffuse => rng.gen_range(0..cfg.n_topics),
            Archetype::Mixed => {
                if rng.gen::<bool>() {
                    home[lead]
                } else {
                    (home[lead] + 1) % cfg.n_topics
                }
            }
        };
        let size = rng.gen_range(cfg.team.0..=cfg.team.1);
        let mut team = vec![lead];
        let pool: Vec<usize> = coauthor_pool[topic]
            .iter()
            .copied()
            .filter(|a| *a != lead)
            .collect();
        team.extend(pool.choose_multiple(&mut rng, size - 1));

        let mut v = vec![0.0; cfg.dim];
        v[topic] = 1.0;
        let radius = cfg.noise_radius * rng.gen::<f64>();
        for (x, n) in v.iter_mut().zip(unit_noise(&mut rng, cfg.dim)) {
            *x += radius * n;
        }
        let doc_id = format!("D{i:05}");
        vectors.push(DocVector::new(doc_id.clone(), v)?);

        let words: Vec<String> = (0..25)
            .map(|_| {
                if rng.gen::<f64>() < 0.9 {
                    format!("t{topic}w{}", rng.gen_range(0..40))
                } else {
                    format!("common{}", rng.gen_range(0..20))
                }
            })
            .collect();

        let own_community = pick_community(&mut rng, topic % cfg.communities, cfg);
        let own = &by_community[own_community];
        let journal_issn = issn(own[rng.gen_range(0..own.len())]);

        let n_refs = rng.gen_range(cfg.refs.0..=cfg.refs.1);
        let (mut ref_ids, mut ref_issns, mut ref_years) = (Vec::new(), Vec::new(), Vec::new());
        let mut used_journals: BTreeSet<usize> = BTreeSet::new();
        for slot in 0..n_refs {
            let mut cited = None;
            if first_of_year > 0 && rng.gen::<f64>() < cfg.citation_rate {
                for _ in 0..10 {
                    let same: Vec<usize> =
                        (0..first_of_year).filter(|d| topics[*d] == topic).collect();
                    let c = if !same.is_empty() && rng.gen::<f64>() < 0.7 {
                        same[rng.gen_range(0..same.len())]
                    } else {
                        rng.gen_range(0..first_of_year)
                    };
                    if !ref_ids.contains(&docs[c].doc_id) {
                        cited = Some(c);
                        break;
                    }
                }
            }
            match cited {
                Some(c) => {
                    let d: &DocumentRecord = &docs[c];
                    ref_ids.push(d.doc_id.clone());
                    ref_issns.push(d.journal_issn.clone());
                    ref_years.push(Some(d.year));
                }
                None => {
                    let comm = pick_community(&mut rng, topic % cfg.communities, cfg);
                    let mut choices: Vec<usize> = by_community[comm]
                        .iter()
                        .copied()
                        .filter(|j| !used_journals.contains(j))
                        .collect();
                    if choices.is_empty() {
                        choices = (0..cfg.n_journals)
                            .filter(|j| !used_journals.contains(j))
                            .collect();
                    }
                    let j = choices[rng.gen_range(0..choices.len())];
                    used_journals.insert(j);
                    ref_ids.push(format!("X{i:05}-{slot}"));
                    ref_issns.push(issn(j));
                    ref_years.push(Some(year - rng.gen_range(1..=5)));
                }
            }
        }

        let n_mesh = rng.gen_range(cfg.mesh.0..=cfg.mesh.1);
        let mut mesh: Vec<String> = Vec::new();
        while mesh.len() < n_mesh {
            let t = if rng.gen::<f64>() < 0.85 {
                topic
            } else {
                rng.gen_range(0..cfg.n_topics)
            };
            let term = format!("D{t:02}.{:03}", rng.gen_range(0..15));
            if !mesh.contains(&term) {
                mesh.push(term);
            }
        }

        if rng.gen::<f64>() < cfg.label_rate {
            let n = rng.gen_range(1..=3);
            let categories = (0..n)
                .map(|_| {
                    if rng.gen::<f64>() < 0.4 {
                        LABEL_CATEGORIES[0].to_string()
                    } else {
                        LABEL_CATEGORIES[rng.gen_range(1..LABEL_CATEGORIES.len())].to_string()
                    }
                })
                .collect();
            labels.push(LabelRecord {
                doc_id: doc_id.clone(),
                categories,
            });
        }

        truth.push(TruthRecord::Doc {
            doc_id: doc_id.clone(),
            topic,
        });
        topics.push(topic);
        docs.push(DocumentRecord {
            doc_id,
            year,
            title: format!("Synthetic study {i} on topic {topic}"),
            abstract_text: words.join(" "),
            journal_issn,
            mesh_terms: mesh,
            author_ids: team.into_iter().map(author_id).collect(),
            ref_doc_ids: ref_ids,
            ref_journal_issns: ref_issns,
            ref_years: Some(ref_years),
        });
    }
    Ok(SynthCorpus {
        config: cfg.clone(),
        docs,
        journals,
        labels,
        vectors,
        truth,
    })
}

/// Random citation DAG over `n` nodes: node `k` cites each earlier node with
/// probability `p`. Four nodes share each year.
pub fn random_citation_dag(n: usize, p: f64, seed: u64) -> Vec<DocumentRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let refs: Vec<String> = (0..k)
                .filter(|_| rng.gen::<f64>() < p)
                .map(|j| format!("N{j:02}"))
                .collect();
            DocumentRecord {
                doc_id: format!("N{k:02}"),
                year: 2000 + (k / 4) as i32,
                title: String::new(),
                abstract_text: String::new(),
                journal_issn: "0000-0001".into(),
                mesh_terms: vec![],
                author_ids: vec![],
                ref_journal_issns: vec!["0000-0001".into(); refs.len()],
                ref_doc_ids: refs,
                ref_years: None,
            }
        })
        .collect()
}
