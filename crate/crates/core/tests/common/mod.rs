#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamscope::cognitive::{CognitiveEngine, ProfileParams};
use teamscope::cooc::{
    resample_tables, EntityKind, NullConfig, NullModelStats, PairCountTable, SlotLayout, YearTables,
};
use teamscope::corpus::{CorpusIndex, DocumentRecord};
use teamscope::disruption::impact_scores;
use teamscope::novelty::{partitions_by_year, MissingReason, NoveltyEngine, NoveltyParams};
use teamscope::synth::oracle::{
    oracle_foster, oracle_impact, oracle_inter, oracle_intra, oracle_lee, oracle_shares,
    oracle_shibayama, oracle_team_intra, oracle_uzzi, oracle_wang,
};
use teamscope::synth::{random_citation_dag, SynthConfig, SynthCorpus};
use teamscope::Error;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn demo_dir() -> PathBuf {
    workspace_root().join("demo")
}

/// Small corpus for the exact novelty comparisons.
pub fn novelty_config(seed: u64) -> SynthConfig {
    SynthConfig {
        n_docs: 200,
        n_authors: 60,
        n_journals: 20,
        years: (2000, 2007),
        dim: 16,
        seed,
        n_topics: 4,
        communities: 4,
        refs: (3, 8),
        mesh: (2, 5),
        team: (2, 3),
        ..SynthConfig::default()
    }
}

/// Tiny corpus where most authors have several past papers.
pub fn cognitive_config(seed: u64) -> SynthConfig {
    SynthConfig {
        n_docs: 30,
        n_authors: 10,
        n_journals: 8,
        years: (2000, 2005),
        dim: 8,
        seed,
        n_topics: 2,
        communities: 2,
        refs: (2, 5),
        mesh: (2, 3),
        team: (2, 3),
        ..SynthConfig::default()
    }
}

/// Count of mismatches between engine and oracle over every doc of `dags`
/// random citation graphs.
pub fn disruption_mismatches(dags: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut bad) = (0, 0);
    for g in 0..dags {
        let n = rng.gen_range(2..=40);
        let p = rng.gen_range(0.05..0.5);
        let docs = random_citation_dag(n, p, g);
        let index = CorpusIndex::from_documents(docs.clone()).unwrap();
        for d in &docs {
            let e = impact_scores(&index, &d.doc_id, None).unwrap();
            let o = oracle_impact(&docs, &d.doc_id).unwrap();
            checked += 1;
            let same = e.citation_count == o.citation_count
                && e.di1 == o.di1
                && e.di5 == o.di5
                && e.di1nok == o.di1nok
                && e.dein == o.dein
                && e.breadth == o.breadth
                && e.depth == o.depth;
            if !same {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

#[derive(Debug, Default)]
pub struct Tally {
    pub checked: usize,
    pub defined: usize,
    pub mismatches: Vec<String>,
}

impl Tally {
    pub fn check<T: PartialEq + std::fmt::Debug>(
        &mut self,
        what: &str,
        engine: T,
        oracle: T,
        defined: bool,
    ) {
        self.checked += 1;
        self.defined += defined as usize;
        if engine != oracle {
            self.mismatches
                .push(format!("{what}: engine {engine:?} oracle {oracle:?}"));
        }
    }
}

/// Score every document with the engine and compare each indicator against
/// its oracle. Resampled tables and partitions are shared.
pub fn novelty_comparison(corpus: &SynthCorpus, resamples: usize, seed: u64) -> Tally {
    let index = corpus.index().unwrap();
    let store = corpus.store().unwrap();
    let params = NoveltyParams::default();
    let docs = &corpus.docs;
    let mut tally = Tally::default();
    for kind in EntityKind::ALL {
        let tables = YearTables::build(&index, kind);
        let years: Vec<i32> = tables.counts.keys().copied().collect();
        let mut nulls = BTreeMap::new();
        let mut draws: BTreeMap<i32, Vec<PairCountTable>> = BTreeMap::new();
        for &y in &years {
            let layout = SlotLayout::build(&index, &tables.vocab, kind, y);
            let cfg = NullConfig {
                resamples,
                swap_factor: 10,
                seed: seed + y as u64 * 1000,
            };
            let ts = resample_tables(&layout, &cfg);
            nulls.insert(
                y,
                NullModelStats::from_tables(&layout.table(), &ts, cfg.seed).unwrap(),
            );
            draws.insert(y, ts);
        }
        let parts = partitions_by_year(&tables, years.iter().copied(), &params, seed);
        let engine = NoveltyEngine::new(&index, &store, &tables, &nulls, &parts, params);
        for d in docs {
            let s = engine.score(d).unwrap();
            let id = &d.doc_id;
            let tag = |ind: &str| format!("{kind}/{ind}/{id}");
            let u =
                oracle_uzzi(docs, kind, id, &tables.vocab, &draws[&d.year], params.uzzi).unwrap();
            tally.check(&tag("uzzi"), s.uzzi, u, u.is_some());
            let l = oracle_lee(docs, kind, id, params.lee).unwrap();
            tally.check(&tag("lee"), s.lee, l, l.is_some());
            match parts.get(&d.year) {
                Some(p) => {
                    let f = oracle_foster(docs, kind, id, &tables.vocab, p).unwrap();
                    tally.check(&tag("foster"), s.foster, f, f.is_some());
                }
                None => tally.check(&tag("foster"), s.foster, None, false),
            }
            match oracle_wang(
                docs,
                kind,
                id,
                params.reuse_window,
                params.min_reuse,
                params.profile_window,
            ) {
                Ok(w) => tally.check(&tag("wang"), s.wang, w, w.is_some()),
                Err(Error::MissingLookahead(_)) => tally.check(
                    &tag("wang"),
                    (s.wang, s.missing.get("wang").copied()),
                    (None, Some(MissingReason::NoLookahead)),
                    false,
                ),
                Err(e) => panic!("{e}"),
            }
            let sh = oracle_shibayama(docs, &corpus.vectors, id, params.shibayama).unwrap();
            tally.check(&tag("shibayama"), s.shibayama, sh, sh.is_some());
        }
    }
    tally
}

/// Compare intra, team intra, inter and shares on every (author, doc).
pub fn cognitive_comparison(
    docs: &[DocumentRecord],
    corpus: &SynthCorpus,
    cutoffs: (f64, f64),
) -> Tally {
    let index = CorpusIndex::from_documents(docs.to_vec()).unwrap();
    let store = corpus.store().unwrap();
    let params = ProfileParams::default();
    let engine = CognitiveEngine::new(&index, &store, params);
    let vectors = &corpus.vectors;
    let b = params.window as i32;
    let mut tally = Tally::default();
    let th = teamscope::cognitive::ProfileThresholds {
        exploratory_cutoff: cutoffs.0,
        exploitative_cutoff: cutoffs.1,
    };
    for d in docs {
        let id = &d.doc_id;
        for a in &d.author_ids {
            let o = oracle_intra(docs, vectors, a, id, b, params.q).unwrap();
            tally.check(
                &format!("intra/{a}/{id}"),
                engine.intra_author(a, id).unwrap(),
                o,
                o.is_some(),
            );
        }
        let o = oracle_team_intra(docs, vectors, id, b, params.q).unwrap();
        tally.check(
            &format!("team_intra/{id}"),
            engine.team_intra(id).unwrap(),
            o,
            o.is_some(),
        );
        let o = oracle_inter(docs, vectors, id, b, params.q).unwrap();
        tally.check(
            &format!("inter/{id}"),
            engine.inter_author(id).unwrap(),
            o,
            o.is_some(),
        );
        let m = engine.team_composition(id, &th).unwrap();
        let o = oracle_shares(docs, vectors, id, b, params.q, cutoffs.0, cutoffs.1).unwrap();
        tally.check(
            &format!("shares/{id}"),
            (m.share_exploratory, m.share_exploitative, m.interaction),
            o,
            true,
        );
    }
    tally
}

/// Shuffle author lists and reference slots (keeping slots aligned).
pub fn shuffle_docs<R: Rng>(docs: &[DocumentRecord], rng: &mut R) -> Vec<DocumentRecord> {
    docs.iter()
        .map(|d| {
            let mut d = d.clone();
            d.author_ids.shuffle(rng);
            d.mesh_terms.shuffle(rng);
            let mut order: Vec<usize> = (0..d.ref_doc_ids.len()).collect();
            order.shuffle(rng);
            d.ref_doc_ids = order.iter().map(|k| d.ref_doc_ids[*k].clone()).collect();
            d.ref_journal_issns = order
                .iter()
                .map(|k| d.ref_journal_issns[*k].clone())
                .collect();
            if let Some(y) = &d.ref_years {
                d.ref_years = Some(order.iter().map(|k| y[*k]).collect());
            }
            d
        })
        .collect()
}

/// Every regular file under `dir`, relative path -> bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
