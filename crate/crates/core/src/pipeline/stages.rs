use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{task_seed, write_json, RunConfig, Stage, StageOutput};
use crate::analytics::{
    binned_surface, correlogram, fit, marginal_effect, summary_stats, turning_point, Term,
    VariableTable,
};
use crate::cognitive::{classify, fit_thresholds, threshold_sample, CognitiveEngine, TeamScores};
use crate::cooc::persist::{
    read_null, read_table, read_vocab, write_null, write_table, write_vocab,
};
use crate::cooc::{
    null_resample, CommunityPartition, EntityKind, NullConfig, NullModelStats, YearTables,
};
use crate::corpus::{ingest, perceived_novelty_sample, CorpusIndex};
use crate::disruption::impact_scores;
use crate::embed::{embed_corpus, load_vectors, VectorStore};
use crate::error::{Error, Result};
use crate::novelty::{partitions_by_year, NoveltyEngine};
use crate::quantile::ordered_mean;

const CORPUS_DIR: &str = "corpus";
const FACTORS: [&str; 3] = ["year", "category", "journal"];
const NOVELTY_COLUMNS: [&str; 4] = ["uzzi", "lee", "foster", "wang"];
const IMPACT_COLUMNS: [&str; 7] = [
    "citation_count",
    "di1",
    "di5",
    "di1nok",
    "dein",
    "breadth",
    "depth",
];

fn surface_file(s: &[String; 3]) -> String {
    format!("surface_{}_{}_{}.csv", s[0], s[1], s[2])
}

/// Files or directories (relative to the output dir) a stage owns.
pub(crate) fn declared_outputs(stage: Stage, cfg: &RunConfig) -> Vec<String> {
    match stage {
        Stage::Ingest => vec![CORPUS_DIR.into(), "ingest_report.json".into()],
        Stage::Embed => vec!["vectors.jsonl".into(), "embed_coverage.json".into()],
        Stage::Cooc => vec!["cooc".into(), "null".into(), "partitions".into()],
        Stage::Cognitive => vec![
            "cognitive.csv".into(),
            "author_intra.csv".into(),
            "thresholds.json".into(),
        ],
        Stage::Novelty => cfg
            .novelty
            .kinds
            .iter()
            .map(|k| format!("novelty_{k}.csv"))
            .collect(),
        Stage::Disruption => vec!["impact.csv".into()],
        Stage::Normalize => vec!["variables.csv".into(), "label_sample.json".into()],
        Stage::Regress => {
            let mut v: Vec<String> = cfg
                .models
                .iter()
                .map(|m| format!("fit_{}.json", m.name))
                .collect();
            v.push("turning_points.csv".into());
            v
        }
        Stage::Report => {
            let mut v = vec!["summary.csv".to_string(), "correlogram.csv".to_string()];
            v.extend(cfg.analytics.surfaces.iter().map(surface_file));
            v
        }
    }
}

pub(crate) fn execute(stage: Stage, cfg: &RunConfig) -> Result<StageOutput> {
    let out = cfg.paths.out.as_path();
    match stage {
        Stage::Ingest => run_ingest(cfg, out),
        Stage::Embed => run_embed(cfg, out),
        Stage::Cooc => run_cooc(cfg, out),
        Stage::Cognitive => run_cognitive(cfg, out),
        Stage::Novelty => run_novelty(cfg, out),
        Stage::Disruption => run_disruption(cfg, out),
        Stage::Normalize => run_normalize(cfg, out),
        Stage::Regress => run_regress(cfg, out),
        Stage::Report => run_report(cfg, out),
    }
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn rel(out: &Path, p: &Path) -> String {
    p.strip_prefix(out)
        .unwrap_or(p)
        .to_string_lossy()
        .replace('\\', "/")
}

fn load_index(out: &Path) -> Result<CorpusIndex> {
    CorpusIndex::load_dir(&out.join(CORPUS_DIR))
}

fn load_store(out: &Path) -> Result<VectorStore> {
    load_vectors(&out.join("vectors.jsonl"))
}

fn fmt(v: Option<f64>) -> String {
    crate::analytics::fmt_opt(v)
}

fn run_ingest(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let p = &cfg.paths;
    let (index, report) = ingest(
        &p.corpus,
        p.journals.as_deref(),
        p.labels.as_deref(),
        &cfg.filter,
    )?;
    index.export(&out.join(CORPUS_DIR))?;
    write_json(&out.join("ingest_report.json"), &report)?;
    Ok(StageOutput {
        files: vec![
            format!("{CORPUS_DIR}/corpus.jsonl"),
            format!("{CORPUS_DIR}/journals.csv"),
            format!("{CORPUS_DIR}/labels.jsonl"),
            "ingest_report.json".into(),
        ],
        rows: index.len(),
    })
}

fn run_embed(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let index = load_index(out)?;
    let store = match (&cfg.paths.vectors, cfg.embed.fallback) {
        (Some(p), false) => load_vectors(p)?,
        _ => embed_corpus(&index, cfg.embed.dim, task_seed(cfg.seed, "embed"))?,
    };
    store.save(&out.join("vectors.jsonl"))?;
    write_json(&out.join("embed_coverage.json"), &store.coverage(&index))?;
    Ok(StageOutput {
        files: vec!["vectors.jsonl".into(), "embed_coverage.json".into()],
        rows: store.len(),
    })
}

fn run_cooc(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let index = load_index(out)?;
    let params = cfg.novelty.params();
    let mut files = Vec::new();
    let mut rows = 0;
    for &kind in &cfg.novelty.kinds {
        let tables = YearTables::build(&index, kind);
        let cdir = out.join("cooc").join(kind.as_str());
        let ndir = out.join("null").join(kind.as_str());
        mkdir(&cdir)?;
        mkdir(&ndir)?;
        let vocab = cdir.join("vocab.txt");
        write_vocab(&vocab, &tables.vocab)?;
        files.push(rel(out, &vocab));
        for (y, t) in &tables.counts {
            let p = cdir.join(format!("{y}.bin"));
            write_table(&p, t)?;
            files.push(rel(out, &p));
            rows += t.n_cells();
        }
        for (y, t) in &tables.doc_frequency {
            let p = cdir.join(format!("df_{y}.bin"));
            write_table(&p, t)?;
            files.push(rel(out, &p));
        }
        let years: Vec<i32> = tables.counts.keys().copied().collect();
        let nulls: Vec<NullModelStats> = years
            .par_iter()
            .map(|&y| {
                let nc = NullConfig {
                    resamples: cfg.null.resamples,
                    swap_factor: cfg.null.swap_factor,
                    seed: null_seed(cfg.seed, kind, y),
                };
                null_resample(&index, &tables.vocab, kind, y, &nc)
            })
            .collect::<Result<_>>()?;
        for n in &nulls {
            let p = ndir.join(format!("{}.bin", n.year));
            write_null(&p, n)?;
            files.push(rel(out, &p));
        }
        let parts = partitions_by_year(
            &tables,
            years,
            &params,
            task_seed(cfg.seed, &format!("partition/{kind}")),
        );
        let pdir = out.join("partitions");
        mkdir(&pdir)?;
        let p = pdir.join(format!("{kind}.json"));
        write_json(&p, &parts)?;
        files.push(rel(out, &p));
    }
    Ok(StageOutput { files, rows })
}

/// Null-model seed of one year, as used by the cooc stage.
pub(crate) fn null_seed(seed: u64, kind: EntityKind, year: i32) -> u64 {
    task_seed(seed, &format!("null/{kind}/{year}"))
}

type CoocInputs = (
    YearTables,
    BTreeMap<i32, NullModelStats>,
    BTreeMap<i32, CommunityPartition>,
);

fn load_cooc(cfg: &RunConfig, out: &Path, kind: EntityKind) -> Result<CoocInputs> {
    let cdir = out.join("cooc").join(kind.as_str());
    let vocab = read_vocab(&cdir.join("vocab.txt"), kind)?;
    let index_years = load_years(&cdir)?;
    let mut counts = BTreeMap::new();
    let mut df = BTreeMap::new();
    let mut nulls = BTreeMap::new();
    for y in index_years {
        counts.insert(y, read_table(&cdir.join(format!("{y}.bin")), y)?);
        df.insert(y, read_table(&cdir.join(format!("df_{y}.bin")), y)?);
        let np = out
            .join("null")
            .join(kind.as_str())
            .join(format!("{y}.bin"));
        nulls.insert(
            y,
            read_null(&np, y, cfg.null.resamples, null_seed(cfg.seed, kind, y))?,
        );
    }
    let pp = out.join("partitions").join(format!("{kind}.json"));
    let text = fs::read_to_string(&pp).map_err(|e| Error::io(&pp, e))?;
    let parts = serde_json::from_str(&text)?;
    Ok((
        YearTables::from_parts(kind, vocab, counts, df),
        nulls,
        parts,
    ))
}

fn load_years(dir: &Path) -> Result<BTreeSet<i32>> {
    let mut years = BTreeSet::new();
    for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let e = e.map_err(|e| Error::io(dir, e))?;
        let name = e.file_name().to_string_lossy().into_owned();
        if let Some(y) = name.strip_suffix(".bin").and_then(|s| s.parse().ok()) {
            years.insert(y);
        }
    }
    Ok(years)
}

fn run_cognitive(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let index = load_index(out)?;
    let store = load_store(out)?;
    let engine = CognitiveEngine::new(&index, &store, cfg.profile.params());
    let ids: Vec<&str> = index.docs().map(|d| d.doc_id.as_str()).collect();
    let scores: Vec<TeamScores> = ids
        .par_iter()
        .map(|id| engine.team_scores(id))
        .collect::<Result<_>>()?;
    let thresholds = fit_thresholds(&threshold_sample(&scores, cfg.profile.basis))?;
    write_json(&out.join("thresholds.json"), &thresholds)?;

    let path = out.join("cognitive.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "doc_id",
        "intra_fp",
        "inter_fp",
        "team_size",
        "n_authors_scored",
        "n_exploratory",
        "n_exploitative",
        "share_exploratory",
        "share_exploitative",
        "interaction",
    ])?;
    let apath = out.join("author_intra.csv");
    let mut aw = csv::Writer::from_path(&apath)?;
    aw.write_record(["doc_id", "author_id", "intra", "profile"])?;
    for s in &scores {
        let m = classify(s, &thresholds);
        w.write_record([
            m.focal_doc_id.clone(),
            fmt(m.intra_fp),
            fmt(m.inter_fp),
            m.team_size.to_string(),
            m.n_authors_scored.to_string(),
            m.n_exploratory.to_string(),
            m.n_exploitative.to_string(),
            m.share_exploratory.to_string(),
            m.share_exploitative.to_string(),
            m.interaction.to_string(),
        ])?;
        for (a, v) in &s.per_author_intra {
            let profile = match v {
                Some(x) if *x >= thresholds.exploratory_cutoff => "exploratory",
                Some(x) if *x <= thresholds.exploitative_cutoff => "exploitative",
                Some(_) => "intermediate",
                None => "",
            };
            aw.write_record([s.focal_doc_id.as_str(), a, &fmt(*v), profile])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    aw.flush().map_err(|e| Error::io(&apath, e))?;
    Ok(StageOutput {
        files: vec![
            "cognitive.csv".into(),
            "author_intra.csv".into(),
            "thresholds.json".into(),
        ],
        rows: scores.len(),
    })
}

fn run_novelty(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let index = load_index(out)?;
    let store = load_store(out)?;
    let docs: Vec<_> = index.docs().collect();
    let mut files = Vec::new();
    for &kind in &cfg.novelty.kinds {
        let (tables, nulls, parts) = load_cooc(cfg, out, kind)?;
        let engine = NoveltyEngine::new(
            &index,
            &store,
            &tables,
            &nulls,
            &parts,
            cfg.novelty.params(),
        );
        let scores: Vec<_> = docs
            .par_iter()
            .map(|d| engine.score(d))
            .collect::<Result<_>>()?;
        let name = format!("novelty_{kind}.csv");
        let path = out.join(&name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "doc_id",
            "uzzi",
            "lee",
            "foster",
            "wang",
            "shibayama",
            "missing",
        ])?;
        for s in &scores {
            let missing: Vec<String> = s
                .missing
                .iter()
                .map(|(k, r)| format!("{k}:{}", r.as_str()))
                .collect();
            w.write_record([
                s.doc_id.clone(),
                fmt(s.uzzi),
                fmt(s.lee),
                fmt(s.foster),
                fmt(s.wang),
                fmt(s.shibayama),
                missing.join(";"),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        files.push(name);
    }
    Ok(StageOutput {
        files,
        rows: docs.len(),
    })
}

fn run_disruption(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let index = load_index(out)?;
    let ids: Vec<&str> = index.docs().map(|d| d.doc_id.as_str()).collect();
    let scores: Vec<_> = ids
        .par_iter()
        .map(|id| impact_scores(&index, id, cfg.disruption.horizon))
        .collect::<Result<_>>()?;
    let path = out.join("impact.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["doc_id"];
    header.extend(IMPACT_COLUMNS);
    w.write_record(&header)?;
    for s in &scores {
        w.write_record([
            s.doc_id.clone(),
            s.citation_count.to_string(),
            fmt(s.di1),
            fmt(s.di5),
            fmt(s.di1nok),
            fmt(s.dein),
            fmt(s.breadth),
            fmt(s.depth),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(StageOutput {
        files: vec!["impact.csv".into()],
        rows: scores.len(),
    })
}

/// Copy the numeric columns of `other` into `table`, matched on doc_id.
fn join(
    table: &mut VariableTable,
    other: &VariableTable,
    rename: impl Fn(&str) -> String,
) -> Result<()> {
    let pos: BTreeMap<&str, usize> = other
        .doc_ids()
        .iter()
        .enumerate()
        .map(|(k, d)| (d.as_str(), k))
        .collect();
    let names: Vec<String> = other.column_names().map(str::to_string).collect();
    for name in names {
        let col = other.column(&name)?;
        let values = table
            .doc_ids()
            .iter()
            .map(|d| pos.get(d.as_str()).and_then(|k| col[*k]))
            .collect();
        table.add_column(&rename(&name), values)?;
    }
    Ok(())
}

fn run_normalize(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let index = load_index(out)?;
    let docs: Vec<_> = index.docs().collect();
    let mut t = VariableTable::new(docs.iter().map(|d| d.doc_id.clone()).collect());
    let journal = |d: &crate::corpus::DocumentRecord| index.journal(&d.journal_issn);
    t.add_factor(
        "year",
        docs.iter().map(|d| Some(d.year.to_string())).collect(),
    )?;
    t.add_factor(
        "category",
        docs.iter()
            .map(|d| journal(d).map(|j| j.category.clone()))
            .collect(),
    )?;
    t.add_factor(
        "journal",
        docs.iter()
            .map(|d| (!d.journal_issn.is_empty()).then(|| d.journal_issn.clone()))
            .collect(),
    )?;
    t.add_column(
        "n_refs",
        docs.iter().map(|d| Some(d.n_refs() as f64)).collect(),
    )?;
    t.add_column(
        "n_mesh",
        docs.iter()
            .map(|d| Some(d.mesh_terms.len() as f64))
            .collect(),
    )?;
    t.add_column(
        "n_authors",
        docs.iter()
            .map(|d| Some(d.author_ids.len() as f64))
            .collect(),
    )?;
    t.add_column(
        "sjr",
        docs.iter().map(|d| journal(d).map(|j| j.sjr)).collect(),
    )?;

    let cog = VariableTable::read_csv(&out.join("cognitive.csv"), &[])?;
    join(&mut t, &cog, str::to_string)?;

    let mut novelty_cols = Vec::new();
    for (k, kind) in cfg.novelty.kinds.iter().enumerate() {
        let nv = VariableTable::read_csv(&out.join(format!("novelty_{kind}.csv")), &["missing"])?;
        let mut sub = VariableTable::new(nv.doc_ids().to_vec());
        for c in NOVELTY_COLUMNS {
            sub.add_column(c, nv.column(c)?.to_vec())?;
            novelty_cols.push(format!("{kind}_{c}"));
        }
        if k == 0 {
            sub.add_column("shibayama", nv.column("shibayama")?.to_vec())?;
            novelty_cols.push("shibayama".into());
        }
        join(&mut t, &sub, |c| {
            if c == "shibayama" {
                c.to_string()
            } else {
                format!("{kind}_{c}")
            }
        })?;
    }

    let imp = VariableTable::read_csv(&out.join("impact.csv"), &[])?;
    join(&mut t, &imp, str::to_string)?;

    let novel_set: BTreeSet<String> = cfg.analytics.novel_categories.iter().cloned().collect();
    let sample = perceived_novelty_sample(index.labels(), &novel_set, &cfg.analytics.exclude_only)?;
    let novel = t
        .doc_ids()
        .iter()
        .map(|d| sample.novel.get(d).map(|b| if *b { 1.0 } else { 0.0 }))
        .collect();
    let novel_count = t
        .doc_ids()
        .iter()
        .map(|d| {
            sample.counts.get(d).map(|c| {
                c.iter()
                    .filter(|(k, _)| novel_set.contains(*k))
                    .map(|(_, n)| f64::from(*n))
                    .sum()
            })
        })
        .collect();
    t.add_column("novel", novel)?;
    t.add_column("novel_count", novel_count)?;

    let mut fw: Vec<&str> = novelty_cols.iter().map(String::as_str).collect();
    fw.extend(IMPACT_COLUMNS);
    t.add_field_weighted(&fw, &["category", "year"])?;

    t.write_csv(&out.join("variables.csv"))?;
    write_json(&out.join("label_sample.json"), &sample)?;
    Ok(StageOutput {
        files: vec!["variables.csv".into(), "label_sample.json".into()],
        rows: t.n_rows(),
    })
}

fn load_variables(out: &Path) -> Result<VariableTable> {
    VariableTable::read_csv(&out.join("variables.csv"), &FACTORS)
}

fn run_regress(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let t = load_variables(out)?;
    let fits: Vec<_> = cfg
        .models
        .par_iter()
        .map(|m| fit(m, &t).map_err(|e| Error::invalid(format!("model `{}`: {e}", m.name))))
        .collect::<Result<_>>()?;
    let mut files = Vec::new();
    let path = out.join("turning_points.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "model",
        "variable",
        "b1",
        "b2",
        "turning_point",
        "mean",
        "marginal_effect_at_mean",
    ])?;
    for f in &fits {
        let name = format!("fit_{}.json", f.spec.name);
        write_json(&out.join(&name), f)?;
        files.push(name);
        for term in &f.spec.regressors {
            let Term::Square(x) = term else { continue };
            let (Some(b1), Some(b2)) = (
                f.coefficient(x),
                f.coefficient(&Term::Square(x.clone()).to_string()),
            ) else {
                continue;
            };
            let xs: Vec<f64> = t.column(x)?.iter().flatten().copied().collect();
            let mean = ordered_mean(&xs);
            w.write_record([
                f.spec.name.clone(),
                x.clone(),
                b1.to_string(),
                b2.to_string(),
                fmt(turning_point(b1, b2).ok()),
                fmt(mean),
                fmt(mean.map(|m| marginal_effect(b1, b2, m))),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    files.push("turning_points.csv".into());
    Ok(StageOutput {
        files,
        rows: fits.len(),
    })
}

fn run_report(cfg: &RunConfig, out: &Path) -> Result<StageOutput> {
    let t = load_variables(out)?;
    let names: Vec<&str> = t.column_names().collect();
    let summary = summary_stats(&t, &names)?;
    let path = out.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in &summary {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let corr_cols: Vec<&str> = if cfg.analytics.correlogram.is_empty() {
        names
            .iter()
            .copied()
            .filter(|c| c.starts_with("fw_"))
            .collect()
    } else {
        cfg.analytics
            .correlogram
            .iter()
            .map(String::as_str)
            .collect()
    };
    correlogram(&t, &corr_cols)?.write_csv(&out.join("correlogram.csv"))?;

    let mut files = vec!["summary.csv".to_string(), "correlogram.csv".to_string()];
    for s in &cfg.analytics.surfaces {
        let name = surface_file(s);
        binned_surface(&t, &s[0], &s[1], &s[2], cfg.analytics.bins)?.write_csv(&out.join(&name))?;
        files.push(name);
    }
    Ok(StageOutput {
        files,
        rows: summary.len(),
    })
}
