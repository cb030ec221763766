//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use teamscope::analytics::{
    fit, percentile_rank_by_group, turning_point, Family, RegressionSpec, Term, VariableTable,
};
use teamscope::cognitive::{
    fit_thresholds, threshold_sample, CognitiveEngine, ProfileParams, ThresholdBasis,
};
use teamscope::corpus::{load_labels, perceived_novelty_sample};
use teamscope::pipeline::{Pipeline, RunConfig};
use teamscope::quantile::ordered_mean;
use teamscope::synth::oracle::{oracle_clustered_ols, oracle_percentile_rank, pct};
use teamscope::synth::{generate, Archetype, SynthConfig};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Coefficients (b1, b2) and the printed turning point, absolute values compared.
#[allow(clippy::approx_constant)]
const TURNING_POINTS: [(&str, f64, f64, f64); 24] = [
    ("novelty/uzzi/intra", 0.056, -0.088, 0.318),
    ("novelty/lee/intra", 0.043, -0.094, 0.229),
    ("novelty/foster/intra", 0.041, -0.084, 0.244),
    ("novelty/wang/intra", -0.002, -0.026, 0.038),
    ("novelty/shibayama/intra", 0.188, -0.047, 2.0),
    ("novelty/uzzi/inter", 0.169, -0.031, 2.725),
    ("novelty/lee/inter", 0.166, -0.034, 2.441),
    ("novelty/foster/inter", 0.116, -0.023, 2.521),
    ("novelty/wang/inter", 0.098, -0.028, 1.75),
    ("novelty/shibayama/inter", 0.284, -0.118, 1.203),
    ("impact/citations/intra", 0.070, -0.072, 0.486),
    ("impact/di1/intra", -0.057, 0.038, 0.75),
    ("impact/di5/intra", 0.026, 0.009, -1.44),
    ("impact/di1nok/intra", -0.008, 0.024, 0.166),
    ("impact/dein/intra", 0.009, -0.030, 0.15),
    ("impact/breadth/intra", 0.014, 0.021, -0.33),
    ("impact/depth/intra", -0.004, -0.038, -0.052),
    ("impact/citations/inter", 0.031, -0.036, 0.43),
    ("impact/di1/inter", 0.021, 0.012, 0.875),
    ("impact/di5/inter", 0.034, 0.005, -3.4),
    ("impact/di1nok/inter", 0.047, 0.002, -11.75),
    ("impact/dein/inter", -0.067, 0.008, -4.187),
    ("impact/breadth/inter", -0.010, 0.015, 0.33),
    ("impact/depth/inter", 0.002, -0.012, 0.083),
];

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, b1, b2, printed) in TURNING_POINTS {
        let tp = turning_point(b1, b2).unwrap();
        let tol = if printed == 2.0 { 1e-12 } else { 0.005 };
        let err = (tp.abs() - printed.abs()).abs();
        worst = worst.max(if printed == 2.0 { 0.0 } else { err });
        if err > tol {
            failures.push(format!("{name}: {tp} vs {printed}"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 1.0,
        format!("24 rows, max |err| {worst:.4} (tol 0.005; 2.0 exact to 1e-12), {secs:.3}s {failures:?}"),
    )
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let (checked, bad) = common::disruption_mismatches(200);
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        bad == 0 && secs < 10.0,
        format!("200 DAGs, {checked} focal docs, {bad} mismatches, {secs:.2}s (limit 10s)"),
    )
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let corpus = generate(&common::novelty_config(3)).unwrap();
    let tally = common::novelty_comparison(&corpus, 20, 99);
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        tally.mismatches.is_empty() && secs < 60.0,
        format!(
            "200 docs x 2 kinds, {} comparisons ({} defined), {} mismatches, {secs:.2}s (limit 60s) {:?}",
            tally.checked,
            tally.defined,
            tally.mismatches.len(),
            tally.mismatches.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_4() -> Outcome {
    let corpus = generate(&common::cognitive_config(5)).unwrap();
    let index = corpus.index().unwrap();
    let store = corpus.store().unwrap();
    let engine = CognitiveEngine::new(&index, &store, ProfileParams::default());
    let scores: Vec<_> = corpus
        .docs
        .iter()
        .map(|d| engine.team_scores(&d.doc_id).unwrap())
        .collect();
    let sample = threshold_sample(&scores, ThresholdBasis::AuthorScores);
    let cutoffs = (pct(&sample, 90.0).unwrap(), pct(&sample, 50.0).unwrap());
    let base = common::cognitive_comparison(&corpus.docs, &corpus, cutoffs);

    let reference: Vec<_> = scores;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut broken = 0;
    let mut oracle_bad = 0;
    for _ in 0..50 {
        let docs = common::shuffle_docs(&corpus.docs, &mut rng);
        let ix = teamscope::corpus::CorpusIndex::from_documents(docs.clone()).unwrap();
        let eng = CognitiveEngine::new(&ix, &store, ProfileParams::default());
        for (d, r) in docs.iter().zip(&reference) {
            let s = eng.team_scores(&d.doc_id).unwrap();
            let by_author =
                |v: &[(String, Option<f64>)]| v.iter().cloned().collect::<BTreeMap<_, _>>();
            if s.intra_fp != r.intra_fp
                || s.inter_fp != r.inter_fp
                || by_author(&s.per_author_intra) != by_author(&r.per_author_intra)
            {
                broken += 1;
            }
        }
        oracle_bad += common::cognitive_comparison(&docs, &corpus, cutoffs)
            .mismatches
            .len();
    }
    outcome(
        base.mismatches.is_empty() && broken == 0 && oracle_bad == 0,
        format!(
            "30 docs, {} comparisons ({} defined), {} mismatches; 50 shuffles: {broken} changed team scores, {oracle_bad} oracle mismatches",
            base.checked,
            base.defined,
            base.mismatches.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 20_000;
    let mut pool: Vec<u32> = (0..n as u32).collect();
    rand::seq::SliceRandom::shuffle(pool.as_mut_slice(), &mut rng);
    let values: Vec<Option<f64>> = pool.iter().map(|v| Some(*v as f64 * 0.37 + 1.0)).collect();
    let groups: Vec<(String, i32)> = (0..n)
        .map(|_| {
            (
                format!("field{}", rng.gen_range(0..12)),
                2000 + rng.gen_range(0..15),
            )
        })
        .collect();
    let ranks = percentile_rank_by_group(&values, &groups).unwrap();
    let oracle = oracle_percentile_rank(&values, &groups);
    let mut by_group: BTreeMap<&(String, i32), Vec<f64>> = BTreeMap::new();
    for (g, r) in groups.iter().zip(&ranks) {
        by_group.entry(g).or_default().push(r.unwrap());
    }
    let mut bad_groups = 0;
    for rs in by_group.values() {
        let m = rs.len();
        let mut sorted = rs.clone();
        sorted.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (0..m)
            .map(|k| {
                if m == 1 {
                    0.5
                } else {
                    k as f64 / (m - 1) as f64
                }
            })
            .collect();
        let ok = ordered_mean(rs) == Some(0.5)
            && sorted == expected
            && (m == 1 || (sorted[0] == 0.0 && sorted[m - 1] == 1.0));
        bad_groups += !ok as usize;
    }
    let oracle_ok = ranks == oracle;
    outcome(
        bad_groups == 0 && oracle_ok,
        format!("{} tie-free groups, {bad_groups} violate mean 0.5 / range [0,1]; oracle equal: {oracle_ok}", by_group.len()),
    )
}

fn linear_fixture(seed: u64) -> (VariableTable, Vec<Vec<f64>>, Vec<f64>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 200;
    let shocks: Vec<f64> = (0..20)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let (mut x1, mut x2, mut y, mut g) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let c = i % 20;
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.gen_range(0.0..3.0);
        let e: f64 = rng.sample(StandardNormal);
        x1.push(a);
        x2.push(b);
        y.push(1.0 + 2.0 * a - 0.5 * b + shocks[c] * (1.0 + b) + 0.5 * e);
        g.push(format!("J{c:02}"));
    }
    let mut t = VariableTable::new((0..n).map(|i| format!("d{i}")).collect());
    t.add_column("x1", x1.iter().map(|v| Some(*v)).collect())
        .unwrap();
    t.add_column("x2", x2.iter().map(|v| Some(*v)).collect())
        .unwrap();
    t.add_column("y", y.iter().map(|v| Some(*v)).collect())
        .unwrap();
    t.add_factor("journal", g.iter().map(|v| Some(v.clone())).collect())
        .unwrap();
    let rows = (0..n).map(|i| vec![1.0, x1[i], x2[i]]).collect();
    (t, rows, y, g)
}

fn glm_fixture(family: Family, b0: f64, b1: f64, seed: u64) -> VariableTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 10_000;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        let eta = b0 + b1 * x;
        let y = match family {
            Family::Logit => (rng.gen::<f64>() < 1.0 / (1.0 + (-eta).exp())) as u8 as f64,
            _ => Poisson::new(eta.exp()).unwrap().sample(&mut rng),
        };
        xs.push(Some(x));
        ys.push(Some(y));
    }
    let mut t = VariableTable::new((0..n).map(|i| format!("d{i}")).collect());
    t.add_column("x", xs).unwrap();
    t.add_column("y", ys).unwrap();
    t.add_factor(
        "journal",
        (0..n).map(|i| Some(format!("J{:03}", i % 200))).collect(),
    )
    .unwrap();
    t
}

fn spec(family: Family, regressors: &[&str]) -> RegressionSpec {
    RegressionSpec {
        name: "m".into(),
        family,
        dependent: "y".into(),
        regressors: regressors
            .iter()
            .map(|r| Term::Linear(r.to_string()))
            .collect(),
        fixed_effects: vec![],
        cluster: "journal".into(),
        intercept: true,
    }
}

fn criterion_6() -> Outcome {
    let (t, rows, y, g) = linear_fixture(6);
    let f = fit(&spec(Family::Linear, &["x1", "x2"]), &t).unwrap();
    let (beta, se) = oracle_clustered_ols(&rows, &y, &g).unwrap();
    let names = ["(intercept)", "x1", "x2"];
    let mut lin_err = 0.0f64;
    for (k, n) in names.iter().enumerate() {
        lin_err = lin_err.max((f.coefficient(n).unwrap() - beta[k]).abs());
        lin_err = lin_err.max((f.std_error(n).unwrap() - se[k]).abs());
    }

    let (lb0, lb1) = (-0.5, 1.0);
    let lf = fit(
        &spec(Family::Logit, &["x"]),
        &glm_fixture(Family::Logit, lb0, lb1, 61),
    )
    .unwrap();
    let logit_err = (lf.coefficient("(intercept)").unwrap() - lb0)
        .abs()
        .max((lf.coefficient("x").unwrap() - lb1).abs());

    let (pb0, pb1) = (0.3, 0.5);
    let pf = fit(
        &spec(Family::Poisson, &["x"]),
        &glm_fixture(Family::Poisson, pb0, pb1, 62),
    )
    .unwrap();
    let z0 =
        (pf.coefficient("(intercept)").unwrap() - pb0).abs() / pf.std_error("(intercept)").unwrap();
    let z1 = (pf.coefficient("x").unwrap() - pb1).abs() / pf.std_error("x").unwrap();

    outcome(
        lin_err <= 1e-8 && logit_err <= 0.05 && z0 <= 3.0 && z1 <= 3.0,
        format!(
            "linear coef/SE max |diff| {lin_err:.2e} (tol 1e-8); logit max |b - truth| {logit_err:.4} (tol 0.05); poisson |b - truth|/SE {z0:.2}, {z1:.2} (tol 3)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let corpus = generate(&SynthConfig {
        seed: 7,
        ..SynthConfig::default()
    })
    .unwrap();
    let index = corpus.index().unwrap();
    let store = corpus.store().unwrap();
    let engine = CognitiveEngine::new(&index, &store, ProfileParams::default());
    let scores: Vec<_> = corpus
        .docs
        .iter()
        .map(|d| engine.team_scores(&d.doc_id).unwrap())
        .collect();
    let th = fit_thresholds(&threshold_sample(&scores, ThresholdBasis::AuthorScores)).unwrap();
    let diffuse = corpus.authors_of(Archetype::Diffuse);
    let mut per_author: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut row_tp, mut row_flag, mut row_diffuse) = (0usize, 0usize, 0usize);
    for d in &corpus.docs {
        let m = engine.team_composition(&d.doc_id, &th).unwrap();
        for (a, s) in &m.per_author_intra {
            let flagged = *s >= th.exploratory_cutoff;
            let e = per_author.entry(a.clone()).or_default();
            e.0 += 1;
            e.1 += flagged as usize;
            row_flag += flagged as usize;
            row_diffuse += diffuse.contains(a) as usize;
            row_tp += (flagged && diffuse.contains(a)) as usize;
        }
    }
    let predicted: BTreeSet<&String> = per_author
        .iter()
        .filter(|(_, (n, e))| 2 * e > *n)
        .map(|(a, _)| a)
        .collect();
    let planted: BTreeSet<&String> = per_author.keys().filter(|a| diffuse.contains(*a)).collect();
    let tp = predicted.intersection(&planted).count();
    let precision = tp as f64 / predicted.len().max(1) as f64;
    let recall = tp as f64 / planted.len().max(1) as f64;
    let row_p = row_tp as f64 / row_flag.max(1) as f64;
    let row_r = row_tp as f64 / row_diffuse.max(1) as f64;
    outcome(
        precision >= 0.9 && recall >= 0.8 && row_p >= 0.9 && row_r >= 0.8,
        format!(
            "authors: precision {precision:.3} recall {recall:.3} ({tp}/{} flagged, {} planted scored); rows: precision {row_p:.3} recall {row_r:.3}",
            predicted.len(),
            planted.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let demo = common::demo_dir();
    let base = RunConfig::load(&demo.join("run.toml")).unwrap();
    let t0 = Instant::now();
    let mut snaps = Vec::new();
    let mut manifests = Vec::new();
    let mut secs = Vec::new();
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &dirs {
        let mut cfg = base.clone();
        cfg.paths.out = dir.path().join("out");
        let t = Instant::now();
        let mut m = Pipeline::new(cfg).unwrap().run(None).unwrap();
        secs.push(t.elapsed().as_secs_f64());
        let mut snap = common::snapshot(&dir.path().join("out"));
        snap.remove("run_manifest.json");
        snaps.push(snap);
        for s in &mut m.stages {
            s.seconds = 0.0;
        }
        m.config.paths.out = Default::default();
        manifests.push(m);
    }
    let expected = [
        "cognitive.csv",
        "author_intra.csv",
        "thresholds.json",
        "impact.csv",
        "variables.csv",
        "label_sample.json",
        "turning_points.csv",
        "summary.csv",
        "correlogram.csv",
        "novelty_journal.csv",
        "novelty_mesh.csv",
    ];
    let missing: Vec<_> = expected
        .iter()
        .filter(|f| !snaps[0].contains_key(**f))
        .collect();
    let identical = snaps[0] == snaps[1];
    let manifests_equal = manifests[0] == manifests[1];
    let total = t0.elapsed().as_secs_f64();
    outcome(
        identical && manifests_equal && missing.is_empty() && secs.iter().all(|s| *s < 120.0),
        format!(
            "{} artifacts byte-identical: {identical}; manifests equal modulo timings: {manifests_equal}; missing {missing:?}; runs {:.2}s/{:.2}s (limit 120s), total {total:.2}s",
            snaps[0].len(),
            secs[0],
            secs[1]
        ),
    )
}

fn criterion_9() -> Outcome {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labels.jsonl");
    let labels = load_labels(&path).unwrap();
    let novel: BTreeSet<String> = [
        "Technical Advance",
        "Interesting Hypothesis",
        "Novel Drug Target",
    ]
    .map(String::from)
    .into();
    let s = perceived_novelty_sample(&labels, &novel, "New Finding").unwrap();
    // hand tally of the fixture
    let expected_novel: BTreeSet<&str> = ["L02", "L03", "L05", "L07", "L09"].into();
    let expected_kept: BTreeSet<&str> = [
        "L02", "L03", "L04", "L05", "L06", "L07", "L08", "L09", "L10",
    ]
    .into();
    let kept: BTreeSet<&str> = s.novel.keys().map(String::as_str).collect();
    let positives: BTreeSet<&str> = s
        .novel
        .iter()
        .filter(|(_, v)| **v)
        .map(|(k, _)| k.as_str())
        .collect();
    let ok = kept == expected_kept
        && positives == expected_novel
        && s.dropped == 3
        && !kept.contains("L01");
    outcome(
        ok,
        format!(
            "{} labelled, {} dropped (solely New Finding), {} novel vs {} not novel",
            labels.len(),
            s.dropped,
            positives.len(),
            kept.len() - positives.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("turning points reproduce the printed table", criterion_1),
        (
            "disruption family equals brute-force oracle on 200 DAGs",
            criterion_2,
        ),
        (
            "novelty indicators equal oracles on a 200-doc corpus",
            criterion_3,
        ),
        (
            "cognitive scores equal oracles and survive 50 shuffles",
            criterion_4,
        ),
        ("field-weighted percentile-rank law", criterion_5),
        (
            "regression coefficients, clustered SEs and GLM recovery",
            criterion_6,
        ),
        (
            "planted diffuse authors recovered as exploratory",
            criterion_7,
        ),
        ("two demo runs are byte-identical", criterion_8),
        ("perceived-novelty label sample", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += !o.pass as usize;
        println!(
            "{} criterion {}: {name} :: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
