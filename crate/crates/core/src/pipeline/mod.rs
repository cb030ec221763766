//! End-to-end orchestration with resumable, digest-checked stages.
//!
//! Every stage writes plain CSV/JSON (plus the binary pair tables) under the
//! output directory and records a key and output digests in
//! `.stages/<stage>.json`. A stage is skipped when its key matches, its
//! outputs are intact and none of its upstream stages ran in this invocation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

mod config;
mod stages;

pub use config::{
    AnalyticsSection, DisruptionSection, EmbedConfig, NoveltySection, NullSection, Paths,
    ProfileConfig, RunConfig,
};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Embed,
    Cooc,
    Cognitive,
    Novelty,
    Disruption,
    Normalize,
    Regress,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Embed,
        Stage::Cooc,
        Stage::Cognitive,
        Stage::Novelty,
        Stage::Disruption,
        Stage::Normalize,
        Stage::Regress,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Cooc => "cooc",
            Stage::Cognitive => "cognitive",
            Stage::Novelty => "novelty",
            Stage::Disruption => "disruption",
            Stage::Normalize => "normalize",
            Stage::Regress => "regress",
            Stage::Report => "report",
        }
    }

    pub fn deps(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Embed | Stage::Cooc | Stage::Disruption => &[Stage::Ingest],
            Stage::Cognitive => &[Stage::Ingest, Stage::Embed],
            Stage::Novelty => &[Stage::Ingest, Stage::Embed, Stage::Cooc],
            Stage::Normalize => &[
                Stage::Ingest,
                Stage::Cognitive,
                Stage::Novelty,
                Stage::Disruption,
            ],
            Stage::Regress | Stage::Report => &[Stage::Normalize],
        }
    }

    /// `self` and everything it depends on, in execution order.
    pub fn closure(self) -> Vec<Stage> {
        let mut need = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(s) = stack.pop() {
            if need.insert(s) {
                stack.extend(s.deps());
            }
        }
        Stage::ALL
            .into_iter()
            .filter(|s| need.contains(s))
            .collect()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown stage `{s}`")))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// 64-bit seed derived from the run seed and a task key, so stochastic work
/// does not depend on scheduling.
pub fn task_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StageRecord {
    key: String,
    rows: usize,
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: String,
    pub rows: usize,
    pub seconds: f64,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub status: String,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<StageReport>,
}

pub(crate) struct StageOutput {
    pub files: Vec<String>,
    pub rows: usize,
}

pub struct Pipeline {
    pub config: RunConfig,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn out(&self) -> &Path {
        &self.config.paths.out
    }

    fn record_path(&self, stage: Stage) -> PathBuf {
        self.out().join(".stages").join(format!("{stage}.json"))
    }

    fn input_digests(&self) -> Result<BTreeMap<String, String>> {
        let p = &self.config.paths;
        let mut out = BTreeMap::new();
        out.insert("corpus".to_string(), sha256_file(&p.corpus)?);
        for (name, path) in [
            ("journals", &p.journals),
            ("labels", &p.labels),
            ("vectors", &p.vectors),
        ] {
            if let Some(path) = path {
                out.insert(name.to_string(), sha256_file(path)?);
            }
        }
        Ok(out)
    }

    fn stage_key(
        &self,
        stage: Stage,
        inputs: &BTreeMap<String, String>,
        upstream: &BTreeMap<Stage, StageRecord>,
    ) -> Result<String> {
        let c = &self.config;
        let params = match stage {
            Stage::Ingest => {
                serde_json::json!({ "filter": c.filter, "corpus": inputs.get("corpus"), "journals": inputs.get("journals"), "labels": inputs.get("labels") })
            }
            Stage::Embed => {
                serde_json::json!({ "embed": c.embed, "seed": c.seed, "vectors": inputs.get("vectors") })
            }
            Stage::Cooc => {
                serde_json::json!({ "null": c.null, "novelty": c.novelty, "seed": c.seed })
            }
            Stage::Cognitive => serde_json::json!({ "profile": c.profile }),
            Stage::Novelty => {
                serde_json::json!({ "novelty": c.novelty, "null": c.null, "seed": c.seed })
            }
            Stage::Disruption => serde_json::json!({ "disruption": c.disruption }),
            Stage::Normalize => {
                serde_json::json!({ "analytics": c.analytics, "kinds": c.novelty.kinds })
            }
            Stage::Regress => serde_json::json!({ "models": c.models }),
            Stage::Report => serde_json::json!({ "analytics": c.analytics }),
        };
        let deps: BTreeMap<&str, &BTreeMap<String, String>> = stage
            .deps()
            .iter()
            .filter_map(|d| upstream.get(d).map(|r| (d.name(), &r.outputs)))
            .collect();
        let doc = serde_json::json!({ "stage": stage, "version": ENGINE_VERSION, "params": params, "upstream": deps });
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&doc)?)))
    }

    fn is_fresh(&self, stage: Stage, key: &str) -> Option<StageRecord> {
        let text = fs::read_to_string(self.record_path(stage)).ok()?;
        let rec: StageRecord = serde_json::from_str(&text).ok()?;
        if rec.key != key {
            return None;
        }
        for (file, digest) in &rec.outputs {
            if sha256_file(&self.out().join(file)).ok()? != *digest {
                return None;
            }
        }
        Some(rec)
    }

    fn quarantine(&self, stage: Stage) {
        let failed = self.out().join("failed").join(stage.name());
        for rel in stages::declared_outputs(stage, &self.config) {
            let src = self.out().join(&rel);
            if src.exists() {
                let dst = failed.join(&rel);
                if let Some(parent) = dst.parent() {
                    let _ = fs::create_dir_all(parent);
                }
                if let Err(e) = fs::rename(&src, &dst) {
                    warn!("could not quarantine {}: {e}", src.display());
                }
            }
        }
    }

    fn clear(&self, stage: Stage) -> Result<()> {
        for rel in stages::declared_outputs(stage, &self.config) {
            let p = self.out().join(&rel);
            let res = if p.is_dir() {
                fs::remove_dir_all(&p)
            } else if p.exists() {
                fs::remove_file(&p)
            } else {
                Ok(())
            };
            res.map_err(|e| Error::io(&p, e))?;
        }
        let _ = fs::remove_file(self.record_path(stage));
        Ok(())
    }

    /// Run `target` and its upstream stages; every stage when `None`.
    pub fn run(&self, target: Option<Stage>) -> Result<RunManifest> {
        let out = self.out().to_path_buf();
        fs::create_dir_all(out.join(".stages")).map_err(|e| Error::io(&out, e))?;
        let inputs = self.input_digests()?;
        let plan = match target {
            Some(t) => t.closure(),
            None => Stage::ALL.to_vec(),
        };
        let mut records: BTreeMap<Stage, StageRecord> = BTreeMap::new();
        let mut executed: BTreeSet<Stage> = BTreeSet::new();
        let mut reports = Vec::new();
        let mut failure = None;
        for stage in plan {
            let key = self.stage_key(stage, &inputs, &records)?;
            let forced = stage.deps().iter().any(|d| executed.contains(d));
            if !forced {
                if let Some(rec) = self.is_fresh(stage, &key) {
                    info!("{stage}: up to date, skipped");
                    reports.push(StageReport {
                        stage,
                        status: "skipped".into(),
                        rows: rec.rows,
                        seconds: 0.0,
                        outputs: rec.outputs.clone(),
                    });
                    records.insert(stage, rec);
                    continue;
                }
            }
            info!("{stage}: running");
            let t0 = Instant::now();
            let result = self
                .clear(stage)
                .and_then(|_| stages::execute(stage, &self.config));
            match result {
                Ok(o) => {
                    let mut outputs = BTreeMap::new();
                    for f in &o.files {
                        outputs.insert(f.clone(), sha256_file(&out.join(f))?);
                    }
                    let rec = StageRecord {
                        key,
                        rows: o.rows,
                        outputs: outputs.clone(),
                    };
                    write_json(&self.record_path(stage), &rec)?;
                    records.insert(stage, rec);
                    executed.insert(stage);
                    let seconds = t0.elapsed().as_secs_f64();
                    info!("{stage}: {} rows in {seconds:.2}s", o.rows);
                    reports.push(StageReport {
                        stage,
                        status: "executed".into(),
                        rows: o.rows,
                        seconds,
                        outputs,
                    });
                }
                Err(e) => {
                    self.quarantine(stage);
                    reports.push(StageReport {
                        stage,
                        status: "failed".into(),
                        rows: 0,
                        seconds: t0.elapsed().as_secs_f64(),
                        outputs: BTreeMap::new(),
                    });
                    failure = Some(Error::Stage {
                        stage: stage.name().into(),
                        message: e.to_string(),
                    });
                    break;
                }
            }
        }
        let manifest = RunManifest {
            engine_version: ENGINE_VERSION.into(),
            status: if failure.is_some() { "failed" } else { "ok" }.into(),
            config: self.config.clone(),
            inputs,
            stages: reports,
        };
        let tmp = out.join(".run_manifest.json.tmp");
        write_json(&tmp, &manifest)?;
        fs::rename(&tmp, out.join("run_manifest.json")).map_err(|e| Error::io(&out, e))?;
        match failure {
            Some(e) => Err(e),
            None => Ok(manifest),
        }
    }
}
