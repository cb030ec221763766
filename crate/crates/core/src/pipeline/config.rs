use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::RegressionSpec;
use crate::cognitive::{ProfileParams, ThresholdBasis};
use crate::cooc::EntityKind;
use crate::corpus::FilterConfig;
use crate::error::{Error, Result};
use crate::novelty::{Aggregation, NoveltyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub journals: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Precomputed document vectors; the fallback embedder is used when absent.
    pub vectors: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus.jsonl"),
            journals: None,
            labels: None,
            vectors: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dim: usize,
    /// Ignore `paths.vectors` and embed titles and abstracts.
    pub fallback: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            fallback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub window: u32,
    pub q: f64,
    pub basis: ThresholdBasis,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        let p = ProfileParams::default();
        Self {
            window: p.window,
            q: p.q,
            basis: ThresholdBasis::default(),
        }
    }
}

impl ProfileConfig {
    pub fn params(&self) -> ProfileParams {
        ProfileParams {
            window: self.window,
            q: self.q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullSection {
    pub resamples: usize,
    pub swap_factor: usize,
}

impl Default for NullSection {
    fn default() -> Self {
        Self {
            resamples: 20,
            swap_factor: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoveltySection {
    pub kinds: Vec<EntityKind>,
    pub uzzi: Aggregation,
    pub lee: Aggregation,
    pub shibayama: Aggregation,
    pub reuse_window: i32,
    pub min_reuse: u64,
    pub profile_window: i32,
    pub foster_window: i32,
    pub resolution: f64,
}

impl Default for NoveltySection {
    fn default() -> Self {
        let p = NoveltyParams::default();
        Self {
            kinds: vec![EntityKind::Journal, EntityKind::Mesh],
            uzzi: p.uzzi,
            lee: p.lee,
            shibayama: p.shibayama,
            reuse_window: p.reuse_window,
            min_reuse: p.min_reuse,
            profile_window: p.profile_window,
            foster_window: p.foster_window,
            resolution: p.resolution,
        }
    }
}

impl NoveltySection {
    pub fn params(&self) -> NoveltyParams {
        NoveltyParams {
            uzzi: self.uzzi,
            lee: self.lee,
            shibayama: self.shibayama,
            reuse_window: self.reuse_window,
            min_reuse: self.min_reuse,
            profile_window: self.profile_window,
            foster_window: self.foster_window,
            resolution: self.resolution,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisruptionSection {
    /// Count citers up to this many years after the focal year.
    pub horizon: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSection {
    pub bins: usize,
    pub novel_categories: Vec<String>,
    pub exclude_only: String,
    /// `[x, y, z]` column triples for binned surfaces.
    pub surfaces: Vec<[String; 3]>,
    /// Correlogram columns; empty means every field-weighted column.
    pub correlogram: Vec<String>,
}

impl Default for AnalyticsSection {
    fn default() -> Self {
        Self {
            bins: 10,
            novel_categories: [
                "Technical Advance",
                "Interesting Hypothesis",
                "Novel Drug Target",
            ]
            .map(String::from)
            .to_vec(),
            exclude_only: "New Finding".into(),
            surfaces: vec![[
                "share_exploratory".into(),
                "share_exploitative".into(),
                "fw_citation_count".into(),
            ]],
            correlogram: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub filter: FilterConfig,
    pub embed: EmbedConfig,
    pub profile: ProfileConfig,
    pub null: NullSection,
    pub novelty: NoveltySection,
    pub disruption: DisruptionSection,
    pub analytics: AnalyticsSection,
    pub models: Vec<RegressionSpec>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Parse a TOML file; relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count()),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.paths.corpus);
        resolve(base, &mut cfg.paths.out);
        for p in [
            &mut cfg.paths.journals,
            &mut cfg.paths.labels,
            &mut cfg.paths.vectors,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let must_exist = |p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "input `{}` does not exist",
                    p.display()
                )))
            }
        };
        must_exist(&self.paths.corpus)?;
        for p in [
            &self.paths.journals,
            &self.paths.labels,
            &self.paths.vectors,
        ]
        .into_iter()
        .flatten()
        {
            must_exist(p)?;
        }
        if self.null.resamples < 2 {
            return Err(Error::invalid("null.resamples must be at least 2"));
        }
        if self.novelty.kinds.is_empty() {
            return Err(Error::invalid("novelty.kinds is empty"));
        }
        let mut names = std::collections::BTreeSet::new();
        for m in &self.models {
            if !names.insert(&m.name) {
                return Err(Error::Duplicate(m.name.clone()));
            }
            if m.name.is_empty()
                || !m
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::invalid(format!(
                    "model name `{}` is not a plain identifier",
                    m.name
                )));
            }
        }
        Ok(())
    }
}
