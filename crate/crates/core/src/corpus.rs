//! Publication knowledge graph: ingestion, filtering, indexing and export.
//!
//! Documents arrive as line-delimited JSON (`corpus.jsonl`), journal metadata
//! as CSV (`journals.csv`) and perceived-novelty labels as line-delimited JSON
//! (`labels.jsonl`). The resulting [`CorpusIndex`] is immutable and uses
//! ordered maps throughout so iteration order depends only on the input.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One publication with its authors, MeSH terms and references.
///
/// `ref_doc_ids` and `ref_journal_issns` are aligned slot by slot. An empty
/// `ref_doc_ids` entry marks a reference that could not be resolved to a
/// document; an empty ISSN marks a reference to a venue without one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub year: i32,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub journal_issn: String,
    #[serde(default)]
    pub mesh_terms: Vec<String>,
    #[serde(default)]
    pub author_ids: Vec<String>,
    #[serde(default)]
    pub ref_doc_ids: Vec<String>,
    #[serde(default)]
    pub ref_journal_issns: Vec<String>,
    /// Publication year of each cited item, aligned with the reference slots.
    /// Only needed for references that do not resolve to a corpus document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_years: Option<Vec<Option<i32>>>,
}

impl DocumentRecord {
    pub fn n_refs(&self) -> usize {
        self.ref_doc_ids.len()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        if self.ref_doc_ids.len() != self.ref_journal_issns.len() {
            return Err(format!(
                "ref_doc_ids ({}) and ref_journal_issns ({}) are not aligned",
                self.ref_doc_ids.len(),
                self.ref_journal_issns.len()
            ));
        }
        if let Some(years) = &self.ref_years {
            if years.len() != self.ref_doc_ids.len() {
                return Err("ref_years not aligned with references".into());
            }
        }
        let mut seen = BTreeSet::new();
        for a in &self.author_ids {
            if !seen.insert(a.as_str()) {
                return Err(format!("duplicate author `{a}`"));
            }
        }
        if self.ref_doc_ids.iter().any(|r| r == &self.doc_id) {
            return Err("document references itself".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub issn: String,
    pub sjr: f64,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub doc_id: String,
    /// Label occurrences; a category may repeat when several reviewers used it.
    pub categories: Vec<String>,
}

impl LabelRecord {
    pub fn distinct(&self) -> BTreeSet<&str> {
        self.categories.iter().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_refs: usize,
    pub min_mesh: usize,
    pub min_authors: usize,
    pub require_issn: bool,
    /// Inclusive corpus year range.
    pub years: Option<(i32, i32)>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_refs: 2,
            min_mesh: 2,
            min_authors: 2,
            require_issn: true,
            years: None,
        }
    }
}

impl FilterConfig {
    /// Configuration that accepts every well-formed record.
    pub fn permissive() -> Self {
        Self {
            min_refs: 0,
            min_mesh: 0,
            min_authors: 0,
            require_issn: false,
            years: None,
        }
    }

    fn reject_reason(&self, doc: &DocumentRecord) -> Option<&'static str> {
        if let Some((lo, hi)) = self.years {
            if doc.year < lo || doc.year > hi {
                return Some("year_out_of_range");
            }
        }
        if doc.n_refs() < self.min_refs {
            return Some("too_few_refs");
        }
        if doc.mesh_terms.len() < self.min_mesh {
            return Some("too_few_mesh");
        }
        if doc.author_ids.len() < self.min_authors {
            return Some("too_few_authors");
        }
        if self.require_issn && doc.journal_issn.is_empty() {
            return Some("missing_issn");
        }
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines_read: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub reject_reasons: BTreeMap<String, usize>,
    /// Accepted documents whose journal is absent from the journal table.
    pub unknown_journal: usize,
    /// Reference slots whose cited document is not in the index.
    pub unresolved_refs: usize,
    /// Reference slots without a journal ISSN (excluded from pair counting).
    pub issnless_refs: usize,
    pub labels_unmatched: usize,
}

/// Immutable indexed view of documents, authors, journals, citations and labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusIndex {
    docs: BTreeMap<String, DocumentRecord>,
    journals: BTreeMap<String, JournalRecord>,
    author_docs: BTreeMap<String, Vec<String>>,
    refs: BTreeMap<String, BTreeSet<String>>,
    citing: BTreeMap<String, BTreeSet<String>>,
    labels: BTreeMap<String, LabelRecord>,
}

impl CorpusIndex {
    /// Index already-filtered documents. Fails on duplicate ids or records
    /// that violate the document invariants.
    pub fn from_documents(docs: impl IntoIterator<Item = DocumentRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for doc in docs {
            doc.validate().map_err(Error::Invalid)?;
            if map.contains_key(&doc.doc_id) {
                return Err(Error::Duplicate(doc.doc_id));
            }
            map.insert(doc.doc_id.clone(), doc);
        }

        let mut author_docs: BTreeMap<String, Vec<(i32, String)>> = BTreeMap::new();
        let mut refs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut citing: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (id, doc) in &map {
            for a in &doc.author_ids {
                author_docs
                    .entry(a.clone())
                    .or_default()
                    .push((doc.year, id.clone()));
            }
            let resolved: BTreeSet<String> = doc
                .ref_doc_ids
                .iter()
                .filter(|r| !r.is_empty() && map.contains_key(*r))
                .cloned()
                .collect();
            for r in &resolved {
                citing.entry(r.clone()).or_default().insert(id.clone());
            }
            refs.insert(id.clone(), resolved);
        }
        let author_docs = author_docs
            .into_iter()
            .map(|(a, mut v)| {
                v.sort();
                (a, v.into_iter().map(|(_, id)| id).collect())
            })
            .collect();

        Ok(Self {
            docs: map,
            journals: BTreeMap::new(),
            author_docs,
            refs,
            citing,
            labels: BTreeMap::new(),
        })
    }

    pub fn with_journals(
        mut self,
        journals: impl IntoIterator<Item = JournalRecord>,
    ) -> Result<Self> {
        for j in journals {
            if !j.sjr.is_finite() || j.sjr < 0.0 {
                return Err(Error::invalid(format!(
                    "journal {} has invalid sjr {}",
                    j.issn, j.sjr
                )));
            }
            if j.category.is_empty() {
                return Err(Error::invalid(format!(
                    "journal {} has empty category",
                    j.issn
                )));
            }
            if self.journals.contains_key(&j.issn) {
                return Err(Error::Duplicate(j.issn));
            }
            self.journals.insert(j.issn.clone(), j);
        }
        Ok(self)
    }

    /// Attach labels; labels for documents outside the index are dropped and
    /// their count returned. Several lines for one document are merged.
    pub fn with_labels(
        mut self,
        labels: impl IntoIterator<Item = LabelRecord>,
    ) -> Result<(Self, usize)> {
        let mut unmatched = 0;
        for l in labels {
            if l.categories.is_empty() {
                return Err(Error::invalid(format!(
                    "label for {} has no categories",
                    l.doc_id
                )));
            }
            if !self.docs.contains_key(&l.doc_id) {
                unmatched += 1;
                continue;
            }
            self.labels
                .entry(l.doc_id.clone())
                .and_modify(|e| e.categories.extend(l.categories.iter().cloned()))
                .or_insert(l);
        }
        Ok((self, unmatched))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, id: &str) -> Option<&DocumentRecord> {
        self.docs.get(id)
    }

    pub fn get(&self, id: &str) -> Result<&DocumentRecord> {
        self.docs.get(id).ok_or_else(|| Error::NotFound {
            kind: "document",
            id: id.to_string(),
        })
    }

    /// Documents in ascending id order.
    pub fn docs(&self) -> impl Iterator<Item = &DocumentRecord> {
        self.docs.values()
    }

    pub fn docs_in_year(&self, year: i32) -> impl Iterator<Item = &DocumentRecord> {
        self.docs.values().filter(move |d| d.year == year)
    }

    /// Inclusive (min, max) publication year, `None` for an empty index.
    pub fn year_span(&self) -> Option<(i32, i32)> {
        let mut it = self.docs.values().map(|d| d.year);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), y| (lo.min(y), hi.max(y))))
    }

    pub fn journal(&self, issn: &str) -> Option<&JournalRecord> {
        self.journals.get(issn)
    }

    pub fn journals(&self) -> impl Iterator<Item = &JournalRecord> {
        self.journals.values()
    }

    /// True when the document's journal is missing from the journal table.
    pub fn journal_flagged(&self, doc: &DocumentRecord) -> bool {
        !self.journals.contains_key(&doc.journal_issn)
    }

    pub fn labels(&self) -> impl Iterator<Item = &LabelRecord> {
        self.labels.values()
    }

    pub fn label(&self, doc_id: &str) -> Option<&LabelRecord> {
        self.labels.get(doc_id)
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.author_docs.keys().map(String::as_str)
    }

    /// All documents of an author, sorted by year then id.
    pub fn author_docs(&self, author: &str) -> &[String] {
        self.author_docs
            .get(author)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Distinct in-corpus documents cited by `doc_id`.
    pub fn resolved_refs(&self, doc_id: &str) -> Result<&BTreeSet<String>> {
        self.refs.get(doc_id).ok_or_else(|| Error::NotFound {
            kind: "document",
            id: doc_id.to_string(),
        })
    }

    /// Documents whose reference list contains `doc_id`.
    pub fn citing_papers(&self, doc_id: &str) -> Result<&BTreeSet<String>> {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        if !self.docs.contains_key(doc_id) {
            return Err(Error::NotFound {
                kind: "document",
                id: doc_id.to_string(),
            });
        }
        Ok(self.citing.get(doc_id).unwrap_or(&EMPTY))
    }

    /// Publications of `author` with year in `[t - b, t - 1]`, sorted by year
    /// then id. Unknown authors yield an empty list.
    pub fn author_past_pubs(&self, author: &str, t: i32, b: u32) -> Vec<&str> {
        let lo = t - b as i32;
        self.author_docs(author)
            .iter()
            .filter(|id| {
                let y = self.docs[id.as_str()].year;
                y >= lo && y < t
            })
            .map(String::as_str)
            .collect()
    }

    /// Publication year of a cited item in reference slot `slot` of `doc`.
    pub fn ref_year(&self, doc: &DocumentRecord, slot: usize) -> Option<i32> {
        let id = &doc.ref_doc_ids[slot];
        if let Some(d) = self.docs.get(id) {
            return Some(d.year);
        }
        doc.ref_years.as_ref().and_then(|y| y[slot])
    }

    /// Write the index as `corpus.jsonl`, `journals.csv` and `labels.jsonl`
    /// under `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join("corpus.jsonl"), self.docs.values())?;
        write_journals(&dir.join("journals.csv"), self.journals.values())?;
        write_jsonl(&dir.join("labels.jsonl"), self.labels.values())?;
        Ok(())
    }

    /// Load an index previously written by [`CorpusIndex::export`].
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let (index, _) = ingest(
            &dir.join("corpus.jsonl"),
            Some(&dir.join("journals.csv")),
            Some(&dir.join("labels.jsonl")),
            &FilterConfig::permissive(),
        )?;
        Ok(index)
    }
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

pub(crate) fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_journals<'a>(
    path: &Path,
    journals: impl IntoIterator<Item = &'a JournalRecord>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for j in journals {
        w.serialize(j)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read documents from `path`, keeping those that pass `filter`.
pub fn ingest_corpus(path: &Path, filter: &FilterConfig) -> Result<(CorpusIndex, IngestReport)> {
    let mut report = IngestReport::default();
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    for (line, doc) in parse_jsonl::<DocumentRecord>(path)? {
        report.lines_read += 1;
        doc.validate().map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::Duplicate(doc.doc_id));
        }
        match filter.reject_reason(&doc) {
            Some(reason) => {
                report.rejected += 1;
                *report.reject_reasons.entry(reason.to_string()).or_default() += 1;
            }
            None => kept.push(doc),
        }
    }
    report.accepted = kept.len();
    let index = CorpusIndex::from_documents(kept)?;
    for doc in index.docs() {
        let resolved = &index.refs[&doc.doc_id];
        report.unresolved_refs += doc
            .ref_doc_ids
            .iter()
            .filter(|r| !resolved.contains(*r))
            .count();
        report.issnless_refs += doc
            .ref_journal_issns
            .iter()
            .filter(|s| s.is_empty())
            .count();
    }
    Ok((index, report))
}

pub fn load_journals(path: &Path) -> Result<Vec<JournalRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        let rec: JournalRecord = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    Ok(parse_jsonl(path)?.into_iter().map(|(_, l)| l).collect())
}

/// Full ingestion: corpus plus optional journal table and labels.
pub fn ingest(
    corpus: &Path,
    journals: Option<&Path>,
    labels: Option<&Path>,
    filter: &FilterConfig,
) -> Result<(CorpusIndex, IngestReport)> {
    let (mut index, mut report) = ingest_corpus(corpus, filter)?;
    if let Some(p) = journals {
        index = index.with_journals(load_journals(p)?)?;
    }
    report.unknown_journal = index.docs().filter(|d| index.journal_flagged(d)).count();
    if let Some(p) = labels {
        let (ix, unmatched) = index.with_labels(load_labels(p)?)?;
        index = ix;
        report.labels_unmatched = unmatched;
    }
    Ok((index, report))
}

/// Binary perceived-novelty sample built from expert labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NoveltySample {
    /// doc_id -> carries at least one novel category.
    pub novel: BTreeMap<String, bool>,
    /// doc_id -> category -> number of times the doc received that label.
    pub counts: BTreeMap<String, BTreeMap<String, u32>>,
    /// Total occurrences per category over the kept sample.
    pub category_totals: BTreeMap<String, u32>,
    pub dropped: usize,
}

impl NoveltySample {
    pub fn positives(&self) -> usize {
        self.novel.values().filter(|v| **v).count()
    }
}

/// Drop documents labelled only with `exclude_only`; mark the rest novel when
/// they carry any of `novel_categories`.
pub fn perceived_novelty_sample<'a>(
    labels: impl IntoIterator<Item = &'a LabelRecord>,
    novel_categories: &BTreeSet<String>,
    exclude_only: &str,
) -> Result<NoveltySample> {
    if novel_categories.is_empty() {
        return Err(Error::invalid("novel category set is empty"));
    }
    let mut sample = NoveltySample::default();
    for l in labels {
        let distinct = l.distinct();
        if distinct.len() == 1 && distinct.contains(exclude_only) {
            sample.dropped += 1;
            continue;
        }
        let is_novel = distinct.iter().any(|c| novel_categories.contains(*c));
        sample.novel.insert(l.doc_id.clone(), is_novel);
        let counts = sample.counts.entry(l.doc_id.clone()).or_default();
        for c in &l.categories {
            *counts.entry(c.clone()).or_default() += 1;
            *sample.category_totals.entry(c.clone()).or_default() += 1;
        }
    }
    Ok(sample)
}
