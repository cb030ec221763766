//! Disruption, consolidation, breadth and depth on a hand-built citation graph.

use teamscope::corpus::{CorpusIndex, DocumentRecord};
use teamscope::disruption::impact_scores;

fn doc(id: &str, year: i32, refs: &[&str]) -> DocumentRecord {
    DocumentRecord {
        doc_id: id.into(),
        year,
        title: String::new(),
        abstract_text: String::new(),
        journal_issn: "0000-0001".into(),
        mesh_terms: vec!["m".into()],
        author_ids: vec!["a".into()],
        ref_doc_ids: refs.iter().map(|r| r.to_string()).collect(),
        ref_journal_issns: refs.iter().map(|_| "0000-0001".to_string()).collect(),
        ref_years: None,
    }
}

fn main() -> teamscope::Result<()> {
    let index = CorpusIndex::from_documents([
        doc("r1", 2000, &[]),
        doc("r2", 2000, &[]),
        doc("focal", 2001, &["r1", "r2"]),
        doc("c1", 2002, &["focal"]),
        doc("c2", 2002, &["focal"]),
        doc("c3", 2003, &["focal", "r1"]),
        doc("c4", 2003, &["r2"]),
        doc("c5", 2004, &["focal", "c1"]),
    ])?;
    println!("{:#?}", impact_scores(&index, "focal", None)?);
    Ok(())
}
