//! Index the demo corpus and print the ingest report.

use std::path::Path;

use teamscope::corpus::{ingest, FilterConfig};

fn main() -> teamscope::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo/data");
    let (index, report) = ingest(
        &data.join("corpus.jsonl"),
        Some(&data.join("journals.csv")),
        Some(&data.join("labels.jsonl")),
        &FilterConfig::default(),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    let (first, last) = index.year_span().unwrap();
    println!(
        "{} docs, {} authors, years {first}-{last}",
        index.len(),
        index.authors().count()
    );
    let doc = index.docs().next().unwrap();
    println!(
        "{} is cited by {} docs",
        doc.doc_id,
        index.citing_papers(&doc.doc_id)?.len()
    );
    Ok(())
}
