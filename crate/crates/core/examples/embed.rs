//! Fallback hashed embeddings and cosine distances between a few documents.

use teamscope::embed::{cosine_distance, embed_fallback};

fn main() -> teamscope::Result<()> {
    let texts = [
        ("a", "protein folding kinetics in membrane transporters"),
        ("b", "membrane transporter protein folding"),
        ("c", "galaxy rotation curves and dark matter halos"),
    ];
    let vs: Vec<_> = texts
        .iter()
        .map(|(id, t)| embed_fallback(id, t, 64, 7))
        .collect::<Result<_, _>>()?;
    for u in &vs {
        for v in &vs {
            if u.doc_id < v.doc_id {
                println!(
                    "d({}, {}) = {:.4}",
                    u.doc_id,
                    v.doc_id,
                    cosine_distance(u, v)?
                );
            }
        }
    }
    Ok(())
}
