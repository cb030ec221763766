//! Louvain partition of two planted cliques joined by a weak bridge.

use teamscope::cooc::{louvain, Graph};

fn main() {
    let mut g = Graph::with_nodes(10);
    for block in [0..5, 5..10] {
        for u in block.clone() {
            for v in block.clone().filter(|v| *v > u) {
                g.add_edge(u, v, 1.0);
            }
        }
    }
    g.add_edge(4, 5, 0.2);
    let membership = louvain(&g, 1.0, 3);
    println!("membership {membership:?}");
    println!("modularity {:.4}", g.modularity(&membership, 1.0));
}
