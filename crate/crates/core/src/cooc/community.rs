//! Seeded Louvain partition of the accumulated co-occurrence network.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PairCountTable;
use crate::error::{Error, Result};

/// Weighted undirected graph with self-loops. A self-loop of weight `w`
/// contributes `2w` to its node's degree.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Graph {
    pub fn with_nodes(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            self_loops: vec![0.0; n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Add weight to an edge; repeated calls accumulate.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) {
        if u == v {
            self.self_loops[u] += w;
            return;
        }
        for (a, b) in [(u, v), (v, u)] {
            match self.adj[a].iter_mut().find(|(n, _)| *n == b) {
                Some((_, x)) => *x += w,
                None => self.adj[a].push((b, w)),
            }
        }
    }

    fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|(_, w)| w).sum::<f64>() + 2.0 * self.self_loops[u]
    }

    fn total_weight(&self) -> f64 {
        let cross: f64 = self.adj.iter().flatten().map(|(_, w)| w).sum();
        cross / 2.0 + self.self_loops.iter().sum::<f64>()
    }

    /// Newman modularity of `membership` at the given resolution.
    pub fn modularity(&self, membership: &[usize], resolution: f64) -> f64 {
        let m = self.total_weight();
        if m == 0.0 {
            return 0.0;
        }
        let k = self.n_communities(membership);
        let mut internal = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for u in 0..self.n_nodes() {
            let c = membership[u];
            tot[c] += self.degree(u);
            internal[c] += 2.0 * self.self_loops[u];
            for &(v, w) in &self.adj[u] {
                if membership[v] == c {
                    internal[c] += w;
                }
            }
        }
        (0..k)
            .map(|c| internal[c] / (2.0 * m) - resolution * (tot[c] / (2.0 * m)).powi(2))
            .sum()
    }

    fn n_communities(&self, membership: &[usize]) -> usize {
        membership.iter().copied().max().map_or(0, |x| x + 1)
    }

    /// Local moving until no node changes community. Returns whether any node moved.
    fn local_moving(
        &self,
        membership: &mut [usize],
        resolution: f64,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        let n = self.n_nodes();
        let m2 = 2.0 * self.total_weight();
        let degrees: Vec<f64> = (0..n).map(|u| self.degree(u)).collect();
        let mut tot = vec![0.0; n.max(self.n_communities(membership))];
        for u in 0..n {
            tot[membership[u]] += degrees[u];
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &u in &order {
                let cu = membership[u];
                let mut links: BTreeMap<usize, f64> = BTreeMap::new();
                for &(v, w) in &self.adj[u] {
                    *links.entry(membership[v]).or_default() += w;
                }
                tot[cu] -= degrees[u];
                let gain = |c: usize, k_in: f64| k_in - resolution * tot[c] * degrees[u] / m2;
                let mut best = cu;
                let mut best_gain = gain(cu, links.get(&cu).copied().unwrap_or(0.0));
                for (&c, &k_in) in &links {
                    let g = gain(c, k_in);
                    if g > best_gain + 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += degrees[u];
                if best != cu {
                    membership[u] = best;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        moved_any
    }

    fn aggregate(&self, membership: &[usize]) -> Graph {
        let k = self.n_communities(membership);
        let mut g = Graph::with_nodes(k);
        for u in 0..self.n_nodes() {
            let cu = membership[u];
            g.self_loops[cu] += self.self_loops[u];
            for &(v, w) in &self.adj[u] {
                if u < v {
                    g.add_edge(cu, membership[v], w);
                }
            }
        }
        g
    }
}

/// Relabel communities 0.. in order of first appearance.
fn canonical(membership: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    membership
        .iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

/// Multi-level Louvain followed by one refinement pass on the original graph.
pub fn louvain(graph: &Graph, resolution: f64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = graph.n_nodes();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = graph.clone();
    loop {
        let mut local: Vec<usize> = (0..level.n_nodes()).collect();
        let moved = level.local_moving(&mut local, resolution, &mut rng);
        let local = canonical(&local);
        for m in membership.iter_mut() {
            *m = local[*m];
        }
        if !moved {
            break;
        }
        level = level.aggregate(&local);
    }
    let mut refined = canonical(&membership);
    graph.local_moving(&mut refined, resolution, &mut rng);
    canonical(&refined)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Inclusive year window the network was accumulated over.
    pub years: (i32, i32),
    pub membership: BTreeMap<u32, u32>,
    pub modularity: f64,
    pub resolution: f64,
    pub seed: u64,
}

impl CommunityPartition {
    pub fn community(&self, entity: u32) -> Option<u32> {
        self.membership.get(&entity).copied()
    }

    pub fn n_communities(&self) -> usize {
        self.membership
            .values()
            .max()
            .map_or(0, |m| *m as usize + 1)
    }
}

/// Partition the network accumulated over `tables`; edge weight is the summed
/// pair count. Nodes are entities with at least one edge, in id order.
pub fn community_partition<'a>(
    tables: impl IntoIterator<Item = &'a PairCountTable>,
    resolution: f64,
    seed: u64,
) -> Result<CommunityPartition> {
    let mut weights: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut years: Option<(i32, i32)> = None;
    for t in tables {
        years = Some(match years {
            None => (t.year, t.year),
            Some((lo, hi)) => (lo.min(t.year), hi.max(t.year)),
        });
        for (p, n) in t.iter() {
            *weights.entry(p).or_default() += n;
        }
    }
    if weights.is_empty() {
        return Err(Error::invalid("co-occurrence network has no edges"));
    }
    let mut nodes: Vec<u32> = weights.keys().flat_map(|(i, j)| [*i, *j]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let pos: BTreeMap<u32, usize> = nodes.iter().enumerate().map(|(k, e)| (*e, k)).collect();
    let mut g = Graph::with_nodes(nodes.len());
    for ((i, j), n) in &weights {
        g.add_edge(pos[i], pos[j], *n as f64);
    }
    let membership = louvain(&g, resolution, seed);
    let modularity = g.modularity(&membership, resolution);
    Ok(CommunityPartition {
        years: years.unwrap_or_default(),
        membership: nodes
            .iter()
            .zip(&membership)
            .map(|(e, c)| (*e, *c as u32))
            .collect(),
        modularity,
        resolution,
        seed,
    })
}
