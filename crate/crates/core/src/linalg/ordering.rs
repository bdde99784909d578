//! Fill-reducing preordering.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::linalg::SparseSymMatrix;

/// Greedy minimum-degree ordering of a structurally symmetric matrix.
///
/// Returns `perm` with `perm[new] = old`. Elimination is simulated on the
/// adjacency graph: the chosen vertex's neighbors are joined into a clique
/// before removal. Ties break on the smaller vertex index, so the result is
/// deterministic.
pub fn min_degree_order(m: &SparseSymMatrix) -> Vec<usize> {
    let n = m.dim();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        let (cols, _) = m.row(i);
        for &j in cols {
            if j != i {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::with_capacity(n);
    for (v, set) in adj.iter().enumerate() {
        heap.push(Reverse((set.len(), v)));
    }
    let mut eliminated = vec![false; n];
    let mut perm = Vec::with_capacity(n);

    while perm.len() < n {
        let Reverse((deg, v)) = heap.pop().expect("heap exhausted early");
        if eliminated[v] || adj[v].len() != deg {
            continue; // stale entry
        }
        eliminated[v] = true;
        perm.push(v);

        let neighbors: Vec<usize> = adj[v].iter().copied().collect();
        for &a in &neighbors {
            adj[a].remove(&v);
        }
        for (i, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[v].clear();
        for &a in &neighbors {
            heap.push(Reverse((adj[a].len(), a)));
        }
    }
    perm
}
