//! Level-synchronous breadth-first search over a CSR graph.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{Error, Result};
use crate::parallel::par_map_blocks;
use crate::rng::CounterRng;

pub const UNREACHABLE: u32 = u32::MAX;

/// Compressed sparse adjacency (directed edges).
#[derive(Debug, Clone)]
pub struct CsrGraph {
    pub n: usize,
    pub offsets: Vec<usize>,
    pub edges: Vec<u32>,
}

impl CsrGraph {
    /// Uniform random graph: every vertex gets `degree` out-edges with
    /// uniformly chosen targets.
    pub fn random(n: usize, degree: usize, rng: &CounterRng) -> CsrGraph {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut edges = Vec::with_capacity(n * degree);
        offsets.push(0);
        for v in 0..n {
            for j in 0..degree {
                let r = rng.at((v * degree + j) as u64);
                edges.push((r % n as u64) as u32);
            }
            offsets.push(edges.len());
        }
        CsrGraph { n, offsets, edges }
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.edges[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets.len() != self.n + 1 || self.offsets[0] != 0 {
            return Err(Error::InvalidInput("malformed offsets".to_string()));
        }
        if self.offsets[self.n] != self.edges.len() {
            return Err(Error::InvalidInput(
                "offsets do not cover edges".to_string(),
            ));
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("offsets not monotone".to_string()));
        }
        if self.edges.iter().any(|&e| e as usize >= self.n) {
            return Err(Error::InvalidInput("edge target out of range".to_string()));
        }
        Ok(())
    }
}

/// Frontier expansion parallel within each level; vertices are claimed with a
/// compare-and-swap so each is discovered exactly once. Distances are
/// deterministic for any worker count (level-synchronous BFS fixes them).
pub fn bfs(graph: &CsrGraph, source: usize, workers: usize) -> Result<Vec<u32>> {
    if source >= graph.n {
        return Err(Error::InvalidInput(format!(
            "source {source} out of range for {} vertices",
            graph.n
        )));
    }
    let dist: Vec<AtomicU32> = (0..graph.n).map(|_| AtomicU32::new(UNREACHABLE)).collect();
    dist[source].store(0, Ordering::Relaxed);
    let mut frontier = vec![source as u32];
    let mut depth = 0u32;
    while !frontier.is_empty() {
        depth += 1;
        let discovered = par_map_blocks(workers, frontier.len(), 4096, |_, range| {
            let mut local = Vec::new();
            for &u in &frontier[range] {
                for &v in graph.neighbors(u as usize) {
                    if dist[v as usize]
                        .compare_exchange(UNREACHABLE, depth, Ordering::Relaxed, Ordering::Relaxed)
                        .is_ok()
                    {
                        local.push(v);
                    }
                }
            }
            local
        });
        frontier = discovered.into_iter().flatten().collect();
    }
    Ok(dist.into_iter().map(|d| d.into_inner()).collect())
}

/// Textbook queue BFS, the verification oracle.
pub fn bfs_sequential(graph: &CsrGraph, source: usize) -> Result<Vec<u32>> {
    if source >= graph.n {
        return Err(Error::InvalidInput(format!(
            "source {source} out of range for {} vertices",
            graph.n
        )));
    }
    let mut dist = vec![UNREACHABLE; graph.n];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            if dist[v as usize] == UNREACHABLE {
                dist[v as usize] = dist[u] + 1;
                queue.push_back(v as usize);
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> CsrGraph {
        let mut offsets = vec![0];
        let mut edges = Vec::new();
        for v in 0..n {
            if v + 1 < n {
                edges.push((v + 1) as u32);
            }
            offsets.push(edges.len());
        }
        CsrGraph { n, offsets, edges }
    }

    #[test]
    fn single_vertex_no_edges() {
        let g = CsrGraph {
            n: 1,
            offsets: vec![0, 0],
            edges: vec![],
        };
        assert_eq!(bfs(&g, 0, 2).unwrap(), vec![0]);
    }

    #[test]
    fn path_graph_distances_are_hops() {
        let g = path_graph(4);
        assert_eq!(bfs(&g, 0, 2).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn unreachable_vertices_are_marked() {
        // 0 -> 1, vertex 2 isolated
        let g = CsrGraph {
            n: 3,
            offsets: vec![0, 1, 1, 1],
            edges: vec![1],
        };
        assert_eq!(bfs(&g, 0, 1).unwrap(), vec![0, 1, UNREACHABLE]);
    }

    #[test]
    fn random_graph_matches_sequential_oracle() {
        let rng = CounterRng::new(7, "bfs-test");
        let g = CsrGraph::random(1000, 4, &rng);
        g.validate().unwrap();
        let par = bfs(&g, 0, 4).unwrap();
        let seq = bfs_sequential(&g, 0).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn every_reached_vertex_has_a_parent_one_hop_closer() {
        let rng = CounterRng::new(9, "bfs-test");
        let g = CsrGraph::random(500, 3, &rng);
        let dist = bfs(&g, 0, 2).unwrap();
        // reverse adjacency for the check
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); g.n];
        for u in 0..g.n {
            for &v in g.neighbors(u) {
                preds[v as usize].push(u);
            }
        }
        for v in 0..g.n {
            let d = dist[v];
            if d != UNREACHABLE && d > 0 {
                assert!(
                    preds[v].iter().any(|&u| dist[u] == d - 1),
                    "vertex {v} at depth {d} has no parent at depth {}",
                    d - 1
                );
            }
        }
    }

    #[test]
    fn source_out_of_range_is_an_error() {
        let g = path_graph(3);
        assert!(bfs(&g, 5, 1).is_err());
        assert!(bfs_sequential(&g, 5).is_err());
    }
}
