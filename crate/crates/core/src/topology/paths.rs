//! Shortest-path metrics on adjacency lists.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub fn bfs_distances(adj: &[Vec<usize>], src: usize) -> Vec<Option<usize>> {
    let mut dist = alloc::vec![None; adj.len()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// l_u^max: longest shortest path out of `u`, or `None` if some node is unreachable.
pub fn eccentricity(adj: &[Vec<usize>], u: usize) -> Option<usize> {
    bfs_distances(adj, u).into_iter().try_fold(0, |m, d| d.map(|d| m.max(d)))
}

pub fn is_strongly_connected(adj: &[Vec<usize>]) -> bool {
    (0..adj.len()).all(|u| eccentricity(adj, u).is_some())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathExtent {
    pub length: usize,
    /// Every (u, v) attaining the maximum, in lexicographic order.
    pub witnesses: Vec<(usize, usize)>,
}

impl PathExtent {
    pub fn witness(&self) -> (usize, usize) {
        self.witnesses[0]
    }
}

pub fn max_shortest_path(adj: &[Vec<usize>]) -> Result<PathExtent> {
    let mut best = PathExtent { length: 0, witnesses: Vec::new() };
    for u in 0..adj.len() {
        for (v, d) in bfs_distances(adj, u).into_iter().enumerate() {
            let d = d.ok_or(Error::NotStronglyConnected { from: u, to: v })?;
            if u == v {
                continue;
            }
            if d > best.length {
                best.length = d;
                best.witnesses.clear();
            }
            if d == best.length {
                best.witnesses.push((u, v));
            }
        }
    }
    if best.witnesses.is_empty() {
        return Err(Error::Contract("graph needs at least two nodes".into()));
    }
    Ok(best)
}

/// Shortest directed cycle through `u`: one hop to a successor, then BFS back.
pub fn min_loop_length(adj: &[Vec<usize>], u: usize) -> Result<usize> {
    adj[u]
        .iter()
        .filter_map(|&s| bfs_distances(adj, s)[u].map(|d| d + 1))
        .min()
        .ok_or(Error::NoCycle(u))
}

/// (l^max, l^min_loop) for the completion analysis. With several witness
/// pairs the smallest loop length over their sources is taken.
pub fn completion_path_lengths(adj: &[Vec<usize>]) -> Result<(usize, usize)> {
    let ext = max_shortest_path(adj)?;
    let mut sources: Vec<usize> = ext.witnesses.iter().map(|w| w.0).collect();
    sources.dedup();
    let mut best = usize::MAX;
    for s in sources {
        best = best.min(min_loop_length(adj, s)?);
    }
    Ok((ext.length, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cycle(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| vec![(i + 1) % n]).collect()
    }

    fn complete(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect()
    }

    fn floyd_warshall(adj: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
        let n = adj.len();
        let mut d = vec![vec![None; n]; n];
        for i in 0..n {
            d[i][i] = Some(0);
            for &j in &adj[i] {
                d[i][j] = Some(1);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                        if d[i][j].map_or(true, |c| a + b < c) {
                            d[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }

    #[test]
    fn cycle_and_complete() {
        assert_eq!(max_shortest_path(&cycle(4)).unwrap().length, 3);
        assert_eq!(max_shortest_path(&complete(5)).unwrap().length, 1);
        assert_eq!(min_loop_length(&cycle(4), 0).unwrap(), 4);
        assert_eq!(min_loop_length(&complete(4), 2).unwrap(), 2);
        assert_eq!(completion_path_lengths(&cycle(4)).unwrap(), (3, 4));
    }

    #[test]
    fn chord_shortens_loop() {
        // 0->1->2->3->0 plus 2->0
        let mut g = cycle(4);
        g[2].push(0);
        assert_eq!(min_loop_length(&g, 0).unwrap(), 3);
        assert_eq!(min_loop_length(&g, 3).unwrap(), 4);
    }

    #[test]
    fn disconnected_reports_pair() {
        let g = vec![vec![1], vec![], vec![0]];
        assert!(matches!(max_shortest_path(&g), Err(Error::NotStronglyConnected { .. })));
        assert_eq!(min_loop_length(&g, 0), Err(Error::NoCycle(0)));
    }

    fn digraph(n: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
        proptest::collection::vec(proptest::bool::weighted(0.35), n * n).prop_map(move |bits| {
            (0..n)
                .map(|i| {
                    // keep a Hamiltonian cycle so the graph is strongly connected
                    let mut out: Vec<usize> = (0..n).filter(|&j| j != i && bits[i * n + j]).collect();
                    if !out.contains(&((i + 1) % n)) {
                        out.push((i + 1) % n);
                    }
                    out
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_floyd_warshall(g in (3usize..8).prop_flat_map(digraph)) {
            let fw = floyd_warshall(&g);
            let oracle = fw.iter().flatten().map(|d| d.unwrap()).max().unwrap();
            prop_assert_eq!(max_shortest_path(&g).unwrap().length, oracle);
            for u in 0..g.len() {
                let via_fw = g[u].iter().map(|&s| fw[s][u].unwrap() + 1).min().unwrap();
                prop_assert_eq!(min_loop_length(&g, u).unwrap(), via_fw);
            }
        }
    }
}
