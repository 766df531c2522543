//! Monte-Carlo spread of one tagged unit of information along the longest
//! shortest path.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CompletionParams;
use crate::error::{contract, Result};
use crate::rng::rng_for;
use crate::topology::{bfs_distances, max_shortest_path};

/// In-degrees met along the witness path: hop k lands on `in_degrees[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadPath {
    pub nodes: Vec<usize>,
    pub in_degrees: Vec<u32>,
}

impl SpreadPath {
    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }
}

pub fn spread_path(adj: &[Vec<usize>]) -> Result<SpreadPath> {
    let (src, dst) = max_shortest_path(adj)?.witness();
    // walk back along BFS layers
    let dist = bfs_distances(adj, src);
    let mut nodes = alloc::vec![dst];
    let mut cur = dst;
    while cur != src {
        let d = dist[cur].expect("reachable");
        cur = (0..adj.len())
            .find(|&u| dist[u] == Some(d - 1) && adj[u].contains(&cur))
            .expect("BFS predecessor exists");
        nodes.push(cur);
    }
    nodes.reverse();
    let mut indeg = alloc::vec![0u32; adj.len()];
    for out in adj {
        for &v in out {
            indeg[v] += 1;
        }
    }
    let in_degrees = nodes.iter().map(|&v| indeg[v]).collect();
    Ok(SpreadPath { nodes, in_degrees })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadPoint {
    pub t: u32,
    pub p: f64,
    pub stderr: f64,
}

/// First iteration at which the unit is delivered, or `None` by `t_max`.
///
/// The attempt delivered at T makes one hop per iteration for the last
/// l_max iterations and dwells at the destination before that; every
/// iteration boundary is a dilution at the current holder. From T0 on the
/// survival at boundary k is scaled by gamma(k + 1).
pub fn trial_first_success<R: Rng + ?Sized>(path: &SpreadPath, params: &CompletionParams, t_max: u32, rng: &mut R) -> Option<u32> {
    let l = path.hops() as u32;
    let hop = (1.0 - params.disc_error) * params.share_ratio;
    let eta = params.share_ratio;
    for t in l.max(1)..=t_max {
        // hops land at iterations t - l + 1 ..= t
        let mut ok = true;
        for k in 1..=l {
            if !rng.random_bool(hop.clamp(0.0, 1.0)) {
                ok = false;
                break;
            }
            // dilution after landing, except after the final delivery
            if k < l {
                let survive = (params.gamma_at(k + 1) / (1.0 + path.in_degrees[k as usize] as f64 * eta)).min(1.0);
                if !rng.random_bool(survive) {
                    ok = false;
                    break;
                }
            }
        }
        // remaining boundaries are spent waiting at the destination
        if ok {
            let dest = *path.in_degrees.last().unwrap() as f64;
            for b in l..t {
                let survive = (params.gamma_at(b + 1) / (1.0 + dest * eta)).min(1.0);
                if !rng.random_bool(survive) {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(t);
        }
    }
    None
}

/// Cumulative first-delivery curve for T = 0..=t_max with binomial standard errors.
pub fn spread_simulator(adj: &[Vec<usize>], params: &CompletionParams, trials: u64, t_max: u32, seed: u64) -> Result<Vec<SpreadPoint>> {
    if trials == 0 {
        return Err(contract("need at least one trial"));
    }
    let path = spread_path(adj)?;
    let mut first = alloc::vec![0u64; t_max as usize + 1];
    for trial in 0..trials {
        let mut rng = rng_for(seed, 0x5917EAD, trial);
        if let Some(t) = trial_first_success(&path, params, t_max, &mut rng) {
            first[t as usize] += 1;
        }
    }
    Ok(curve_from_counts(&first, trials))
}

pub fn curve_from_counts(first: &[u64], trials: u64) -> Vec<SpreadPoint> {
    let mut acc = 0u64;
    first
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            acc += c;
            let p = acc as f64 / trials as f64;
            SpreadPoint { t: t as u32, p, stderr: (p * (1.0 - p) / trials as f64).sqrt() }
        })
        .collect()
}
