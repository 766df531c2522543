//! Air-to-air link budgets, feasible neighbor sets, graph path metrics,
//! ring construction and distributed network formation.

mod formation;
mod paths;

pub use formation::{
    build_ring, choose_removal, find_hamiltonian_cycle, network_formation, FormationReport, NodeView,
};
pub use paths::{
    bfs_distances, eccentricity, is_strongly_connected, max_shortest_path, min_loop_length,
    completion_path_lengths, PathExtent,
};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::channel::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

/// Relative slack for constraint checks on powers computed exactly at a boundary.
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavNode {
    pub id: usize,
    pub position: [f64; 3],
    pub dataset_size: usize,
    pub max_power_w: f64,
    pub out_budget: usize,
}

/// Radio parameters shared by every air-to-air link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A2aRadio {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintParams {
    pub snr_threshold: f64,
    pub tx_time_limit_s: f64,
    /// Scalars per sample (rho).
    pub sample_scalars: u32,
    pub bits_per_scalar: u32,
    pub share_ratio: f64,
    pub rb_budget: usize,
}

impl ConstraintParams {
    pub fn sample_bits(&self) -> f64 {
        self.sample_scalars as f64 * self.bits_per_scalar as f64
    }

    pub fn validate(&self, node_count: usize) -> Result<()> {
        if !(self.snr_threshold > 0.0) || !(self.tx_time_limit_s > 0.0) || self.sample_scalars == 0 {
            return Err(Error::Config("tau, t_tau and rho must be positive".into()));
        }
        if !(self.share_ratio > 0.0 && self.share_ratio <= 1.0) {
            return Err(Error::Config("share ratio must lie in (0, 1]".into()));
        }
        if self.rb_budget < node_count {
            return Err(Error::Config("resource-block budget must be at least the number of UAVs".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub src: usize,
    pub dst: usize,
    pub path_gain: f64,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub rate_bps: f64,
    pub snr: f64,
}

impl LinkBudget {
    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }
}

pub fn a2a_rate(power_w: f64, gain: f64, noise_w: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + power_w * gain / noise_w).log2()
}

/// Free-space power gain, capped at 1 for very short ranges.
pub fn free_space_gain(distance_m: f64, carrier_hz: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    (lambda / (4.0 * PI * distance_m.max(1e-9))).powi(2).min(1.0)
}

/// Budget for i -> j at the least power meeting both the SNR and the
/// transmission-time constraint. The power may exceed P_max; feasibility is
/// judged separately.
pub fn min_power_link(src: &UavNode, dst: &UavNode, radio: &A2aRadio, params: &ConstraintParams) -> LinkBudget {
    let d = crate::channel::distance(&src.position, &dst.position);
    let h = free_space_gain(d, radio.carrier_hz);
    let bits = params.share_ratio * src.dataset_size as f64 * params.sample_bits();
    let snr_for_time = (bits / (radio.bandwidth_hz * params.tx_time_limit_s)).exp2() - 1.0;
    let snr = params.snr_threshold.max(snr_for_time);
    let p = snr * radio.noise_w / h;
    LinkBudget {
        src: src.id,
        dst: dst.id,
        path_gain: h,
        tx_power_w: p,
        bandwidth_hz: radio.bandwidth_hz,
        noise_w: radio.noise_w,
        rate_bps: a2a_rate(p, h, radio.noise_w, radio.bandwidth_hz),
        snr,
    }
}

/// Checks all three per-link constraints of the feasible-set definition.
pub fn link_satisfies(b: &LinkBudget, src: &UavNode, params: &ConstraintParams) -> bool {
    let bits = params.share_ratio * src.dataset_size as f64 * params.sample_bits();
    b.tx_power_w <= src.max_power_w * (1.0 + BOUNDARY_TOL)
        && b.snr >= params.snr_threshold * (1.0 - BOUNDARY_TOL)
        && bits / b.rate_bps <= params.tx_time_limit_s * (1.0 + BOUNDARY_TOL)
}

/// Minimum-power budgets for every ordered pair; `None` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    pub budgets: Vec<Vec<Option<LinkBudget>>>,
}

impl LinkTable {
    pub fn build(nodes: &[UavNode], radio: &A2aRadio, params: &ConstraintParams) -> Result<Self> {
        check_nodes(nodes)?;
        let budgets = nodes
            .iter()
            .map(|a| {
                nodes
                    .iter()
                    .map(|b| (a.id != b.id).then(|| min_power_link(a, b, radio, params)))
                    .collect()
            })
            .collect();
        Ok(Self { budgets })
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&LinkBudget> {
        self.budgets[i][j].as_ref()
    }

    pub fn feasible_sets(&self, nodes: &[UavNode], params: &ConstraintParams) -> Vec<BTreeSet<usize>> {
        nodes
            .iter()
            .map(|n| {
                self.budgets[n.id]
                    .iter()
                    .flatten()
                    .filter(|b| link_satisfies(b, n, params))
                    .map(|b| b.dst)
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn check_nodes(nodes: &[UavNode]) -> Result<()> {
    for (i, n) in nodes.iter().enumerate() {
        if n.id != i {
            return Err(Error::Config(alloc::format!("node at position {i} has id {}", n.id)));
        }
        if n.out_budget == 0 || n.dataset_size == 0 {
            return Err(Error::Config(alloc::format!("node {i} needs O_i >= 1 and S_i >= 1")));
        }
        if !(n.max_power_w >= 0.0) || n.position.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(alloc::format!("node {i} has invalid power or position")));
        }
    }
    Ok(())
}

pub fn feasible_set(i: usize, nodes: &[UavNode], radio: &A2aRadio, params: &ConstraintParams) -> Result<BTreeSet<usize>> {
    let table = LinkTable::build(nodes, radio, params)?;
    Ok(table.feasible_sets(nodes, params).swap_remove(i))
}

/// All `o`-subsets of `feasible` whose summed minimum powers fit in P_max.
pub fn power_feasible_subsets(
    table: &LinkTable,
    node: &UavNode,
    feasible: &BTreeSet<usize>,
    o: usize,
) -> Vec<Vec<usize>> {
    let members: Vec<usize> = feasible.iter().copied().collect();
    let mut out = Vec::new();
    if o == 0 || o > members.len() {
        return out;
    }
    let mut pick = Vec::with_capacity(o);
    subsets_rec(&members, o, 0, &mut pick, &mut |s: &[usize]| {
        let total: f64 = s.iter().map(|&j| table.get(node.id, j).map_or(f64::INFINITY, |b| b.tx_power_w)).sum();
        if total <= node.max_power_w * (1.0 + BOUNDARY_TOL) {
            out.push(s.to_vec());
        }
    });
    out
}

fn subsets_rec(items: &[usize], k: usize, start: usize, pick: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for idx in start..items.len() {
        if items.len() - idx < k - pick.len() {
            break;
        }
        pick.push(items[idx]);
        subsets_rec(items, k, idx + 1, pick, f);
        pick.pop();
    }
}

pub fn extended_feasible_set(
    i: usize,
    nodes: &[UavNode],
    radio: &A2aRadio,
    params: &ConstraintParams,
    o: usize,
) -> Result<Vec<Vec<usize>>> {
    if o == 0 {
        return Err(Error::Contract("O_i must be at least 1".into()));
    }
    let table = LinkTable::build(nodes, radio, params)?;
    let sets = table.feasible_sets(nodes, params);
    Ok(power_feasible_subsets(&table, &nodes[i], &sets[i], o))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NecessaryCondition {
    pub holds: bool,
    pub empty: Vec<usize>,
    pub uncovered: Vec<usize>,
}

pub fn necessary_condition_from_sets(sets: &[BTreeSet<usize>]) -> NecessaryCondition {
    let empty: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].is_empty()).collect();
    let covered: BTreeSet<usize> = sets.iter().flatten().copied().collect();
    let uncovered: Vec<usize> = (0..sets.len()).filter(|i| !covered.contains(i)).collect();
    NecessaryCondition { holds: empty.is_empty() && uncovered.is_empty(), empty, uncovered }
}

pub fn check_necessary_condition(
    nodes: &[UavNode],
    radio: &A2aRadio,
    params: &ConstraintParams,
) -> Result<NecessaryCondition> {
    let table = LinkTable::build(nodes, radio, params)?;
    Ok(necessary_condition_from_sets(&table.feasible_sets(nodes, params)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavGraph {
    pub nodes: Vec<UavNode>,
    pub edges: BTreeMap<(usize, usize), LinkBudget>,
}

impl UavGraph {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.nodes.len()];
        for &(i, j) in self.edges.keys() {
            adj[i].push(j);
        }
        adj
    }

    pub fn out_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges.keys().filter(|e| e.0 == i).map(|e| e.1).collect()
    }

    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges.keys().filter(|e| e.1 == i).map(|e| e.0).collect()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.edges.keys().filter(|e| e.1 == i).count()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.keys().filter(|e| e.0 == i).count()
    }

    pub fn max_in_degree(&self) -> usize {
        (0..self.nodes.len()).map(|i| self.in_degree(i)).max().unwrap_or(0)
    }

    /// Constraint audit: SNR, per-node power sum, transmission time and edge budget.
    pub fn audit(&self, params: &ConstraintParams) -> Result<()> {
        if self.edges.len() > params.rb_budget {
            return Err(Error::Contract(alloc::format!("{} edges exceed the budget {}", self.edges.len(), params.rb_budget)));
        }
        let mut power = alloc::vec![0.0; self.nodes.len()];
        for (&(i, j), b) in &self.edges {
            if i == j || b.src != i || b.dst != j {
                return Err(Error::Contract(alloc::format!("malformed edge {i}->{j}")));
            }
            if !link_satisfies(b, &self.nodes[i], params) {
                return Err(Error::Contract(alloc::format!("edge {i}->{j} violates a link constraint")));
            }
            power[i] += b.tx_power_w;
        }
        for n in &self.nodes {
            if power[n.id] > n.max_power_w * (1.0 + BOUNDARY_TOL) {
                return Err(Error::Contract(alloc::format!("node {} exceeds its power budget", n.id)));
            }
        }
        Ok(())
    }
}
