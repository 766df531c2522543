use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::space::{Cell, SampleSpace};
use crate::channel::Dataset;
use crate::error::{contract, Error, Result};

/// Normalized weights over occupied cells for one condition.
pub type CondTable = BTreeMap<Cell, f64>;

pub fn normalize(t: &mut CondTable) {
    let total: f64 = t.values().sum();
    if total > 0.0 {
        t.values_mut().for_each(|v| *v /= total);
    }
}

/// Per-condition empirical distribution over the binned sample space.
/// `tables[k - 1]` holds condition k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeModel {
    pub space: SampleSpace,
    pub tables: Vec<CondTable>,
}

impl GenerativeModel {
    pub fn empty(space: SampleSpace, conditions: usize) -> Self {
        Self { space, tables: alloc::vec![CondTable::new(); conditions] }
    }

    pub fn conditions(&self) -> usize {
        self.tables.len()
    }

    pub fn from_datasets<'a>(space: SampleSpace, conditions: usize, data: impl IntoIterator<Item = &'a Dataset>) -> Result<Self> {
        space.validate()?;
        let mut m = Self::empty(space, conditions);
        for ds in data {
            for s in &ds.samples {
                if s.cond == 0 || s.cond > conditions {
                    return Err(contract(alloc::format!("sample condition {} outside [1, {conditions}]", s.cond)));
                }
                *m.tables[s.cond - 1].entry(space.cell_of(s)).or_insert(0.0) += 1.0;
            }
        }
        m.tables.iter_mut().for_each(normalize);
        Ok(m)
    }

    pub fn from_dataset(space: SampleSpace, conditions: usize, data: &Dataset) -> Result<Self> {
        Self::from_datasets(space, conditions, [data])
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.space == other.space && self.tables.len() == other.tables.len()
    }

    pub fn support_size(&self) -> usize {
        self.tables.iter().map(|t| t.len()).sum()
    }

    /// Every non-empty condition sums to one within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.tables.iter().all(|t| t.is_empty() || (t.values().sum::<f64>() - 1.0).abs() <= tol)
            && self.tables.iter().flat_map(|t| t.values()).all(|&v| v >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub own: f64,
    pub neighbors: Vec<f64>,
}

pub fn mixture_weights(own_size: usize, neighbor_sizes: &[usize], share_ratio: f64) -> Result<MixtureWeights> {
    if own_size == 0 || neighbor_sizes.contains(&0) || !(0.0..=1.0).contains(&share_ratio) {
        return Err(contract("sizes must be positive and the share ratio in [0, 1]"));
    }
    let denom = own_size as f64 + share_ratio * neighbor_sizes.iter().map(|&s| s as f64).sum::<f64>();
    Ok(MixtureWeights {
        own: own_size as f64 / denom,
        neighbors: neighbor_sizes.iter().map(|&s| share_ratio * s as f64 / denom).collect(),
    })
}

/// Weighted sum of per-condition tables. Components that are empty for a
/// condition drop out and the remaining weights are renormalized.
pub fn mix_tables(parts: &[(&CondTable, f64)]) -> CondTable {
    let live: f64 = parts.iter().filter(|(t, w)| !t.is_empty() && *w > 0.0).map(|p| p.1).sum();
    let mut out = CondTable::new();
    if live <= 0.0 {
        return out;
    }
    for (t, w) in parts.iter().filter(|(t, w)| !t.is_empty() && *w > 0.0) {
        for (c, v) in t.iter() {
            *out.entry(*c).or_insert(0.0) += v * w / live;
        }
    }
    out
}

pub fn mixture_distribution(local: &GenerativeModel, neighbors: &[&GenerativeModel], weights: &MixtureWeights) -> Result<GenerativeModel> {
    if neighbors.len() != weights.neighbors.len() {
        return Err(contract("one weight per neighbor model is required"));
    }
    if neighbors.iter().any(|m| !m.same_layout(local)) {
        return Err(Error::BinMismatch);
    }
    let tables = (0..local.conditions())
        .map(|k| {
            let mut parts = alloc::vec![(&local.tables[k], weights.own)];
            parts.extend(neighbors.iter().zip(&weights.neighbors).map(|(m, &w)| (&m.tables[k], w)));
            mix_tables(&parts)
        })
        .collect();
    Ok(GenerativeModel { space: local.space, tables })
}

/// Density-ratio discriminator D = f^b / (f^b + f^G), with outputs flipped
/// at rate `training_error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub tables: Vec<CondTable>,
    pub training_error: f64,
}

impl Discriminator {
    /// Outputs 1/2 everywhere until trained.
    pub fn untrained(conditions: usize, training_error: f64) -> Self {
        Self { tables: alloc::vec![CondTable::new(); conditions], training_error }
    }

    pub fn density_ratio(mixture: &GenerativeModel, generator: &GenerativeModel, training_error: f64) -> Result<Self> {
        if !mixture.same_layout(generator) {
            return Err(Error::BinMismatch);
        }
        let tables = mixture
            .tables
            .iter()
            .zip(&generator.tables)
            .map(|(b, g)| {
                let mut t = CondTable::new();
                for c in b.keys().chain(g.keys()) {
                    let (x, y) = (b.get(c).copied().unwrap_or(0.0), g.get(c).copied().unwrap_or(0.0));
                    t.insert(*c, x / (x + y));
                }
                t
            })
            .collect();
        Ok(Self { tables, training_error })
    }

    /// D(s | phi_k) for a 1-based condition.
    pub fn output(&self, k: usize, cell: &Cell) -> f64 {
        let d = self.tables.get(k - 1).and_then(|t| t.get(cell)).copied().unwrap_or(0.5);
        (1.0 - self.training_error) * d + self.training_error * (1.0 - d)
    }
}
