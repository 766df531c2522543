use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{jsd_metric, symmetric_kl, value_function};
use super::model::{mix_tables, mixture_weights, normalize, CondTable, Discriminator, GenerativeModel};
use super::space::SampleSpace;
use crate::channel::Dataset;
use crate::error::{contract, Error, Result};
use crate::rng::{rng_for, SimRng};
use crate::topology::UavGraph;

const ROUND_STREAM: u64 = 0x1EA2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub share_ratio: f64,
    pub disc_error: f64,
    pub minibatch: usize,
    pub log_floor: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self { share_ratio: 0.5, disc_error: 0.1, minibatch: 128, log_floor: 1e-9 }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.share_ratio) {
            return Err(Error::Config("share ratio must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.disc_error) {
            return Err(Error::Config("training error must lie in [0, 1]".into()));
        }
        if self.minibatch == 0 {
            return Err(Error::Config("minibatch size must be positive".into()));
        }
        if !(self.log_floor > 0.0 && self.log_floor < 0.5) {
            return Err(Error::Config("log floor must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavLearner {
    pub id: usize,
    pub dataset_size: usize,
    /// f_i, the empirical distribution of the local dataset.
    pub local: GenerativeModel,
    /// Starts at f_i and moves to f^b_i every round. It is also the local
    /// term of the next mixture, so shared information keeps propagating
    /// beyond one hop.
    pub generator: GenerativeModel,
    pub discriminator: Discriminator,
    /// f^b_i from the last round.
    pub mixture: GenerativeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningState {
    pub learners: Vec<UavLearner>,
    pub iteration: u64,
    pub params: LearningParams,
    pub seed: u64,
}

impl LearningState {
    pub fn new(space: SampleSpace, conditions: usize, datasets: &[Dataset], params: LearningParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut learners = Vec::with_capacity(datasets.len());
        for (i, ds) in datasets.iter().enumerate() {
            if ds.size() == 0 {
                return Err(contract(alloc::format!("UAV {i} has an empty dataset")));
            }
            let local = GenerativeModel::from_dataset(space, conditions, ds)?;
            learners.push(UavLearner {
                id: i,
                dataset_size: ds.size(),
                generator: local.clone(),
                discriminator: Discriminator::untrained(conditions, params.disc_error),
                mixture: local.clone(),
                local,
            });
        }
        Ok(Self { learners, iteration: 0, params, seed })
    }

    pub fn generators(&self) -> Vec<&GenerativeModel> {
        self.learners.iter().map(|l| &l.generator).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPart {
    /// 1-based condition index.
    pub cond: usize,
    pub samples: u64,
    /// Unnormalized cell masses summing to `samples`.
    pub mass: CondTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub from: usize,
    pub to: usize,
    pub parts: Vec<BatchPart>,
}

impl SampleBatch {
    pub fn sample_count(&self) -> u64 {
        self.parts.iter().map(|p| p.samples).sum()
    }
}

/// Splits `total` in proportion to `weights` by largest remainder; ties go
/// to the lower index.
pub fn allocate_counts(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u64 = weights.iter().sum();
    if sum == 0 {
        return alloc::vec![0; weights.len()];
    }
    let mut out: Vec<u64> = weights.iter().map(|&w| ((total as u128 * w as u128) / sum as u128) as u64).collect();
    let mut rest: Vec<(u128, usize)> =
        weights.iter().enumerate().map(|(i, &w)| ((total as u128 * w as u128) % sum as u128, i)).collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - out.iter().sum::<u64>();
    for &(_, i) in rest.iter().take(short as usize) {
        out[i] += 1;
    }
    out
}

/// The round's condition draws, shared by every UAV so that a condition is
/// either exchanged on every edge or on none. Exchanging it on only some edges
/// would bias the network-wide average the mixtures converge to.
fn draw_conditions(conditions: usize, minibatch: usize, rng: &mut SimRng) -> Vec<usize> {
    if conditions == 0 {
        return Vec::new();
    }
    (0..minibatch).map(|_| rng.random_range(0..conditions)).collect()
}

/// Per-condition sample counts for a batch of `n` generated samples,
/// proportional to the draws that land on conditions the generator covers.
fn stratify(generator: &GenerativeModel, n: u64, draws: &[usize]) -> Vec<(usize, u64)> {
    let mut hits = alloc::vec![0u64; generator.conditions()];
    for &c in draws {
        if !generator.tables[c].is_empty() {
            hits[c] += 1;
        }
    }
    if n == 0 {
        return Vec::new();
    }
    allocate_counts(n, &hits).into_iter().enumerate().filter(|&(_, c)| c > 0).map(|(c, n)| (c + 1, n)).collect()
}

fn emit(generator: &GenerativeModel, alloc_: &[(usize, u64)], eps: f64, rng: &mut SimRng) -> Vec<BatchPart> {
    alloc_
        .iter()
        .map(|&(cond, n)| {
            let table = &generator.tables[cond - 1];
            let corrupted = (0..n).filter(|_| rng.random::<f64>() < eps).count() as u64;
            let clean = (n - corrupted) as f64;
            let mut mass: CondTable = table.iter().map(|(c, w)| (*c, w * clean)).filter(|e| e.1 > 0.0).collect();
            // a missed sample lands on a uniformly chosen occupied bin, ignoring the learned weights
            let cells: Vec<_> = table.keys().collect();
            for _ in 0..corrupted {
                *mass.entry(*cells[rng.random_range(0..cells.len())]).or_insert(0.0) += 1.0;
            }
            BatchPart { cond, samples: n, mass }
        })
        .collect()
}

fn check_graph(state: &LearningState, graph: &UavGraph) -> Result<()> {
    let n = state.learners.len();
    if graph.nodes.len() != n || (n > 1 && graph.edges.is_empty()) {
        return Err(Error::Protocol(alloc::format!(
            "graph with {} nodes and {} edges is not a formed network for {n} UAVs",
            graph.nodes.len(),
            graph.edges.len()
        )));
    }
    if graph.edges.keys().any(|&(a, b)| a >= n || b >= n || a == b) {
        return Err(Error::Protocol("graph edge references an unknown UAV".into()));
    }
    Ok(())
}

/// One synchronous round. Every UAV emits round(eta * S_j) generated samples
/// to each out-neighbor from its pre-round generator, then every UAV forms
/// its mixture, fits the discriminator against its old generator and moves
/// the generator to the mixture. Returns the exchanged batches.
pub fn train_iteration(state: &mut LearningState, graph: &UavGraph) -> Result<Vec<SampleBatch>> {
    check_graph(state, graph)?;
    let p = state.params;
    let round = state.iteration;
    let mut batches = Vec::new();
    let conditions = state.learners.first().map_or(0, |l| l.generator.conditions());
    let draws = draw_conditions(conditions, p.minibatch, &mut rng_for(state.seed, ROUND_STREAM ^ (round << 16), u64::MAX));
    for l in &state.learners {
        let mut rng = rng_for(state.seed, ROUND_STREAM ^ (round << 16), l.id as u64);
        let n = (p.share_ratio * l.dataset_size as f64).round() as u64;
        let plan = stratify(&l.generator, n, &draws);
        for to in graph.out_neighbors(l.id) {
            batches.push(SampleBatch { from: l.id, to, parts: emit(&l.generator, &plan, p.disc_error, &mut rng) });
        }
    }

    let mut inbox: BTreeMap<usize, Vec<&SampleBatch>> = BTreeMap::new();
    for b in &batches {
        inbox.entry(b.to).or_default().push(b);
    }
    let sizes: Vec<usize> = state.learners.iter().map(|l| l.dataset_size).collect();
    let mut updates = Vec::with_capacity(state.learners.len());
    for l in &state.learners {
        let incoming = inbox.get(&l.id).map(Vec::as_slice).unwrap_or(&[]);
        let w = mixture_weights(l.dataset_size, &incoming.iter().map(|b| sizes[b.from]).collect::<Vec<_>>(), p.share_ratio)?;
        let mut mixture = GenerativeModel::empty(l.local.space, l.local.conditions());
        for (k, slot) in mixture.tables.iter_mut().enumerate() {
            let shares: Vec<CondTable> = incoming
                .iter()
                .map(|b| {
                    let mut t = b.parts.iter().find(|q| q.cond == k + 1).map(|q| q.mass.clone()).unwrap_or_default();
                    normalize(&mut t);
                    t
                })
                .collect();
            let mut parts = alloc::vec![(&l.generator.tables[k], w.own)];
            parts.extend(shares.iter().zip(&w.neighbors).map(|(t, &pi)| (t, pi)));
            *slot = mix_tables(&parts);
        }
        let disc = Discriminator::density_ratio(&mixture, &l.generator, p.disc_error)?;
        updates.push((disc, mixture));
    }
    for (l, (disc, mixture)) in state.learners.iter_mut().zip(updates) {
        l.discriminator = disc;
        l.generator = mixture.clone();
        l.mixture = mixture;
    }
    state.iteration += 1;
    Ok(batches)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: u64,
    pub uav_id: usize,
    pub jsd_to_global: f64,
    pub discriminator_mean: f64,
    pub value_function: f64,
    pub support_fraction: f64,
}

/// Mass-weighted mean of D under f^b, averaged over non-empty conditions,
/// plus the largest |D - 1/2| over the joint support.
fn discriminator_stats(l: &UavLearner) -> (f64, f64) {
    let mut mean = 0.0;
    let mut n = 0;
    let mut dev: f64 = 0.0;
    for (k, fb) in l.mixture.tables.iter().enumerate() {
        if fb.is_empty() {
            continue;
        }
        mean += fb.iter().map(|(c, w)| w * l.discriminator.output(k + 1, c)).sum::<f64>();
        n += 1;
        for c in fb.keys().chain(l.generator.tables[k].keys()) {
            dev = dev.max((l.discriminator.output(k + 1, c) - 0.5).abs());
        }
    }
    (if n == 0 { 0.5 } else { mean / n as f64 }, dev)
}

fn support_fraction(g: &GenerativeModel, global: &GenerativeModel) -> f64 {
    let total: usize = global.support_size();
    if total == 0 {
        return 1.0;
    }
    let hit: usize = g.tables.iter().zip(&global.tables).map(|(a, f)| f.keys().filter(|c| a.contains_key(*c)).count()).sum();
    hit as f64 / total as f64
}

fn value_of(l: &UavLearner, floor: f64) -> Result<f64> {
    value_function(&l.discriminator, &l.generator, &l.mixture, floor)
}

pub fn iteration_metrics(state: &LearningState, global: &GenerativeModel) -> Result<Vec<IterationMetrics>> {
    let floor = state.params.log_floor;
    state
        .learners
        .iter()
        .map(|l| {
            Ok(IterationMetrics {
                iteration: state.iteration,
                uav_id: l.id,
                jsd_to_global: jsd_metric(&[&l.generator], global, floor)?,
                discriminator_mean: discriminator_stats(l).0,
                value_function: value_of(l, floor)?,
                support_fraction: support_fraction(&l.generator, global),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound on the condition-averaged symmetric KL between f^G_i and f^b_i.
    pub generator: f64,
    pub discriminator: f64,
    /// Bound on the per-UAV accuracy metric against the global distribution.
    pub network: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { generator: 1e-6, discriminator: 0.05, network: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavEquilibrium {
    pub uav_id: usize,
    pub generator_vs_mixture: f64,
    pub discriminator_mean: f64,
    pub discriminator_max_deviation: f64,
    pub value_function: f64,
    pub jsd_to_global: f64,
    pub generator_optimal: bool,
    pub discriminator_half: bool,
    pub network_equilibrium: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub per_uav: Vec<UavEquilibrium>,
    pub holds: bool,
}

pub fn equilibrium_check(state: &LearningState, global: &GenerativeModel, tol: &Tolerances) -> Result<EquilibriumReport> {
    let floor = state.params.log_floor;
    let mut per_uav = Vec::new();
    for l in &state.learners {
        let mut gap = 0.0;
        let mut n = 0;
        for (g, b) in l.generator.tables.iter().zip(&l.mixture.tables) {
            if g.is_empty() && b.is_empty() {
                continue;
            }
            gap += symmetric_kl(g, b, floor);
            n += 1;
        }
        let gap = if n == 0 { 0.0 } else { gap / n as f64 };
        let (mean, dev) = discriminator_stats(l);
        let jsd = jsd_metric(&[&l.generator], global, floor)?;
        per_uav.push(UavEquilibrium {
            uav_id: l.id,
            generator_vs_mixture: gap,
            discriminator_mean: mean,
            discriminator_max_deviation: dev,
            value_function: value_of(l, floor)?,
            jsd_to_global: jsd,
            generator_optimal: gap <= tol.generator,
            discriminator_half: dev <= tol.discriminator,
            network_equilibrium: jsd < tol.network,
        });
    }
    let holds = per_uav.iter().all(|u| u.generator_optimal && u.discriminator_half && u.network_equilibrium);
    Ok(EquilibriumReport { per_uav, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSample;
    use crate::learning::AxisBins;
    use crate::topology::{LinkBudget, UavNode};
    use crate::Complex64;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn space() -> SampleSpace {
        let mut axes = [AxisBins::new(0.0, 400.0, 16); 9];
        axes[2] = AxisBins::new(0.0, 200.0, 16);
        axes[5] = AxisBins::new(0.0, 10.0, 16);
        axes[6] = AxisBins::new(0.0, 1.0, 8);
        axes[7] = AxisBins::new(-1.0, 1.0, 16);
        axes[8] = AxisBins::new(-1.0, 1.0, 16);
        SampleSpace { axes }
    }

    /// UAV i owns region [100 i, 100 i + 100) along x.
    fn regional(owner: usize, size: usize, conditions: usize, seed: u64) -> Dataset {
        let mut rng = rng_for(seed, 7, owner as u64);
        let samples = (0..size)
            .map(|_| {
                let x = 100.0 * owner as f64 + rng.random::<f64>() * 100.0;
                ChannelSample {
                    uav_pos: [100.0 * owner as f64 + 50.0, 50.0, 100.0],
                    ue_pos: [x, rng.random::<f64>() * 100.0, 1.5],
                    time: rng.random::<f64>(),
                    gain_est: Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                    cond: rng.random_range(1..=conditions),
                }
            })
            .collect();
        Dataset { owner, samples }
    }

    fn ring(n: usize) -> UavGraph {
        let nodes = (0..n)
            .map(|i| UavNode { id: i, position: [0.0; 3], dataset_size: 1, max_power_w: 1.0, out_budget: 1 })
            .collect();
        let edge = |i: usize| LinkBudget { src: i, dst: (i + 1) % n, path_gain: 1.0, tx_power_w: 1.0, bandwidth_hz: 1.0, noise_w: 1.0, rate_bps: 1.0, snr: 100.0 };
        UavGraph { nodes, edges: (0..n).map(|i| ((i, (i + 1) % n), edge(i))).collect() }
    }

    fn setup(n: usize, eta: f64, eps: f64) -> (LearningState, GenerativeModel, UavGraph) {
        let k = 9;
        let data: Vec<Dataset> = (0..n).map(|i| regional(i, 400, k, 3)).collect();
        let params = LearningParams { share_ratio: eta, disc_error: eps, minibatch: 128, log_floor: 1e-9 };
        let state = LearningState::new(space(), k, &data, params, 11).unwrap();
        let global = GenerativeModel::from_datasets(space(), k, &data).unwrap();
        (state, global, ring(n))
    }

    #[test]
    fn allocation_is_exact_and_proportional() {
        assert_eq!(allocate_counts(10, &[1, 1, 1]), vec![4, 3, 3]);
        assert_eq!(allocate_counts(500, &[0, 0]), vec![0, 0]);
        assert_eq!(allocate_counts(7, &[2, 0, 5]), vec![2, 0, 5]);
    }

    #[test]
    fn converges_to_global_without_error() {
        let (mut s, global, g) = setup(4, 0.5, 0.0);
        let before = equilibrium_check(&s, &global, &Tolerances::default()).unwrap();
        assert!(before.per_uav.iter().all(|u| !u.network_equilibrium));
        for _ in 0..150 {
            train_iteration(&mut s, &g).unwrap();
        }
        let rep = equilibrium_check(&s, &global, &Tolerances::default()).unwrap();
        for u in &rep.per_uav {
            assert!(u.jsd_to_global < 0.05, "{u:?}");
            assert!(u.discriminator_max_deviation < 0.05, "{u:?}");
            assert!((u.value_function + 2.0 * 2f64.ln()).abs() < 0.02, "{u:?}");
        }
        assert!(rep.holds);
        let standalone = jsd_metric(&s.learners.iter().map(|l| &l.local).collect::<Vec<_>>(), &global, 1e-9).unwrap();
        let distributed = jsd_metric(&s.generators(), &global, 1e-9).unwrap();
        assert!(standalone > 5.0 * distributed, "{standalone} vs {distributed}");
    }

    #[test]
    fn mass_accounting_and_conservation() {
        let (mut s, _, g) = setup(4, 0.37, 0.2);
        for _ in 0..5 {
            let batches = train_iteration(&mut s, &g).unwrap();
            assert_eq!(batches.len(), 4);
            for b in &batches {
                assert_eq!(b.sample_count(), (0.37f64 * 400.0).round() as u64);
                for p in &b.parts {
                    assert!((p.mass.values().sum::<f64>() - p.samples as f64).abs() < 1e-9);
                }
            }
            for l in &s.learners {
                assert!(l.generator.is_normalized(1e-12));
                assert!(l.discriminator.tables.iter().flat_map(|t| t.values()).all(|&d| (0.0..=1.0).contains(&d)));
            }
        }
    }

    #[test]
    fn no_sharing_keeps_local_models() {
        let (mut s, _, g) = setup(4, 0.0, 0.1);
        for _ in 0..5 {
            train_iteration(&mut s, &g).unwrap();
        }
        for l in &s.learners {
            assert_eq!(l.generator, l.local);
        }
    }

    #[test]
    fn fixed_point_when_already_global() {
        let (mut s, global, g) = setup(4, 0.5, 0.0);
        for l in &mut s.learners {
            l.generator = global.clone();
        }
        train_iteration(&mut s, &g).unwrap();
        for l in &s.learners {
            for (a, b) in l.generator.tables.iter().zip(&global.tables) {
                assert_eq!(a.len(), b.len());
                for (c, v) in b {
                    assert!((a[c] - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_neighbor_support_gain() {
        let (mut s, _, _) = setup(2, 0.5, 0.0);
        let mut g = ring(2);
        g.edges.remove(&(1, 0));
        let before: Vec<usize> = s.learners.iter().map(|l| l.generator.support_size()).collect();
        let old = s.learners[1].generator.clone();
        let batches = train_iteration(&mut s, &g).unwrap();
        assert_eq!(batches.len(), 1);
        let mut expect = old.clone();
        for p in &batches[0].parts {
            for c in p.mass.keys() {
                expect.tables[p.cond - 1].insert(*c, 0.0);
            }
        }
        let got = &s.learners[1].generator;
        for (a, b) in got.tables.iter().zip(&expect.tables) {
            assert!(a.keys().eq(b.keys()));
        }
        assert_eq!(s.learners[0].generator.support_size(), before[0]);
        assert!(got.support_size() > before[1]);
    }

    #[test]
    fn single_uav_is_standalone_equilibrium() {
        let (mut s, _, _) = setup(1, 0.5, 0.0);
        let g = UavGraph { nodes: ring(1).nodes, edges: BTreeMap::new() };
        train_iteration(&mut s, &g).unwrap();
        let global = s.learners[0].local.clone();
        let rep = equilibrium_check(&s, &global, &Tolerances::default()).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert_eq!(s.learners[0].generator, global);
    }

    #[test]
    fn unformed_graph_rejected() {
        let (mut s, _, _) = setup(3, 0.5, 0.0);
        let g = UavGraph { nodes: ring(3).nodes, edges: BTreeMap::new() };
        assert!(matches!(train_iteration(&mut s, &g), Err(Error::Protocol(_))));
        assert!(matches!(train_iteration(&mut s, &ring(4)), Err(Error::Protocol(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn support_never_shrinks_without_error(eta in 0.05f64..1.0, seed in 0u64..1000) {
            let (mut s, _, g) = setup(3, eta, 0.0);
            s.seed = seed;
            let mut last: Vec<Vec<CondTable>> = s.learners.iter().map(|l| l.generator.tables.clone()).collect();
            for _ in 0..6 {
                train_iteration(&mut s, &g).unwrap();
                for (l, prev) in s.learners.iter().zip(&last) {
                    for (a, b) in l.generator.tables.iter().zip(prev) {
                        prop_assert!(b.keys().all(|c| a.contains_key(c)));
                    }
                    prop_assert!(l.generator.is_normalized(1e-12));
                }
                last = s.learners.iter().map(|l| l.generator.tables.clone()).collect();
            }
        }
    }
}
