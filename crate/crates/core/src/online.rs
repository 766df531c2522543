//! Online use of trained models: MAP beam selection and downlink rate.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{CollectionWindow, Codebook, EnvironmentModel};
use crate::error::{contract, Error, Result};
use crate::learning::{Cell, GenerativeModel};
use crate::rng::{rng_for, uniform};

const EVAL_STREAM: u64 = 0xE7A1;

/// Neighborhood half-widths in bins around the query cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub uav: u8,
    pub ue: u8,
    pub time: u8,
}

impl Default for Neighborhood {
    fn default() -> Self {
        Self { uav: 1, ue: 1, time: 8 }
    }
}

impl Neighborhood {
    fn contains(&self, q: &Cell, c: &Cell) -> bool {
        let near = |d: usize, r: u8| q[d].abs_diff(c[d]) <= r;
        (0..3).all(|d| near(d, self.uav)) && (3..6).all(|d| near(d, self.ue)) && near(6, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamChoice {
    /// 1-based codebook index.
    pub cond: usize,
    /// The neighborhood held no data and the global per-condition argmax was used.
    pub fallback: bool,
}

fn argmax(scores: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
    }
    best.map(|(k, _)| k + 1)
}

/// k* = argmax_k E[|alpha|^2 | neighborhood of (uav, ue, t), phi_k], lowest k on ties.
pub fn map_beam_select(model: &GenerativeModel, uav: &[f64; 3], ue: &[f64; 3], t: f64, radius: &Neighborhood) -> Result<BeamChoice> {
    let sp = &model.space;
    let v = [uav[0], uav[1], uav[2], ue[0], ue[1], ue[2], t];
    let mut q: Cell = [0; 9];
    for d in 0..7 {
        q[d] = sp.axes[d].index(v[d]);
    }
    let score = |local: bool| -> Vec<Option<f64>> {
        model
            .tables
            .iter()
            .map(|tab| {
                let (mut num, mut den) = (0.0, 0.0);
                for (c, w) in tab.iter().filter(|(c, _)| !local || radius.contains(&q, c)) {
                    num += w * sp.gain_power(c);
                    den += w;
                }
                (den > 0.0).then(|| num / den)
            })
            .collect()
    };
    if let Some(cond) = argmax(&score(true)) {
        return Ok(BeamChoice { cond, fallback: false });
    }
    argmax(&score(false)).map(|cond| BeamChoice { cond, fallback: true }).ok_or_else(|| contract("model has no data"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEvalConfig {
    pub draws: usize,
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub noise_w: f64,
    /// Combined transmit and receive array gain |q|^2 |w|^2 of a matched pair.
    pub array_gain: f64,
    pub neighborhood: Neighborhood,
}

impl RateEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 || !(self.bandwidth_hz > 0.0) || !(self.tx_power_w >= 0.0) || !(self.noise_w > 0.0) || !(self.array_gain > 0.0) {
            return Err(Error::Config("rate evaluation needs draws, bandwidth, noise and array gain > 0 and power >= 0".into()));
        }
        Ok(())
    }

    pub fn rate(&self, gain_power: f64) -> f64 {
        let snr = self.tx_power_w * gain_power * self.array_gain * self.array_gain / self.noise_w;
        self.bandwidth_hz * (1.0 + snr).log2()
    }
}

/// How the serving UAV picks its beam.
#[derive(Debug, Clone, Copy)]
pub enum BeamPolicy<'a> {
    /// Exhaustive search over the realized channel.
    PerfectCsi,
    /// MAP selection from the serving UAV's model.
    Models(&'a [GenerativeModel]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub mean_bps: f64,
    pub ci95_bps: f64,
    pub rates_bps: Vec<f64>,
    pub fallbacks: usize,
    /// Fraction of draws where the chosen beam is also the exhaustive-search beam.
    pub agreement: f64,
}

/// Each draw picks a service area uniformly, a serving UAV uniformly, then
/// positions, time and a path. Draw d uses the same random numbers under
/// every policy, so policies are compared on identical channels.
pub fn eval_downlink_rate(
    policy: BeamPolicy<'_>,
    env: &EnvironmentModel,
    codebook: &Codebook,
    areas: &[CollectionWindow],
    uavs: usize,
    cfg: &RateEvalConfig,
    seed: u64,
) -> Result<RateReport> {
    cfg.validate()?;
    env.validate()?;
    if areas.is_empty() || uavs == 0 || codebook.is_empty() {
        return Err(Error::Config("rate evaluation needs areas, UAVs and a codebook".into()));
    }
    if let BeamPolicy::Models(m) = policy {
        if m.len() != uavs || m.iter().any(|x| x.conditions() != codebook.len()) {
            return Err(contract("one model per UAV over the codebook's conditions is required"));
        }
    }
    let mut rates = Vec::with_capacity(cfg.draws);
    let mut fallbacks = 0;
    let mut agree = 0;
    for d in 0..cfg.draws {
        let mut rng = rng_for(seed, EVAL_STREAM, d as u64);
        let area = &areas[rng.random_range(0..areas.len())];
        let server = rng.random_range(0..uavs);
        let uav = area.uav_box.sample(&mut rng);
        let ue = area.ue_box.sample(&mut rng);
        let t = uniform(&mut rng, area.t_start, area.t_end);
        let path = env.draw_path(&uav, &ue, t, &mut rng).path;
        let powers: Vec<f64> = codebook.entries.iter().map(|p| env.beam_gain(&path, p).norm_sqr()).collect();
        let best = argmax(&powers.iter().map(|&p| Some(p)).collect::<Vec<_>>()).expect("codebook is non-empty");
        let k = match policy {
            BeamPolicy::PerfectCsi => best,
            BeamPolicy::Models(m) => {
                let c = map_beam_select(&m[server], &uav, &ue, t, &cfg.neighborhood)?;
                fallbacks += c.fallback as usize;
                c.cond
            }
        };
        agree += (powers[k - 1] >= powers[best - 1]) as usize;
        rates.push(cfg.rate(powers[k - 1]));
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = if rates.len() > 1 { rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(RateReport { mean_bps: mean, ci95_bps: 1.96 * (var / n).sqrt(), rates_bps: rates, fallbacks, agreement: agree as f64 / n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::env::tests::test_env;
    use crate::channel::{collect_dataset, Aabb, AntennaConfig};
    use crate::learning::{AxisBins, CondTable, SampleSpace};

    fn space() -> SampleSpace {
        let mut axes = [AxisBins::new(0.0, 400.0, 16); 9];
        axes[1] = AxisBins::new(0.0, 100.0, 16);
        axes[2] = AxisBins::new(0.0, 120.0, 16);
        axes[4] = AxisBins::new(0.0, 100.0, 16);
        axes[5] = AxisBins::new(0.0, 3.0, 16);
        axes[6] = AxisBins::new(0.0, 3600.0, 8);
        axes[7] = AxisBins::new(-2e-5, 2e-5, 16);
        axes[8] = AxisBins::new(-2e-5, 2e-5, 16);
        SampleSpace { axes }
    }

    fn area(x0: f64) -> CollectionWindow {
        CollectionWindow {
            uav_box: Aabb::new([x0 + 45.0, 45.0, 55.0], [x0 + 55.0, 55.0, 65.0]),
            ue_box: Aabb::new([x0, 0.0, 1.5], [x0 + 100.0, 100.0, 1.5]),
            t_start: 0.0,
            t_end: 3600.0,
        }
    }

    fn cfg() -> RateEvalConfig {
        RateEvalConfig { draws: 300, bandwidth_hz: 50e6, tx_power_w: 1e-5, noise_w: 2e-13, array_gain: 256.0 * 64.0, neighborhood: Neighborhood::default() }
    }

    #[test]
    fn uniform_model_picks_first_beam() {
        let mut m = GenerativeModel::empty(space(), 4);
        for t in &mut m.tables {
            *t = CondTable::from([([3u8; 9], 1.0)]);
        }
        let c = map_beam_select(&m, &[50.0; 3], &[50.0; 3], 0.0, &Neighborhood::default()).unwrap();
        assert_eq!(c.cond, 1);
        assert!(GenerativeModel::empty(space(), 4).tables.iter().all(|t| t.is_empty()));
        assert!(map_beam_select(&GenerativeModel::empty(space(), 4), &[0.0; 3], &[0.0; 3], 0.0, &Neighborhood::default()).is_err());
    }

    #[test]
    fn dominant_beam_selected_and_fallback_flagged() {
        let mut m = GenerativeModel::empty(space(), 3);
        let sp = space();
        let cell = |x: f64, g: f64| {
            let mut c: Cell = [0; 9];
            let v = [x, 50.0, 60.0, x, 50.0, 1.5, 100.0, g, 0.0];
            for d in 0..9 {
                c[d] = sp.axes[d].index(v[d]);
            }
            c
        };
        m.tables[0] = CondTable::from([(cell(50.0, 1e-6), 1.0)]);
        m.tables[1] = CondTable::from([(cell(50.0, 1.5e-5), 0.5), (cell(350.0, 1e-6), 0.5)]);
        m.tables[2] = CondTable::from([(cell(350.0, 1.8e-5), 1.0)]);
        let pick = |x: f64| map_beam_select(&m, &[x, 50.0, 60.0], &[x, 50.0, 1.5], 100.0, &Neighborhood::default()).unwrap();
        assert_eq!(pick(50.0), BeamChoice { cond: 2, fallback: false });
        assert_eq!(pick(350.0), BeamChoice { cond: 3, fallback: false });
        assert_eq!(pick(200.0), BeamChoice { cond: 3, fallback: true });
    }

    fn trained(cb: &Codebook, ant: &AntennaConfig) -> GenerativeModel {
        let env = test_env();
        let data: Vec<_> = (0..4).map(|i| collect_dataset(&env, cb, ant, &area(100.0 * i as f64), 3000, i, 5).unwrap()).collect();
        GenerativeModel::from_datasets(space(), cb.len(), &data).unwrap()
    }

    #[test]
    fn ground_truth_model_agrees_with_exhaustive_search() {
        let ant = AntennaConfig::new(256, 64, 30e9);
        let cb = Codebook::grid(&ant, 9, 9, 0.8).unwrap();
        let env = test_env();
        let areas: Vec<_> = (0..4).map(|i| area(100.0 * i as f64)).collect();
        let m = trained(&cb, &ant);
        let models = vec![m; 2];
        let model = eval_downlink_rate(BeamPolicy::Models(&models), &env, &cb, &areas, 2, &cfg(), 9).unwrap();
        let perfect = eval_downlink_rate(BeamPolicy::PerfectCsi, &env, &cb, &areas, 2, &cfg(), 9).unwrap();
        assert_eq!(perfect.agreement, 1.0);
        // far above the 1/81 of a blind pick
        assert!(model.agreement > 0.12, "{}", model.agreement);
        assert!(perfect.rates_bps.iter().zip(&model.rates_bps).all(|(p, m)| p >= m));
        assert!(perfect.mean_bps > model.mean_bps);
        let silent = RateEvalConfig { tx_power_w: 0.0, ..cfg() };
        let r = eval_downlink_rate(BeamPolicy::PerfectCsi, &env, &cb, &areas, 2, &silent, 9).unwrap();
        assert_eq!(r.mean_bps, 0.0);
    }
}
