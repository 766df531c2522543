//! Turns a configuration into the concrete environment, UAV placement and
//! model spaces every experiment shares.

use aerogan_core::channel::{collect_dataset, Aabb, AntennaConfig, BeamPattern, Codebook, CollectionWindow, Dataset, EnvironmentModel, RegionProfile};
use aerogan_core::completion::CompletionParams;
use aerogan_core::learning::{AxisBins, LearningParams, SampleSpace};
use aerogan_core::online::RateEvalConfig;
use aerogan_core::rng::derive_seed;
use aerogan_core::topology::{completion_path_lengths, A2aRadio, ConstraintParams, UavGraph, UavNode};
use rayon::prelude::*;

use crate::config::{dbm_to_w, ExperimentConfig};
use crate::AppError;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub env: EnvironmentModel,
    pub antenna: AntennaConfig,
    pub codebook: Codebook,
    pub space: SampleSpace,
    /// Service area of each UAV: an equal strip of the area along x.
    pub windows: Vec<CollectionWindow>,
    pub nodes: Vec<UavNode>,
    pub radio: A2aRadio,
    pub constraints: ConstraintParams,
}

/// O_i = floor(B / I), with the remainder going to the lowest ids.
pub fn out_budgets(uavs: usize, budget: usize) -> Vec<usize> {
    (0..uavs).map(|i| budget / uavs + usize::from(i < budget % uavs)).collect()
}

impl Scenario {
    pub fn new(config: &ExperimentConfig) -> Result<Self, AppError> {
        config.validate()?;
        let c = config;
        let e = &c.environment;
        let n = &c.network;
        let strip = e.width_m / e.regions.len() as f64;
        let regions = e
            .regions
            .iter()
            .enumerate()
            .map(|(i, r)| RegionProfile {
                footprint: Aabb::new([strip * i as f64, 0.0, 0.0], [strip * (i + 1) as f64, e.depth_m, e.ue_height_m]),
                los_a: r.los_a,
                los_b: r.los_b,
                nlos_excess_db: r.nlos_excess_db,
                outage_prob: r.outage_prob,
            })
            .collect();
        let env = EnvironmentModel {
            bounds: Aabb::new([0.0; 3], [e.width_m, e.depth_m, e.ceiling_m]),
            carrier_hz: c.antenna.carrier_hz,
            pilot_power_w: dbm_to_w(e.pilot_power_dbm),
            pilot_noise_var_w: dbm_to_w(n.noise_psd_dbm_hz) * n.a2a_bandwidth_hz,
            regions,
            los_shadow_db: e.los_shadow_db,
            nlos_shadow_db: e.nlos_shadow_db,
            nlos_spread: e.nlos_spread,
            beam: BeamPattern { halfwidth: e.beam_halfwidth, floor_db: e.beam_floor_db },
            blockage_depth: e.blockage_depth,
            blockage_period_s: e.blockage_period_s,
        };
        env.validate()?;
        let antenna = AntennaConfig::new(c.antenna.tx_elements, c.antenna.rx_elements, c.antenna.carrier_hz);
        antenna.validate()?;
        let codebook = Codebook::grid(&antenna, c.antenna.codebook_aod, c.antenna.codebook_aoa, c.antenna.codebook_max_sin)?;

        let b = &c.learning.bins;
        let spatial = |hi: f64| AxisBins::new(0.0, hi, b.spatial);
        let gain = AxisBins::new(-b.gain_range, b.gain_range, b.gain);
        let space = SampleSpace {
            axes: [
                spatial(e.width_m),
                spatial(e.depth_m),
                spatial(e.ceiling_m),
                spatial(e.width_m),
                spatial(e.depth_m),
                spatial(e.ceiling_m),
                AxisBins::new(0.0, c.dataset.time_span_s, b.time),
                gain,
                gain,
            ],
        };
        space.validate()?;

        let uav_strip = e.width_m / n.uavs as f64;
        let h = c.dataset.hover_half_extent_m;
        let (alt, mid_y) = (n.hover_altitude_m, e.depth_m / 2.0);
        let windows: Vec<CollectionWindow> = (0..n.uavs)
            .map(|i| {
                let cx = uav_strip * (i as f64 + 0.5);
                CollectionWindow {
                    uav_box: Aabb::new([cx - h, mid_y - h, alt - h], [cx + h, mid_y + h, alt + h]),
                    ue_box: Aabb::new([uav_strip * i as f64, 0.0, e.ue_height_m], [uav_strip * (i + 1) as f64, e.depth_m, e.ue_height_m]),
                    t_start: 0.0,
                    t_end: c.dataset.time_span_s,
                }
            })
            .collect();
        let budgets = out_budgets(n.uavs, n.rb_budget);
        let nodes = windows
            .iter()
            .enumerate()
            .map(|(i, w)| UavNode {
                id: i,
                position: w.uav_box.center(),
                dataset_size: n.dataset_size,
                max_power_w: dbm_to_w(n.max_power_dbm),
                out_budget: budgets[i],
            })
            .collect();
        let radio = A2aRadio { carrier_hz: n.a2a_carrier_hz, bandwidth_hz: n.a2a_bandwidth_hz, noise_w: dbm_to_w(n.noise_psd_dbm_hz) * n.a2a_bandwidth_hz };
        let constraints = ConstraintParams {
            snr_threshold: 10f64.powf(n.snr_threshold_db / 10.0),
            tx_time_limit_s: n.tx_time_limit_s,
            sample_scalars: n.sample_scalars,
            bits_per_scalar: n.bits_per_scalar,
            share_ratio: n.share_ratio,
            rb_budget: n.rb_budget,
        };
        Ok(Self { config: c.clone(), env, antenna, codebook, space, windows, nodes, radio, constraints })
    }

    pub fn conditions(&self) -> usize {
        self.codebook.len()
    }

    /// One dataset per UAV from its own service area, collected in parallel.
    pub fn datasets(&self, seed: u64) -> Result<Vec<Dataset>, AppError> {
        let s = derive_seed(seed, 0xDA7A5E7, 0);
        self.windows
            .par_iter()
            .enumerate()
            .map(|(i, w)| collect_dataset(&self.env, &self.codebook, &self.antenna, w, self.config.network.dataset_size, i, s).map_err(AppError::from))
            .collect()
    }

    pub fn learning_params(&self) -> LearningParams {
        LearningParams {
            share_ratio: self.config.network.share_ratio,
            disc_error: self.config.network.disc_error,
            minibatch: self.config.learning.minibatch,
            log_floor: self.config.learning.log_floor,
        }
    }

    /// Completion-model inputs measured on `graph`: N is the largest in-degree.
    pub fn completion_params(&self, graph: &UavGraph) -> Result<CompletionParams, AppError> {
        let adj = graph.adjacency();
        let (l_max, l_loop) = completion_path_lengths(&adj)?;
        let n = &self.config.network;
        Ok(CompletionParams {
            share_ratio: n.share_ratio,
            disc_error: n.disc_error,
            in_degree: graph.max_in_degree() as u32,
            l_max: l_max as u32,
            l_loop_min: l_loop as u32,
            p_tau: n.p_tau,
            tx_time_s: n.tx_time_limit_s,
            train_time_s: n.train_time_s,
            sample_scalars: n.sample_scalars,
            bits_per_scalar: n.bits_per_scalar,
            dataset_size: n.dataset_size as u32,
            rb_budget: n.rb_budget as u32,
            gamma: self.config.completion.gamma,
            t_cap: self.config.completion.t_cap,
        })
    }

    /// Downlink reuses the pilot power; noise is the thermal floor over the
    /// downlink band plus the configured noise figure.
    pub fn rate_config(&self) -> RateEvalConfig {
        let v = &self.config.evaluation;
        RateEvalConfig {
            draws: v.draws,
            bandwidth_hz: v.bandwidth_hz,
            tx_power_w: self.env.pilot_power_w,
            noise_w: dbm_to_w(self.config.network.noise_psd_dbm_hz + v.noise_figure_db) * v.bandwidth_hz,
            array_gain: (self.antenna.tx_elements * self.antenna.rx_elements) as f64,
            neighborhood: v.neighborhood,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_split_with_remainder_low() {
        assert_eq!(out_budgets(4, 4), vec![1, 1, 1, 1]);
        assert_eq!(out_budgets(4, 6), vec![2, 2, 1, 1]);
        assert_eq!(out_budgets(4, 12), vec![3, 3, 3, 3]);
    }

    #[test]
    fn default_scenario_layout() {
        let s = Scenario::new(&ExperimentConfig::default()).unwrap();
        assert_eq!(s.conditions(), 81);
        assert_eq!(s.windows.len(), 4);
        assert_eq!(s.nodes[2].position, [250.0, 50.0, 60.0]);
        assert!(s.windows.iter().all(|w| s.env.bounds.contains_box(&w.uav_box) && s.env.bounds.contains_box(&w.ue_box)));
        let d = s.datasets(3).unwrap();
        assert!(d.iter().all(|x| x.size() == 1000));
        assert_eq!(d, s.datasets(3).unwrap());
    }
}
