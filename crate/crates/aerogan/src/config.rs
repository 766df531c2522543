//! Experiment configuration: a TOML file whose every field has a default.

use std::path::Path;

use aerogan_core::completion::GammaSchedule;
use aerogan_core::online::Neighborhood;
use serde::{Deserialize, Serialize};

use crate::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub network: NetworkConfig,
    pub antenna: AntennaSection,
    pub environment: EnvironmentSection,
    pub dataset: DatasetSection,
    pub learning: LearningSection,
    pub completion: CompletionSection,
    pub evaluation: EvaluationSection,
    pub sweep: SweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            network: NetworkConfig::default(),
            antenna: AntennaSection::default(),
            environment: EnvironmentSection::default(),
            dataset: DatasetSection::default(),
            learning: LearningSection::default(),
            completion: CompletionSection::default(),
            evaluation: EvaluationSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub uavs: usize,
    /// B, resource blocks shared by all UAV-to-UAV links.
    pub rb_budget: usize,
    /// S_i, samples collected by each UAV.
    pub dataset_size: usize,
    /// eta.
    pub share_ratio: f64,
    /// epsilon, discriminator training error.
    pub disc_error: f64,
    pub p_tau: f64,
    /// tau.
    pub snr_threshold_db: f64,
    /// t_tau.
    pub tx_time_limit_s: f64,
    /// t_epsilon, per-iteration training time.
    pub train_time_s: f64,
    /// rho.
    pub sample_scalars: u32,
    pub bits_per_scalar: u32,
    pub max_power_dbm: f64,
    pub a2a_carrier_hz: f64,
    /// w_b.
    pub a2a_bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub hover_altitude_m: f64,
    /// Generator plus discriminator size, used for the parameter-averaging baseline load.
    pub model_param_count: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            uavs: 4,
            rb_budget: 4,
            dataset_size: 1000,
            share_ratio: 0.5,
            disc_error: 0.1,
            p_tau: 0.99,
            snr_threshold_db: 10.0,
            tx_time_limit_s: 0.01,
            train_time_s: 0.1,
            sample_scalars: 11,
            bits_per_scalar: 32,
            max_power_dbm: 40.0,
            a2a_carrier_hz: 30e9,
            a2a_bandwidth_hz: 2e6,
            noise_psd_dbm_hz: -174.0,
            hover_altitude_m: 60.0,
            model_param_count: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSection {
    /// M.
    pub tx_elements: usize,
    /// N.
    pub rx_elements: usize,
    pub carrier_hz: f64,
    pub codebook_aod: usize,
    pub codebook_aoa: usize,
    /// Codebook directions span [-max_sin, max_sin] in direction cosine.
    pub codebook_max_sin: f64,
}

impl Default for AntennaSection {
    fn default() -> Self {
        Self { tx_elements: 256, rx_elements: 64, carrier_hz: 30e9, codebook_aod: 9, codebook_aoa: 9, codebook_max_sin: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub name: String,
    pub los_a: f64,
    pub los_b: f64,
    pub nlos_excess_db: f64,
    pub outage_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    pub width_m: f64,
    pub depth_m: f64,
    pub ceiling_m: f64,
    pub ue_height_m: f64,
    pub pilot_power_dbm: f64,
    pub los_shadow_db: f64,
    pub nlos_shadow_db: f64,
    /// Direction-cosine spread of non-line-of-sight paths.
    pub nlos_spread: f64,
    pub beam_halfwidth: f64,
    pub beam_floor_db: f64,
    pub blockage_depth: f64,
    pub blockage_period_s: f64,
    /// Propagation areas laid out as equal strips along x.
    pub regions: Vec<RegionSection>,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        let r = |name: &str, los_a, los_b, nlos_excess_db| RegionSection { name: name.into(), los_a, los_b, nlos_excess_db, outage_prob: 0.02 };
        Self {
            width_m: 400.0,
            depth_m: 100.0,
            ceiling_m: 150.0,
            ue_height_m: 1.5,
            pilot_power_dbm: -20.0,
            los_shadow_db: 2.0,
            nlos_shadow_db: 6.0,
            nlos_spread: 0.15,
            beam_halfwidth: 0.2,
            beam_floor_db: -25.0,
            blockage_depth: 0.3,
            blockage_period_s: 3600.0,
            regions: vec![
                r("suburban", 4.88, 0.43, 21.0),
                r("urban", 9.61, 0.16, 20.0),
                r("dense_urban", 12.08, 0.11, 23.0),
                r("highrise_urban", 27.23, 0.08, 34.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Half-size of each UAV's cubic hover box.
    pub hover_half_extent_m: f64,
    pub time_span_s: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self { hover_half_extent_m: 5.0, time_span_s: 3600.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinsSection {
    pub spatial: u16,
    pub time: u16,
    pub gain: u16,
    /// Gain components are binned over [-gain_range, gain_range].
    pub gain_range: f64,
}

impl Default for BinsSection {
    fn default() -> Self {
        Self { spatial: 16, time: 8, gain: 16, gain_range: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSection {
    /// u.
    pub minibatch: usize,
    pub log_floor: f64,
    /// Rounds to train; T_G from the formed network when absent.
    pub iterations: Option<u32>,
    /// Upper bound on the T_G default above.
    pub max_iterations: u32,
    pub bins: BinsSection,
}

impl Default for LearningSection {
    fn default() -> Self {
        Self { minibatch: 128, log_floor: 1e-9, iterations: None, max_iterations: 2000, bins: BinsSection::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionSection {
    pub gamma: GammaSchedule,
    pub t_cap: u32,
    pub mc_trials: u64,
    /// Monte Carlo curves stop here even when T_G is larger.
    pub mc_t_max: u32,
    /// Last T on emitted curves; T_G when absent.
    pub t_max: Option<u32>,
}

impl Default for CompletionSection {
    fn default() -> Self {
        Self { gamma: GammaSchedule::default(), t_cap: 1_000_000, mc_trials: 100_000, mc_t_max: 1000, t_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub draws: usize,
    pub bandwidth_hz: f64,
    /// Receiver noise figure on top of the thermal floor over the downlink band.
    pub noise_figure_db: f64,
    pub neighborhood: Neighborhood,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self { draws: 1000, bandwidth_hz: 50e6, noise_figure_db: 20.0, neighborhood: Neighborhood::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "B")]
    Budget,
    #[serde(rename = "I")]
    Uavs,
    #[serde(rename = "eta")]
    ShareRatio,
    #[serde(rename = "eps")]
    DiscError,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Budget => "B",
            SweepAxis::Uavs => "I",
            SweepAxis::ShareRatio => "eta",
            SweepAxis::DiscError => "eps",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [SweepAxis::Budget, SweepAxis::Uavs, SweepAxis::ShareRatio, SweepAxis::DiscError].into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub budget_values: Vec<usize>,
    pub uav_values: Vec<usize>,
    pub share_values: Vec<f64>,
    pub error_values: Vec<f64>,
    /// Independent replications of the stochastic parts at every point.
    pub replications: usize,
    /// Also train and evaluate rates at each point.
    pub learning: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Budget,
            budget_values: vec![4, 8, 12],
            uav_values: vec![4, 8],
            share_values: vec![0.25, 0.5, 0.75],
            error_values: vec![0.01, 0.1, 0.2],
            replications: 1,
            learning: true,
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), AppError> {
    if ok { Ok(()) } else { Err(AppError::Config(msg.into())) }
}

impl ExperimentConfig {
    /// `defaults` selects the built-in configuration.
    pub fn load(arg: &str) -> Result<Self, AppError> {
        let cfg = if arg == "defaults" {
            Self::default()
        } else {
            let text = std::fs::read_to_string(Path::new(arg)).map_err(|e| AppError::Config(format!("cannot read {arg}: {e}")))?;
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let n = &self.network;
        check(n.uavs >= 1, "network.uavs must be at least 1")?;
        check(n.rb_budget >= 1, "network.rb_budget must be at least 1")?;
        check(n.dataset_size >= 1, "network.dataset_size must be at least 1")?;
        check(n.share_ratio > 0.0 && n.share_ratio <= 1.0, "network.share_ratio must lie in (0, 1]")?;
        check((0.0..1.0).contains(&n.disc_error), "network.disc_error must lie in [0, 1)")?;
        check(n.p_tau > 0.0 && n.p_tau < 1.0, "network.p_tau must lie in (0, 1)")?;
        check(n.snr_threshold_db.is_finite(), "network.snr_threshold_db must be finite")?;
        check(n.tx_time_limit_s > 0.0 && n.train_time_s >= 0.0, "network times must be positive")?;
        check(n.sample_scalars >= 1 && n.bits_per_scalar >= 1, "network sample size must be positive")?;
        check(n.max_power_dbm.is_finite() && n.noise_psd_dbm_hz.is_finite(), "network powers must be finite")?;
        check(n.a2a_carrier_hz > 0.0 && n.a2a_bandwidth_hz > 0.0, "network radio must have positive carrier and bandwidth")?;
        check(n.model_param_count >= 1, "network.model_param_count must be at least 1")?;

        let a = &self.antenna;
        check(a.tx_elements >= 1 && a.rx_elements >= 1 && a.carrier_hz > 0.0, "antenna arrays and carrier must be positive")?;
        check(a.codebook_aod >= 1 && a.codebook_aoa >= 1, "antenna codebook needs at least one direction per axis")?;
        check(a.codebook_max_sin > 0.0 && a.codebook_max_sin < 1.0, "antenna.codebook_max_sin must lie in (0, 1)")?;

        let e = &self.environment;
        check(e.width_m > 0.0 && e.depth_m > 0.0, "environment area must be positive")?;
        check(e.ue_height_m >= 0.0 && e.ue_height_m < n.hover_altitude_m, "UEs must sit below the hover altitude")?;
        check(n.hover_altitude_m + self.dataset.hover_half_extent_m <= e.ceiling_m, "hover boxes must fit under the ceiling")?;
        check(!e.regions.is_empty(), "environment needs at least one region")?;
        check(e.beam_halfwidth > 0.0 && e.beam_floor_db <= 0.0, "beam pattern out of range")?;
        check((0.0..=1.0).contains(&e.blockage_depth) && e.blockage_period_s > 0.0, "blockage parameters out of range")?;
        for r in &e.regions {
            check(r.los_a > 0.0 && r.los_b > 0.0, "region LoS parameters must be positive")?;
            check((0.0..1.0).contains(&r.outage_prob), "region outage probability must lie in [0, 1)")?;
        }

        let d = &self.dataset;
        check(d.hover_half_extent_m >= 0.0 && d.time_span_s > 0.0, "dataset window out of range")?;
        check(self.learning.minibatch >= 1, "learning.minibatch must be at least 1")?;
        check(self.learning.max_iterations >= 1, "learning.max_iterations must be at least 1")?;
        check(self.learning.log_floor > 0.0 && self.learning.log_floor < 0.5, "learning.log_floor must lie in (0, 0.5)")?;
        let b = &self.learning.bins;
        for v in [b.spatial, b.time, b.gain] {
            check((1..=256).contains(&v), "bin counts must lie in 1..=256")?;
        }
        check(b.gain_range > 0.0, "learning.bins.gain_range must be positive")?;
        check(self.completion.gamma.validate().is_ok(), "completion.gamma parameters out of range")?;
        check(self.completion.t_cap >= 1 && self.completion.mc_trials >= 1, "completion.t_cap and mc_trials must be positive")?;
        let v = &self.evaluation;
        check(v.draws >= 1 && v.bandwidth_hz > 0.0 && v.noise_figure_db.is_finite(), "evaluation parameters out of range")?;
        let s = &self.sweep;
        check(s.replications >= 1, "sweep.replications must be at least 1")?;
        check(
            !s.budget_values.is_empty() && !s.uav_values.is_empty() && !s.share_values.is_empty() && !s.error_values.is_empty(),
            "sweep value lists must be non-empty",
        )?;
        check(s.uav_values.iter().all(|&i| i >= 1) && s.budget_values.iter().all(|&b| b >= 1), "sweep B and I values must be positive")?;
        check(s.share_values.iter().all(|&x| x > 0.0 && x <= 1.0), "sweep eta values must lie in (0, 1]")?;
        check(s.error_values.iter().all(|&x| (0.0..1.0).contains(&x)), "sweep eps values must lie in [0, 1)")?;
        Ok(())
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn partial_file_overrides() {
        let c = ExperimentConfig::from_toml("seed = 9\n[network]\nrb_budget = 12\n[completion.gamma]\nkind = \"linear\"\nramp = 5\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.network.rb_budget, 12);
        assert_eq!(c.network.uavs, 4);
        assert_eq!(c.completion.gamma, GammaSchedule::Linear { ramp: 5 });
    }

    #[test]
    fn rejects_bad_values_and_unknown_keys() {
        assert!(ExperimentConfig::from_toml("[network]\nbogus = 1\n").is_err());
        let mut c = ExperimentConfig::default();
        c.network.share_ratio = 1.5;
        assert!(matches!(c.validate(), Err(AppError::Config(_))));
        let mut c = ExperimentConfig::default();
        c.learning.bins.spatial = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unit_conversion() {
        assert!((dbm_to_w(40.0) - 10.0).abs() < 1e-12);
        assert!((dbm_to_w(-174.0) - 3.981e-21).abs() < 1e-23);
    }
}
