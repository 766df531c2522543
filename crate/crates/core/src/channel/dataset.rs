use alloc::vec::Vec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{estimate_gain, received_pilot, AntennaConfig, Aabb, CMatrix, Codebook, EnvironmentModel};
use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, rng_for, uniform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub uav_pos: [f64; 3],
    pub ue_pos: [f64; 3],
    pub time: f64,
    pub gain_est: Complex64,
    /// 1-based codebook index.
    pub cond: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub owner: usize,
    pub samples: Vec<ChannelSample>,
}

impl Dataset {
    pub fn size(&self) -> usize {
        self.samples.len()
    }
}

/// Where and when a UAV measures: its hover box, the UEs it serves, and a time span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionWindow {
    pub uav_box: Aabb,
    pub ue_box: Aabb,
    pub t_start: f64,
    pub t_end: f64,
}

pub fn collect_dataset(
    env: &EnvironmentModel,
    codebook: &Codebook,
    antenna: &AntennaConfig,
    window: &CollectionWindow,
    size: usize,
    owner: usize,
    seed: u64,
) -> Result<Dataset> {
    env.validate()?;
    antenna.validate()?;
    if size == 0 {
        return Err(Error::Config("dataset size must be at least 1".into()));
    }
    if window.uav_box.is_empty() || window.ue_box.is_empty() || !(window.t_end >= window.t_start) {
        return Err(Error::Config("collection window is empty".into()));
    }
    if !env.bounds.contains_box(&window.uav_box) || !env.bounds.contains_box(&window.ue_box) {
        return Err(Error::Config("collection window leaves the environment bounds".into()));
    }
    if codebook.is_empty() {
        return Err(Error::Config("codebook is empty".into()));
    }
    let k_max = codebook.len();
    let mut rng = rng_for(seed, 0xDA7A, owner as u64);
    let mut h = CMatrix::zeros(antenna.rx_elements, antenna.tx_elements);
    let mut samples = Vec::with_capacity(size);
    for s in 0..size {
        let uav = window.uav_box.sample(&mut rng);
        let ue = window.ue_box.sample(&mut rng);
        let t = uniform(&mut rng, window.t_start, window.t_end);
        // the pilot sweep cycles through the codebook, so every UAV holds the same count per condition
        let k = s % k_max + 1;
        let pair = codebook.pair(k)?;
        let draw = env.draw_path(&uav, &ue, t, &mut rng);
        let alpha = env.beam_gain(&draw.path, pair);
        // single path seen along the pair's own directions
        h.data.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        h.add_outer(alpha, &pair.q, &pair.w);
        let noise: Vec<Complex64> = (0..antenna.rx_elements)
            .map(|_| complex_gaussian(&mut rng, env.pilot_noise_var_w))
            .collect();
        let r = received_pilot(&h, &pair.w, &pair.q, env.pilot_power_w, &noise)?;
        let beta = super::beta_coefficient(&pair.w, &pair.q, &pair.w, &pair.q, env.pilot_power_w)?;
        samples.push(ChannelSample { uav_pos: uav, ue_pos: ue, time: t, gain_est: estimate_gain(r, beta)?, cond: k });
    }
    Ok(Dataset { owner, samples })
}
