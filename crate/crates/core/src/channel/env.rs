//! Synthetic air-to-ground ground truth: elevation-driven LoS probability,
//! free-space loss at the mmWave carrier with log-normal shadowing, uniform
//! phase, and a coarse main-lobe beam pattern that turns a path into a
//! per-codebook-pair effective gain.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{wrap_angle, BeamPair, PathComponent, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::rng::{standard_normal, uniform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|d| !(self.max[d] >= self.min[d]))
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(&other.min) && self.contains(&other.max)
    }

    pub fn center(&self) -> [f64; 3] {
        core::array::from_fn(|d| 0.5 * (self.min[d] + self.max[d]))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        core::array::from_fn(|d| uniform(rng, self.min[d], self.max[d]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
    Outage,
}

/// Ground area with its own propagation character (residential, park, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionProfile {
    pub footprint: Aabb,
    /// Elevation-angle LoS law 1 / (1 + a exp(-b (theta_deg - a))).
    pub los_a: f64,
    pub los_b: f64,
    pub nlos_excess_db: f64,
    pub outage_prob: f64,
}

/// Main lobe of width `halfwidth` in direction cosine, flat `floor_db` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    pub halfwidth: f64,
    pub floor_db: f64,
}

impl BeamPattern {
    pub fn amplitude(&self, delta: f64) -> f64 {
        let floor = 10f64.powf(self.floor_db / 20.0);
        let d = delta.abs();
        if d >= self.halfwidth {
            return floor;
        }
        let c = (0.5 * PI * d / self.halfwidth).cos();
        floor + (1.0 - floor) * c * c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentModel {
    pub bounds: Aabb,
    pub carrier_hz: f64,
    pub pilot_power_w: f64,
    pub pilot_noise_var_w: f64,
    pub regions: Vec<RegionProfile>,
    pub los_shadow_db: f64,
    pub nlos_shadow_db: f64,
    /// Std of the reflected path's direction-cosine offset.
    pub nlos_spread: f64,
    pub beam: BeamPattern,
    /// LoS probability is scaled by 1 - depth sin^2(pi t / period).
    pub blockage_depth: f64,
    pub blockage_period_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDraw {
    pub state: LinkState,
    pub path: PathComponent,
}

impl EnvironmentModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.bounds.is_empty() {
            return bad("environment bounds are empty");
        }
        if self.regions.is_empty() {
            return bad("environment needs at least one region");
        }
        if !(self.carrier_hz > 0.0) || !(self.pilot_power_w >= 0.0) || !(self.pilot_noise_var_w >= 0.0) {
            return bad("carrier must be positive and powers non-negative");
        }
        for r in &self.regions {
            if r.footprint.is_empty() || !(0.0..=1.0).contains(&r.outage_prob) || !(r.los_b >= 0.0) {
                return bad("region profile out of range");
            }
        }
        if !(0.0..=1.0).contains(&self.blockage_depth) || !(self.blockage_period_s > 0.0) {
            return bad("blockage depth must be in [0, 1] and period positive");
        }
        if !(self.beam.halfwidth > 0.0) || !(self.nlos_spread >= 0.0) {
            return bad("beam halfwidth must be positive");
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Region whose footprint holds the UE, else the one with the nearest center.
    pub fn region_of(&self, ue: &[f64; 3]) -> &RegionProfile {
        if let Some(r) = self.regions.iter().find(|r| r.footprint.contains(ue)) {
            return r;
        }
        let d2 = |r: &RegionProfile| {
            let c = r.footprint.center();
            (c[0] - ue[0]).powi(2) + (c[1] - ue[1]).powi(2)
        };
        self.regions
            .iter()
            .min_by(|a, b| d2(a).partial_cmp(&d2(b)).unwrap_or(core::cmp::Ordering::Equal))
            .expect("validated environment has regions")
    }

    /// [LoS, NLoS, outage] probabilities.
    pub fn state_probabilities(&self, uav: &[f64; 3], ue: &[f64; 3], t: f64) -> [f64; 3] {
        let r = self.region_of(ue);
        let d = distance(uav, ue).max(1e-9);
        let elev = ((uav[2] - ue[2]) / d).clamp(-1.0, 1.0).asin().to_degrees();
        let mut los = 1.0 / (1.0 + r.los_a * (-r.los_b * (elev - r.los_a)).exp());
        let s = (PI * t / self.blockage_period_s).sin();
        los *= 1.0 - self.blockage_depth * s * s;
        let live = 1.0 - r.outage_prob;
        [live * los, live * (1.0 - los), r.outage_prob]
    }

    /// Geometric direction cosines (AoD at the UAV array along x, AoA at the
    /// UE array along y).
    pub fn direction_cosines(uav: &[f64; 3], ue: &[f64; 3]) -> (f64, f64) {
        let d = distance(uav, ue).max(1e-9);
        ((ue[0] - uav[0]) / d, (uav[1] - ue[1]) / d)
    }

    pub fn draw_path<R: Rng + ?Sized>(&self, uav: &[f64; 3], ue: &[f64; 3], t: f64, rng: &mut R) -> PathDraw {
        let probs = self.state_probabilities(uav, ue, t);
        let u: f64 = rng.random();
        let state = if u < probs[0] {
            LinkState::Los
        } else if u < probs[0] + probs[1] {
            LinkState::Nlos
        } else {
            LinkState::Outage
        };
        let (mut ut, mut ur) = Self::direction_cosines(uav, ue);
        let d = distance(uav, ue).max(1.0);
        let fspl = self.wavelength() / (4.0 * PI * d);
        let loss_db = match state {
            LinkState::Los => self.los_shadow_db * standard_normal(rng),
            LinkState::Nlos => {
                ut = (ut + self.nlos_spread * standard_normal(rng)).clamp(-1.0, 1.0);
                ur = (ur + self.nlos_spread * standard_normal(rng)).clamp(-1.0, 1.0);
                self.region_of(ue).nlos_excess_db + self.nlos_shadow_db * standard_normal(rng)
            }
            LinkState::Outage => 0.0,
        };
        let phase = uniform(rng, 0.0, 2.0 * PI);
        let amp = if state == LinkState::Outage { 0.0 } else { fspl * 10f64.powf(-loss_db / 20.0) };
        PathDraw {
            state,
            path: PathComponent {
                gain: Complex64::from_polar(amp, phase),
                aod: wrap_angle(ut.asin()),
                aoa: wrap_angle(ur.asin()),
            },
        }
    }

    /// Effective single-path gain seen through codebook pair `pair`.
    pub fn beam_gain(&self, path: &PathComponent, pair: &BeamPair) -> Complex64 {
        let gt = self.beam.amplitude(path.aod.sin() - pair.aod.sin());
        let gr = self.beam.amplitude(path.aoa.sin() - pair.aoa.sin());
        path.gain * (gt * gr)
    }
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
