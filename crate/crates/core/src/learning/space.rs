#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSample;
use crate::error::{Error, Result};

pub const AXES: usize = 9;

/// Bin index per axis: UAV x, y, z; UE x, y, z; time; Re gain; Im gain.
pub type Cell = [u8; AXES];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBins {
    pub lo: f64,
    pub hi: f64,
    pub bins: u16,
}

impl AxisBins {
    pub fn new(lo: f64, hi: f64, bins: u16) -> Self {
        Self { lo, hi, bins }
    }

    /// Out-of-range values land in the edge bins.
    pub fn index(&self, v: f64) -> u8 {
        let w = (self.hi - self.lo) / self.bins as f64;
        let i = ((v - self.lo) / w).floor();
        if !(i >= 0.0) {
            0
        } else {
            (i as usize).min(self.bins as usize - 1) as u8
        }
    }

    pub fn center(&self, i: u8) -> f64 {
        self.lo + (i as f64 + 0.5) * (self.hi - self.lo) / self.bins as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpace {
    pub axes: [AxisBins; AXES],
}

impl SampleSpace {
    pub fn validate(&self) -> Result<()> {
        for a in &self.axes {
            if a.bins == 0 || a.bins > 256 || !(a.hi > a.lo) {
                return Err(Error::Config("each axis needs 1..=256 bins over a non-empty range".into()));
            }
        }
        Ok(())
    }

    pub fn cell_of(&self, s: &ChannelSample) -> Cell {
        let v = [
            s.uav_pos[0], s.uav_pos[1], s.uav_pos[2],
            s.ue_pos[0], s.ue_pos[1], s.ue_pos[2],
            s.time, s.gain_est.re, s.gain_est.im,
        ];
        core::array::from_fn(|d| self.axes[d].index(v[d]))
    }

    pub fn center(&self, c: &Cell) -> [f64; AXES] {
        core::array::from_fn(|d| self.axes[d].center(c[d]))
    }

    /// |alpha|^2 at the cell's gain-bin center.
    pub fn gain_power(&self, c: &Cell) -> f64 {
        let re = self.axes[7].center(c[7]);
        let im = self.axes[8].center(c[8]);
        re * re + im * im
    }
}
