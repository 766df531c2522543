//! Completion probability of distributed learning, the iteration threshold,
//! completion time and communication load.

mod spread;

pub use spread::{curve_from_counts, spread_path, spread_simulator, trial_first_success, SpreadPath, SpreadPoint};

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Acceleration coefficient once looped information flow starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSchedule {
    /// gamma(T) = 1 + N eta (1 - ratio^(T - T0)).
    Geometric { ratio: f64 },
    /// gamma(T) = 1 + N eta min(1, (T - T0) / ramp).
    Linear { ramp: u32 },
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::Geometric { ratio: 0.5 }
    }
}

impl GammaSchedule {
    /// gamma(t) with T0 = l_max + l_loop - 1; equals 1 at and before T0.
    pub fn gamma(&self, t: u32, t0: u32, n_eta: f64) -> f64 {
        if t <= t0 {
            return 1.0;
        }
        let k = (t - t0) as f64;
        match *self {
            GammaSchedule::Geometric { ratio } => 1.0 + n_eta * (1.0 - ratio.powf(k)),
            GammaSchedule::Linear { ramp } => 1.0 + n_eta * (k / ramp.max(1) as f64).min(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GammaSchedule::Geometric { ratio } if (0.0..1.0).contains(&ratio) => Ok(()),
            GammaSchedule::Linear { ramp } if ramp >= 1 => Ok(()),
            _ => Err(Error::Config("gamma schedule parameters out of range".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub share_ratio: f64,
    pub disc_error: f64,
    pub in_degree: u32,
    pub l_max: u32,
    pub l_loop_min: u32,
    pub p_tau: f64,
    pub tx_time_s: f64,
    pub train_time_s: f64,
    pub sample_scalars: u32,
    pub bits_per_scalar: u32,
    pub dataset_size: u32,
    pub rb_budget: u32,
    pub gamma: GammaSchedule,
    /// Largest T searched for the threshold.
    pub t_cap: u32,
}

impl CompletionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(contract(m));
        if !(self.share_ratio > 0.0 && self.share_ratio <= 1.0) {
            return bad("share ratio must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.disc_error) {
            return bad("discriminator error must lie in [0, 1)");
        }
        if self.in_degree < 1 || self.l_max < 1 || self.l_loop_min < 2 {
            return bad("need N >= 1, l_max >= 1, l_loop_min >= 2");
        }
        if !(self.p_tau > 0.0 && self.p_tau < 1.0) {
            return bad("p_tau must lie in (0, 1)");
        }
        if !(self.tx_time_s >= 0.0) || !(self.train_time_s >= 0.0) {
            return bad("times must be non-negative");
        }
        self.gamma.validate().map_err(|_| contract("gamma schedule parameters out of range"))
    }

    /// T0 = l_max + l_loop_min - 1, the last iteration without loop acceleration.
    pub fn loop_onset(&self) -> u32 {
        self.l_max + self.l_loop_min - 1
    }

    fn hop_success(&self) -> f64 {
        (1.0 - self.disc_error) * self.share_ratio
    }

    fn dilution(&self) -> f64 {
        1.0 + self.in_degree as f64 * self.share_ratio
    }

    pub fn gamma_at(&self, t: u32) -> f64 {
        self.gamma.gamma(t, self.loop_onset(), self.in_degree as f64 * self.share_ratio)
    }

    /// round(eta S), the samples one UAV sends per out-edge per iteration.
    pub fn shared_samples(&self) -> u64 {
        (self.share_ratio * self.dataset_size as f64).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionValue {
    pub probability: f64,
    /// The raw accumulation left [0, 1] and was clamped.
    pub clamped: bool,
}

/// Closed-form p_G(T) for T = 0..=t_max, accumulated in one pass.
pub fn completion_curve(params: &CompletionParams, t_max: u32) -> Result<Vec<CompletionValue>> {
    params.validate()?;
    let mut out = Vec::with_capacity(t_max as usize + 1);
    let d = params.dilution();
    let t0 = params.loop_onset();
    let mut raw = 0.0;
    let mut survival = 1.0;
    // p_in(T) = a prod(gamma) / d^(T-1), carried as one factor so neither part overflows
    let mut p_in = params.hop_success().powi(params.l_max as i32) / d.powi(params.l_max as i32 - 1);
    for t in 0..=t_max {
        if t >= params.l_max {
            if t > params.l_max {
                p_in /= d;
            }
            if t > t0 {
                p_in *= params.gamma_at(t);
            }
            if t == t0 {
                // the loop branch restarts its survival product at T0
                raw += survival * p_in;
                survival = 1.0 - p_in;
            } else {
                raw += survival * p_in;
                survival *= 1.0 - p_in;
            }
        }
        let clamped = !(0.0..=1.0).contains(&raw);
        out.push(CompletionValue { probability: raw.clamp(0.0, 1.0), clamped });
    }
    Ok(out)
}

pub fn completion_probability(t: u32, params: &CompletionParams) -> Result<CompletionValue> {
    Ok(*completion_curve(params, t)?.last().expect("curve has T + 1 points"))
}

/// Hop-by-hop recursion, valid before loop acceleration starts. Accepts the
/// limiting cases N = 0 and eps = 1 that the closed form rejects.
pub fn recursion_oracle(t: u32, params: &CompletionParams) -> Result<f64> {
    let limit = params.l_max + params.l_loop_min;
    if t >= limit {
        return Err(Error::Regime { t, limit });
    }
    if !(0.0..=1.0).contains(&params.disc_error) || !(params.share_ratio >= 0.0 && params.share_ratio <= 1.0) || params.l_max < 1 {
        return Err(contract("oracle parameters out of range"));
    }
    let hop = (1.0 - params.disc_error) * params.share_ratio;
    let d = 1.0 + params.in_degree as f64 * params.share_ratio;
    // p_in at the last hop, built hop by hop
    let mut p_in = hop;
    for _ in 1..params.l_max {
        let p_out = p_in / d;
        p_in = hop * p_out;
    }
    if t < params.l_max {
        return Ok(0.0);
    }
    let mut miss = 1.0;
    for _ in params.l_max..=t {
        miss *= 1.0 - p_in;
        p_in /= d;
    }
    Ok(1.0 - miss)
}

/// Smallest T with p_G(T) >= p_tau, searched up to `t_cap`.
pub fn required_iterations(params: &CompletionParams) -> Result<u32> {
    let curve = completion_curve(params, params.t_cap)?;
    curve
        .iter()
        .position(|v| v.probability >= params.p_tau)
        .map(|t| t as u32)
        .ok_or(Error::NotAttained { cap: params.t_cap, p_at_cap: curve[params.t_cap as usize].probability, p_tau: params.p_tau })
}

pub fn completion_time(params: &CompletionParams, t_g: u32) -> Result<f64> {
    if t_g == 0 {
        return Err(contract("T_G must be at least 1"));
    }
    Ok((params.tx_time_s + params.train_time_s) * t_g as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommLoad {
    pub scalars: u64,
    pub bits: u64,
}

/// T_G * round(eta S) * rho * B sample scalars.
pub fn comm_load(params: &CompletionParams, t_g: u32) -> Result<CommLoad> {
    if t_g == 0 {
        return Err(contract("T_G must be at least 1"));
    }
    let scalars = t_g as u64 * params.shared_samples() * params.sample_scalars as u64 * params.rb_budget as u64;
    Ok(CommLoad { scalars, bits: scalars * params.bits_per_scalar as u64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadTriple {
    pub proposed_bits: u64,
    pub md_bits: u64,
    pub fl_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineLoads {
    pub per_iteration: LoadTriple,
    pub total: LoadTriple,
}

/// Analytic loads: the proposed exchange, two-directional sample exchange,
/// and parameter averaging over the same B links.
pub fn baseline_loads(params: &CompletionParams, model_param_count: u64, t_g: u32) -> Result<BaselineLoads> {
    if model_param_count == 0 {
        return Err(contract("model parameter count must be at least 1"));
    }
    let per = comm_load(params, 1)?.bits;
    let fl = params.rb_budget as u64 * model_param_count * params.bits_per_scalar as u64;
    let per_iteration = LoadTriple { proposed_bits: per, md_bits: 2 * per, fl_bits: fl };
    let t = t_g as u64;
    let total = LoadTriple { proposed_bits: per * t, md_bits: 2 * per * t, fl_bits: fl * t };
    comm_load(params, t_g)?;
    Ok(BaselineLoads { per_iteration, total })
}
