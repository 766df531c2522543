//! End-to-end experiments behind the command line.

use aerogan_core::channel::Dataset;
use aerogan_core::completion::{
    baseline_loads, comm_load, completion_curve, completion_time, curve_from_counts, recursion_oracle, required_iterations, spread_path,
    trial_first_success, CompletionParams, SpreadPoint,
};
use aerogan_core::learning::{
    equilibrium_check, iteration_metrics, jsd_metric, train_iteration, EquilibriumReport, GenerativeModel, IterationMetrics, LearningState,
    Tolerances,
};
use aerogan_core::online::{eval_downlink_rate, BeamPolicy, RateReport};
use aerogan_core::rng::{derive_seed, rng_for};
use aerogan_core::topology::{network_formation, FormationReport, UavGraph};
use aerogan_core::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SweepAxis};
use crate::scenario::Scenario;
use crate::AppError;

const TRIAL_STREAM: u64 = 0x5917EAD;

pub fn run_formation(s: &Scenario) -> Result<FormationReport, AppError> {
    Ok(network_formation(&s.nodes, &s.radio, &s.constraints)?)
}

/// Same trials, seeds and result as the sequential simulator, spread over threads.
pub fn parallel_spread(graph: &UavGraph, params: &CompletionParams, trials: u64, t_max: u32, seed: u64) -> Result<Vec<SpreadPoint>, AppError> {
    if trials == 0 {
        return Err(AppError::Config("need at least one Monte Carlo trial".into()));
    }
    let path = spread_path(&graph.adjacency())?;
    let first = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; t_max as usize + 1],
            |mut acc, trial| {
                let mut rng = rng_for(seed, TRIAL_STREAM, trial);
                if let Some(t) = trial_first_success(&path, params, t_max, &mut rng) {
                    acc[t as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; t_max as usize + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(curve_from_counts(&first, trials))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "T")]
    pub t: u32,
    pub p_closed_form: f64,
    /// Only defined before loop acceleration starts.
    pub p_oracle: Option<f64>,
    pub p_monte_carlo: Option<f64>,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub params: CompletionParams,
    pub t_g: u32,
    pub completion_time_s: f64,
    pub load_bits: u64,
    pub rows: Vec<CurveRow>,
}

pub fn completion_for(s: &Scenario, graph: &UavGraph, mc_trials: Option<u64>, seed: u64) -> Result<CompletionReport, AppError> {
    let params = s.completion_params(graph)?;
    let t_g = required_iterations(&params)?;
    let t_max = s.config.completion.t_max.unwrap_or(t_g);
    let curve = completion_curve(&params, t_max)?;
    let mc = match mc_trials {
        Some(n) => parallel_spread(graph, &params, n, t_max.min(s.config.completion.mc_t_max), derive_seed(seed, 0xC0, 0))?,
        None => Vec::new(),
    };
    let rows = curve
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let t = t as u32;
            let m = mc.get(t as usize);
            CurveRow { t, p_closed_form: v.probability, p_oracle: recursion_oracle(t, &params).ok(), p_monte_carlo: m.map(|x| x.p), stderr: m.map(|x| x.stderr) }
        })
        .collect();
    Ok(CompletionReport { params, t_g, completion_time_s: completion_time(&params, t_g)?, load_bits: comm_load(&params, t_g)?.bits, rows })
}

pub fn run_completion(s: &Scenario, seed: u64) -> Result<CompletionReport, AppError> {
    let f = run_formation(s)?;
    completion_for(s, &f.graph, Some(s.config.completion.mc_trials), seed)
}

pub fn run_spread(s: &Scenario, seed: u64) -> Result<Vec<SpreadPoint>, AppError> {
    let f = run_formation(s)?;
    let params = s.completion_params(&f.graph)?;
    let t_max = match s.config.completion.t_max {
        Some(t) => t,
        None => required_iterations(&params)?,
    };
    let t_max = t_max.min(s.config.completion.mc_t_max);
    parallel_spread(&f.graph, &params, s.config.completion.mc_trials, t_max, derive_seed(seed, 0xC0, 0))
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub graph: UavGraph,
    pub iterations: u32,
    pub datasets: Vec<Dataset>,
    pub global: GenerativeModel,
    pub state: LearningState,
    pub metrics: Vec<IterationMetrics>,
    pub equilibrium: EquilibriumReport,
}

impl TrainOutput {
    pub fn standalone_models(&self) -> Vec<GenerativeModel> {
        self.state.learners.iter().map(|l| l.local.clone()).collect()
    }

    pub fn distributed_models(&self) -> Vec<GenerativeModel> {
        self.state.learners.iter().map(|l| l.generator.clone()).collect()
    }
}

/// Rounds to train on `graph`: the configured count, else T_G capped at
/// `learning.max_iterations`.
pub fn training_rounds(s: &Scenario, graph: &UavGraph) -> Result<u32, AppError> {
    Ok(match s.config.learning.iterations {
        Some(t) => t,
        None => required_iterations(&s.completion_params(graph)?)?.min(s.config.learning.max_iterations),
    })
}

/// Forms the network, collects data and runs the exchange for
/// `training_rounds`.
pub fn run_training(s: &Scenario, seed: u64) -> Result<TrainOutput, AppError> {
    let f = run_formation(s)?;
    let iterations = training_rounds(s, &f.graph)?;
    let datasets = s.datasets(seed)?;
    train_on(s, f.graph, datasets, iterations, seed, true)
}

/// Runs `iterations` rounds; per-round metrics are recorded only when asked.
pub fn train_on(s: &Scenario, graph: UavGraph, datasets: Vec<Dataset>, iterations: u32, seed: u64, record: bool) -> Result<TrainOutput, AppError> {
    let global = GenerativeModel::from_datasets(s.space, s.conditions(), &datasets)?;
    let mut state = LearningState::new(s.space, s.conditions(), &datasets, s.learning_params(), derive_seed(seed, 0x1EA2, 0))?;
    let mut metrics = iteration_metrics(&state, &global)?;
    for t in 1..=iterations {
        train_iteration(&mut state, &graph)?;
        if record || t == iterations {
            metrics.extend(iteration_metrics(&state, &global)?);
        }
    }
    let equilibrium = equilibrium_check(&state, &global, &Tolerances::default())?;
    Ok(TrainOutput { graph, iterations, datasets, global, state, metrics, equilibrium })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub uavs: usize,
    pub learner: String,
    pub jsd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRow {
    pub scheme: String,
    pub per_iteration_bits: u64,
    pub total_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub t_g: u32,
    pub rows: Vec<ComparisonRow>,
    pub loads: Vec<LoadRow>,
}

/// The sweep value of I also raises B to at least I so every point can form a ring.
pub fn with_uavs(cfg: &ExperimentConfig, uavs: usize) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.network.uavs = uavs;
    c.network.rb_budget = c.network.rb_budget.max(uavs);
    c
}

/// Stand-alone, distributed and pooled learners for each network size in
/// `sizes`, plus the analytic loads for the configured network.
pub fn run_learning_comparison(cfg: &ExperimentConfig, sizes: &[usize], seed: u64) -> Result<Comparison, AppError> {
    let floor = cfg.learning.log_floor;
    let per_size: Vec<Vec<ComparisonRow>> = sizes
        .par_iter()
        .map(|&i| {
            let s = Scenario::new(&with_uavs(cfg, i))?;
            let f = run_formation(&s)?;
            let rounds = training_rounds(&s, &f.graph)?;
            let out = train_on(&s, f.graph, s.datasets(seed)?, rounds, seed, false)?;
            let locals = out.standalone_models();
            let pooled = GenerativeModel::from_datasets(s.space, s.conditions(), &out.datasets)?;
            let row = |learner: &str, jsd: f64| ComparisonRow { uavs: i, learner: learner.into(), jsd };
            Ok(vec![
                row("stand_alone", jsd_metric(&locals.iter().collect::<Vec<_>>(), &out.global, floor)?),
                row("distributed", jsd_metric(&out.state.generators(), &out.global, floor)?),
                row("centralized", jsd_metric(&[&pooled], &out.global, floor)?),
            ])
        })
        .collect::<Result<_, AppError>>()?;
    let s = Scenario::new(cfg)?;
    let f = run_formation(&s)?;
    let params = s.completion_params(&f.graph)?;
    let t_g = required_iterations(&params)?;
    let b = baseline_loads(&params, cfg.network.model_param_count, t_g)?;
    let load = |scheme: &str, per: u64, total: u64| LoadRow { scheme: scheme.into(), per_iteration_bits: per, total_bits: total };
    Ok(Comparison {
        t_g,
        rows: per_size.into_iter().flatten().collect(),
        loads: vec![
            load("proposed", b.per_iteration.proposed_bits, b.total.proposed_bits),
            load("md_gan", b.per_iteration.md_bits, b.total.md_bits),
            load("fl_gan", b.per_iteration.fl_bits, b.total.fl_bits),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub policy: String,
    pub draws: usize,
    pub mean_bps: f64,
    pub ci95_bps: f64,
    pub fallbacks: usize,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateComparison {
    pub rows: Vec<RateRow>,
    pub perfect: RateReport,
    pub distributed: RateReport,
    pub stand_alone: RateReport,
}

/// Perfect CSI, the distributed generators and the stand-alone models on the
/// same evaluation draws.
pub fn run_eval_rate(s: &Scenario, seed: u64) -> Result<RateComparison, AppError> {
    let f = run_formation(s)?;
    let rounds = training_rounds(s, &f.graph)?;
    let out = train_on(s, f.graph, s.datasets(seed)?, rounds, seed, false)?;
    rates_for(s, &out, seed)
}

pub fn rates_for(s: &Scenario, out: &TrainOutput, seed: u64) -> Result<RateComparison, AppError> {
    let cfg = s.rate_config();
    let eval_seed = derive_seed(seed, 0xE7A1, 0);
    let dist = out.distributed_models();
    let local = out.standalone_models();
    let uavs = s.nodes.len();
    let run = |p: BeamPolicy<'_>| eval_downlink_rate(p, &s.env, &s.codebook, &s.windows, uavs, &cfg, eval_seed);
    let (perfect, (distributed, stand_alone)) =
        rayon::join(|| run(BeamPolicy::PerfectCsi), || rayon::join(|| run(BeamPolicy::Models(&dist)), || run(BeamPolicy::Models(&local))));
    let (perfect, distributed, stand_alone) = (perfect?, distributed?, stand_alone?);
    let row = |policy: &str, r: &RateReport| RateRow {
        policy: policy.into(),
        draws: r.rates_bps.len(),
        mean_bps: r.mean_bps,
        ci95_bps: r.ci95_bps,
        fallbacks: r.fallbacks,
        agreement: r.agreement,
    };
    Ok(RateComparison {
        rows: vec![row("perfect_csi", &perfect), row("distributed", &distributed), row("stand_alone", &stand_alone)],
        perfect,
        distributed,
        stand_alone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub feasible: bool,
    pub note: String,
    pub t_g: Option<u32>,
    pub completion_time_s: Option<f64>,
    pub load_bits: Option<u64>,
    pub p_mc_at_t_g: Option<f64>,
    pub p_mc_stderr: Option<f64>,
    pub replications: usize,
    pub jsd_mean: Option<f64>,
    pub jsd_sd: Option<f64>,
    pub rate_mean_bps: Option<f64>,
    pub rate_sd_bps: Option<f64>,
    /// Replication seeds, separated by ';'.
    pub seeds: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

pub fn sweep_points(cfg: &ExperimentConfig, axis: SweepAxis) -> Vec<(f64, ExperimentConfig)> {
    let sw = &cfg.sweep;
    match axis {
        SweepAxis::Budget => sw
            .budget_values
            .iter()
            .map(|&b| {
                let mut c = cfg.clone();
                c.network.rb_budget = b;
                (b as f64, c)
            })
            .collect(),
        SweepAxis::Uavs => sw.uav_values.iter().map(|&i| (i as f64, with_uavs(cfg, i))).collect(),
        SweepAxis::ShareRatio => sw
            .share_values
            .iter()
            .map(|&x| {
                let mut c = cfg.clone();
                c.network.share_ratio = x;
                (x, c)
            })
            .collect(),
        SweepAxis::DiscError => sw
            .error_values
            .iter()
            .map(|&x| {
                let mut c = cfg.clone();
                c.network.disc_error = x;
                (x, c)
            })
            .collect(),
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (m, sd)
}

fn sweep_point(axis: SweepAxis, value: f64, cfg: &ExperimentConfig, seed: u64) -> Result<SweepRow, AppError> {
    let mut row = SweepRow {
        axis: axis.name().into(),
        value,
        feasible: true,
        note: String::new(),
        t_g: None,
        completion_time_s: None,
        load_bits: None,
        p_mc_at_t_g: None,
        p_mc_stderr: None,
        replications: cfg.sweep.replications,
        jsd_mean: None,
        jsd_sd: None,
        rate_mean_bps: None,
        rate_sd_bps: None,
        seeds: String::new(),
    };
    let s = match Scenario::new(cfg) {
        Ok(s) => s,
        Err(AppError::Config(m)) => {
            row.feasible = false;
            row.note = m;
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let f = match run_formation(&s) {
        Ok(f) => f,
        Err(e @ (AppError::Core(Error::Infeasible(_)) | AppError::Core(Error::Config(_)))) => {
            row.feasible = false;
            row.note = e.to_string();
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let point_seed = derive_seed(seed, 0x5EE9, value.to_bits());
    let report = match completion_for(&s, &f.graph, Some(cfg.completion.mc_trials), point_seed) {
        Ok(r) => r,
        Err(AppError::Core(e @ Error::NotAttained { .. })) => {
            row.note = e.to_string();
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    row.t_g = Some(report.t_g);
    row.completion_time_s = Some(report.completion_time_s);
    row.load_bits = Some(report.load_bits);
    if let Some(last) = report.rows.get(report.t_g as usize) {
        row.p_mc_at_t_g = last.p_monte_carlo;
        row.p_mc_stderr = last.stderr;
    }
    let seeds: Vec<u64> = (0..cfg.sweep.replications as u64).map(|r| derive_seed(point_seed, 0x4E9, r)).collect();
    row.seeds = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
    if cfg.sweep.learning {
        let reps = seeds
            .par_iter()
            .map(|&rs| {
                let out = train_on(&s, f.graph.clone(), s.datasets(rs)?, training_rounds(&s, &f.graph)?, rs, false)?;
                let jsd = jsd_metric(&out.state.generators(), &out.global, cfg.learning.log_floor)?;
                Ok((jsd, rates_for(&s, &out, rs)?.distributed.mean_bps))
            })
            .collect::<Result<Vec<_>, AppError>>()?;
        let (jm, js) = mean_sd(&reps.iter().map(|r| r.0).collect::<Vec<_>>());
        let (rm, rsd) = mean_sd(&reps.iter().map(|r| r.1).collect::<Vec<_>>());
        row.jsd_mean = Some(jm);
        row.jsd_sd = Some(js);
        row.rate_mean_bps = Some(rm);
        row.rate_sd_bps = Some(rsd);
    }
    Ok(row)
}

/// Every axis value is an independent job; rows come back ordered by value.
pub fn run_sweep(cfg: &ExperimentConfig, axis: SweepAxis, seed: u64) -> Result<SweepResult, AppError> {
    let mut rows = sweep_points(cfg, axis)
        .par_iter()
        .map(|(v, c)| sweep_point(axis, *v, c, seed))
        .collect::<Result<Vec<_>, AppError>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepResult { axis: axis.name().into(), rows })
}
