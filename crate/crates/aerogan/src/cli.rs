//! Command-line dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ExperimentConfig, SweepAxis};
use crate::experiments::{run_completion, run_eval_rate, run_formation, run_learning_comparison, run_spread, run_sweep, run_training};
use crate::io::{dataset_rows, emit, header_from, to_csv, to_json, Format, GraphFile, ModelSnapshot};
use crate::scenario::Scenario;
use crate::AppError;

#[derive(Debug, Parser)]
#[command(name = "aerogan", version, about = "Distributed generative channel learning for UAV mmWave networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// TOML configuration file, or `defaults` for the built-in configuration.
    #[arg(long, default_value = "defaults")]
    pub config: String,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Form the UAV-to-UAV exchange graph.
    Formation(Common),
    /// Completion probability curve: closed form, recursion oracle and Monte Carlo.
    Completion(Common),
    /// Monte Carlo first-delivery curve only.
    SpreadSim(Common),
    /// Run the distributed exchange and write per-iteration metrics.
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory for per-UAV model snapshots (JSON).
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
        /// File for the collected datasets, in the chosen format.
        #[arg(long)]
        dataset_out: Option<PathBuf>,
    },
    /// Stand-alone, distributed and pooled learners, plus baseline loads.
    Compare(Common),
    /// Downlink rate under perfect CSI, distributed and stand-alone beam selection.
    EvalRate(Common),
    /// Sweep one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of B, I, eta, eps; the configured axis when absent.
        #[arg(long)]
        axis: Option<String>,
    },
}

fn prepare(c: &Common) -> Result<(ExperimentConfig, u64, Format), AppError> {
    let cfg = ExperimentConfig::load(&c.config)?;
    let seed = c.seed.unwrap_or(cfg.seed);
    let format = Format::parse(&c.format).ok_or_else(|| AppError::Usage(format!("unknown format {}", c.format)))?;
    Ok((cfg, seed, format))
}

fn write<T: Serialize>(c: &Common, format: Format, rows: &[T], header: Vec<(String, String)>, whole: &impl Serialize) -> Result<(), AppError> {
    let text = match format {
        Format::Csv => to_csv(rows, &header)?,
        Format::Json => to_json(whole)?,
    };
    emit(c.out.as_deref(), &text)
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn execute(cmd: Command) -> Result<(), AppError> {
    match cmd {
        Command::Formation(c) => {
            let (cfg, _, f) = prepare(&c)?;
            let rep = run_formation(&Scenario::new(&cfg)?)?;
            let file = GraphFile::from_graph(&rep.graph);
            let mut header: Vec<_> = file
                .nodes
                .iter()
                .map(|n| kv(&format!("node.{}", n.id), format!("position={:?} S_i={} O_i={}", n.position, n.s_i, n.o_i)))
                .collect();
            header.push(kv("ring", format!("{:?}", rep.ring)));
            write(&c, f, &file.edges, header, &file)
        }
        Command::Completion(c) => {
            let (cfg, seed, f) = prepare(&c)?;
            let rep = run_completion(&Scenario::new(&cfg)?, seed)?;
            let mut header = header_from(&rep.params)?;
            header.extend([
                kv("T_G", rep.t_g),
                kv("completion_time_s", rep.completion_time_s),
                kv("load_bits", rep.load_bits),
                kv("mc_trials", cfg.completion.mc_trials),
                kv("seed", seed),
            ]);
            write(&c, f, &rep.rows, header, &rep)
        }
        Command::SpreadSim(c) => {
            let (cfg, seed, f) = prepare(&c)?;
            let pts = run_spread(&Scenario::new(&cfg)?, seed)?;
            write(&c, f, &pts, vec![kv("trials", cfg.completion.mc_trials), kv("seed", seed)], &pts)
        }
        Command::Train { common: c, snapshot_dir, dataset_out } => {
            let (cfg, seed, f) = prepare(&c)?;
            let out = run_training(&Scenario::new(&cfg)?, seed)?;
            if let Some(dir) = snapshot_dir {
                std::fs::create_dir_all(&dir)?;
                for l in &out.state.learners {
                    let snap = ModelSnapshot::new(l.id, out.state.iteration, &l.generator, &l.discriminator);
                    emit(Some(&dir.join(format!("uav_{}.json", l.id))), &to_json(&snap)?)?;
                }
            }
            if let Some(p) = dataset_out {
                let text = match f {
                    Format::Csv => to_csv(&dataset_rows(&out.datasets), &[])?,
                    Format::Json => to_json(&out.datasets)?,
                };
                emit(Some(&p), &text)?;
            }
            #[derive(Serialize)]
            struct Whole<'a> {
                iterations: u32,
                metrics: &'a [aerogan_core::learning::IterationMetrics],
                equilibrium: &'a aerogan_core::learning::EquilibriumReport,
            }
            let header = vec![kv("iterations", out.iterations), kv("equilibrium_holds", out.equilibrium.holds), kv("seed", seed)];
            write(&c, f, &out.metrics, header, &Whole { iterations: out.iterations, metrics: &out.metrics, equilibrium: &out.equilibrium })
        }
        Command::Compare(c) => {
            let (cfg, seed, f) = prepare(&c)?;
            let mut sizes = cfg.sweep.uav_values.clone();
            sizes.push(cfg.network.uavs);
            sizes.sort_unstable();
            sizes.dedup();
            let cmp = run_learning_comparison(&cfg, &sizes, seed)?;
            let mut header = vec![kv("T_G", cmp.t_g), kv("seed", seed)];
            for l in &cmp.loads {
                header.push(kv(&format!("load.{}.per_iteration_bits", l.scheme), l.per_iteration_bits));
                header.push(kv(&format!("load.{}.total_bits", l.scheme), l.total_bits));
            }
            write(&c, f, &cmp.rows, header, &cmp)
        }
        Command::EvalRate(c) => {
            let (cfg, seed, f) = prepare(&c)?;
            let r = run_eval_rate(&Scenario::new(&cfg)?, seed)?;
            write(&c, f, &r.rows, vec![kv("seed", seed)], &r.rows)
        }
        Command::Sweep { common: c, axis } => {
            let (cfg, seed, f) = prepare(&c)?;
            let axis = match axis {
                Some(a) => SweepAxis::parse(&a).ok_or_else(|| AppError::Usage(format!("unknown sweep axis {a}; expected B, I, eta or eps")))?,
                None => cfg.sweep.axis,
            };
            let r = run_sweep(&cfg, axis, seed)?;
            write(&c, f, &r.rows, vec![kv("axis", &r.axis), kv("seed", seed)], &r)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aerogan: {e}");
            if matches!(e, AppError::Usage(_)) {
                eprintln!("run `aerogan --help` for usage");
            }
            e.exit_code()
        }
    }
}
