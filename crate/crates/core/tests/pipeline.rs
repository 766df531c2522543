//! Measurement, formation, completion threshold and the exchange, chained
//! through the public interface on a small four-region scenario.

use aerogan_core::channel::{collect_dataset, Aabb, AntennaConfig, BeamPattern, Codebook, CollectionWindow, Dataset, EnvironmentModel, RegionProfile};
use aerogan_core::completion::{required_iterations, CompletionParams, GammaSchedule};
use aerogan_core::learning::{equilibrium_check, jsd_metric, train_iteration, AxisBins, GenerativeModel, LearningParams, LearningState, SampleSpace, Tolerances};
use aerogan_core::topology::{network_formation, completion_path_lengths, A2aRadio, ConstraintParams, UavNode};

const WIDTH: f64 = 400.0;

fn env() -> EnvironmentModel {
    let region = |i: usize, a: f64, b: f64| RegionProfile {
        footprint: Aabb::new([100.0 * i as f64, 0.0, 0.0], [100.0 * (i + 1) as f64, 100.0, 1.5]),
        los_a: a,
        los_b: b,
        nlos_excess_db: 20.0,
        outage_prob: 0.02,
    };
    EnvironmentModel {
        bounds: Aabb::new([0.0; 3], [WIDTH, 100.0, 150.0]),
        carrier_hz: 30e9,
        pilot_power_w: 1e-5,
        pilot_noise_var_w: 1e-17,
        regions: vec![region(0, 4.88, 0.43), region(1, 9.61, 0.16), region(2, 12.08, 0.11), region(3, 27.23, 0.08)],
        los_shadow_db: 2.0,
        nlos_shadow_db: 6.0,
        nlos_spread: 0.15,
        beam: BeamPattern { halfwidth: 0.2, floor_db: -25.0 },
        blockage_depth: 0.3,
        blockage_period_s: 3600.0,
    }
}

fn space() -> SampleSpace {
    let s = |hi: f64| AxisBins::new(0.0, hi, 8);
    SampleSpace { axes: [s(WIDTH), s(100.0), s(150.0), s(WIDTH), s(100.0), s(150.0), AxisBins::new(0.0, 3600.0, 4), AxisBins::new(-1e-5, 1e-5, 8), AxisBins::new(-1e-5, 1e-5, 8)] }
}

fn datasets(env: &EnvironmentModel, codebook: &Codebook, antenna: &AntennaConfig, seed: u64) -> Vec<Dataset> {
    (0..4)
        .map(|i| {
            let x0 = 100.0 * i as f64;
            let w = CollectionWindow {
                uav_box: Aabb::new([x0 + 45.0, 45.0, 55.0], [x0 + 55.0, 55.0, 65.0]),
                ue_box: Aabb::new([x0, 0.0, 1.5], [x0 + 100.0, 100.0, 1.5]),
                t_start: 0.0,
                t_end: 3600.0,
            };
            collect_dataset(env, codebook, antenna, &w, 400, i, seed).unwrap()
        })
        .collect()
}

#[test]
fn distributed_exchange_reaches_the_global_distribution() {
    let env = env();
    let antenna = AntennaConfig::new(16, 8, 30e9);
    let codebook = Codebook::grid(&antenna, 3, 3, 0.8).unwrap();
    let data = datasets(&env, &codebook, &antenna, 9);

    let nodes: Vec<UavNode> =
        (0..4).map(|i| UavNode { id: i, position: [100.0 * i as f64 + 50.0, 50.0, 60.0], dataset_size: 400, max_power_w: 10.0, out_budget: 1 }).collect();
    let radio = A2aRadio { carrier_hz: 30e9, bandwidth_hz: 2e6, noise_w: 10f64.powf(-20.4) * 2e6 };
    let constraints = ConstraintParams { snr_threshold: 10.0, tx_time_limit_s: 0.01, sample_scalars: 11, bits_per_scalar: 32, share_ratio: 0.5, rb_budget: 4 };
    let graph = network_formation(&nodes, &radio, &constraints).unwrap().graph;
    let (l_max, l_loop) = completion_path_lengths(&graph.adjacency()).unwrap();
    assert_eq!((l_max, l_loop), (3, 4));

    let params = CompletionParams {
        share_ratio: 0.5,
        disc_error: 0.0,
        in_degree: graph.max_in_degree() as u32,
        l_max: l_max as u32,
        l_loop_min: l_loop as u32,
        p_tau: 0.99,
        tx_time_s: 0.01,
        train_time_s: 0.1,
        sample_scalars: 11,
        bits_per_scalar: 32,
        dataset_size: 400,
        rb_budget: 4,
        gamma: GammaSchedule::default(),
        t_cap: 100_000,
    };
    let t_g = required_iterations(&params).unwrap();

    let sp = space();
    let k = codebook.len();
    let global = GenerativeModel::from_datasets(sp, k, &data).unwrap();
    let lp = LearningParams { share_ratio: 0.5, disc_error: 0.0, minibatch: 128, log_floor: 1e-9 };
    let mut state = LearningState::new(sp, k, &data, lp, 4).unwrap();
    let locals: Vec<GenerativeModel> = state.learners.iter().map(|l| l.local.clone()).collect();
    let alone = jsd_metric(&locals.iter().collect::<Vec<_>>(), &global, 1e-9).unwrap();
    for _ in 0..t_g {
        train_iteration(&mut state, &graph).unwrap();
    }
    let report = equilibrium_check(&state, &global, &Tolerances::default()).unwrap();
    assert!(report.holds, "{report:?}");
    let dist = jsd_metric(&state.generators(), &global, 1e-9).unwrap();
    assert!(dist < 1e-9 && alone > 1.0, "{dist} vs {alone}");

    let mut again = LearningState::new(sp, k, &data, lp, 4).unwrap();
    for _ in 0..t_g {
        train_iteration(&mut again, &graph).unwrap();
    }
    assert_eq!(again.generators(), state.generators());
}
