//! The binary end to end: outputs, determinism and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use aerogan::io::{from_json, GraphFile};
use tempfile::TempDir;

fn aerogan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aerogan")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn formation_defaults_is_a_four_ring() {
    let out = stdout(&aerogan(&["formation", "--config", "defaults", "--format", "json"]));
    let g: GraphFile = from_json(&out).unwrap();
    assert_eq!(g.nodes.len(), 4);
    let mut edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.src, e.dst)).collect();
    edges.sort_unstable();
    assert_eq!(edges, vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
    assert!(g.nodes.iter().all(|n| n.o_i == 1 && n.s_i == 1000));
}

#[test]
fn completion_csv_carries_parameters() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.toml", "[completion]\nmc_trials = 2000\n");
    let out = stdout(&aerogan(&["completion", "--config", &cfg]));
    for line in ["# T_G = 286\n", "# share_ratio = 0.5\n", "# disc_error = 0.1\n", "# l_max = 3\n", "T,p_closed_form,p_oracle,p_monte_carlo,stderr\n"] {
        assert!(out.contains(line), "missing {line:?}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "t.toml", "[network]\ndataset_size = 300\n[learning]\niterations = 15\n[completion]\nmc_trials = 3000\n");
    for cmd in ["train", "completion", "spread-sim"] {
        for format in ["csv", "json"] {
            let a = dir.path().join(format!("{cmd}_a.{format}"));
            let b = dir.path().join(format!("{cmd}_b.{format}"));
            for p in [&a, &b] {
                stdout(&aerogan(&[cmd, "--config", &cfg, "--seed", "11", "--format", format, "--out", p.to_str().unwrap()]));
            }
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{cmd} {format}");
        }
    }
    let c = dir.path().join("train_c.csv");
    stdout(&aerogan(&["train", "--config", &cfg, "--seed", "12", "--out", c.to_str().unwrap()]));
    assert_ne!(std::fs::read(&c).unwrap(), std::fs::read(dir.path().join("train_a.csv")).unwrap());
}

#[test]
fn train_writes_snapshots_and_datasets() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "t.toml", "[network]\ndataset_size = 200\n[learning]\niterations = 3\n");
    let snaps = dir.path().join("snaps");
    let data = dir.path().join("data.csv");
    stdout(&aerogan(&["train", "--config", &cfg, "--snapshot-dir", snaps.to_str().unwrap(), "--dataset-out", data.to_str().unwrap()]));
    for i in 0..4 {
        let text = std::fs::read_to_string(snaps.join(format!("uav_{i}.json"))).unwrap();
        let s: aerogan::io::ModelSnapshot = from_json(&text).unwrap();
        assert_eq!((s.uav_id, s.iteration), (i, 3));
    }
    let rows = std::fs::read_to_string(data).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 200);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = aerogan(&["completion", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(aerogan(&["sweep", "--axis", "Q"]).status.code(), Some(2));
    assert_eq!(aerogan(&["completion", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn bad_configs_exit_two() {
    let dir = TempDir::new().unwrap();
    let unknown = config(dir.path(), "u.toml", "[network]\nwings = 3\n");
    let range = config(dir.path(), "r.toml", "[network]\nshare_ratio = 1.5\n");
    let budget = config(dir.path(), "b.toml", "[network]\nrb_budget = 2\n");
    for cfg in [unknown.as_str(), range.as_str(), budget.as_str(), "/nonexistent/x.toml"] {
        let o = aerogan(&["formation", "--config", cfg]);
        assert_eq!(o.status.code(), Some(2), "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn infeasible_network_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "p.toml", "[network]\nmax_power_dbm = -60.0\n");
    let o = aerogan(&["formation", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = aerogan(&["completion", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_rows_are_ordered_and_flagged() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "s.toml", "[sweep]\nlearning = false\nbudget_values = [2, 4, 8]\n[completion]\nmc_trials = 1000\n");
    let out = stdout(&aerogan(&["sweep", "--config", &cfg, "--axis", "B", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["feasible"], false);
    let t: Vec<u64> = rows[1..].iter().map(|r| r["t_g"].as_u64().unwrap()).collect();
    assert!(t[0] >= t[1]);
}
