//! CSV and JSON encodings of every artifact. All writers are exact: reading
//! a file back reproduces the value that was written.

use std::collections::BTreeMap;
use std::path::Path;

use aerogan_core::channel::{ChannelSample, Dataset};
use aerogan_core::learning::{Cell, CondTable, Discriminator, GenerativeModel, SampleSpace};
use aerogan_core::topology::{LinkBudget, UavGraph, UavNode};
use aerogan_core::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

/// Rows as CSV, preceded by `# key = value` lines.
pub fn to_csv<T: Serialize>(rows: &[T], header: &[(String, String)]) -> Result<String, AppError> {
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| AppError::Io(e.to_string()))?;
    out.push_str(std::str::from_utf8(&body).map_err(|e| AppError::Io(e.to_string()))?);
    Ok(out)
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<(Vec<(String, String)>, Vec<T>), AppError> {
    let header = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok((header, rows))
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String, AppError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, AppError> {
    Ok(serde_json::from_str(text)?)
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), AppError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub owner: usize,
    pub x: f64,
    pub y: f64,
    pub z_uav: f64,
    pub x_ue: f64,
    pub y_ue: f64,
    pub z_ue: f64,
    pub t: f64,
    pub re_gain: f64,
    pub im_gain: f64,
    pub cond_idx: usize,
}

pub fn dataset_rows(sets: &[Dataset]) -> Vec<DatasetRow> {
    sets.iter()
        .flat_map(|d| {
            d.samples.iter().map(move |s| DatasetRow {
                owner: d.owner,
                x: s.uav_pos[0],
                y: s.uav_pos[1],
                z_uav: s.uav_pos[2],
                x_ue: s.ue_pos[0],
                y_ue: s.ue_pos[1],
                z_ue: s.ue_pos[2],
                t: s.time,
                re_gain: s.gain_est.re,
                im_gain: s.gain_est.im,
                cond_idx: s.cond,
            })
        })
        .collect()
}

/// Groups rows by owner in order of first appearance.
pub fn datasets_from_rows(rows: &[DatasetRow]) -> Vec<Dataset> {
    let mut out: Vec<Dataset> = Vec::new();
    for r in rows {
        let s = ChannelSample {
            uav_pos: [r.x, r.y, r.z_uav],
            ue_pos: [r.x_ue, r.y_ue, r.z_ue],
            time: r.t,
            gain_est: Complex64::new(r.re_gain, r.im_gain),
            cond: r.cond_idx,
        };
        match out.iter_mut().find(|d| d.owner == r.owner) {
            Some(d) => d.samples.push(s),
            None => out.push(Dataset { owner: r.owner, samples: vec![s] }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    pub position: [f64; 3],
    #[serde(rename = "S_i")]
    pub s_i: usize,
    #[serde(rename = "O_i")]
    pub o_i: usize,
    pub max_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub src: usize,
    pub dst: usize,
    pub power_w: f64,
    pub rate_bps: f64,
    pub snr_db: f64,
    pub snr: f64,
    pub path_gain: f64,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl GraphFile {
    pub fn from_graph(g: &UavGraph) -> Self {
        Self {
            nodes: g
                .nodes
                .iter()
                .map(|n| GraphNode { id: n.id, position: n.position, s_i: n.dataset_size, o_i: n.out_budget, max_power_w: n.max_power_w })
                .collect(),
            edges: g
                .edges
                .values()
                .map(|b| GraphEdge {
                    src: b.src,
                    dst: b.dst,
                    power_w: b.tx_power_w,
                    rate_bps: b.rate_bps,
                    snr_db: b.snr_db(),
                    snr: b.snr,
                    path_gain: b.path_gain,
                    bandwidth_hz: b.bandwidth_hz,
                    noise_w: b.noise_w,
                })
                .collect(),
        }
    }

    pub fn to_graph(&self) -> UavGraph {
        UavGraph {
            nodes: self
                .nodes
                .iter()
                .map(|n| UavNode { id: n.id, position: n.position, dataset_size: n.s_i, max_power_w: n.max_power_w, out_budget: n.o_i })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    let b = LinkBudget {
                        src: e.src,
                        dst: e.dst,
                        path_gain: e.path_gain,
                        tx_power_w: e.power_w,
                        bandwidth_hz: e.bandwidth_hz,
                        noise_w: e.noise_w,
                        rate_bps: e.rate_bps,
                        snr: e.snr,
                    };
                    ((e.src, e.dst), b)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellWeight {
    pub cell: Cell,
    pub w: f64,
}

fn table_out(t: &CondTable) -> Vec<CellWeight> {
    t.iter().map(|(c, w)| CellWeight { cell: *c, w: *w }).collect()
}

fn table_in(v: &[CellWeight]) -> CondTable {
    v.iter().map(|e| (e.cell, e.w)).collect()
}

/// JSON bin tables of one UAV's generator and discriminator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub uav_id: usize,
    pub iteration: u64,
    pub space: SampleSpace,
    /// Generator weights per 1-based condition, in order.
    pub generator: Vec<Vec<CellWeight>>,
    pub discriminator: Vec<Vec<CellWeight>>,
    pub training_error: f64,
}

impl ModelSnapshot {
    pub fn new(uav_id: usize, iteration: u64, g: &GenerativeModel, d: &Discriminator) -> Self {
        Self {
            uav_id,
            iteration,
            space: g.space,
            generator: g.tables.iter().map(table_out).collect(),
            discriminator: d.tables.iter().map(table_out).collect(),
            training_error: d.training_error,
        }
    }

    pub fn generator(&self) -> GenerativeModel {
        GenerativeModel { space: self.space, tables: self.generator.iter().map(|t| table_in(t)).collect() }
    }

    pub fn discriminator(&self) -> Discriminator {
        Discriminator { tables: self.discriminator.iter().map(|t| table_in(t)).collect(), training_error: self.training_error }
    }
}

/// Stringified values for a CSV comment header.
pub fn header_from<T: Serialize>(v: &T) -> Result<Vec<(String, String)>, AppError> {
    let json = serde_json::to_value(v)?;
    let mut out = Vec::new();
    flatten("", &json, &mut out);
    Ok(out)
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
    match v {
        serde_json::Value::Object(m) => {
            let m: BTreeMap<_, _> = m.iter().collect();
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
