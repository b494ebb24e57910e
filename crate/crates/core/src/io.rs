//! File interchange formats.
//!
//! All node ids are 1-based in files (the API is 0-based). Floats round-trip
//! exactly: values are written with Rust's shortest-representation `Display`,
//! which parses back to the identical bits.
//!
//! - graph: CSV `i,j,w`, one row per undirected edge
//! - signal: CSV `node_id,value`, one row per node, ids a permutation of 1..N
//! - features: CSV `node_id,<feature columns>`
//! - metric: JSON `{dim, data}` (row-major)
//! - noise estimate: JSON `{sigma2, k, w_hat, regions}`

use crate::error::{EdgeErrorKind, Error, Result};
use crate::graph::{Graph, GraphSignal};
use crate::metric::{FeatureTable, MetricMatrix, MetricMatrixJson};
use crate::noise::{NoiseEstimate, Region};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, row: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    record: &csv::StringRecord,
    index: usize,
    what: &str,
) -> Result<T> {
    let raw = record
        .get(index)
        .ok_or_else(|| parse_err(path, record_line(record), format!("missing {what} column")))?;
    raw.parse().map_err(|_| {
        parse_err(
            path,
            record_line(record),
            format!("cannot parse {what} from '{raw}' (column {})", index + 1),
        )
    })
}

/// Read a graph from CSV with header `i,j,w`. Node count is the largest id
/// seen. Rejects self-loops, nonpositive weights, and duplicate pairs.
pub fn read_graph_csv(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    if headers.len() < 3 {
        return Err(parse_err(path, 1, "expected header i,j,w"));
    }
    let mut rows: Vec<(usize, usize, f64, u64)> = Vec::new();
    let mut max_id = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = record_line(&record);
        let i: usize = parse_field(path, &record, 0, "node index i")?;
        let j: usize = parse_field(path, &record, 1, "node index j")?;
        let w: f64 = parse_field(path, &record, 2, "weight w")?;
        if i == 0 || j == 0 {
            return Err(parse_err(path, line, "node ids are 1-based; got 0"));
        }
        if i == j {
            return Err(parse_err(path, line, format!("self-loop at node {i}")));
        }
        if !w.is_finite() || w <= 0.0 {
            return Err(parse_err(path, line, format!("weight must be positive and finite, got {w}")));
        }
        max_id = max_id.max(i).max(j);
        rows.push((i - 1, j - 1, w, line));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "graph file has no edges"));
    }
    Graph::new(max_id, rows.iter().map(|&(i, j, w, _)| (i, j, w))).map_err(|e| match e {
        Error::InvalidEdge {
            i,
            j,
            reason: EdgeErrorKind::Duplicate,
        } => parse_err(path, 0, format!("duplicate edge ({}, {})", i + 1, j + 1)),
        other => other,
    })
}

pub fn write_graph_csv(path: impl AsRef<Path>, graph: &Graph) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("i,j,w\n");
    for e in graph.edges() {
        out.push_str(&format!("{},{},{}\n", e.i + 1, e.j + 1, e.weight));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read a signal from CSV with header `node_id,value`; ids must be a
/// permutation of 1..N.
pub fn read_signal_csv(path: impl AsRef<Path>) -> Result<GraphSignal> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = record_line(&record);
        let id: usize = parse_field(path, &record, 0, "node_id")?;
        let value: f64 = parse_field(path, &record, 1, "value")?;
        if id == 0 {
            return Err(parse_err(path, line, "node ids are 1-based; got 0"));
        }
        if !value.is_finite() {
            return Err(parse_err(path, line, "value is not finite"));
        }
        rows.push((id, value));
    }
    let n = rows.len();
    let mut values = vec![f64::NAN; n];
    for (id, value) in rows {
        if id > n {
            return Err(parse_err(
                path,
                0,
                format!("node id {id} exceeds row count {n}; ids must cover 1..{n}"),
            ));
        }
        if !values[id - 1].is_nan() {
            return Err(parse_err(path, 0, format!("duplicate node id {id}")));
        }
        values[id - 1] = value;
    }
    GraphSignal::new(values)
}

pub fn write_signal_csv(path: impl AsRef<Path>, signal: &GraphSignal) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("node_id,value\n");
    for (i, v) in signal.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read per-node features from CSV with header `node_id,<columns...>`; ids
/// must be a permutation of 1..N and every row must have the same width.
pub fn read_features_csv(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    if headers.len() < 2 {
        return Err(parse_err(path, 1, "expected header node_id,<features...>"));
    }
    let dim = headers.len() - 1;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = record_line(&record);
        if record.len() != dim + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} columns, found {}", dim + 1, record.len()),
            ));
        }
        let id: usize = parse_field(path, &record, 0, "node_id")?;
        if id == 0 {
            return Err(parse_err(path, line, "node ids are 1-based; got 0"));
        }
        let mut feats = Vec::with_capacity(dim);
        for c in 0..dim {
            feats.push(parse_field::<f64>(path, &record, c + 1, "feature value")?);
        }
        rows.push((id, feats));
    }
    let n = rows.len();
    let mut table: Vec<Option<Vec<f64>>> = vec![None; n];
    for (id, feats) in rows {
        if id > n {
            return Err(parse_err(
                path,
                0,
                format!("node id {id} exceeds row count {n}; ids must cover 1..{n}"),
            ));
        }
        if table[id - 1].is_some() {
            return Err(parse_err(path, 0, format!("duplicate node id {id}")));
        }
        table[id - 1] = Some(feats);
    }
    FeatureTable::new(table.into_iter().map(|r| r.expect("all ids placed")).collect())
}

pub fn read_metric_json(path: impl AsRef<Path>) -> Result<MetricMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let raw: MetricMatrixJson =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))?;
    MetricMatrix::try_from(raw)
}

pub fn write_metric_json(path: impl AsRef<Path>, metric: &MetricMatrix) -> Result<()> {
    let path = path.as_ref();
    let raw = MetricMatrixJson {
        dim: metric.dim(),
        data: metric.row_major().to_vec(),
    };
    let text = serde_json::to_string_pretty(&raw).expect("metric serializes");
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// JSON shape of a noise estimate: `{sigma2, k, w_hat, regions}` with
/// 1-based node ids inside regions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseEstimateJson {
    pub sigma2: f64,
    pub k: usize,
    pub w_hat: f64,
    pub regions: Vec<Region>,
}

impl From<&NoiseEstimate> for NoiseEstimateJson {
    fn from(est: &NoiseEstimate) -> Self {
        NoiseEstimateJson {
            sigma2: est.sigma2,
            k: est.k,
            w_hat: est.w_hat,
            regions: est
                .regions
                .iter()
                .map(|r| Region {
                    nodes: r.nodes.iter().map(|&n| n + 1).collect(),
                    mean: r.mean,
                    variance: r.variance,
                })
                .collect(),
        }
    }
}

pub fn write_noise_json(path: impl AsRef<Path>, est: &NoiseEstimate) -> Result<()> {
    let path = path.as_ref();
    let text =
        serde_json::to_string_pretty(&NoiseEstimateJson::from(est)).expect("estimate serializes");
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_noise_json(path: impl AsRef<Path>) -> Result<NoiseEstimateJson> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))
}
