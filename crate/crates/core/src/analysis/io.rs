//! Network JSON and demand CSV readers, CSV matrix writers.
//!
//! Floats are written in their shortest round-trip form (`{:?}`), so a value
//! read back parses to the same bits.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DemandSchedule, Network};

fn input_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_network(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path).map_err(|e| input_error(path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| input_error(path, format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn write_network(path: &Path, net: &Network) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(net)?)?;
    Ok(())
}

/// Reads a demand CSV with header `node_0,…,node_{n-1}` and one row per
/// period. `n_nodes` fixes the expected width when given.
pub fn read_demand(path: &Path, n_nodes: Option<usize>) -> Result<DemandSchedule> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input_error(path, e.to_string()))?;
    let header = rdr.headers().map_err(|e| input_error(path, e.to_string()))?.clone();
    let n = n_nodes.unwrap_or(header.len());
    if header.len() != n {
        return Err(input_error(path, format!("header has {} columns, network has {n} nodes", header.len())));
    }
    for (i, name) in header.iter().enumerate() {
        if name != format!("node_{i}") {
            return Err(input_error(path, format!("line 1: column {i} is {name:?}, expected \"node_{i}\"")));
        }
    }
    let mut values = Vec::new();
    for (t, rec) in rdr.records().enumerate() {
        let line = t + 2;
        let rec = rec.map_err(|e| input_error(path, format!("line {line}: {e}")))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| input_error(path, format!("line {line}, node_{i}: {s:?} is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
    }
    if values.is_empty() {
        return Err(input_error(path, "no demand rows"));
    }
    DemandSchedule::new(values).map_err(|e| input_error(path, e.to_string()))
}

/// Writes `rows[t][j]` under the given column names.
pub fn write_matrix_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn node_header(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("node_{i}")).collect()
}

pub fn device_header(net: &Network) -> Vec<String> {
    net.devices.iter().enumerate().map(|(j, d)| d.label(j)).collect()
}

pub fn write_demand(path: &Path, demand: &DemandSchedule) -> Result<()> {
    write_matrix_csv(path, &node_header(demand.n_nodes()), demand.rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::storage_toy;

    #[test]
    fn demand_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = DemandSchedule::new(vec![vec![0.1, 1.0 / 3.0], vec![1e-17, 12345.678901234567]]).unwrap();
        write_demand(&p, &d).unwrap();
        assert_eq!(read_demand(&p, Some(2)).unwrap(), d);
    }

    #[test]
    fn network_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.json");
        let (net, _) = storage_toy();
        write_network(&p, &net).unwrap();
        assert_eq!(read_network(&p).unwrap(), net);
    }

    #[test]
    fn bad_inputs_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "node_0,node_1\n1,2\n3,x\n").unwrap();
        let e = read_demand(&p, Some(2)).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("node_1"), "{e}");
        fs::write(&p, "node_0,node_2\n1,2\n").unwrap();
        assert!(read_demand(&p, None).unwrap_err().to_string().contains("line 1"));
        fs::write(&p, "node_0\n1\n").unwrap();
        assert!(read_demand(&p, Some(2)).is_err());
        fs::write(&p, "node_0\n").unwrap();
        assert!(read_demand(&p, Some(1)).is_err());
        let j = dir.path().join("n.json");
        fs::write(&j, "{\n  \"n_nodes\": 1,\n  \"horizon\": }").unwrap();
        assert!(read_network(&j).unwrap_err().to_string().contains("line 3"));
    }
}
