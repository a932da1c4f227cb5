//! Trajectory tables: export, re-import and summary metrics.

use std::fs;
use std::path::Path;

use hbac_core::{computation_marginal, Scalar, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::output::fmt_f64;
use crate::{CliError, Result};

const BASE_COLUMNS: [&str; 5] = ["t", "p0", "delta_p0", "max_distance", "qubit1_polarization"];

/// One exported iteration. `marginal` is the post-reset computation marginal,
/// present when snapshots were recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub p0: f64,
    pub delta_p0: f64,
    pub max_distance: f64,
    pub qubit1_polarization: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal: Option<Vec<f64>>,
}

pub fn rows_from<T: Scalar>(traj: &Trajectory<T>) -> Vec<TrajectoryRow> {
    traj.records
        .iter()
        .map(|r| TrajectoryRow {
            t: r.t,
            p0: r.p0,
            delta_p0: r.delta_p0,
            max_distance: r.max_distance,
            qubit1_polarization: r.qubit1_polarization,
            marginal: r.post_reset.as_ref().map(|s| {
                computation_marginal(s)
                    .probs()
                    .iter()
                    .map(Scalar::to_f64)
                    .collect()
            }),
        })
        .collect()
}

pub fn csv_table(rows: &[TrajectoryRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let width = rows
        .first()
        .and_then(|r| r.marginal.as_ref())
        .map_or(0, Vec::len);
    let header = BASE_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..width).map(|i| format!("p_{i}")))
        .collect();
    let body = rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.t.to_string(),
                fmt_f64(r.p0),
                fmt_f64(r.delta_p0),
                fmt_f64(r.max_distance),
                fmt_f64(r.qubit1_polarization),
            ];
            if let Some(m) = &r.marginal {
                cells.extend(m.iter().copied().map(fmt_f64));
            }
            cells
        })
        .collect();
    (header, body)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() < BASE_COLUMNS.len() || header.iter().zip(BASE_COLUMNS).any(|(a, b)| a != b) {
        return Err(CliError::usage(format!(
            "{} is not a trajectory table",
            path.display()
        )));
    }
    let float = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::usage(format!("bad number '{s}' in {}", path.display())))
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let t = record[0]
            .parse()
            .map_err(|_| CliError::usage(format!("bad iteration '{}'", &record[0])))?;
        let marginal = (record.len() > BASE_COLUMNS.len())
            .then(|| {
                record
                    .iter()
                    .skip(BASE_COLUMNS.len())
                    .map(float)
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        rows.push(TrajectoryRow {
            t,
            p0: float(&record[1])?,
            delta_p0: float(&record[2])?,
            max_distance: float(&record[3])?,
            qubit1_polarization: float(&record[4])?,
            marginal,
        });
    }
    Ok(rows)
}

/// Reads the `data` array of a JSON trajectory artifact.
pub fn read_json(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let data = doc
        .get_mut("data")
        .map(Value::take)
        .ok_or_else(|| CliError::usage(format!("{} has no data array", path.display())))?;
    Ok(serde_json::from_value(data)?)
}

/// Reads a trajectory artifact, choosing the parser by extension.
pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json(path),
        _ => read_csv(path),
    }
}

/// Metrics that must survive an export/import cycle unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub iterations: usize,
    pub final_p0: f64,
    pub final_qubit1_polarization: f64,
    pub final_max_distance: f64,
    pub total_p0_gain: f64,
    pub min_delta_p0: f64,
}

impl TrajectorySummary {
    pub fn from_rows(rows: &[TrajectoryRow]) -> Option<Self> {
        let last = rows.last()?;
        Some(Self {
            iterations: rows.len(),
            final_p0: last.p0,
            final_qubit1_polarization: last.qubit1_polarization,
            final_max_distance: last.max_distance,
            total_p0_gain: rows.iter().map(|r| r.delta_p0).sum(),
            min_delta_p0: rows
                .iter()
                .map(|r| r.delta_p0)
                .fold(f64::INFINITY, f64::min),
        })
    }
}
