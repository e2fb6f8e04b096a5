//! Sweep records and their flat CSV form.

use std::io::{Read, Write};

use gibbs_tree_core::{Classification, InvariantSet, SetKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionEntry {
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
    pub t: Option<f64>,
    pub classification: Classification,
    pub residual_full: f64,
}

/// All solutions found on one invariant set at one θ, sorted by `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub theta: f64,
    pub set: InvariantSet,
    pub solutions: Vec<SolutionEntry>,
    pub count: usize,
}

impl SweepRecord {
    pub fn new(theta: f64, set: InvariantSet, solutions: Vec<SolutionEntry>) -> Self {
        let count = solutions.len();
        Self { theta, set, solutions, count }
    }
}

/// One CSV line. Field order fixes the header
/// `theta,set_kind,m,sol_index,x,y,z,t,classification,residual_full`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub theta: f64,
    pub set_kind: SetKind,
    pub m: usize,
    pub sol_index: usize,
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
    pub t: Option<f64>,
    pub classification: Classification,
    pub residual_full: f64,
}

pub const CSV_HEADER: &str = "theta,set_kind,m,sol_index,x,y,z,t,classification,residual_full";

pub fn to_rows(records: &[SweepRecord]) -> Vec<CsvRow> {
    records
        .iter()
        .flat_map(|r| {
            r.solutions.iter().enumerate().map(move |(i, s)| CsvRow {
                theta: r.theta,
                set_kind: r.set.kind,
                m: r.set.m,
                sol_index: i,
                x: s.x,
                y: s.y,
                z: s.z,
                t: s.t,
                classification: s.classification,
                residual_full: s.residual_full,
            })
        })
        .collect()
}

/// Regroups consecutive rows sharing `(theta, set)`. A record without
/// solutions has no rows and therefore does not survive the round trip.
pub fn from_rows(rows: Vec<CsvRow>) -> Result<Vec<SweepRecord>, CliError> {
    let mut records: Vec<SweepRecord> = Vec::new();
    for (line, row) in rows.into_iter().enumerate() {
        let set = InvariantSet { kind: row.set_kind, m: row.m };
        let entry = SolutionEntry {
            x: row.x,
            y: row.y,
            z: row.z,
            t: row.t,
            classification: row.classification,
            residual_full: row.residual_full,
        };
        match records.last_mut() {
            Some(r) if r.theta.to_bits() == row.theta.to_bits() && r.set == set && row.sol_index == r.count => {
                r.solutions.push(entry);
                r.count += 1;
            }
            _ if row.sol_index == 0 => records.push(SweepRecord::new(row.theta, set, vec![entry])),
            _ => {
                return Err(CliError::Input(format!(
                    "data row {}: sol_index {} does not continue the previous record",
                    line + 1,
                    row.sol_index
                )))
            }
        }
    }
    Ok(records)
}

pub fn write_csv<W: Write>(writer: W, records: &[SweepRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    let rows = to_rows(records);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SweepRecord>, CliError> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(CliError::Input(format!("unexpected CSV header {:?}", header.join(","))));
    }
    let rows = r.deserialize().collect::<Result<Vec<CsvRow>, _>>()?;
    from_rows(rows)
}
