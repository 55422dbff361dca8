//! CSV formats. Group labels are 1-based in files, 0-based in memory.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

use crate::pmf::{CountGrid, JointPmfEstimate};
use crate::sim::{EdgeRecord, GraphState, Snapshot};
use crate::tail::{DegreeDataset, TailError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("ParseError: {0}")]
    Csv(#[from] csv::Error),
    #[error("ParseError: line {line}: {message}")]
    Content { line: u64, message: String },
    #[error(transparent)]
    Data(#[from] TailError),
}

#[derive(Serialize)]
struct EdgeRow {
    step: u64,
    source: u32,
    target: u32,
    reciprocal: u8,
}

pub fn write_edges<W: Write>(w: W, edges: &[EdgeRecord]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for e in edges {
        out.serialize(EdgeRow { step: e.step, source: e.source, target: e.target, reciprocal: e.reciprocal as u8 })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct DegreeRow {
    node: u64,
    group: u32,
    in_deg: u64,
    out_deg: u64,
}

pub fn write_degrees<W: Write>(w: W, state: &GraphState) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    let rows = state.in_degrees().iter().zip(state.out_degrees()).zip(state.node_groups());
    for (v, ((&i, &o), &g)) in rows.enumerate() {
        out.serialize(DegreeRow { node: v as u64 + 1, group: g + 1, in_deg: i as u64, out_deg: o as u64 })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_degrees<R: Read>(r: R) -> Result<DegreeDataset, IoError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut pairs = Vec::new();
    let mut groups = Vec::new();
    for (i, row) in rdr.deserialize::<DegreeRow>().enumerate() {
        let row = row?;
        if row.group == 0 {
            return Err(IoError::Content { line: i as u64 + 2, message: "group labels start at 1".into() });
        }
        pairs.push((row.in_deg, row.out_deg));
        groups.push(row.group - 1);
    }
    Ok(DegreeDataset::new(pairs, Some(groups))?)
}

/// `step,total_edges,in_1,out_1,...,in_K,out_K`
pub fn write_trajectory<W: Write>(w: W, snapshots: &[Snapshot], groups: usize) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["step".to_string(), "total_edges".to_string()];
    for m in 1..=groups {
        header.push(format!("in_{m}"));
        header.push(format!("out_{m}"));
    }
    out.write_record(&header)?;
    for s in snapshots {
        let mut rec = vec![s.step.to_string(), s.total_edges.to_string()];
        for m in 0..groups {
            rec.push(s.group_in[m].to_string());
            rec.push(s.group_out[m].to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub k: usize,
    pub l: usize,
    pub probability: f64,
}

pub fn write_pmf_rows<W: Write>(w: W, rows: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    for (k, l, p) in rows {
        out.serialize(PmfRow { k, l, probability: p })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_pmf<W: Write>(w: W, est: &JointPmfEstimate) -> Result<(), IoError> {
    write_pmf_rows(w, est.rows())
}

/// Per-group pmf, normalized within the group.
pub fn write_group_pmf<W: Write>(w: W, est: &JointPmfEstimate, m: usize) -> Result<(), IoError> {
    let width = est.lmax + 1;
    let p = est.group_pmf(m);
    write_pmf_rows(w, p.into_iter().enumerate().map(|(i, v)| (i / width, i % width, v)))
}

pub fn read_pmf<R: Read>(r: R) -> Result<Vec<PmfRow>, IoError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for (i, row) in rdr.deserialize::<PmfRow>().enumerate() {
        let row = row?;
        if !(0.0..=1.0).contains(&row.probability) {
            return Err(IoError::Content {
                line: i as u64 + 2,
                message: format!("probability {} outside [0, 1]", row.probability),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Turns pmf rows back into integer counts over `replicates` samples.
pub fn pmf_rows_to_counts(rows: &[PmfRow], replicates: u64) -> CountGrid {
    let kmax = rows.iter().map(|r| r.k).max().unwrap_or(0);
    let lmax = rows.iter().map(|r| r.l).max().unwrap_or(0);
    let mut g = CountGrid::new(kmax, lmax);
    for r in rows {
        g.add_n(r.k as u64, r.l as u64, (r.probability * replicates as f64).round() as u64);
    }
    g
}

/// Sidecar for a pmf CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfMetadata {
    pub schema_version: u32,
    pub kmax: usize,
    pub lmax: usize,
    pub replicates: u64,
    pub failed: u64,
    pub overflow_mass: f64,
    pub seed: u64,
    pub group_files: Vec<String>,
}
