//! Per-window classification dump.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::WindowedFeatures;
use crate::dynamics::fmt_f64;
use crate::error::{Error, Result};
use crate::Group;

pub const CLASSIFICATION_HEADER: &str =
    "window_start,agent_id,true_group,v_w,phi_bar_w,pred_agent_only,pred_neighborhood";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationRow {
    pub window_start: usize,
    pub agent_id: usize,
    pub true_group: Group,
    pub v_w: f64,
    pub phi_bar_w: f64,
    pub pred_agent_only: Group,
    pub pred_neighborhood: Group,
}

/// One row per window and agent, classified with `mu`.
pub fn classification_rows(features: &WindowedFeatures, labels: &[Group], mu: f64) -> Result<Vec<ClassificationRow>> {
    if labels.len() != features.n_agents {
        return Err(Error::LengthMismatch {
            expected: features.n_agents,
            actual: labels.len(),
        });
    }
    let mut rows = Vec::with_capacity(features.v_w.len());
    for k in 0..features.n_windows() {
        let c = features.classify(k, mu);
        for (i, &true_group) in labels.iter().enumerate() {
            rows.push(ClassificationRow {
                window_start: k,
                agent_id: i,
                true_group,
                v_w: c.v_w[i],
                phi_bar_w: c.phi_w[i],
                pred_agent_only: super::classify_agent_only(c.v_w[i]),
                pred_neighborhood: c.predicted[i],
            });
        }
    }
    Ok(rows)
}

pub fn write_classification_dump(rows: &[ClassificationRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{CLASSIFICATION_HEADER}")?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.window_start,
                r.agent_id,
                r.true_group,
                fmt_f64(r.v_w),
                fmt_f64(r.phi_bar_w),
                r.pred_agent_only,
                r.pred_neighborhood
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_classification_dump(path: &Path) -> Result<Vec<ClassificationRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .unwrap_or_default();
    if header.trim() != CLASSIFICATION_HEADER {
        return Err(Error::parse("classification dump", format!("unexpected header {header:?}")));
    }
    let group = |s: &str| {
        s.parse::<u8>()
            .ok()
            .and_then(Group::from_number)
            .ok_or_else(|| Error::parse("classification dump", format!("bad group {s:?}")))
    };
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::parse("classification dump", format!("line {}: expected 7 fields", n + 2)));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::parse("classification dump", format!("line {}: {e}", n + 2)))
        };
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse("classification dump", format!("line {}: {e}", n + 2)))
        };
        rows.push(ClassificationRow {
            window_start: idx(f[0])?,
            agent_id: idx(f[1])?,
            true_group: group(f[2])?,
            v_w: num(f[3])?,
            phi_bar_w: num(f[4])?,
            pred_agent_only: group(f[5])?,
            pred_neighborhood: group(f[6])?,
        });
    }
    Ok(rows)
}
