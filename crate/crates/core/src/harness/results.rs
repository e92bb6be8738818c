//! Results CSV (one row per run, observer and group) and its JSON sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunManifest;
use crate::dynamics::{fmt_f64, SimParams};
use crate::error::{Error, Result};
use crate::metrics::{Histogram, Observer, RunSummary, SweepRecord};
use crate::observers::LinearFit;
use crate::Group;

pub const RESULTS_HEADER: &str = "rho,Nr,s0,run_seed,observer,group,n_m_mean,c_in_initial,c_in_final,drift_speed";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub rho: f64,
    pub number_ratio: f64,
    pub s0: f64,
    pub run_seed: u64,
    pub observer: Observer,
    pub group: Group,
    pub n_m_mean: f64,
    pub c_in_initial: usize,
    pub c_in_final: usize,
    pub drift_speed: f64,
}

/// Point-level data that does not fit the per-run rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeta {
    pub params: SimParams,
    pub mu: f64,
    pub fit: Option<LinearFit>,
    pub n_windows: usize,
    pub faulted_runs: usize,
    pub histograms: [Option<Histogram>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsSidecar {
    pub tool_version: String,
    pub manifest: Option<RunManifest>,
    pub points: Vec<PointMeta>,
}

/// `results.csv` -> `results.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Flattens records into rows in record, run, observer, group order.
pub fn results_rows(records: &[SweepRecord]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for rec in records {
        for run in &rec.runs {
            for observer in Observer::ALL {
                let Some(n_m) = run.n_m(observer) else { continue };
                for group in Group::BOTH {
                    rows.push(ResultRow {
                        rho: rec.params.density,
                        number_ratio: rec.params.number_ratio,
                        s0: rec.params.intrinsic_speed,
                        run_seed: run.seed,
                        observer,
                        group,
                        n_m_mean: n_m[group.index()],
                        c_in_initial: run.c_in_initial[group.index()],
                        c_in_final: run.c_in_final[group.index()],
                        drift_speed: run.drift_speed,
                    });
                }
            }
        }
    }
    rows
}

fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.rho),
            fmt_f64(r.number_ratio),
            fmt_f64(r.s0),
            r.run_seed,
            r.observer,
            r.group,
            fmt_f64(r.n_m_mean),
            r.c_in_initial,
            r.c_in_final,
            fmt_f64(r.drift_speed)
        ));
    }
    out
}

/// Writes `path` and its JSON sidecar. Row order follows `records`.
pub fn write_results(records: &[SweepRecord], manifest: Option<&RunManifest>, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty("no records to write".into()));
    }
    let sidecar = ResultsSidecar {
        tool_version: crate::TOOL_VERSION.to_string(),
        manifest: manifest.cloned(),
        points: records
            .iter()
            .map(|r| PointMeta {
                params: r.params.clone(),
                mu: r.mu,
                fit: r.fit,
                n_windows: r.n_windows,
                faulted_runs: r.faulted_runs,
                histograms: r.histograms.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Config(format!("cannot serialize results sidecar: {e}")))?;
    write_file(path, render_csv(&results_rows(records)).as_bytes())?;
    write_file(&sidecar_path(path), json.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn parse_row(line: &str, lineno: usize) -> Result<ResultRow> {
    let bad = |detail: String| Error::parse("results", format!("line {lineno}: {detail}"));
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 10 {
        return Err(bad(format!("expected 10 fields, found {}", f.len())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
    Ok(ResultRow {
        rho: num(f[0])?,
        number_ratio: num(f[1])?,
        s0: num(f[2])?,
        run_seed: f[3].parse().map_err(|e| bad(format!("{:?}: {e}", f[3])))?,
        observer: f[4].parse()?,
        group: f[5]
            .parse::<u8>()
            .ok()
            .and_then(Group::from_number)
            .ok_or_else(|| bad(format!("bad group {:?}", f[5])))?,
        n_m_mean: num(f[6])?,
        c_in_initial: int(f[7])?,
        c_in_final: int(f[8])?,
        drift_speed: num(f[9])?,
    })
}

/// Reads a results CSV and its sidecar back into records.
pub fn read_results(path: &Path) -> Result<(Vec<SweepRecord>, Option<RunManifest>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let sidecar: ResultsSidecar = serde_json::from_str(&fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?)
        .map_err(|e| Error::parse("results sidecar", e.to_string()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RESULTS_HEADER) {
        return Err(Error::parse("results", "unexpected header"));
    }
    let rows = lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| parse_row(l, k + 2))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = rows.into_iter().peekable();
    let mut records = Vec::with_capacity(sidecar.points.len());
    for meta in sidecar.points {
        let p = &meta.params;
        let at_point = |r: &ResultRow| {
            r.rho.to_bits() == p.density.to_bits()
                && r.number_ratio.to_bits() == p.number_ratio.to_bits()
                && r.s0.to_bits() == p.intrinsic_speed.to_bits()
        };
        let mut runs: Vec<RunSummary> = Vec::new();
        while let Some(row) = rows.next_if(|r| at_point(r)) {
            if runs.last().map(|r| r.seed) != Some(row.run_seed) {
                runs.push(RunSummary {
                    seed: row.run_seed,
                    n_m_agent: [f64::NAN; 2],
                    n_m_neighborhood: [f64::NAN; 2],
                    n_m_fitted: None,
                    c_in_initial: [0; 2],
                    c_in_final: [0; 2],
                    drift_speed: row.drift_speed,
                });
            }
            let run = runs.last_mut().expect("just pushed");
            let g = row.group.index();
            let slot = match row.observer {
                Observer::AgentOnly => &mut run.n_m_agent,
                Observer::Neighborhood => &mut run.n_m_neighborhood,
                Observer::Fitted => run.n_m_fitted.get_or_insert([f64::NAN; 2]),
            };
            slot[g] = row.n_m_mean;
            run.c_in_initial[g] = row.c_in_initial;
            run.c_in_final[g] = row.c_in_final;
        }
        if runs.is_empty() {
            return Err(Error::parse(
                "results",
                format!("no rows for rho={} Nr={} s0={}", p.density, p.number_ratio, p.intrinsic_speed),
            ));
        }
        records.push(SweepRecord {
            params: meta.params,
            mu: meta.mu,
            fit: meta.fit,
            n_windows: meta.n_windows,
            faulted_runs: meta.faulted_runs,
            runs,
            histograms: meta.histograms,
        });
    }
    if rows.next().is_some() {
        return Err(Error::parse("results", "rows without a matching sidecar entry"));
    }
    Ok((records, sidecar.manifest))
}
