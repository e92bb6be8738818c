//! Trajectory files: a CSV of `t,agent_id,group,x,y,vx,vy` rows plus a JSON
//! manifest next to it (`<stem>.json`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Frame, SimParams, Trajectory};
use crate::error::{Error, Result};
use crate::{Group, Vec2, TOOL_VERSION};

pub const TRAJECTORY_HEADER: &str = "t,agent_id,group,x,y,vx,vy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub params: SimParams,
    pub seed: u64,
    pub domain_edge: f64,
    pub tool_version: String,
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(traj.frames.len() * traj.n_agents() * 120);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (k, frame) in traj.frames.iter().enumerate() {
        let t = fmt_f64(traj.time(k));
        for (i, (p, v)) in frame.positions.iter().zip(&frame.velocities).enumerate() {
            let _ = writeln!(
                out,
                "{t},{i},{},{},{},{},{}",
                traj.labels[i],
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(v.x),
                fmt_f64(v.y)
            );
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;

    let manifest = TrajectoryManifest {
        params: traj.params.clone(),
        seed: traj.params.seed,
        domain_edge: traj.domain_edge,
        tool_version: TOOL_VERSION.to_string(),
    };
    let mpath = manifest_path(path);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&mpath, json + "\n").map_err(|e| Error::io(&mpath, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mpath = manifest_path(path);
    let manifest: TrajectoryManifest = serde_json::from_str(
        &fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?,
    )
    .map_err(|e| Error::parse("trajectory manifest", e))?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(Error::parse("trajectory csv", "missing or unexpected header"));
    }

    let n = manifest.params.n_agents;
    let mut labels: Vec<Option<Group>> = vec![None; n];
    let mut frames: Vec<Frame> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |d: &str| Error::parse("trajectory csv", format!("line {}: {d}", lineno + 2));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(bad("expected 7 columns"));
        }
        let agent: usize = cols[1].parse().map_err(|_| bad("agent_id"))?;
        if agent >= n {
            return Err(bad("agent_id out of range"));
        }
        let group = cols[2]
            .parse::<u8>()
            .ok()
            .and_then(Group::from_number)
            .ok_or_else(|| bad("group"))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("number"));
        let (x, y, vx, vy) = (num(cols[3])?, num(cols[4])?, num(cols[5])?, num(cols[6])?);
        match labels[agent] {
            None => labels[agent] = Some(group),
            Some(g) if g != group => return Err(bad("group label changes over time")),
            _ => {}
        }
        if agent == 0 {
            frames.push(Frame {
                positions: Vec::with_capacity(n),
                velocities: Vec::with_capacity(n),
            });
        }
        let frame = frames.last_mut().ok_or_else(|| bad("frame must start with agent 0"))?;
        if frame.positions.len() != agent {
            return Err(bad("agents out of order"));
        }
        frame.positions.push(Vec2::new(x, y));
        frame.velocities.push(Vec2::new(vx, vy));
    }
    if frames.iter().any(|f| f.len() != n) {
        return Err(Error::parse("trajectory csv", "incomplete frame"));
    }
    let labels = labels
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::parse("trajectory csv", "agent without rows"))?;
    Ok(Trajectory {
        params: manifest.params,
        domain_edge: manifest.domain_edge,
        labels,
        frames,
    })
}
