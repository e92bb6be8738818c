//! Misclassification counts, clustering, drift, trapping and velocity
//! histograms, plus the per-run and per-grid-point summaries built on them.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{AgentState, SimParams, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{cluster_count, voronoi_adjacency};
use crate::observers::{classify_agent_only, classify_neighborhood, LinearFit, WindowedFeatures};
use crate::{Group, Vec2};

/// Disagreements per true group: `[group 1, group 2]`.
pub fn misclassification_count(predicted: &[Group], truth: &[Group]) -> Result<[usize; 2]> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    let mut counts = [0; 2];
    for (p, t) in predicted.iter().zip(truth) {
        if p != t {
            counts[t.index()] += 1;
        }
    }
    Ok(counts)
}

/// Mean misclassifications per window for the rule `v_w >= mu * phi_w`.
///
/// `mu == 0` is the agent-only observer.
pub fn mean_misclassification(features: &WindowedFeatures, labels: &[Group], mu: f64) -> Result<[f64; 2]> {
    if mu == 0.0 {
        mean_misclassification_by(features, labels, |v, _| classify_agent_only(v))
    } else {
        mean_misclassification_by(features, labels, |v, phi| classify_neighborhood(v, phi, mu))
    }
}

/// Mean misclassifications per window for an arbitrary `(v_w, phi_w)` rule.
pub fn mean_misclassification_by(
    features: &WindowedFeatures,
    labels: &[Group],
    rule: impl Fn(f64, f64) -> Group,
) -> Result<[f64; 2]> {
    if labels.len() != features.n_agents {
        return Err(Error::LengthMismatch {
            expected: features.n_agents,
            actual: labels.len(),
        });
    }
    let n_windows = features.n_windows();
    let mut totals = [0usize; 2];
    for k in 0..n_windows {
        for ((&v, &phi), &truth) in features.v(k).iter().zip(features.phi(k)).zip(labels) {
            if rule(v, phi) != truth {
                totals[truth.index()] += 1;
            }
        }
    }
    Ok(totals.map(|t| t as f64 / n_windows as f64))
}

/// The second half of the frames.
pub fn steady_window(n_frames: usize) -> Range<usize> {
    n_frames / 2..n_frames
}

/// Mean `v_x` over all agents and the frames in `steady`.
pub fn drift_speed(traj: &Trajectory, steady: Range<usize>) -> Result<f64> {
    if steady.is_empty() || steady.end > traj.frames.len() || traj.n_agents() == 0 {
        return Err(Error::Empty(format!(
            "steady window {steady:?} of {} frames",
            traj.frames.len()
        )));
    }
    let frames = &traj.frames[steady];
    let total: f64 = frames
        .iter()
        .map(|f| f.velocities.iter().map(|v| v.x).sum::<f64>())
        .sum();
    Ok(total / (frames.len() * traj.n_agents()) as f64)
}

/// `s0 (1 - 2 Nr)`: mean desired x-velocity of the mixture.
pub fn mixture_velocity(intrinsic_speed: f64, number_ratio: f64) -> f64 {
    intrinsic_speed * (1.0 - 2.0 * number_ratio)
}

/// Fraction of `group` whose restitution is outweighed by the neighbor
/// force opposing its desired direction `d`, tested as
/// `(m/tau)(v.d - s0) < -(sum F).d`.
pub fn trapped_fraction(states: &[AgentState], forces: &[Vec2], params: &SimParams, group: Group) -> f64 {
    let d = Vec2::new(group.direction(), 0.0);
    let k = params.mass / params.relax_time;
    let mut members = 0usize;
    let mut trapped = 0usize;
    for (s, f) in states.iter().zip(forces) {
        if s.group != group {
            continue;
        }
        members += 1;
        if k * (s.velocity.dot(d) - params.intrinsic_speed) < -f.dot(d) {
            trapped += 1;
        }
    }
    if members == 0 {
        0.0
    } else {
        trapped as f64 / members as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    /// 61 bins over `[-1.2 s0_max, 1.2 s0_max]`.
    pub fn for_speed(s0_max: f64) -> Self {
        let half = 1.2 * if s0_max > 0.0 { s0_max } else { 1.0 };
        HistogramSpec {
            lo: -half,
            hi: half,
            bins: 61,
        }
    }

    /// Bin of `x`; values outside the range land in the edge bins.
    pub fn bin(&self, x: f64) -> usize {
        let t = (x - self.lo) / (self.hi - self.lo) * self.bins as f64;
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(self.bins - 1)
        }
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.lo + (bin as f64 + 0.5) * (self.hi - self.lo) / self.bins as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    /// Probability mass per bin.
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn mode(&self) -> f64 {
        let (best, _) = self
            .mass
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
        self.spec.center(best)
    }

    /// Bin-wise mean of equally weighted histograms.
    pub fn average(items: &[Histogram]) -> Result<Histogram> {
        let first = items.first().ok_or_else(|| Error::Empty("no histograms".into()))?;
        let mut mass = vec![0.0; first.mass.len()];
        for h in items {
            if h.spec != first.spec {
                return Err(Error::Config("histograms with different bins".into()));
            }
            for (m, x) in mass.iter_mut().zip(&h.mass) {
                *m += x;
            }
        }
        mass.iter_mut().for_each(|m| *m /= items.len() as f64);
        Ok(Histogram {
            spec: first.spec,
            mass,
        })
    }
}

/// Normalized histogram of `v_x` over all frames and members of `group`.
pub fn velocity_histogram(traj: &Trajectory, group: Group, spec: HistogramSpec) -> Result<Histogram> {
    if spec.bins == 0 || !(spec.hi > spec.lo) {
        return Err(Error::Config("histogram needs at least one bin and hi > lo".into()));
    }
    let members: Vec<usize> = traj.group_members(group).collect();
    if members.is_empty() || traj.frames.is_empty() {
        return Err(Error::Empty(format!("group {group} has no samples")));
    }
    let mut counts = vec![0usize; spec.bins];
    for f in &traj.frames {
        for &i in &members {
            counts[spec.bin(f.velocities[i].x)] += 1;
        }
    }
    let total = (members.len() * traj.frames.len()) as f64;
    Ok(Histogram {
        spec,
        mass: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// Same-group cluster count of `group` in every frame.
pub fn cluster_series(traj: &Trajectory, group: Group) -> Result<Vec<usize>> {
    traj.frames
        .iter()
        .map(|f| frame_clusters(traj, &f.positions, group))
        .collect()
}

fn frame_clusters(traj: &Trajectory, positions: &[Vec2], group: Group) -> Result<usize> {
    if positions.len() < 2 {
        return Ok(traj.labels.iter().filter(|&&g| g == group).count());
    }
    let adj = voronoi_adjacency(positions, traj.domain_edge)?;
    cluster_count(&adj, &traj.labels, group)
}

/// The three observers reported in results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observer {
    #[serde(rename = "agent")]
    AgentOnly,
    Neighborhood,
    Fitted,
}

impl Observer {
    pub const ALL: [Observer; 3] = [Observer::AgentOnly, Observer::Neighborhood, Observer::Fitted];

    pub fn name(self) -> &'static str {
        match self {
            Observer::AgentOnly => "agent",
            Observer::Neighborhood => "neighborhood",
            Observer::Fitted => "fitted",
        }
    }
}

impl fmt::Display for Observer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Observer::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::parse("observer", format!("unknown observer {s:?}")))
    }
}

/// Metrics of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    /// Mean misclassifications per window, `[group 1, group 2]`.
    pub n_m_agent: [f64; 2],
    pub n_m_neighborhood: [f64; 2],
    pub n_m_fitted: Option<[f64; 2]>,
    pub c_in_initial: [usize; 2],
    pub c_in_final: [usize; 2],
    pub drift_speed: f64,
}

impl RunSummary {
    /// Everything except the fitted-observer counts, which need pooled data.
    pub fn measure(traj: &Trajectory, features: &WindowedFeatures, mu: f64, seed: u64) -> Result<Self> {
        let (first, last) = match (traj.frames.first(), traj.frames.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Empty("trajectory has no frames".into())),
        };
        let clusters = |positions: &[Vec2]| -> Result<[usize; 2]> {
            Ok([
                frame_clusters(traj, positions, Group::One)?,
                frame_clusters(traj, positions, Group::Two)?,
            ])
        };
        Ok(RunSummary {
            seed,
            n_m_agent: mean_misclassification(features, &traj.labels, 0.0)?,
            n_m_neighborhood: mean_misclassification(features, &traj.labels, mu)?,
            n_m_fitted: None,
            c_in_initial: clusters(&first.positions)?,
            c_in_final: clusters(&last.positions)?,
            drift_speed: drift_speed(traj, steady_window(traj.frames.len()))?,
        })
    }

    pub fn n_m(&self, observer: Observer) -> Option<[f64; 2]> {
        match observer {
            Observer::AgentOnly => Some(self.n_m_agent),
            Observer::Neighborhood => Some(self.n_m_neighborhood),
            Observer::Fitted => self.n_m_fitted,
        }
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Estimate {
        let n = values.len() as f64;
        if values.is_empty() {
            return Estimate {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, se }
    }

    /// `self - other` in units of the combined standard error.
    pub fn z_above(&self, other: &Estimate) -> f64 {
        let se = (self.se * self.se + other.se * other.se).sqrt();
        let diff = self.mean - other.mean;
        if se > 0.0 {
            diff / se
        } else if diff > 0.0 {
            f64::INFINITY
        } else if diff < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }
}

/// Everything measured at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Parameters shared by the runs; `seed` is left at zero.
    pub params: SimParams,
    pub mu: f64,
    pub fit: Option<LinearFit>,
    pub n_windows: usize,
    pub faulted_runs: usize,
    pub runs: Vec<RunSummary>,
    /// Velocity histograms `[group 1, group 2]`; `None` for an empty group.
    pub histograms: [Option<Histogram>; 2],
}

impl SweepRecord {
    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    fn collect(&self, f: impl Fn(&RunSummary) -> Option<f64>) -> Estimate {
        let v: Vec<f64> = self.runs.iter().filter_map(f).collect();
        Estimate::of(&v)
    }

    pub fn n_m(&self, observer: Observer, group: Group) -> Estimate {
        self.collect(|r| r.n_m(observer).map(|c| c[group.index()]))
    }

    pub fn n_m_total(&self, observer: Observer) -> Estimate {
        self.collect(|r| r.n_m(observer).map(|c| c[0] + c[1]))
    }

    pub fn c_in_initial(&self, group: Group) -> Estimate {
        self.collect(|r| Some(r.c_in_initial[group.index()] as f64))
    }

    pub fn c_in_final(&self, group: Group) -> Estimate {
        self.collect(|r| Some(r.c_in_final[group.index()] as f64))
    }

    pub fn drift_speed(&self) -> Estimate {
        self.collect(|r| Some(r.drift_speed))
    }
}
