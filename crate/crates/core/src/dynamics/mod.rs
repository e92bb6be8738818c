//! Equations of motion for the bi-disperse crowd on a periodic square.
//!
//! Each agent relaxes toward its desired velocity `±s0 e_x` on the time scale
//! `tau` and is pushed away from neighbors closer than the cutoff by a force
//! that diverges as the disks touch. Each step splits the pair forces into
//! two half kicks around the exact solution of the drag-and-drift flow, so a
//! lone agent follows the closed-form relaxation curve to rounding error.
//! Near contact the step is halved recursively until the update keeps every
//! pair safely apart.

mod init;
mod integrator;
mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Group, Vec2};

pub use init::init_configuration;
pub use integrator::{net_forces, step, Crowd};
pub(crate) use io::fmt_f64;
pub use io::{read_trajectory, write_trajectory, TrajectoryManifest};

/// Packing fraction of a perfect hexagonal disk packing.
pub const MAX_PACKING: f64 = 0.9069;

/// Physical and numerical parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub n_agents: usize,
    /// Fraction of agents in Group 2.
    pub number_ratio: f64,
    /// Area fraction `N pi R^2 / L^2`.
    pub density: f64,
    pub intrinsic_speed: f64,
    pub mass: f64,
    pub relax_time: f64,
    pub force_strength: f64,
    pub radius: f64,
    pub cutoff: f64,
    pub dt: f64,
    pub sample_interval: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n_agents: 42,
            number_ratio: 1.0 / 3.0,
            density: 0.57706,
            intrinsic_speed: 0.75,
            mass: 1.0,
            relax_time: 0.2,
            force_strength: 0.2,
            radius: 1.0,
            cutoff: 3.0,
            dt: 0.01,
            sample_interval: 0.1,
            n_samples: 1000,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_agents == 0 {
            return bad("n_agents must be at least 1".into());
        }
        if !(0.0..=0.5).contains(&self.number_ratio) {
            return bad(format!("number_ratio {} outside [0, 1/2]", self.number_ratio));
        }
        for (name, value) in [
            ("mass", self.mass),
            ("relax_time", self.relax_time),
            ("radius", self.radius),
            ("dt", self.dt),
            ("sample_interval", self.sample_interval),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return bad(format!("{name} must be positive, got {value}"));
            }
        }
        for (name, value) in [
            ("intrinsic_speed", self.intrinsic_speed),
            ("force_strength", self.force_strength),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return bad(format!("{name} must be non-negative, got {value}"));
            }
        }
        if !(self.cutoff > 2.0 * self.radius) {
            return bad(format!(
                "cutoff {} must exceed the contact distance {}",
                self.cutoff,
                2.0 * self.radius
            ));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        let ratio = self.sample_interval / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return bad(format!(
                "sample_interval {} is not an integer multiple of dt {}",
                self.sample_interval, self.dt
            ));
        }
        let edge = domain_edge(self.n_agents, self.density, self.radius)?;
        if edge <= 2.0 * self.cutoff {
            return bad(format!(
                "domain edge {edge:.4} must exceed twice the cutoff {} for minimum-image forces",
                self.cutoff
            ));
        }
        Ok(())
    }

    /// Number of Group-2 agents, `round(Nr N)` with halves rounded up.
    pub fn group_two_count(&self) -> usize {
        (self.number_ratio * self.n_agents as f64 + 0.5).floor() as usize
    }

    pub fn steps_per_sample(&self) -> usize {
        (self.sample_interval / self.dt).round() as usize
    }

    pub fn domain_edge(&self) -> Result<f64> {
        domain_edge(self.n_agents, self.density, self.radius)
    }

    /// Desired velocity of an agent of `group`.
    pub fn desired_velocity(&self, group: Group) -> Vec2 {
        Vec2::new(group.direction() * self.intrinsic_speed, 0.0)
    }
}

/// Edge length of the periodic square holding `n_agents` disks at the given
/// area fraction.
pub fn domain_edge(n_agents: usize, density: f64, radius: f64) -> Result<f64> {
    if !(density > 0.0 && density < MAX_PACKING) {
        return Err(Error::Config(format!(
            "density {density} outside (0, {MAX_PACKING})"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {radius}")));
    }
    Ok(radius * (n_agents as f64 * std::f64::consts::PI / density).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub group: Group,
}

/// Positions and velocities of every agent at one recorded instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn states<'a>(&'a self, labels: &'a [Group]) -> impl Iterator<Item = AgentState> + 'a {
        self.positions
            .iter()
            .zip(&self.velocities)
            .zip(labels)
            .map(|((&position, &velocity), &group)| AgentState {
                position,
                velocity,
                group,
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: SimParams,
    pub domain_edge: f64,
    pub labels: Vec<Group>,
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn n_agents(&self) -> usize {
        self.labels.len()
    }

    pub fn time(&self, frame: usize) -> f64 {
        frame as f64 * self.params.sample_interval
    }

    /// x-velocity series of one agent over all frames.
    pub fn vx_series(&self, agent: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.velocities[agent].x).collect()
    }

    pub fn group_members(&self, group: Group) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &g)| g == group)
            .map(|(i, _)| i)
    }

    /// Smallest minimum-image pair distance over all frames.
    pub fn min_pair_distance(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| min_pair_distance(&f.positions, self.domain_edge))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Maps a displacement onto its nearest periodic image.
#[inline]
pub fn min_image(d: Vec2, edge: f64) -> Vec2 {
    Vec2::new(d.x - edge * (d.x / edge).round(), d.y - edge * (d.y / edge).round())
}

#[inline]
pub(crate) fn wrap_coord(x: f64, edge: f64) -> f64 {
    let w = x.rem_euclid(edge);
    if w >= edge {
        0.0
    } else {
        w
    }
}

#[inline]
pub fn wrap(p: Vec2, edge: f64) -> Vec2 {
    Vec2::new(wrap_coord(p.x, edge), wrap_coord(p.y, edge))
}

pub fn min_pair_distance(positions: &[Vec2], edge: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            best = best.min(min_image(positions[i] - positions[j], edge).norm());
        }
    }
    best
}

/// Repulsive force on agent `i` from agent `j`, where `displacement` is the
/// minimum-image vector from `j` to `i`.
///
/// The magnitude is `gamma (d - 2R)^-3` inside the cutoff (strict) and zero
/// beyond it; the force points along `displacement`, i.e. away from `j`.
pub fn pair_force(displacement: Vec2, params: &SimParams) -> Result<Vec2> {
    let d = displacement.norm();
    let contact = 2.0 * params.radius;
    if d <= contact {
        return Err(Error::Overlap {
            i: 0,
            j: 1,
            distance: d,
        });
    }
    if d >= params.cutoff {
        return Ok(Vec2::ZERO);
    }
    let gap = d - contact;
    Ok(displacement * (params.force_strength / (gap * gap * gap * d)))
}

/// Integrates one run and records `n_samples` frames, the first at `t = 0`.
pub fn run_simulation(params: &SimParams) -> Result<Trajectory> {
    params.validate()?;
    let (edge, states, labels) = init_configuration(params)?;
    let mut crowd = Crowd::new(params, edge, &states)?;
    let steps = params.steps_per_sample();
    let mut frames = Vec::with_capacity(params.n_samples);
    frames.push(crowd.frame());
    for k in 1..params.n_samples {
        for _ in 0..steps {
            crowd.advance(params.dt).map_err(|e| match e {
                Error::Integration { i, j, distance, .. } => Error::Integration {
                    frame: Some(k),
                    i,
                    j,
                    distance,
                },
                other => other,
            })?;
        }
        frames.push(crowd.frame());
    }
    Ok(Trajectory {
        params: params.clone(),
        domain_edge: edge,
        labels,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_packing_identity() {
        assert_abs_diff_eq!(domain_edge(1, std::f64::consts::PI * 0.25, 0.5).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn edge_for_grid_densities() {
        // L = R sqrt(N pi / rho), evaluated by hand.
        assert_abs_diff_eq!(domain_edge(42, 0.57706, 1.0).unwrap(), 15.1214, epsilon = 1e-3);
        assert_abs_diff_eq!(domain_edge(42, 0.22182, 1.0).unwrap(), 24.391, epsilon = 1e-2);
    }

    #[test]
    fn edge_rejects_bad_density() {
        assert!(matches!(domain_edge(42, 0.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(domain_edge(42, -0.1, 1.0), Err(Error::Config(_))));
        assert!(matches!(domain_edge(42, 0.95, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn force_vanishes_at_cutoff() {
        let p = SimParams::default();
        assert_eq!(pair_force(Vec2::new(3.0, 0.0), &p).unwrap(), Vec2::ZERO);
        assert_eq!(pair_force(Vec2::new(0.0, -5.0), &p).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn force_hand_value() {
        let p = SimParams::default();
        let f = pair_force(Vec2::new(2.5, 0.0), &p).unwrap();
        assert_abs_diff_eq!(f.x, 1.6, epsilon = 1e-12);
        assert_eq!(f.y, 0.0);
    }

    #[test]
    fn force_overlap_is_fault() {
        let p = SimParams::default();
        assert!(matches!(pair_force(Vec2::new(2.0, 0.0), &p), Err(Error::Overlap { .. })));
        assert!(matches!(pair_force(Vec2::new(1.0, 0.5), &p), Err(Error::Overlap { .. })));
    }

    #[test]
    fn group_two_rounding() {
        let mut p = SimParams { number_ratio: 1.0 / 42.0, ..SimParams::default() };
        assert_eq!(p.group_two_count(), 1);
        p.number_ratio = 1.0 / 3.0;
        assert_eq!(p.group_two_count(), 14);
        p.number_ratio = 0.5;
        p.n_agents = 5;
        assert_eq!(p.group_two_count(), 3);
    }

    #[test]
    fn validation_catches_bad_sampling() {
        let p = SimParams { sample_interval: 0.015, ..SimParams::default() };
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        let p = SimParams { cutoff: 2.0, ..SimParams::default() };
        assert!(p.validate().is_err());
        let p = SimParams { number_ratio: 0.6, ..SimParams::default() };
        assert!(p.validate().is_err());
        assert!(SimParams::default().validate().is_ok());
    }

    #[test]
    fn wrap_stays_in_box() {
        let edge = 15.0;
        assert_eq!(wrap_coord(-1e-18, edge), 0.0);
        assert_eq!(wrap_coord(15.0, edge), 0.0);
        assert_abs_diff_eq!(wrap_coord(-1.0, edge), 14.0);
        let d = min_image(Vec2::new(14.0, -8.0), edge);
        assert_abs_diff_eq!(d.x, -1.0);
        assert_abs_diff_eq!(d.y, 7.0);
    }
}
