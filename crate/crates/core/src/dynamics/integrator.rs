use super::{min_image, wrap, AgentState, Frame, SimParams};
use crate::error::{Error, Result};
use crate::Vec2;

/// Closest approach, in units of `R`, a step may bring two approaching disks.
const GUARD_GAP: f64 = 1e-3;
/// Largest relative change of an interacting pair's surface gap in one step.
const MAX_GAP_CHANGE: f64 = 0.25;
const MAX_HALVINGS: u32 = 12;

/// Integration state for a whole crowd, laid out per field.
///
/// `forces` always holds the pair forces at `positions`.
#[derive(Debug, Clone)]
pub struct Crowd<'a> {
    params: &'a SimParams,
    edge: f64,
    positions: Vec<Vec2>,
    velocities: Vec<Vec2>,
    desired: Vec<Vec2>,
    forces: Vec<Vec2>,
    trial_positions: Vec<Vec2>,
    trial_velocities: Vec<Vec2>,
    trial_forces: Vec<Vec2>,
    base_decay: (f64, f64),
}

impl<'a> Crowd<'a> {
    pub fn new(params: &'a SimParams, edge: f64, states: &[AgentState]) -> Result<Self> {
        let positions: Vec<Vec2> = states.iter().map(|s| wrap(s.position, edge)).collect();
        let n = positions.len();
        let mut forces = vec![Vec2::ZERO; n];
        accumulate_forces(&positions, params, edge, &mut forces)?;
        Ok(Crowd {
            params,
            edge,
            velocities: states.iter().map(|s| s.velocity).collect(),
            desired: states.iter().map(|s| params.desired_velocity(s.group)).collect(),
            forces,
            trial_positions: positions.clone(),
            trial_velocities: vec![Vec2::ZERO; n],
            trial_forces: vec![Vec2::ZERO; n],
            positions,
            base_decay: decay(params.dt, params.relax_time),
        })
    }

    /// Switches the self-propulsion off (used while relaxing the initial packing).
    pub(crate) fn without_drive(mut self) -> Self {
        self.desired.iter_mut().for_each(|d| *d = Vec2::ZERO);
        self
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec2] {
        &self.velocities
    }

    /// Pair forces at the current positions.
    pub fn forces(&self) -> &[Vec2] {
        &self.forces
    }

    pub(crate) fn zero_velocities(&mut self) {
        self.velocities.iter_mut().for_each(|v| *v = Vec2::ZERO);
    }

    pub fn frame(&self) -> Frame {
        Frame {
            positions: self.positions.clone(),
            velocities: self.velocities.clone(),
        }
    }

    pub fn write_back(&self, states: &mut [AgentState]) {
        for ((s, &p), &v) in states.iter_mut().zip(&self.positions).zip(&self.velocities) {
            s.position = p;
            s.velocity = v;
        }
    }

    /// Advances by `dt`, halving the step near contact.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        self.advance_guarded(dt, 0)
    }

    fn advance_guarded(&mut self, dt: f64, depth: u32) -> Result<()> {
        let violation = match self.trial_step(dt, depth) {
            Ok(()) => self.guard_violation(),
            Err(Error::Overlap { i, j, distance }) => Some((i, j, distance)),
            Err(e) => return Err(e),
        };
        match violation {
            None => {
                std::mem::swap(&mut self.positions, &mut self.trial_positions);
                std::mem::swap(&mut self.velocities, &mut self.trial_velocities);
                std::mem::swap(&mut self.forces, &mut self.trial_forces);
                Ok(())
            }
            Some((i, j, distance)) if depth >= MAX_HALVINGS => Err(Error::Integration {
                frame: None,
                i,
                j,
                distance,
            }),
            Some(_) => {
                self.advance_guarded(0.5 * dt, depth + 1)?;
                self.advance_guarded(0.5 * dt, depth + 1)
            }
        }
    }

    /// Strang splitting: half kick from the pair forces, the exact flow of
    /// `dx/dt = v, dv/dt = (v0 - v)/tau`, then the closing half kick.
    fn trial_step(&mut self, dt: f64, depth: u32) -> Result<()> {
        let (a, b) = if depth == 0 {
            self.base_decay
        } else {
            decay(dt, self.params.relax_time)
        };
        let half_kick = 0.5 * dt / self.params.mass;
        for i in 0..self.positions.len() {
            let v = self.velocities[i] + self.forces[i] * half_kick;
            let excess = v - self.desired[i];
            self.trial_velocities[i] = self.desired[i] + excess * a;
            self.trial_positions[i] =
                wrap(self.positions[i] + self.desired[i] * dt + excess * b, self.edge);
        }
        accumulate_forces(&self.trial_positions, self.params, self.edge, &mut self.trial_forces)?;
        for (v, &f) in self.trial_velocities.iter_mut().zip(&self.trial_forces) {
            *v += f * half_kick;
        }
        Ok(())
    }

    /// Worst pair that the trial step brought too close or moved too fast, if any.
    fn guard_violation(&self) -> Option<(usize, usize, f64)> {
        let contact = 2.0 * self.params.radius;
        let guard = GUARD_GAP * self.params.radius;
        let reach_sq = self.params.cutoff * self.params.cutoff;
        let n = self.positions.len();
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let new_d = min_image(self.trial_positions[i] - self.trial_positions[j], self.edge);
                let old_d = min_image(self.positions[i] - self.positions[j], self.edge);
                if new_d.norm_sq() >= reach_sq && old_d.norm_sq() >= reach_sq {
                    continue;
                }
                let new_gap = new_d.norm() - contact;
                let old_gap = old_d.norm() - contact;
                let bad = new_gap <= 0.0
                    || (new_gap < old_gap && new_gap < guard)
                    || (new_gap - old_gap).abs() > MAX_GAP_CHANGE * old_gap;
                if bad && worst.map_or(true, |(_, _, d)| new_gap + contact < d) {
                    worst = Some((i, j, new_gap + contact));
                }
            }
        }
        worst
    }
}

/// `(e^{-dt/tau}, tau (1 - e^{-dt/tau}))`, the velocity decay and the
/// distance an excess velocity of one carries over the step.
fn decay(dt: f64, tau: f64) -> (f64, f64) {
    let a = (-dt / tau).exp();
    let b = -tau * (-dt / tau).exp_m1();
    (a, b)
}

fn accumulate_forces(positions: &[Vec2], params: &SimParams, edge: f64, out: &mut [Vec2]) -> Result<()> {
    out.iter_mut().for_each(|f| *f = Vec2::ZERO);
    let contact = 2.0 * params.radius;
    let reach_sq = params.cutoff * params.cutoff;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = min_image(positions[i] - positions[j], edge);
            let r_sq = d.norm_sq();
            if r_sq >= reach_sq {
                continue;
            }
            let r = r_sq.sqrt();
            if r <= contact {
                return Err(Error::Overlap { i, j, distance: r });
            }
            let gap = r - contact;
            let f = d * (params.force_strength / (gap * gap * gap * r));
            out[i] += f;
            out[j] -= f;
        }
    }
    Ok(())
}

/// Net inter-agent force on every agent.
pub fn net_forces(positions: &[Vec2], params: &SimParams, edge: f64) -> Result<Vec<Vec2>> {
    let mut out = vec![Vec2::ZERO; positions.len()];
    accumulate_forces(positions, params, edge, &mut out)?;
    Ok(out)
}

/// One guarded step of length `params.dt`, applied in place.
pub fn step(states: &mut [AgentState], params: &SimParams, edge: f64) -> Result<()> {
    let mut crowd = Crowd::new(params, edge, states)?;
    crowd.advance(params.dt)?;
    crowd.write_back(states);
    Ok(())
}
