//! Movement-based group observers.
//!
//! The agent-only observer labels an agent by the sign of its window-averaged
//! x-velocity. The neighborhood observer also reads the first Voronoi
//! neighbors: `phi_bar` sums how fast each neighbor approaches the agent,
//! projected on `e_x` and weighted by a Gaussian kernel, and the agent is
//! labeled Group 1 iff `v_w >= mu * phi_bar_w`.

mod dump;
mod fit;

use serde::{Deserialize, Serialize};

use crate::dynamics::{min_image, Frame, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{voronoi_adjacency, VoronoiAdjacency};
use crate::Group;

pub use dump::{classification_rows, read_classification_dump, write_classification_dump, ClassificationRow, CLASSIFICATION_HEADER};
pub use fit::{fit_linear_classifier, FitConfig, LabeledSample, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObserverConfig {
    /// Window length in frames.
    pub window: usize,
    /// Length scale of the neighbor weighting kernel.
    pub epsilon: f64,
    /// Fixed `mu`; `None` derives it from density and number ratio.
    pub mu: Option<f64>,
    /// Neighbor count assumed when deriving `mu`.
    pub neighbor_budget: usize,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            window: 50,
            epsilon: 3.0,
            mu: None,
            neighbor_budget: 6,
        }
    }
}

impl ObserverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(mu) = self.mu {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(Error::Config(format!("mu must be non-negative, got {mu}")));
            }
        }
        if self.neighbor_budget == 0 {
            return Err(Error::Config("neighbor_budget must be at least 1".into()));
        }
        Ok(())
    }

    /// The configured `mu`, or the derived one for this density and ratio.
    pub fn resolve_mu(&self, density: f64, number_ratio: f64) -> Result<f64> {
        match self.mu {
            Some(mu) => Ok(mu),
            None => mu_scale_with_budget(density, number_ratio, self.epsilon, self.neighbor_budget),
        }
    }
}

/// Mean of `series[start..start + w]`.
pub fn window_average(series: &[f64], start: usize, w: usize) -> Result<f64> {
    if w == 0 || start.checked_add(w).map_or(true, |end| end > series.len()) {
        return Err(Error::Index(format!(
            "window [{start}, {start}+{w}) outside series of length {}",
            series.len()
        )));
    }
    Ok(series[start..start + w].iter().sum::<f64>() / w as f64)
}

#[inline]
pub fn classify_agent_only(v_w: f64) -> Group {
    if v_w >= 0.0 {
        Group::One
    } else {
        Group::Two
    }
}

#[inline]
pub fn classify_neighborhood(v_w: f64, phi_bar_w: f64, mu: f64) -> Group {
    if v_w >= mu * phi_bar_w {
        Group::One
    } else {
        Group::Two
    }
}

/// Neighbor weighting `exp(-(r/epsilon)^2)`.
#[inline]
pub fn kernel(r: f64, epsilon: f64) -> f64 {
    let s = r / epsilon;
    (-s * s).exp()
}

/// `phi_bar` of agent `i` in one frame; zero without neighbors.
pub fn neighborhood_parameter(
    frame: &Frame,
    edge: f64,
    adjacency: &VoronoiAdjacency,
    i: usize,
    epsilon: f64,
) -> f64 {
    let xi = frame.positions[i];
    adjacency
        .neighbors(i)
        .iter()
        .map(|&j| {
            let d = min_image(xi - frame.positions[j], edge);
            let r = d.norm();
            if r == 0.0 {
                return 0.0;
            }
            let e = d * (1.0 / r);
            kernel(r, epsilon) * frame.velocities[j].dot(e) * e.x
        })
        .sum()
}

/// Expected `|l - 2k|` for `k ~ Binomial(l, number_ratio)`.
pub fn sigma_s(number_ratio: f64, l: usize) -> f64 {
    let p = number_ratio;
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=l {
        if k > 0 {
            binom = binom * (l - k + 1) as f64 / k as f64;
        }
        let prob = binom * p.powi(k as i32) * (1.0 - p).powi((l - k) as i32);
        total += prob * (l as f64 - 2.0 * k as f64).abs();
    }
    total
}

/// `mu = exp(1 / (density epsilon^2)) / sigma_s(number_ratio, 6)`.
pub fn mu_scale(density: f64, number_ratio: f64, epsilon: f64) -> Result<f64> {
    mu_scale_with_budget(density, number_ratio, epsilon, 6)
}

pub fn mu_scale_with_budget(density: f64, number_ratio: f64, epsilon: f64, l: usize) -> Result<f64> {
    if !(density > 0.0) {
        return Err(Error::Domain(format!("density must be positive, got {density}")));
    }
    if !(0.0..=1.0).contains(&number_ratio) {
        return Err(Error::Domain(format!("number ratio {number_ratio} outside [0, 1]")));
    }
    let s = sigma_s(number_ratio, l);
    if !(s > 0.0) {
        return Err(Error::Domain("sigma_s vanishes".into()));
    }
    Ok((1.0 / (density * epsilon * epsilon)).exp() / s)
}

/// `phi_bar` for every agent of one frame, with the frame's adjacency.
pub fn frame_neighborhood(frame: &Frame, edge: f64, epsilon: f64) -> Result<(VoronoiAdjacency, Vec<f64>)> {
    let adjacency = voronoi_adjacency(&frame.positions, edge)?;
    let phi = (0..frame.len())
        .map(|i| neighborhood_parameter(frame, edge, &adjacency, i, epsilon))
        .collect();
    Ok((adjacency, phi))
}

/// One window's observations and neighborhood-observer predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowClassification {
    pub window_start: usize,
    pub predicted: Vec<Group>,
    pub v_w: Vec<f64>,
    pub phi_w: Vec<f64>,
}

/// Window-averaged `v_x` and `phi_bar` for every window start (stride 1).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedFeatures {
    pub window: usize,
    pub n_agents: usize,
    /// Row-major `[window_start][agent]`.
    pub v_w: Vec<f64>,
    pub phi_w: Vec<f64>,
}

impl WindowedFeatures {
    /// Per-frame series laid out as `[frame][agent]`.
    pub fn from_series(vx: &[f64], phi: &[f64], n_agents: usize, window: usize) -> Result<Self> {
        if vx.len() != phi.len() {
            return Err(Error::LengthMismatch {
                expected: vx.len(),
                actual: phi.len(),
            });
        }
        let n_frames = if n_agents == 0 { 0 } else { vx.len() / n_agents };
        if n_agents == 0 || window == 0 || window > n_frames {
            return Err(Error::Index(format!(
                "window {window} does not fit {n_frames} frames"
            )));
        }
        let n_windows = n_frames - window + 1;
        let mut v_w = Vec::with_capacity(n_windows * n_agents);
        let mut phi_w = Vec::with_capacity(n_windows * n_agents);
        let column = |data: &[f64], i: usize| -> Vec<f64> {
            (0..n_frames).map(|k| data[k * n_agents + i]).collect()
        };
        let vx_cols: Vec<Vec<f64>> = (0..n_agents).map(|i| column(vx, i)).collect();
        let phi_cols: Vec<Vec<f64>> = (0..n_agents).map(|i| column(phi, i)).collect();
        for start in 0..n_windows {
            for i in 0..n_agents {
                v_w.push(window_average(&vx_cols[i], start, window)?);
                phi_w.push(window_average(&phi_cols[i], start, window)?);
            }
        }
        Ok(WindowedFeatures {
            window,
            n_agents,
            v_w,
            phi_w,
        })
    }

    /// Builds a fresh adjacency for every frame of `traj`.
    pub fn from_trajectory(traj: &Trajectory, config: &ObserverConfig) -> Result<Self> {
        config.validate()?;
        let n = traj.n_agents();
        let mut vx = Vec::with_capacity(traj.frames.len() * n);
        let mut phi = Vec::with_capacity(traj.frames.len() * n);
        for frame in &traj.frames {
            vx.extend(frame.velocities.iter().map(|v| v.x));
            if n >= 2 {
                phi.extend(frame_neighborhood(frame, traj.domain_edge, config.epsilon)?.1);
            } else {
                phi.extend(std::iter::repeat(0.0).take(n));
            }
        }
        Self::from_series(&vx, &phi, n, config.window)
    }

    pub fn n_windows(&self) -> usize {
        self.v_w.len() / self.n_agents
    }

    pub fn v(&self, start: usize) -> &[f64] {
        &self.v_w[start * self.n_agents..(start + 1) * self.n_agents]
    }

    pub fn phi(&self, start: usize) -> &[f64] {
        &self.phi_w[start * self.n_agents..(start + 1) * self.n_agents]
    }

    pub fn classify(&self, start: usize, mu: f64) -> WindowClassification {
        let v_w = self.v(start).to_vec();
        let phi_w = self.phi(start).to_vec();
        let predicted = v_w
            .iter()
            .zip(&phi_w)
            .map(|(&v, &p)| classify_neighborhood(v, p, mu))
            .collect();
        WindowClassification {
            window_start: start,
            predicted,
            v_w,
            phi_w,
        }
    }

    pub fn classify_all(&self, mu: f64) -> Vec<WindowClassification> {
        (0..self.n_windows()).map(|k| self.classify(k, mu)).collect()
    }

    /// Labeled samples from every `stride`-th window.
    pub fn samples(&self, labels: &[Group], stride: usize) -> Vec<LabeledSample> {
        let stride = stride.max(1);
        (0..self.n_windows())
            .step_by(stride)
            .flat_map(|k| {
                self.v(k)
                    .iter()
                    .zip(self.phi(k))
                    .zip(labels)
                    .map(|((&v_w, &phi_w), &group)| LabeledSample { v_w, phi_w, group })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;
    use approx::assert_relative_eq;

    fn pair_frame(offset: Vec2, vj: Vec2) -> (Frame, VoronoiAdjacency) {
        let frame = Frame {
            positions: vec![Vec2::new(10.0, 10.0), Vec2::new(10.0, 10.0) + offset],
            velocities: vec![Vec2::ZERO, vj],
        };
        (frame, VoronoiAdjacency::from_edges(2, [(0, 1)]))
    }

    #[test]
    fn window_average_cases() {
        assert_eq!(window_average(&[2.5; 60], 3, 50).unwrap(), 2.5);
        let alt: Vec<f64> = (0..50).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(window_average(&alt, 0, 50).unwrap(), 0.0);
        let ramp: Vec<f64> = (1..=50).map(f64::from).collect();
        assert_eq!(window_average(&ramp, 0, 50).unwrap(), 25.5);
        assert!(matches!(window_average(&ramp, 1, 50), Err(Error::Index(_))));
        assert!(window_average(&ramp, 0, 0).is_err());
    }

    #[test]
    fn agent_only_sign_rule() {
        assert_eq!(classify_agent_only(0.0), Group::One);
        assert_eq!(classify_agent_only(-0.3), Group::Two);
        assert_eq!(classify_agent_only(1e-9), Group::One);
    }

    #[test]
    fn neighborhood_rule() {
        assert_eq!(classify_neighborhood(0.1, 0.3, 1.0), Group::Two);
        assert_eq!(classify_neighborhood(-0.2, 5.0, 0.0), Group::Two);
        assert_eq!(classify_neighborhood(0.6, 1.2, 0.5), Group::One);
    }

    #[test]
    fn neighbor_behind_pushing() {
        let (f, adj) = pair_frame(Vec2::new(-2.0, 0.0), Vec2::new(1.0, 0.0));
        let expected = (-4.0f64 / 9.0).exp();
        assert_relative_eq!(neighborhood_parameter(&f, 30.0, &adj, 0, 3.0), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 0.6412, epsilon = 1e-4);
        let (f, adj) = pair_frame(Vec2::new(-2.0, 0.0), Vec2::new(-1.0, 0.0));
        assert_relative_eq!(neighborhood_parameter(&f, 30.0, &adj, 0, 3.0), -expected, max_relative = 1e-12);
        let (f, adj) = pair_frame(Vec2::new(-2.0, 0.0), Vec2::new(0.0, 1.0));
        assert_eq!(neighborhood_parameter(&f, 30.0, &adj, 0, 3.0), 0.0);
    }

    #[test]
    fn neighbor_across_the_boundary() {
        let frame = Frame {
            positions: vec![Vec2::new(0.5, 5.0), Vec2::new(18.5, 5.0)],
            velocities: vec![Vec2::ZERO, Vec2::new(1.0, 0.0)],
        };
        let adj = VoronoiAdjacency::from_edges(2, [(0, 1)]);
        let phi = neighborhood_parameter(&frame, 20.0, &adj, 0, 3.0);
        assert_relative_eq!(phi, (-4.0f64 / 9.0).exp(), max_relative = 1e-12);
    }

    #[test]
    fn no_neighbors_gives_zero() {
        let frame = Frame {
            positions: vec![Vec2::new(1.0, 1.0)],
            velocities: vec![Vec2::new(1.0, 0.0)],
        };
        let adj = VoronoiAdjacency::from_edges(1, []);
        assert_eq!(neighborhood_parameter(&frame, 10.0, &adj, 0, 3.0), 0.0);
    }

    #[test]
    fn sigma_s_values() {
        assert_eq!(sigma_s(0.0, 6), 6.0);
        assert_relative_eq!(sigma_s(0.5, 6), 1.875, max_relative = 1e-14);
        assert_relative_eq!(sigma_s(1.0 / 6.0, 6), 4.0376, epsilon = 1e-3);
    }

    #[test]
    fn mu_values() {
        assert_relative_eq!(mu_scale(0.58, 0.5, 3.0).unwrap(), 0.6459, epsilon = 5e-5);
        assert_relative_eq!(mu_scale(0.58, 0.0, 3.0).unwrap(), 0.20186, epsilon = 1e-5);
        assert_relative_eq!(mu_scale(0.58, 0.25, 1e9).unwrap(), 1.0 / sigma_s(0.25, 6), max_relative = 1e-12);
        assert!(matches!(mu_scale(0.0, 0.5, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn windowed_features_layout() {
        // two agents, 4 frames: agent 0 vx = frame index, agent 1 vx = -1
        let vx = [0.0, -1.0, 1.0, -1.0, 2.0, -1.0, 3.0, -1.0];
        let phi = [1.0; 8];
        let wf = WindowedFeatures::from_series(&vx, &phi, 2, 2).unwrap();
        assert_eq!(wf.n_windows(), 3);
        assert_eq!(wf.v(2), &[2.5, -1.0]);
        let c = wf.classify(0, 0.0);
        assert_eq!(c.predicted, vec![Group::One, Group::Two]);
        assert!(WindowedFeatures::from_series(&vx, &phi, 2, 5).is_err());
    }
}
