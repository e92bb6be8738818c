//! Simulation and observation of a bi-disperse 2D crowd.
//!
//! Two groups of soft-repulsive disks share a periodic box: Group 1 wants to
//! move along `+x`, Group 2 along `-x`. The [`dynamics`] module integrates the
//! crowd and records trajectories; [`observers`] infers each agent's group
//! from movement alone, either from its own windowed velocity or by also
//! reading how its Voronoi neighborhood pushes it around. [`geometry`],
//! [`metrics`] and [`harness`] provide the periodic tessellation, the
//! misclassification/clustering/drift statistics and the sweep machinery.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod observers;
mod vec2;

pub use dynamics::{
    domain_edge, init_configuration, net_forces, pair_force, run_simulation, step, AgentState,
    Frame, SimParams, Trajectory,
};
pub use error::{Error, Result};
pub use geometry::{cluster_count, voronoi_adjacency, VoronoiAdjacency};
pub use observers::{
    classify_agent_only, classify_neighborhood, fit_linear_classifier, mu_scale,
    neighborhood_parameter, sigma_s, window_average, LinearFit, ObserverConfig,
    WindowClassification,
};
pub use vec2::Vec2;

/// Group label of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Group {
    /// Desired direction `+x`; always the majority in sweeps.
    One,
    /// Desired direction `-x`.
    Two,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::One, Group::Two];

    /// Sign of the desired x-direction.
    pub fn direction(self) -> f64 {
        match self {
            Group::One => 1.0,
            Group::Two => -1.0,
        }
    }

    /// `0` for Group 1, `1` for Group 2.
    pub fn index(self) -> usize {
        match self {
            Group::One => 0,
            Group::Two => 1,
        }
    }

    /// The numeric label used in CSV files (`1` or `2`).
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Group> {
        match n {
            1 => Some(Group::One),
            2 => Some(Group::Two),
            _ => None,
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Version string written into manifests.
pub const TOOL_VERSION: &str = concat!("crowd-core ", env!("CARGO_PKG_VERSION"));
