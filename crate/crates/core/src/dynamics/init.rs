use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{min_image, min_pair_distance, AgentState, Crowd, SimParams};
use crate::error::{Error, Result};
use crate::{Group, Vec2};

/// Below this area fraction agents are placed by rejection sampling.
const REJECTION_DENSITY: f64 = 0.45;
const REJECTION_ATTEMPTS: usize = 20_000;
/// Minimum surface gap at placement, in units of `R`.
const PLACEMENT_GAP: f64 = 0.2;
const RELAX_STEPS: usize = 100;

/// Places agents without overlap, assigns `round(Nr N)` random agents to
/// Group 2, and relaxes the packing with the drive switched off.
///
/// Returns the domain edge, the agent states (all at rest) and the labels.
pub fn init_configuration(params: &SimParams) -> Result<(f64, Vec<AgentState>, Vec<Group>)> {
    params.validate()?;
    let edge = params.domain_edge()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let n = params.n_agents;
    let mut labels = vec![Group::One; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(params.group_two_count()) {
        labels[i] = Group::Two;
    }

    let positions = if params.density < REJECTION_DENSITY {
        match rejection_placement(params, edge, &mut rng) {
            Some(p) => p,
            None => lattice_placement(params, edge, &mut rng)?,
        }
    } else {
        lattice_placement(params, edge, &mut rng)?
    };

    let mut states: Vec<AgentState> = positions
        .into_iter()
        .zip(&labels)
        .map(|(position, &group)| AgentState {
            position,
            velocity: Vec2::ZERO,
            group,
        })
        .collect();

    let mut crowd = Crowd::new(params, edge, &states)?.without_drive();
    for _ in 0..RELAX_STEPS {
        crowd
            .advance(params.dt)
            .map_err(|e| Error::Init(format!("relaxation failed: {e}")))?;
    }
    crowd.zero_velocities();
    crowd.write_back(&mut states);

    let closest = min_pair_distance(crowd.positions(), edge);
    if closest < 2.0 * params.radius {
        return Err(Error::Init(format!("overlap after relaxation at distance {closest}")));
    }
    Ok((edge, states, labels))
}

fn rejection_placement(params: &SimParams, edge: f64, rng: &mut ChaCha8Rng) -> Option<Vec<Vec2>> {
    let min_d = (2.0 + PLACEMENT_GAP) * params.radius;
    let min_d_sq = min_d * min_d;
    let mut placed: Vec<Vec2> = Vec::with_capacity(params.n_agents);
    for _ in 0..params.n_agents {
        let spot = (0..REJECTION_ATTEMPTS).find_map(|_| {
            let p = Vec2::new(rng.gen::<f64>() * edge, rng.gen::<f64>() * edge);
            placed
                .iter()
                .all(|&q| min_image(p - q, edge).norm_sq() >= min_d_sq)
                .then_some(p)
        })?;
        placed.push(spot);
    }
    Some(placed)
}

/// Rows of a triangular lattice: alternate rows shifted by half a column.
#[derive(Debug, Clone, Copy)]
struct Lattice {
    cols: usize,
    rows: usize,
    spacing: f64,
}

impl Lattice {
    fn fit(n: usize, edge: f64) -> Lattice {
        // extra rows can pay off: a slightly over-filled lattice often has
        // wider spacing than the tightest one
        (1..=n)
            .flat_map(|cols| {
                let min_rows = n.div_ceil(cols);
                (min_rows..=2 * min_rows + 2).map(move |rows| Lattice {
                    cols,
                    rows,
                    spacing: lattice_spacing(cols, rows, edge),
                })
            })
            .max_by(|a, b| a.spacing.total_cmp(&b.spacing))
            .expect("n >= 1")
    }

    fn sites(&self, edge: f64) -> Vec<Vec2> {
        let ax = edge / self.cols as f64;
        let ay = edge / self.rows as f64;
        let mut out = Vec::with_capacity(self.cols * self.rows);
        for r in 0..self.rows {
            let shift = if r % 2 == 1 { 0.5 } else { 0.0 };
            for c in 0..self.cols {
                out.push(Vec2::new((c as f64 + 0.25 + shift) * ax, (r as f64 + 0.5) * ay));
            }
        }
        out
    }
}

/// Smallest periodic distance between sites of a `cols x rows` lattice.
fn lattice_spacing(cols: usize, rows: usize, edge: f64) -> f64 {
    let ax = edge / cols as f64;
    let ay = edge / rows as f64;
    let mut d = ax;
    match rows {
        1 => d = d.min(edge),
        2 => d = d.min(((0.5 * ax).powi(2) + ay * ay).sqrt()),
        _ => {
            d = d.min(((0.5 * ax).powi(2) + ay * ay).sqrt()).min(2.0 * ay);
            if rows % 2 == 1 {
                // the last and first rows carry the same shift
                d = d.min(ay);
            }
        }
    }
    d
}

fn lattice_placement(params: &SimParams, edge: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Vec2>> {
    let lattice = Lattice::fit(params.n_agents, edge);
    let contact = 2.0 * params.radius;
    if lattice.spacing <= contact * (1.0 + 1e-9) {
        return Err(Error::Init(format!(
            "no lattice with {} sites fits: spacing {:.4} <= contact {contact}",
            params.n_agents, lattice.spacing
        )));
    }
    // each site may move by at most 35% of the spare gap
    let jitter = 0.35 * (lattice.spacing - contact);
    let mut sites = lattice.sites(edge);
    sites.shuffle(rng);
    sites.truncate(params.n_agents);
    for site in &mut sites {
        let offset = loop {
            let o = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if o.norm_sq() <= 1.0 {
                break o * jitter;
            }
        };
        *site = super::wrap(*site + offset, edge);
    }
    Ok(sites)
}
