//! First-Voronoi-neighbor graphs on the periodic square and same-group
//! cluster counting.

use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::{Group, Vec2};

/// Symmetric first-neighbor graph of a periodic Voronoi tessellation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoronoiAdjacency {
    pub n_agents: usize,
    /// Sorted neighbor indices per agent.
    pub neighbor_lists: Vec<Vec<usize>>,
}

impl VoronoiAdjacency {
    pub fn from_edges(n_agents: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut neighbor_lists = vec![Vec::new(); n_agents];
        for (i, j) in edges {
            if i == j {
                continue;
            }
            neighbor_lists[i].push(j);
            neighbor_lists[j].push(i);
        }
        for list in &mut neighbor_lists {
            list.sort_unstable();
            list.dedup();
        }
        VoronoiAdjacency {
            n_agents,
            neighbor_lists,
        }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_lists[i]
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbor_lists
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.neighbor_lists.iter().map(Vec::len).sum::<usize>() / 2
    }
}

#[derive(Debug, Clone, Copy)]
struct TiledPoint {
    position: Point2<f64>,
    agent: usize,
    canonical: bool,
}

impl HasPosition for TiledPoint {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// Voronoi neighbors on the periodic square of edge `edge`.
///
/// The points are tiled with their periodic images, triangulated, and every
/// Delaunay edge touching an original point is mapped back to agent indices.
/// A 3x3 tiling is tried first; if some circumcircle of a face touching the
/// central tile reaches past the tiled region the tiling is widened to 5x5.
pub fn voronoi_adjacency(positions: &[Vec2], edge: f64) -> Result<VoronoiAdjacency> {
    let n = positions.len();
    if n == 0 {
        return Err(Error::Geometry("no agents".into()));
    }
    if let Some(p) = positions
        .iter()
        .find(|p| !(0.0..edge).contains(&p.x) || !(0.0..edge).contains(&p.y))
    {
        return Err(Error::Geometry(format!(
            "position ({}, {}) outside [0, {edge})^2",
            p.x, p.y
        )));
    }
    match n {
        1 => return Ok(VoronoiAdjacency::from_edges(1, [])),
        2 => return Ok(VoronoiAdjacency::from_edges(2, [(0, 1)])),
        _ => {}
    }
    for reach in [1i32, 2] {
        if let Some(adj) = tiled_adjacency(positions, edge, reach)? {
            return Ok(adj);
        }
    }
    Err(Error::Geometry(
        "tessellation cells are too large for the periodic tiling".into(),
    ))
}

fn tiled_adjacency(positions: &[Vec2], edge: f64, reach: i32) -> Result<Option<VoronoiAdjacency>> {
    let n = positions.len();
    let side = (2 * reach + 1) as usize;
    let mut points = Vec::with_capacity(side * side * n);
    // canonical copies first so they win any duplicate merge
    for (agent, p) in positions.iter().enumerate() {
        points.push(TiledPoint {
            position: Point2::new(p.x, p.y),
            agent,
            canonical: true,
        });
    }
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if dx == 0 && dy == 0 {
                continue;
            }
            for (agent, p) in positions.iter().enumerate() {
                points.push(TiledPoint {
                    position: Point2::new(p.x + dx as f64 * edge, p.y + dy as f64 * edge),
                    agent,
                    canonical: false,
                });
            }
        }
    }
    let expected = points.len();
    let tri: DelaunayTriangulation<TiledPoint> = DelaunayTriangulation::bulk_load_stable(points)
        .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;
    if tri.num_vertices() != expected {
        return Err(Error::Geometry("coincident agent positions".into()));
    }

    let lo = -(reach as f64) * edge;
    let hi = (reach as f64 + 1.0) * edge;
    for face in tri.inner_faces() {
        let vs = face.vertices();
        if !vs.iter().any(|v| v.data().canonical) {
            continue;
        }
        let (center, r2) = face.circumcircle();
        let r = r2.sqrt();
        if center.x - r < lo || center.x + r > hi || center.y - r < lo || center.y + r > hi {
            return Ok(None);
        }
    }

    let mut edges = Vec::new();
    for e in tri.undirected_edges() {
        let [a, b] = e.vertices();
        let (a, b) = (a.data(), b.data());
        if (a.canonical || b.canonical) && a.agent != b.agent {
            edges.push((a.agent.min(b.agent), a.agent.max(b.agent)));
        }
    }
    Ok(Some(VoronoiAdjacency::from_edges(n, edges)))
}

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` if the two sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Number of connected same-group clusters of `group`; isolated agents
/// count as their own cluster.
pub fn cluster_count(adjacency: &VoronoiAdjacency, labels: &[Group], group: Group) -> Result<usize> {
    if labels.len() != adjacency.n_agents {
        return Err(Error::LengthMismatch {
            expected: adjacency.n_agents,
            actual: labels.len(),
        });
    }
    let mut uf = UnionFind::new(labels.len());
    let mut clusters = labels.iter().filter(|&&g| g == group).count();
    for (i, j) in adjacency.edges() {
        if labels[i] == group && labels[j] == group && uf.union(i, j) {
            clusters -= 1;
        }
    }
    Ok(clusters)
}
