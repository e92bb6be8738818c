//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use crowd_core::{Group, Vec2};

/// Periodic Voronoi neighbors by clipping each cell with the bisectors of
/// every periodic image, then reading off which bisectors carry an edge.
pub fn voronoi_neighbors_by_clipping(positions: &[Vec2], edge: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    let tol = 1e-9 * edge;
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        let p = positions[i];
        let mut images = Vec::new();
        for j in 0..n {
            for dy in -2..=2 {
                for dx in -2..=2 {
                    if j == i && dx == 0 && dy == 0 {
                        continue;
                    }
                    images.push((j, positions[j] + Vec2::new(dx as f64 * edge, dy as f64 * edge)));
                }
            }
        }
        let mut cell = vec![
            p + Vec2::new(-edge, -edge),
            p + Vec2::new(edge, -edge),
            p + Vec2::new(edge, edge),
            p + Vec2::new(-edge, edge),
        ];
        let bisector = |q: Vec2| {
            let normal = q - p;
            (normal, 0.5 * (q.norm_sq() - p.norm_sq()))
        };
        for &(_, q) in &images {
            let (normal, c) = bisector(q);
            cell = clip(&cell, normal, c);
        }
        for &(j, q) in &images {
            if j == i {
                continue;
            }
            let (normal, c) = bisector(q);
            let len = normal.norm();
            let on_line: Vec<Vec2> = cell
                .iter()
                .copied()
                .filter(|v| ((normal.dot(*v) - c) / len).abs() <= tol)
                .collect();
            let spans = on_line
                .iter()
                .any(|a| on_line.iter().any(|b| (*a - *b).norm() > tol));
            if spans && !out[i].contains(&j) {
                out[i].push(j);
            }
        }
        out[i].sort_unstable();
    }
    out
}

/// Keeps the part of a convex polygon with `normal . x <= c`.
fn clip(poly: &[Vec2], normal: Vec2, c: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let fa = normal.dot(a) - c;
        let fb = normal.dot(b) - c;
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Connected components of `group`'s induced subgraph, by breadth-first search.
pub fn components_by_bfs(n: usize, edges: &[(usize, usize)], labels: &[Group], group: Group) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] || labels[start] != group {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] && labels[v] == group {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    count
}
