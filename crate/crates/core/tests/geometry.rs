mod common;

use common::{components_by_bfs, voronoi_neighbors_by_clipping};
use crowd_core::dynamics::wrap;
use crowd_core::{cluster_count, voronoi_adjacency, Group, Vec2, VoronoiAdjacency};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_positions(rng: &mut ChaCha8Rng, n: usize, edge: f64) -> Vec<Vec2> {
    (0..n)
        .map(|_| Vec2::new(rng.gen_range(0.0..edge), rng.gen_range(0.0..edge)))
        .collect()
}

#[test]
fn eight_agent_adjacency_matches_clipping_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let edge = 15.0;
    for case in 0..50 {
        let pos = random_positions(&mut rng, 8, edge);
        let adj = voronoi_adjacency(&pos, edge).unwrap();
        let oracle = voronoi_neighbors_by_clipping(&pos, edge);
        assert_eq!(adj.neighbor_lists, oracle, "case {case}: {pos:?}");
    }
}

#[test]
fn dense_crowd_matches_clipping_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let edge = 16.0;
    let pos = random_positions(&mut rng, 42, edge);
    let adj = voronoi_adjacency(&pos, edge).unwrap();
    assert_eq!(adj.neighbor_lists, voronoi_neighbors_by_clipping(&pos, edge));
    assert_eq!(adj.edge_count(), 3 * 42);
}

#[test]
fn cluster_count_matches_bfs_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let n = rng.gen_range(1..40);
        let m = rng.gen_range(0..3 * n);
        let edges: Vec<(usize, usize)> = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        let labels: Vec<Group> = (0..n)
            .map(|_| if rng.gen_bool(0.35) { Group::Two } else { Group::One })
            .collect();
        let adj = VoronoiAdjacency::from_edges(n, edges.iter().copied());
        for g in Group::BOTH {
            assert_eq!(cluster_count(&adj, &labels, g).unwrap(), components_by_bfs(n, &edges, &labels, g));
        }
    }
}

#[test]
fn two_lanes_are_two_clusters() {
    // 6 x 6 square lattice; rows 1 and 4 belong to Group 2
    let edge = 18.0;
    let mut pos = Vec::new();
    let mut labels = Vec::new();
    for row in 0..6 {
        for col in 0..6 {
            pos.push(Vec2::new(1.5 + 3.0 * col as f64, 1.5 + 3.0 * row as f64));
            labels.push(if row == 1 || row == 4 { Group::Two } else { Group::One });
        }
    }
    let adj = voronoi_adjacency(&pos, edge).unwrap();
    assert_eq!(cluster_count(&adj, &labels, Group::Two).unwrap(), 2);
    assert_eq!(cluster_count(&adj, &labels, Group::One).unwrap(), 2);
    let edges: Vec<_> = adj.edges().collect();
    assert_eq!(components_by_bfs(36, &edges, &labels, Group::Two), 2);
}

#[test]
fn single_group_is_one_cluster() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pos = random_positions(&mut rng, 30, 15.0);
    let adj = voronoi_adjacency(&pos, 15.0).unwrap();
    assert_eq!(cluster_count(&adj, &[Group::One; 30], Group::One).unwrap(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_symmetric_and_shift_invariant(
        seed in any::<u64>(),
        n in 3usize..30,
        sx in 0.0f64..20.0,
        sy in 0.0f64..20.0,
    ) {
        let edge = 20.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = random_positions(&mut rng, n, edge);
        let adj = voronoi_adjacency(&pos, edge).unwrap();
        for i in 0..n {
            prop_assert!(!adj.neighbors(i).contains(&i));
            for &j in adj.neighbors(i) {
                prop_assert!(adj.neighbors(j).contains(&i));
            }
        }
        let shifted: Vec<Vec2> = pos.iter().map(|&p| wrap(p + Vec2::new(sx, sy), edge)).collect();
        prop_assert_eq!(voronoi_adjacency(&shifted, edge).unwrap(), adj);
    }

    #[test]
    fn clusters_bounded_by_group_size(seed in any::<u64>(), n in 2usize..30) {
        let edge = 20.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = random_positions(&mut rng, n, edge);
        let labels: Vec<Group> = (0..n).map(|_| if rng.gen_bool(0.4) { Group::Two } else { Group::One }).collect();
        let adj = voronoi_adjacency(&pos, edge).unwrap();
        for g in Group::BOTH {
            let members = labels.iter().filter(|&&l| l == g).count();
            let c = cluster_count(&adj, &labels, g).unwrap();
            prop_assert!(c <= members);
            prop_assert_eq!(c == 0, members == 0);
        }
    }
}
