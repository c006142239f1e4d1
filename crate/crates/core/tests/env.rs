use std::collections::VecDeque;

use petgraph::algo::dijkstra;
use petgraph::graph::UnGraph;
use proptest::prelude::*;
use rwo_core::env::*;

/// Flood fill labelling written independently of the union-find code:
/// components numbered in order of their first site in a row-major scan.
fn flood_labels(field: &ObstacleField) -> Vec<i64> {
    let lat = field.lattice();
    let mut labels = vec![-1i64; lat.len()];
    let mut next = 0;
    for s in 0..lat.len() {
        if field.is_obstacle(s) || labels[s] >= 0 {
            continue;
        }
        labels[s] = next;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let c = lat.coords(u);
            for a in 0..c.len() {
                for delta in [-1i64, 1] {
                    let mut c2 = c.clone();
                    c2[a] += delta;
                    if let Some(v) = lat.index_of(&c2) {
                        if field.is_open(v) && labels[v] < 0 {
                            labels[v] = next;
                            q.push_back(v);
                        }
                    }
                }
            }
        }
        next += 1;
    }
    labels
}

#[test]
fn clusters_match_flood_fill() {
    for seed in 0..20 {
        let f = generate_field(2, &[32, 32], 0.7, seed, Boundary::None).unwrap();
        let cl = clusters(&f);
        assert_eq!(cl.labels(), flood_labels(&f).as_slice());
        assert_eq!(cl.sizes().iter().sum::<usize>(), f.open_count());
    }
    let f = generate_field(3, &[9, 10, 11], 0.5, 3, Boundary::AbsorbingPad).unwrap();
    assert_eq!(clusters(&f).labels(), flood_labels(&f).as_slice());
}

#[test]
fn cluster_examples() {
    let f = ObstacleField::open_window(&[3, 3], Boundary::None);
    let cl = clusters(&f);
    assert_eq!(cl.sizes(), &[9]);
    let mut mask = vec![true; 9];
    mask[0] = false;
    mask[8] = false;
    let f = ObstacleField::from_mask(&[3, 3], &mask, 0.5, 0, Boundary::None).unwrap();
    assert_eq!(clusters(&f).sizes(), &[1, 1]);
}

#[test]
fn largest_cluster_and_proxy() {
    let f = generate_field(2, &[64, 64], 0.75, 5, Boundary::AbsorbingPad).unwrap();
    let cl = clusters(&f);
    let big = cl.largest().unwrap();
    assert!(cl.sizes().iter().all(|&s| s <= cl.sizes()[big]));
    assert!(cl.touches_all_faces(big, f.lattice(), f.boundary()));
    let site = cl.members(big)[0];
    assert!(cl.in_proxy(site, &f, ClusterProxy::Largest));
}

fn oracle_distance(field: &ObstacleField, a: usize, b: usize) -> Option<u32> {
    let lat = field.lattice();
    let mut g = UnGraph::<(), u32>::new_undirected();
    let nodes: Vec<_> = (0..lat.len()).map(|_| g.add_node(())).collect();
    for s in 0..lat.len() {
        if field.is_obstacle(s) {
            continue;
        }
        for t in lat.neighbors(s) {
            if t > s && field.is_open(t) {
                g.add_edge(nodes[s], nodes[t], 1);
            }
        }
    }
    if field.is_obstacle(a) || field.is_obstacle(b) {
        return None;
    }
    dijkstra(&g, nodes[a], Some(nodes[b]), |e| *e.weight()).get(&nodes[b]).copied()
}

#[test]
fn chemical_distance_matches_dijkstra() {
    let f = generate_field(2, &[32, 32], 0.7, 9, Boundary::None).unwrap();
    let open = f.open_mask();
    let lat = f.lattice();
    let mut state = 12345u64;
    for _ in 0..50 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = (state >> 33) as usize % lat.len();
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let b = (state >> 33) as usize % lat.len();
        let got = chemical_distance(&f, &open, &lat.coords(a), &lat.coords(b)).unwrap();
        assert_eq!(got, oracle_distance(&f, a, b), "pair {a} {b}");
    }
}

#[test]
fn chemical_distance_examples() {
    let mut mask = vec![true; 3 * 12];
    for x in 0..12 {
        mask[12 + x] = false;
    }
    let f = ObstacleField::from_mask(&[3, 12], &mask, 0.5, 0, Boundary::None).unwrap();
    let open = f.open_mask();
    assert_eq!(chemical_distance(&f, &open, &[1, 0], &[1, 10]).unwrap(), Some(10));
    assert_eq!(chemical_distance(&f, &open, &[1, 4], &[1, 4]).unwrap(), Some(0));
    assert_eq!(chemical_distance(&f, &open, &[0, 0], &[1, 0]).unwrap(), None);
    assert!(matches!(
        chemical_distance(&f, &open, &[3, 0], &[1, 0]),
        Err(rwo_core::Error::PointOutsideWindow(_))
    ));
}

#[test]
fn model_constant_examples() {
    let mc = model_constants(2, 0.5, 1e6).unwrap();
    assert_eq!(mc.rho_n, 3);
    assert!((mc.mu_ball - 1.44580).abs() < 5e-6);
    // Exact value 1.5741732; the quoted 1.57418 is rounded in the last digit.
    assert!((mc.c_star - 1.574_173_163_8).abs() < 1e-9);
    assert!((mc.c_star - 1.57418).abs() < 1e-5);
    // d log_{1/p} n = ω_d gives ρ_n = 1.
    let n = 2f64.powf(std::f64::consts::PI / 2.0);
    assert_eq!(model_constants(2, 0.5, n).unwrap().rho_n, 1);
    let mc3 = model_constants(3, 0.5, 1e6).unwrap();
    assert!((mc3.mu_ball - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-15);
}

#[test]
fn snapshot_round_trip_is_byte_exact() {
    for (sides, b) in [(vec![13, 17], Boundary::AbsorbingPad), (vec![5, 6, 7], Boundary::None)] {
        let f = generate_field(sides.len(), &sides, 0.6, 99, b).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&f, &mut bytes).unwrap();
        assert_eq!(&bytes[..5], SNAPSHOT_MAGIC);
        let g = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(f, g);
        let mut again = Vec::new();
        write_snapshot(&g, &mut again).unwrap();
        assert_eq!(bytes, again);
    }
    assert!(read_snapshot(&b"RWRO2xxxx"[..]).is_err());
}

#[test]
fn generation_is_deterministic_across_thread_counts() {
    let gen = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| generate_field(2, &[64, 64], 0.7, 1, Boundary::AbsorbingPad).unwrap())
    };
    assert_eq!(gen(1), gen(4));
}

#[test]
fn open_fraction_within_four_sigma() {
    let p = 0.7;
    let f = generate_field(2, &[1000, 1000], p, 2024, Boundary::None).unwrap();
    let n = 1e6;
    let frac = f.open_count() as f64 / n;
    let sigma = (p * (1.0 - p) / n).sqrt();
    assert!((frac - p).abs() < 4.0 * sigma, "open fraction {frac}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chemical_distance_triangle_inequality(seed in 0u64..1000, picks in prop::collection::vec(0usize..10_000, 3)) {
        let f = generate_field(2, &[24, 24], 0.75, seed, Boundary::None).unwrap();
        let cl = clusters(&f);
        let big = cl.largest().unwrap();
        let members = cl.members(big);
        let pts: Vec<usize> = picks.iter().map(|&k| members[k % members.len()]).collect();
        let open = f.open_mask();
        let lat = f.lattice();
        let dist = |a: usize, b: usize| chemical_distance(&f, &open, &lat.coords(a), &lat.coords(b)).unwrap().unwrap();
        let (x, y, z) = (pts[0], pts[1], pts[2]);
        prop_assert!(dist(x, z) <= dist(x, y) + dist(y, z));
        prop_assert_eq!(dist(x, y), dist(y, x));
    }

    #[test]
    fn labels_canonical_under_reflection(seed in 0u64..1000) {
        // Reflecting the window changes the traversal order; cluster membership
        // must not change and labels must stay canonical.
        let f = generate_field(2, &[20, 20], 0.6, seed, Boundary::None).unwrap();
        let lat = f.lattice();
        let refl = |s: usize| { let c = lat.coords(s); lat.index_of(&[19 - c[0], 19 - c[1]]).unwrap() };
        let mask: Vec<bool> = (0..lat.len()).map(|s| f.is_obstacle(refl(s))).collect();
        let g = ObstacleField::from_mask(&[20, 20], &mask, 0.6, seed, Boundary::None).unwrap();
        let (a, b) = (clusters(&f), clusters(&g));
        for s in 0..lat.len() {
            for t in lat.neighbors(s) {
                prop_assert_eq!(a.same_cluster(s, t), b.same_cluster(refl(s), refl(t)));
            }
        }
        let mut firsts = Vec::new();
        for s in 0..lat.len() {
            if let Some(l) = b.label(s) { if l == firsts.len() { firsts.push(s); } else { prop_assert!(l < firsts.len()); } }
        }
        prop_assert_eq!(firsts.len(), b.count());
    }
}
