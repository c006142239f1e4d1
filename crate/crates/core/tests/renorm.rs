use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rwo_core::env::*;
use rwo_core::renorm::*;

const L: usize = 3;

fn c_d() -> f64 {
    desk_c_d(2, L)
}

fn open_field(side: usize) -> ObstacleField {
    ObstacleField::open_window(&[side, side], Boundary::None)
}

fn box_inside(lat: &Lattice, center: &[i64], l: i64) -> bool {
    center.iter().zip(lat.sides()).all(|(&c, &s)| c - l >= 0 && c + l < s as i64)
}

#[test]
fn open_window_boxes_are_white_inside() {
    let f = open_field(61);
    let g = classify_boxes(&f, L, c_d(), None).unwrap();
    let mut white = 0;
    for slot in 0..g.states.len() {
        let i = g.index_at(slot);
        let inside = box_inside(f.lattice(), &g.center(&i), L as i64);
        let expect = if inside { BoxState::White } else { BoxState::Unknown };
        assert_eq!(g.states[slot], expect, "box {i:?}");
        if inside {
            white += 1;
            assert!(!g.clusters[slot].is_empty());
            assert!(!g.sampled[slot]);
        }
    }
    assert_eq!(white, 49);
    assert_eq!(g.white_fraction(), Some(1.0));
}

#[test]
fn large_boxes_sample_the_distance_clause() {
    let f = open_field(81);
    let g = classify_boxes(&f, 4, desk_c_d(2, 4), None).unwrap();
    assert_eq!(g.state(&[0, 0]), BoxState::White);
    assert!(g.sampled[g.slot(&[0, 0]).unwrap()]);
}

#[test]
fn blocked_box_is_black() {
    let side = 61;
    let lat = Lattice::new(&[side, side]);
    let mask: Vec<bool> = (0..lat.len())
        .map(|s| lat.coords(s).iter().all(|&c| (c - 30).abs() <= L as i64))
        .collect();
    let f = ObstacleField::from_mask(&[side, side], &mask, 0.8, 0, Boundary::None).unwrap();
    let g = classify_boxes(&f, L, c_d(), None).unwrap();
    assert_eq!(g.state(&[0, 0]), BoxState::Black);
    assert_eq!(g.reason(&[0, 0]), Some(BlackReason::ThinNeighbour));
    assert!(g.clusters[g.slot(&[0, 0]).unwrap()].is_empty());
    assert_eq!(g.state(&[3, 3]), BoxState::White);
}

#[test]
fn d_set_blackens_nearby_boxes_only() {
    let f = open_field(61);
    let mut d_set = vec![false; f.lattice().len()];
    d_set[f.lattice().index_of(&[60, 60]).unwrap()] = true;
    let g = classify_boxes(&f, L, c_d(), Some(&d_set)).unwrap();
    // The neighbourhood reaches ⌊C_D L⌋ = 50 sites in ℓ∞.
    assert_eq!(g.state(&[0, 0]), BoxState::Black);
    assert_eq!(g.reason(&[0, 0]), Some(BlackReason::DSet));
    assert_eq!(g.state(&[-3, -3]), BoxState::White);
}

#[test]
fn two_crossings_make_a_box_black() {
    // A closed wall splits the window into two open halves.
    let side = 61;
    let lat = Lattice::new(&[side, side]);
    let mask: Vec<bool> = (0..lat.len()).map(|s| lat.coords(s)[0] == 31).collect();
    let f = ObstacleField::from_mask(&[side, side], &mask, 0.8, 0, Boundary::None).unwrap();
    let g = classify_boxes(&f, L, c_d(), None).unwrap();
    assert_eq!(g.reason(&[0, 0]), Some(BlackReason::SeveralCrossings));
}

#[test]
fn bad_parameters_are_rejected() {
    let f = open_field(31);
    assert!(classify_boxes(&f, 2, c_d(), None).is_err());
    assert!(classify_boxes(&f, L, 0.5, None).is_err());
    assert!(classify_boxes(&f, L, c_d(), Some(&[false; 3])).is_err());
    assert!(LazyBoxes::new(&f, 2, c_d(), None).is_err());
}

#[test]
fn lazy_and_eager_classification_agree() {
    let f = generate_field(2, &[71, 71], 0.85, 11, Boundary::AbsorbingPad).unwrap();
    let g = classify_boxes(&f, L, c_d(), None).unwrap();
    let lazy = LazyBoxes::new(&f, L, c_d(), None).unwrap();
    for slot in 0..g.states.len() {
        let i = g.index_at(slot);
        assert_eq!(lazy.state(&i), g.states[slot], "box {i:?}");
    }
    let near = classify_boxes_near(&f, L, c_d(), None, f.origin(), 1.0).unwrap();
    for slot in 0..near.states.len() {
        let i = near.index_at(slot);
        let expect = if i.iter().map(|k| k * k).sum::<i64>() <= 1 { g.states[slot] } else { BoxState::Unknown };
        assert_eq!(near.states[slot], expect);
    }
}

#[test]
fn white_clusters_have_short_chemical_distances() {
    let f = generate_field(2, &[71, 71], 0.9, 5, Boundary::AbsorbingPad).unwrap();
    let g = classify_boxes(&f, L, c_d(), None).unwrap();
    let limit = (c_d() * L as f64).floor();
    let mut checked = 0;
    for slot in (0..g.states.len()).filter(|&s| g.states[s] == BoxState::White) {
        let center = g.center(&g.index_at(slot));
        let cluster = &g.clusters[slot];
        let in_m: Vec<usize> = cluster
            .iter()
            .copied()
            .filter(|&s| f.lattice().coords(s).iter().zip(&center).all(|(a, b)| (a - b).abs() <= 3 * L as i64 + 1))
            .collect();
        let mut active = vec![false; f.lattice().len()];
        for &s in cluster {
            active[s] = true;
        }
        for (a, b) in [(0, in_m.len() - 1), (0, in_m.len() / 2), (in_m.len() / 3, in_m.len() - 1)] {
            let (pa, pb) = (f.lattice().coords(in_m[a]), f.lattice().coords(in_m[b]));
            let dist = chemical_distance(&f, &active, &pa, &pb).unwrap().expect("joined inside the cluster");
            assert!(dist as f64 <= limit, "{dist}");
        }
        checked += 1;
    }
    assert!(checked > 0);
}

/// Whiteness can only be lost to an obstacle deletion through a second
/// crossing or a longer cluster; every other clause is monotone.
#[test]
fn obstacle_deletion_flips_are_explained() {
    let side = 57;
    let mut f = generate_field(2, &[side, side], 0.85, 3, Boundary::None).unwrap();
    let reach = (c_d() * L as f64).floor() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut before = classify_boxes(&f, L, c_d(), None).unwrap();
    let mut deletions = 0;
    while deletions < 25 {
        let site = rng.gen_range(0..f.lattice().len());
        if f.is_open(site) {
            continue;
        }
        deletions += 1;
        f.set_obstacle(site, false);
        let after = classify_boxes(&f, L, c_d(), None).unwrap();
        let c = f.lattice().coords(site);
        for slot in 0..after.states.len() {
            let center = after.center(&after.index_at(slot));
            let touched = c.iter().zip(&center).all(|(a, b)| (a - b).abs() <= reach);
            if !touched {
                assert_eq!(after.states[slot], before.states[slot]);
                continue;
            }
            if before.states[slot] == BoxState::White && after.states[slot] == BoxState::Black {
                assert!(
                    matches!(after.reasons[slot], Some(BlackReason::SeveralCrossings | BlackReason::Distance)),
                    "{:?}",
                    after.reasons[slot]
                );
            }
        }
        before = after;
    }
}

#[test]
fn tilde_white_mask_limits() {
    let f = generate_field(2, &[71, 71], 0.9, 2, Boundary::AbsorbingPad).unwrap();
    let g = classify_boxes(&f, L, c_d(), None).unwrap();
    let white: Vec<bool> = g.states.iter().map(|&s| s == BoxState::White).collect();
    assert_eq!(tilde_white(&g, 0.0, 1).unwrap(), white);
    assert!(tilde_white(&g, 1.0, 1).unwrap().iter().all(|&w| !w));
    let half = tilde_white(&g, 0.5, 4).unwrap();
    assert_eq!(half, tilde_white(&g, 0.5, 4).unwrap());
    assert!(half.iter().zip(&white).all(|(&h, &w)| !h || w));
    assert!(tilde_white(&g, 1.5, 1).is_err());
}

/// Box grid with every box in `[-reach, reach]^2` set by `black`.
fn synthetic_grid(l: usize, anchor: &[i64], reach: i64, black: impl Fn(&[i64]) -> bool) -> BoxGrid {
    let width = (2 * reach + 1) as usize;
    let mut grid = BoxGrid {
        half_side: l,
        c_d: 1.0,
        anchor: anchor.to_vec(),
        lo: vec![-reach; 2],
        counts: vec![width; 2],
        states: Vec::new(),
        reasons: Vec::new(),
        clusters: Vec::new(),
        sampled: Vec::new(),
    };
    for slot in 0..width * width {
        let i = grid.index_at(slot);
        grid.states.push(if black(&i) { BoxState::Black } else { BoxState::White });
        grid.reasons.push(None);
        grid.clusters.push(Vec::new());
        grid.sampled.push(false);
    }
    grid
}

/// Flood from B_r(x) over sites outside the cut boxes; true when no site
/// beyond distance 2r is reached.
fn oracle_separates(l: i64, anchor: &[i64], cut: &[Vec<i64>], x: &[i64], r: f64) -> bool {
    let side = (2 * l + 1) as f64;
    let cut: HashSet<(i64, i64)> = cut.iter().map(|i| (i[0], i[1])).collect();
    let blocked = |p: (i64, i64)| {
        let bx = ((p.0 - anchor[0]) as f64 / side).round() as i64;
        let by = ((p.1 - anchor[1]) as f64 / side).round() as i64;
        cut.contains(&(bx, by))
    };
    let far = |p: (i64, i64)| (((p.0 - x[0]).pow(2) + (p.1 - x[1]).pow(2)) as f64) > 4.0 * r * r;
    let reach = r.ceil() as i64;
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            let p = (x[0] + dx, x[1] + dy);
            if ((dx * dx + dy * dy) as f64) <= r * r && !blocked(p) && seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    while let Some(p) = queue.pop_front() {
        if far(p) {
            return false;
        }
        for q in [(p.0 + 1, p.1), (p.0 - 1, p.1), (p.0, p.1 + 1), (p.0, p.1 - 1)] {
            if !blocked(q) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    true
}

fn star_connected(indices: &[Vec<i64>]) -> bool {
    let set: HashSet<&Vec<i64>> = indices.iter().collect();
    let mut seen = HashSet::from([&indices[0]]);
    let mut stack = vec![&indices[0]];
    while let Some(i) = stack.pop() {
        for j in indices {
            if (i[0] - j[0]).abs() <= 1 && (i[1] - j[1]).abs() <= 1 && set.contains(j) && seen.insert(j) {
                stack.push(j);
            }
        }
    }
    seen.len() == indices.len()
}

const SIDE: usize = 601;
const R: f64 = 100.0;

fn centre(lat: &Lattice) -> (usize, Vec<i64>) {
    let c = vec![(SIDE / 2) as i64; 2];
    (lat.index_of(&c).unwrap(), c)
}

#[test]
fn all_white_cut_is_the_sup_sphere() {
    let lat = Lattice::new(&[SIDE, SIDE]);
    let (x, xc) = centre(&lat);
    let grid = synthetic_grid(L, &xc, 40, |_| false);
    let cut = find_separating_cut(&grid, &lat, x, R, CutParams::for_dim(2)).unwrap().expect("cut");
    // Inner ℓ∞ radius ⌈(r + 2L)/(2L+1)⌉ = 16, thickened by d = 2, boundary one further.
    let radius: i64 = 16 + 2 + 1;
    let mut expect: Vec<Vec<i64>> = Vec::new();
    for a in -radius..=radius {
        for b in -radius..=radius {
            if a.abs().max(b.abs()) == radius {
                expect.push(vec![a, b]);
            }
        }
    }
    assert_eq!(cut.indices, expect);
    assert!(oracle_separates(L as i64, &xc, &cut.indices, &xc, R));
    assert!(separates(&grid.tiling(), &cut.indices, &xc, R));

    // Dropping one box opens a gap.
    let holed: Vec<Vec<i64>> = expect.iter().filter(|i| **i != vec![radius, 0]).cloned().collect();
    assert!(!oracle_separates(L as i64, &xc, &holed, &xc, R));
    assert!(!separates(&grid.tiling(), &holed, &xc, R));
}

#[test]
fn black_path_across_the_annulus_blocks_the_cut() {
    let lat = Lattice::new(&[SIDE, SIDE]);
    let (x, xc) = centre(&lat);
    let grid = synthetic_grid(L, &xc, 40, |i| i[1] == 0 && i[0] >= 0);
    assert!(build_cut(&grid, &lat, x, R, CutParams::for_dim(2)).unwrap().is_none());
}

#[test]
fn small_radius_has_no_room_for_a_cut() {
    let lat = Lattice::new(&[SIDE, SIDE]);
    let (x, xc) = centre(&lat);
    let grid = synthetic_grid(L, &xc, 40, |_| false);
    assert!(build_cut(&grid, &lat, x, 20.0, CutParams::for_dim(2)).unwrap().is_none());
    assert!(build_cut(&grid, &lat, x, -1.0, CutParams::for_dim(2)).is_err());
}

#[test]
fn lazy_boxes_give_a_cut_on_a_dense_field() {
    let side = 4 * R as usize + 2 * 50 + 21;
    let f = generate_field(2, &[side, side], 0.99, 1, Boundary::AbsorbingPad).unwrap();
    let lazy = LazyBoxes::new(&f, L, c_d(), None).unwrap();
    let cut = build_cut(&lazy, f.lattice(), f.origin(), R, CutParams::for_dim(2)).unwrap().expect("cut");
    let xc = f.lattice().coords(f.origin());
    assert!(cut.indices.iter().all(|i| lazy.state(i) == BoxState::White));
    assert!(oracle_separates(L as i64, &xc, &cut.indices, &xc, R));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn returned_cuts_pass_the_oracle(marks in prop::collection::vec(0u8..40, 81 * 81)) {
        let lat = Lattice::new(&[SIDE, SIDE]);
        let (x, xc) = centre(&lat);
        let grid = synthetic_grid(L, &xc, 40, |i| marks[((i[0] + 40) * 81 + i[1] + 40) as usize] == 0);
        if let Some(cut) = build_cut(&grid, &lat, x, R, CutParams::for_dim(2)).unwrap() {
            prop_assert!(cut.indices.iter().all(|i| grid.state(i) == BoxState::White));
            prop_assert!(star_connected(&cut.indices));
            prop_assert!(oracle_separates(L as i64, &xc, &cut.indices, &xc, R));
        }
    }

    #[test]
    fn every_site_lies_in_its_box(a in -500i64..500, b in -500i64..500, ax in -20i64..20, l in 3usize..9) {
        let tiling = Tiling { half_side: l, anchor: vec![ax, -ax] };
        let i = tiling.index_of_coords(&[a, b]);
        let c = tiling.center(&i);
        prop_assert!((c[0] - a).abs() <= l as i64 && (c[1] - b).abs() <= l as i64);
    }
}
