use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rwo_core::env::*;
use rwo_core::error::Error;
use rwo_core::greens::*;
use rwo_core::numeric::Cost;

/// Σ_{k<terms} λ^{-k} P^x(S_k = y, S_1..S_{k-1} ∈ A) by direct propagation.
fn series_oracle(lat: &Lattice, interior: &[bool], x: usize, y: usize, lambda: f64, terms: usize) -> f64 {
    let w = 1.0 / lat.degree() as f64;
    let mut cur = vec![0.0; lat.len()];
    cur[x] = 1.0;
    let mut next = vec![0.0; lat.len()];
    let mut total = 0.0;
    let mut scale = 1.0;
    for k in 0..terms {
        total += cur[y] * scale;
        next.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..lat.len() {
            if cur[s] != 0.0 && (k == 0 || interior[s]) {
                for t in lat.neighbors(s) {
                    next[t] += cur[s] * w;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        scale /= lambda;
    }
    total
}

fn open_sites(f: &ObstacleField) -> Vec<usize> {
    (0..f.lattice().len()).filter(|&s| f.is_open(s)).collect()
}

fn at(f: &ObstacleField, c: &[i64]) -> usize {
    f.lattice().index_of(c).unwrap()
}

#[test]
fn two_site_examples() {
    let f = ObstacleField::open_window(&[7, 7], Boundary::AbsorbingPad);
    let x = at(&f, &[3, 3]);
    let y = at(&f, &[3, 4]);
    let col = green_column(&f, &[x, y], y, 1.0).unwrap();
    assert!((col.values[y] - 16.0 / 15.0).abs() < 1e-12);
    assert!((col.values[x] - 4.0 / 15.0).abs() < 1e-12);
    let col = green_column(&f, &[x], x, 0.3).unwrap();
    assert!((col.values[x] - 1.0).abs() < 1e-15);

    let mut mask = vec![true; 49];
    mask[x] = false;
    mask[y] = false;
    let g = ObstacleField::from_mask(&[7, 7], &mask, 0.5, 0, Boundary::AbsorbingPad).unwrap();
    let r = lwgf_phi(&g, x, y, 1.0, None).unwrap();
    assert!((r.value.finite().unwrap() - 4f64.ln()).abs() < 1e-12);
    assert_eq!(lwgf_phi(&g, x, x, 1.0, None).unwrap().value, Cost::Finite(0.0));
    let far = at(&g, &[1, 1]);
    assert_eq!(lwgf_phi(&g, x, far, 1.0, None).unwrap().value, Cost::Infinite);
}

#[test]
fn divergent_series_is_reported() {
    let f = ObstacleField::open_window(&[12, 12], Boundary::AbsorbingPad);
    let open = open_sites(&f);
    // λ_A = cos(π/11) for the 10×10 box.
    let lambda = (std::f64::consts::PI / 11.0).cos() - 1e-3;
    let err = green_column(&f, &open, open[0], lambda).unwrap_err();
    assert!(matches!(err, Error::DivergentSeries { .. }));
    let col = green_column(&f, &open, open[0], lambda + 2e-3).unwrap();
    assert!(col.spectral_ratio < 1.0);
}

#[test]
fn solve_matches_series_on_random_sets() {
    for seed in 0..6u64 {
        let f = generate_field(2, &[12, 12], 0.7, seed, Boundary::AbsorbingPad).unwrap();
        let lat = f.lattice();
        let open = open_sites(&f);
        let mut interior = vec![false; lat.len()];
        open.iter().for_each(|&s| interior[s] = true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let y = open[rng.gen_range(0..open.len())];
            let col = green_column(&f, &open, y, 1.0).unwrap();
            for x in 0..lat.len() {
                let oracle = series_oracle(lat, &interior, x, y, 1.0, 10_000);
                assert!((col.values[x] - oracle).abs() <= 1e-6 * oracle.max(1e-3), "seed {seed}: {x}");
            }
        }
    }
}

#[test]
fn quotient_identity_holds() {
    let f = generate_field(2, &[25, 25], 0.8, 3, Boundary::AbsorbingPad).unwrap();
    let cl = clusters(&f);
    let big = cl.members(cl.largest().unwrap());
    for (i, j) in [(0, big.len() - 1), (3, big.len() / 2), (big.len() / 3, 10)] {
        let r = lwgf_phi(&f, big[i], big[j], 1.0, None).unwrap();
        assert!(r.identity_error.unwrap() < 1e-8, "{:?}", r.identity_error);
        assert!(r.value.is_finite());
    }
}

#[test]
fn star_matches_exhaustive_minimum() {
    let f = generate_field(2, &[41, 41], 0.8, 11, Boundary::AbsorbingPad).unwrap();
    let lat = f.lattice();
    let x = at(&f, &[5, 20]);
    let y = at(&f, &[35, 20]);
    let r = 2.0;
    let star = lwgf_star(&f, x, y, 1.0, None, Some(r)).unwrap();
    let mut best = f64::INFINITY;
    for &xp in &lat.ball(x, r) {
        for &yp in &lat.ball(y, r) {
            best = best.min(lwgf_phi(&f, xp, yp, 1.0, None).unwrap().value.as_f64());
        }
    }
    let got = star.value.as_f64();
    assert!((got - best).abs() <= 1e-9 * best.abs(), "{got} vs {best}");
    let (wx, wy) = star.witness.unwrap();
    assert!(lat.dist(wx, x) <= r && lat.dist(wy, y) <= r);
}

#[test]
fn star_gets_around_an_obstacle() {
    let mut mask = vec![false; 21 * 21];
    let lat = Lattice::new(&[21, 21]);
    let x = lat.index_of(&[5, 10]).unwrap();
    let y = lat.index_of(&[15, 10]).unwrap();
    mask[x] = true;
    let f = ObstacleField::from_mask(&[21, 21], &mask, 0.5, 0, Boundary::AbsorbingPad).unwrap();
    assert_eq!(lwgf_phi(&f, x, y, 1.0, None).unwrap().value, Cost::Infinite);
    assert!(lwgf_star(&f, x, y, 1.0, None, Some(1.5)).unwrap().value.is_finite());
}

#[test]
fn orderings_and_vacuous_restriction() {
    for seed in 0..4u64 {
        let f = generate_field(2, &[21, 21], 0.75, seed, Boundary::AbsorbingPad).unwrap();
        let x = at(&f, &[5, 10]);
        let y = at(&f, &[14, 10]);
        let phi = lwgf_phi(&f, x, y, 1.0, None).unwrap().value.as_f64();
        let star = lwgf_star(&f, x, y, 1.0, None, Some(1.0)).unwrap().value.as_f64();
        let circ = lwgf_circ(&f, x, y, 1.0, None, 12.0).unwrap().value.as_f64();
        assert!(star <= phi && phi <= circ, "seed {seed}: {star} {phi} {circ}");
        let wide = lwgf_circ(&f, x, y, 1.0, None, 40.0).unwrap().value.as_f64();
        assert_eq!(wide, phi);
        let circ_star = lwgf_circ_star(&f, x, y, 1.0, None, 1.0, 12.0).unwrap().value.as_f64();
        assert!(circ_star >= star && circ_star <= circ);
    }
}

#[test]
fn truncation_clamps() {
    let lat = Lattice::new(&[80, 5]);
    let x = lat.index_of(&[10, 2]).unwrap();
    let y = lat.index_of(&[60, 2]).unwrap();
    let f = ObstacleField::open_window(&[80, 5], Boundary::AbsorbingPad);
    let mut r = lwgf_star(&f, x, y, 1.0, None, Some(1.0)).unwrap();
    r.value = Cost::Finite(0.1);
    let t = truncate(&lat, &r, 0.1, 2.0);
    assert_eq!(t.value, Cost::Finite(5.0));
    assert_eq!(t.kind, LwgfKind::PhiBarStar);
    r.value = Cost::Infinite;
    assert_eq!(truncate(&lat, &r, 0.1, 2.0).value, Cost::Finite(100.0));
}

#[test]
fn hitting_trivial_cases() {
    let f = ObstacleField::open_window(&[31, 31], Boundary::AbsorbingPad);
    let o = f.origin();
    let v = at(&f, &[15, 16]);
    assert_eq!(phi_star_hitting(&f, o, v, 1.0, None, 100, 1.0).unwrap().value, Cost::Finite(0.0));
    let far = at(&f, &[15, 28]);
    assert_eq!(phi_star_hitting(&f, o, far, 1.0, None, 5, 1.0).unwrap().value, Cost::Infinite);
    let mut mask = vec![false; 31 * 31];
    mask[at(&f, &[15, 20])] = true;
    let g = ObstacleField::from_mask(&[31, 31], &mask, 0.5, 0, Boundary::AbsorbingPad).unwrap();
    let params = ConsistencyParams { n: 100, hit_radius: 1.0, r_star: 1.0, survival_horizon: 50, delta: 0.01, budget: 1.0 };
    let rep = consistency_check_phi_star(&g, o, far, 1.0, &params).unwrap();
    assert_eq!(rep.phi_star.value, Cost::Infinite);
    assert_eq!(rep.phi_hit.value, Cost::Infinite);
    assert_eq!(rep.gap, Some(0.0));
}

#[test]
fn hitting_matches_weighted_monte_carlo() {
    let f = ObstacleField::open_window(&[33, 33], Boundary::AbsorbingPad);
    let lat = f.lattice();
    let o = f.origin();
    let v = at(&f, &[16, 26]);
    let (lambda, n, radius) = (0.99, 500usize, 1.0);
    let exact = phi_star_hitting(&f, o, v, lambda, None, n, radius).unwrap().value.finite().unwrap();
    let ball = lat.ball(v, radius);
    let walks = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..walks {
        let mut s = o;
        let mut weight = 0.0;
        for t in 1..=n {
            let nb: Vec<usize> = lat.neighbors(s).collect();
            s = nb[rng.gen_range(0..nb.len())];
            if f.is_obstacle(s) {
                break;
            }
            if ball.binary_search(&s).is_ok() {
                weight = lambda.powi(-(t as i32));
                break;
            }
        }
        sum += weight;
        sum2 += weight * weight;
    }
    let mean = sum / walks as f64;
    let se = ((sum2 / walks as f64 - mean * mean) / (walks as f64 - 1.0)).sqrt();
    let target = (-exact).exp();
    assert!((mean - target).abs() <= 3.0 * se, "{mean} ± {se} vs {target}");
}

#[test]
fn norming_without_obstacles_is_the_lower_clamp() {
    let cfg = NormingConfig {
        p: 1.0,
        sides: vec![41, 21],
        origin: vec![10, 10],
        lambda: 1.0,
        survival_horizon: 20,
        delta: 0.01,
        r_star: 1.0e6,
        c_low: 0.05,
        c_high: 20.0 * 4f64.ln(),
        replicates: 30,
        seed: 1,
        condition_g0: false,
        g0_radius: 2.0,
    };
    let est = estimate_g(&[1, 0], &[5, 10, 20], &cfg).unwrap();
    for (i, m) in [5.0, 10.0, 20.0].iter().enumerate() {
        assert!((est.means[i] - 0.05 * m).abs() < 1e-12);
        assert_eq!(est.variances[i], 0.0);
    }
    assert!((est.g_hat - 0.05).abs() < 1e-12);
    let few = NormingConfig { replicates: 10, ..cfg };
    assert!(matches!(estimate_h(&[3, 0], &few), Err(Error::InsufficientSamples { .. })));
}

#[test]
fn norming_is_deterministic() {
    let cfg = NormingConfig {
        p: 0.8,
        sides: vec![41, 21],
        origin: vec![10, 10],
        lambda: 1.0,
        survival_horizon: 30,
        delta: 0.01,
        r_star: 2.0,
        c_low: 0.05,
        c_high: 20.0 * 4f64.ln(),
        replicates: 30,
        seed: 5,
        condition_g0: true,
        g0_radius: 2.0,
    };
    let a = estimate_g(&[1, 0], &[4, 8], &cfg).unwrap();
    let b = estimate_g(&[1, 0], &[4, 8], &cfg).unwrap();
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.environments, b.environments);
    assert!(a.means.iter().all(|m| m.is_finite()));
}

fn small_field() -> impl Strategy<Value = ObstacleField> {
    (0u64..500, 0.6f64..0.95)
        .prop_map(|(seed, p)| generate_field(2, &[9, 9], p, seed, Boundary::AbsorbingPad).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn green_is_symmetric_and_monotone(f in small_field(), a in 0usize..81, b in 0usize..81) {
        let open = open_sites(&f);
        prop_assume!(f.is_open(a) && f.is_open(b));
        let ga = green_column(&f, &open, b, 1.0).unwrap();
        let gb = green_column(&f, &open, a, 1.0).unwrap();
        prop_assert!((ga.values[a] - gb.values[b]).abs() <= 1e-10 * ga.values[a].max(1e-300));
        let lower = green_column(&f, &open, b, 0.97);
        if let Ok(lower) = lower {
            prop_assert!(lower.values[a] >= ga.values[a] * (1.0 - 1e-12));
        }
        let smaller: Vec<usize> = open.iter().copied().filter(|&s| s % 5 != 0 || s == a || s == b).collect();
        let gs = green_column(&f, &smaller, b, 1.0).unwrap();
        prop_assert!(gs.values.iter().zip(&ga.values).all(|(s, g)| *s <= g * (1.0 + 1e-12) + 1e-15));
    }

    #[test]
    fn truncation_is_idempotent(raw in prop_oneof![Just(f64::INFINITY), 0.0f64..200.0], lo in 0.01f64..1.0, hi in 1.0f64..30.0) {
        let f = ObstacleField::open_window(&[30, 5], Boundary::AbsorbingPad);
        let lat = f.lattice();
        let mut r = lwgf_star(&f, lat.index_of(&[3, 2]).unwrap(), lat.index_of(&[25, 2]).unwrap(), 1.0, None, Some(1.0)).unwrap();
        r.value = if raw.is_finite() { Cost::Finite(raw) } else { Cost::Infinite };
        let once = truncate(lat, &r, lo, hi);
        let twice = truncate(lat, &once, lo, hi);
        prop_assert_eq!(once.value, twice.value);
    }
}
