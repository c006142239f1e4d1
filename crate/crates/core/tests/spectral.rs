use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rwo_core::env::*;
use rwo_core::spectral::*;

fn open_sites(f: &ObstacleField) -> Vec<usize> {
    (0..f.lattice().len()).filter(|&s| f.is_open(s)).collect()
}

/// Dense P restricted to `sites` (ascending).
fn dense_p(lat: &Lattice, sites: &[usize]) -> DMatrix<f64> {
    let n = sites.len();
    let w = 1.0 / lat.degree() as f64;
    let mut m = DMatrix::zeros(n, n);
    for (i, &s) in sites.iter().enumerate() {
        for nb in lat.neighbors(s) {
            if let Ok(j) = sites.binary_search(&nb) {
                m[(i, j)] = w;
            }
        }
    }
    m
}

fn box_field(l: usize) -> ObstacleField {
    ObstacleField::open_window(&[l + 2, l + 2], Boundary::AbsorbingPad)
}

#[test]
fn open_box_closed_form() {
    for l in [3usize, 9, 31] {
        let f = box_field(l);
        let op = restricted_operator(&f, &open_sites(&f)).unwrap();
        let r = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let exact = (std::f64::consts::PI / (l as f64 + 1.0)).cos();
        assert!((r.lambda - exact).abs() < 1e-8, "L={l}: {} vs {exact}", r.lambda);
        assert!((r.vector.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.vector.iter().all(|&x| x > 0.0));
    }
    let f = box_field(3);
    let sites = open_sites(&f);
    let eig = SymmetricEigen::new(dense_p(f.lattice(), &sites));
    let top = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let op = restricted_operator(&f, &sites).unwrap();
    let r = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
    assert!((r.lambda - top).abs() < 1e-10);
}

#[test]
fn tiny_sets() {
    let f = ObstacleField::open_window(&[5, 5], Boundary::AbsorbingPad);
    let c = f.origin();
    let r = principal_eigenpair(&restricted_operator(&f, &[c]).unwrap(), 1e-12, 1000).unwrap();
    assert_eq!(r.lambda, 0.0);
    assert_eq!(r.vector, vec![1.0]);
    let r = principal_eigenpair(&restricted_operator(&f, &[c, c + 1]).unwrap(), 1e-12, 1000).unwrap();
    assert!((r.lambda - 0.25).abs() < 1e-12);
    assert!((r.vector[0] - 0.5).abs() < 1e-12 && (r.vector[1] - 0.5).abs() < 1e-12);
    assert!(matches!(
        principal_eigenpair(&restricted_operator(&f, &[]).unwrap(), 1e-12, 10),
        Err(rwo_core::Error::EmptyActiveSet)
    ));
    assert!(matches!(restricted_operator(&f, &[0]), Err(rwo_core::Error::ActiveSiteIsObstacle(0))));
}

#[test]
fn disconnected_set_picks_larger_component() {
    let f = ObstacleField::open_window(&[12, 12], Boundary::AbsorbingPad);
    let lat = f.lattice();
    let mut sites: Vec<usize> = (1..4).flat_map(|i| (1..4).map(move |j| (i, j))).map(|(i, j)| lat.index_of(&[i, j]).unwrap()).collect();
    sites.extend([lat.index_of(&[8, 8]).unwrap(), lat.index_of(&[8, 9]).unwrap()]);
    let op = restricted_operator(&f, &sites).unwrap();
    let r = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
    assert!((r.lambda - (std::f64::consts::PI / 4.0).cos()).abs() < 1e-9);
    assert_eq!(r.component.len(), 9);
    assert_eq!(r.vector[9], 0.0);
    assert_eq!(r.vector[10], 0.0);
}

#[test]
fn eigenfunction_identity() {
    let f = generate_field(2, &[30, 30], 0.8, 4, Boundary::AbsorbingPad).unwrap();
    let cl = clusters(&f);
    let comp = cl.members(cl.largest().unwrap());
    let op = restricted_operator(&f, &comp).unwrap();
    let tol = 1e-11;
    let r = principal_eigenpair(&op, tol, DEFAULT_MAX_ITERS).unwrap();
    let mut x = r.vector.clone();
    let mut y = vec![0.0; x.len()];
    let fmax = r.vector.iter().copied().fold(0.0, f64::max);
    for t in 1..=1000usize {
        op.apply(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        if t % 100 == 0 {
            let lt = r.lambda.powi(t as i32);
            let err = x.iter().zip(&r.vector).map(|(a, b)| (a - lt * b).abs()).fold(0.0, f64::max);
            assert!(err <= t as f64 * tol * fmax, "t={t} err={err}");
        }
    }
}

#[test]
fn survival_matches_dense_matrix_powers() {
    for seed in 0..5 {
        let f = generate_field(2, &[12, 12], 0.75, seed, Boundary::AbsorbingPad).unwrap();
        let sites = open_sites(&f);
        let p = dense_p(f.lattice(), &sites);
        let t = 17;
        let sv = survival_vector(&f, t, None);
        let pt = p.pow(t as u32);
        // Backward: P^t 1. Forward: sum over starts of the law of S_t started there.
        let ones = nalgebra::DVector::from_element(sites.len(), 1.0);
        let back = &pt * &ones;
        let fwd: Vec<f64> = (0..sites.len()).map(|i| pt.row(i).sum()).collect();
        for (i, &s) in sites.iter().enumerate() {
            assert!((sv.values[s] - back[i]).abs() < 1e-14);
            assert!((sv.values[s] - fwd[i]).abs() < 1e-14);
        }
        for s in 0..f.lattice().len() {
            assert!(sv.values[s] >= 0.0 && sv.values[s] <= 1.0);
        }
    }
}

#[test]
fn survival_asymptotics_include_the_negative_eigenvalue() {
    // On a bipartite set the -λ eigenvector contributes with sign (-1)^t, so
    // s_t / λ^t tends to a two-term limit built from both extreme eigenpairs.
    let f = box_field(9);
    let sites = open_sites(&f);
    let eig = SymmetricEigen::new(dense_p(f.lattice(), &sites));
    let (mut imax, mut imin) = (0, 0);
    for k in 0..sites.len() {
        if eig.eigenvalues[k] > eig.eigenvalues[imax] {
            imax = k;
        }
        if eig.eigenvalues[k] < eig.eigenvalues[imin] {
            imin = k;
        }
    }
    let lam = eig.eigenvalues[imax];
    let t = 100;
    let sv = survival_vector(&f, t, None);
    let op = restricted_operator(&f, &sites).unwrap();
    let pe = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
    assert!((pe.lambda - lam).abs() < 1e-10);
    let u = eig.eigenvectors.column(imax);
    let w = eig.eigenvectors.column(imin);
    let (su, sw) = (u.sum(), w.sum());
    for (i, &s) in sites.iter().enumerate() {
        let limit = u[i] * su + w[i] * sw * (-1f64).powi(t as i32);
        let ratio = sv.values[s] / lam.powi(t as i32);
        assert!((ratio - limit).abs() <= 0.01 * limit.abs(), "site {s}: {ratio} vs {limit}");
    }
}

#[test]
fn d_lambda_examples_and_monotonicity() {
    let f = ObstacleField::open_window(&[10, 10], Boundary::AbsorbingPad);
    let all = d_lambda(&f, 1e-9, 20, 0.01);
    assert_eq!(all.iter().filter(|&&b| b).count(), f.open_count());
    let none = d_lambda(&f, 1.0, 20, 0.0);
    assert!(none.iter().all(|&b| !b));
    let g = generate_field(2, &[40, 40], 0.8, 3, Boundary::AbsorbingPad).unwrap();
    let sv = survival_vector(&g, 30, None);
    let mut prev: Option<Vec<bool>> = None;
    for lam in [0.5, 0.7, 0.8, 0.9, 0.95] {
        let d = d_lambda_from(&sv, lam, 0.01);
        if let Some(p) = prev {
            assert!(d.iter().zip(&p).all(|(a, b)| !*a || *b));
        }
        prev = Some(d);
    }
}

#[test]
fn lambda_star_modes() {
    let k = lambda_star(&LambdaStarMode::KuttlerBound { d: 2, p: 0.5, n: 1e6 }, &[]).unwrap();
    let mc = model_constants(2, 0.5, 1e6).unwrap();
    assert!((k - (1.0 - mc.c_star / 1e6f64.ln())).abs() < 1e-15);
    assert!((k - 0.886_057).abs() < 1e-5);
    assert_eq!(lambda_star(&LambdaStarMode::Manual { value: 0.9 }, &[]).unwrap(), 0.9);
    let f = generate_field(2, &[30, 30], 0.7, 1, Boundary::AbsorbingPad).unwrap();
    let q = lambda_star(&LambdaStarMode::Quantile { alpha: 0.9, horizon: 10 }, &[f.clone()]).unwrap();
    assert!(q > 0.0 && q < 1.0);
    let tiny = ObstacleField::open_window(&[3, 3], Boundary::AbsorbingPad);
    assert!(matches!(
        lambda_star(&LambdaStarMode::Quantile { alpha: 0.99, horizon: 5 }, &[tiny]),
        Err(rwo_core::Error::InsufficientSamples { .. })
    ));
}

/// Exact conditioned law by dense matrix powers.
fn dense_occupation(f: &ObstacleField, n: usize, t: usize, start: usize) -> Vec<f64> {
    let sites = open_sites(f);
    let p = dense_p(f.lattice(), &sites);
    let i0 = sites.binary_search(&start).unwrap();
    let fwd = p.pow(t as u32).row(i0).transpose();
    let bwd = p.pow((n - t) as u32) * nalgebra::DVector::from_element(sites.len(), 1.0);
    let prod = fwd.component_mul(&bwd);
    let z = prod.sum();
    let mut out = vec![0.0; f.lattice().len()];
    for (i, &s) in sites.iter().enumerate() {
        out[s] = prod[i] / z;
    }
    out
}

#[test]
fn conditioned_occupation_matches_dense() {
    let f = generate_field(2, &[11, 11], 0.75, 8, Boundary::AbsorbingPad).unwrap();
    let start = clusters(&f).members(clusters(&f).largest().unwrap())[0];
    for (n, t) in [(0, 0), (10, 3), (40, 20), (40, 40)] {
        let occ = conditioned_occupation(&f, n, t, start, None).unwrap();
        let dense = dense_occupation(&f, n, t, start);
        let got = occ.dense(f.lattice().len());
        assert!((occ.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for s in 0..got.len() {
            assert!(got[s] >= 0.0);
            assert!((got[s] - dense[s]).abs() < 1e-12, "n={n} t={t} site {s}");
        }
    }
    let occ = conditioned_occupation(&f, 0, 0, start, None).unwrap();
    assert_eq!(occ.sites, vec![start]);
    let obstacle = (0..f.lattice().len()).find(|&s| f.is_obstacle(s)).unwrap();
    assert!(matches!(conditioned_occupation(&f, 5, 2, obstacle, None), Err(rwo_core::Error::ZeroSurvival)));
}

#[test]
fn long_horizon_does_not_underflow() {
    let f = box_field(9);
    let occ = conditioned_occupation(&f, 100_000, 50_000, f.origin(), None).unwrap();
    let lam = (std::f64::consts::PI / 10.0).cos();
    // ln P(τ > n) ≈ n ln λ.
    let rate = occ.log_survival / 100_000.0;
    assert!((rate - lam.ln()).abs() < 1e-4);
    assert!((occ.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn monte_carlo_agrees_with_exact_survival() {
    let f = generate_field(2, &[9, 9], 0.8, 2, Boundary::AbsorbingPad).unwrap();
    let start = f.origin();
    if f.is_obstacle(start) {
        return;
    }
    let cfg = McConfig { n: 12, replicates: 200_000, seed: 5, start, snapshot_time: Some(6) };
    let mc = mc_killed_walk(&f, &cfg).unwrap();
    let exact = survival_vector(&f, 12, None).values[start];
    assert!((mc.survival - exact).abs() < 4.0 * mc.std_error.max(1e-6), "{} vs {exact}", mc.survival);
    assert_eq!(mc.kill_time_counts.iter().sum::<u64>() + mc.survivors, cfg.replicates);
    let again = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| mc_killed_walk(&f, &cfg).unwrap());
    assert_eq!(mc, again);
}

#[test]
fn local_eigenvalue_basics() {
    let f = ObstacleField::open_window(&[21, 21], Boundary::AbsorbingPad);
    let le = local_eigenvalue(&f, f.origin(), 1.0).unwrap();
    assert_eq!(le.cluster.len(), 5);
    let mut g = f.clone();
    g.set_obstacle(g.origin(), true);
    let le = local_eigenvalue(&g, g.origin(), 5.0).unwrap();
    assert_eq!(le.lambda, 0.0);
    assert!(le.cluster.is_empty());
    let exact = local_eigenvalue(&f, f.origin(), 4.0).unwrap().lambda;
    assert_eq!(local_eigenvalue_screened(&f, f.origin(), 4.0, exact + 1e-3).unwrap(), None);
    let got = local_eigenvalue_screened(&f, f.origin(), 4.0, exact - 1e-3).unwrap().unwrap();
    assert!((got - exact).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn domain_monotonicity(seed in 0u64..10_000, keep in 0.3f64..0.95) {
        let f = generate_field(2, &[16, 16], 0.8, seed, Boundary::AbsorbingPad).unwrap();
        let big = open_sites(&f);
        prop_assume!(!big.is_empty());
        let mut state = seed.wrapping_add(7);
        let small: Vec<usize> = big.iter().copied().filter(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) < keep
        }).collect();
        prop_assume!(!small.is_empty());
        let lb = principal_eigenpair(&restricted_operator(&f, &big).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap().lambda;
        let ls = principal_eigenpair(&restricted_operator(&f, &small).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap().lambda;
        prop_assert!(ls <= lb + 1e-10);
    }

    #[test]
    fn survival_is_monotone_in_time(seed in 0u64..10_000) {
        let f = generate_field(2, &[14, 14], 0.7, seed, Boundary::AbsorbingPad).unwrap();
        let svs = survival_vectors(&f, &[0, 1, 5, 6, 20], None);
        for w in svs.windows(2) {
            for s in 0..f.lattice().len() {
                prop_assert!(w[1].values[s] <= w[0].values[s]);
            }
        }
    }
}
