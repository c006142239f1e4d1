//! The acceptance suite. Each criterion is a list of named checks plus
//! diagnostic notes; a criterion passes when all of its checks do.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rwo_core::env::{clusters, derive_seed, generate_field, model_constants, Boundary, Lattice, ObstacleField};
use rwo_core::greens::{green_column, lwgf_phi};
use rwo_core::islands::empty_boxes;
use rwo_core::spectral::{
    conditioned_occupations, local_eigenvalue, mc_killed_walk, principal_eigenpair, restricted_operator, McConfig,
    DEFAULT_MAX_ITERS, DEFAULT_TOL,
};

use crate::config::{ExperimentConfig, ExperimentKind, FieldKind};
use crate::emit::{csv_bytes, emit_as};
use crate::error::{config_error, Result};
use crate::experiments::{n_label, run_experiment};
use crate::record::RunRecord;

/// First zero of J_0.
const J01: f64 = 2.404_825_557_695_773;

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Directory for the CSV and summary files; nothing is written when unset.
    pub output: Option<PathBuf>,
    /// Worker threads for the main pass.
    pub threads: usize,
    /// Worker threads for the determinism re-run.
    pub rerun_threads: usize,
    /// Criteria to run; all when empty.
    pub only: Vec<u8>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { output: None, threads: 8, rerun_threads: 1, only: Vec::new() }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub number: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl CriterionReport {
    fn new(number: u8, title: &'static str) -> Self {
        CriterionReport { number, title, checks: Vec::new(), notes: Vec::new(), seconds: 0.0 }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One line: status, number, title, then every check (failed ones marked)
    /// and the notes.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}{} ({})", if c.passed { "" } else { "FAILED " }, c.name, c.detail))
            .collect();
        parts.extend(self.notes.iter().map(|n| format!("note: {n}")));
        format!("{status} {:>2} {} [{:.1} s]: {}", self.number, self.title, self.seconds, parts.join("; "))
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub criteria: Vec<CriterionReport>,
}

impl SuiteReport {
    pub fn lines(&self) -> Vec<String> {
        self.criteria.iter().map(CriterionReport::line).collect()
    }

    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(CriterionReport::passed)
    }

    pub fn criterion(&self, number: u8) -> Option<&CriterionReport> {
        self.criteria.iter().find(|c| c.number == number)
    }
}

/// Experiment runs of the main pass, kept for the determinism re-run.
struct Runs {
    dir: Option<PathBuf>,
    done: Vec<(&'static str, ExperimentConfig, Vec<u8>)>,
}

impl Runs {
    fn run(&mut self, label: &'static str, cfg: ExperimentConfig) -> Result<RunRecord> {
        let rec = run_experiment(&cfg)?;
        if let Some(dir) = &self.dir {
            emit_as(&rec, dir, label)?;
        }
        self.done.push((label, cfg, csv_bytes(&rec)?));
        Ok(rec)
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| config_error(e.to_string()))
}

fn timed(f: impl FnOnce() -> Result<CriterionReport>) -> Result<CriterionReport> {
    let clock = Instant::now();
    let mut rep = f()?;
    rep.seconds = clock.elapsed().as_secs_f64();
    Ok(rep)
}

/// Runs the selected criteria. The main pass uses `threads` workers; every
/// experiment it ran is then re-run with `rerun_threads` workers and the CSV
/// bytes compared.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let want = |k: u8| opts.only.is_empty() || opts.only.contains(&k);
    let mut runs = Runs { dir: opts.output.clone(), done: Vec::new() };
    let mut criteria = Vec::new();
    pool(opts.threads)?.install(|| -> Result<()> {
        let simple: [(u8, fn() -> Result<CriterionReport>); 4] =
            [(1, closed_form_spectrum), (2, kuttler_anchor), (3, green_oracle), (4, exact_vs_monte_carlo)];
        for (k, f) in simple {
            if want(k) {
                criteria.push(timed(f)?);
            }
        }
        let with_runs: [(u8, fn(&mut Runs) -> Result<CriterionReport>); 4] =
            [(5, phi_consistency), (6, subadditivity), (7, concentration), (8, empty_box_bound)];
        for (k, f) in with_runs {
            if want(k) {
                criteria.push(timed(|| f(&mut runs))?);
            }
        }
        if want(9) || want(10) {
            let (nine, ten) = split_island_report(timed(|| one_city_and_ball_shape(&mut runs))?);
            criteria.extend([nine, ten].into_iter().filter(|c| want(c.number)));
        }
        if want(11) {
            criteria.push(timed(|| renorm_cuts(&mut runs))?);
        }
        Ok(())
    })?;
    if want(12) {
        criteria.push(timed(|| determinism(&runs, opts))?);
    }
    Ok(SuiteReport { criteria })
}

fn open_sites(f: &ObstacleField) -> Vec<usize> {
    (0..f.lattice().len()).filter(|&s| f.is_open(s)).collect()
}

/// Dense P restricted to `sites` (ascending).
fn dense_p(lat: &Lattice, sites: &[usize]) -> DMatrix<f64> {
    let w = 1.0 / lat.degree() as f64;
    let mut m = DMatrix::zeros(sites.len(), sites.len());
    for (i, &s) in sites.iter().enumerate() {
        for nb in lat.neighbors(s) {
            if let Ok(j) = sites.binary_search(&nb) {
                m[(i, j)] = w;
            }
        }
    }
    m
}

fn closed_form_spectrum() -> Result<CriterionReport> {
    let clock = Instant::now();
    let mut rep = CriterionReport::new(1, "closed-form spectrum");
    for l in [3usize, 9, 31] {
        let f = ObstacleField::open_window(&[l + 2, l + 2], Boundary::AbsorbingPad);
        let op = restricted_operator(&f, &open_sites(&f))?;
        let got = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS)?.lambda;
        // (1/d) Σ_i cos(π/(L+1)) with all sides equal.
        let exact = (std::f64::consts::PI / (l as f64 + 1.0)).cos();
        let err = (got - exact).abs();
        rep.check(format!("L={l}"), err <= 1e-8, format!("|error| {err:.1e}"));
    }
    let f = ObstacleField::open_window(&[5, 5], Boundary::AbsorbingPad);
    let sites = open_sites(&f);
    let dense = SymmetricEigen::new(dense_p(f.lattice(), &sites)).eigenvalues.max();
    let got = principal_eigenpair(&restricted_operator(&f, &sites)?, DEFAULT_TOL, DEFAULT_MAX_ITERS)?.lambda;
    let err = (got - dense).abs();
    rep.check("L=3 dense", err <= 1e-8, format!("|error| {err:.1e}"));
    let s = clock.elapsed().as_secs_f64();
    rep.check("runtime", s < 5.0, format!("{s:.2} s < 5 s"));
    Ok(rep)
}

fn kuttler_anchor() -> Result<CriterionReport> {
    let clock = Instant::now();
    let mut rep = CriterionReport::new(2, "Kuttler anchor");
    let mu = J01 * J01 / 4.0;
    let mut gaps = Vec::new();
    for r in [20usize, 40, 80] {
        let f = ObstacleField::open_window(&[2 * r + 5, 2 * r + 5], Boundary::AbsorbingPad);
        let lambda = local_eigenvalue(&f, f.origin(), r as f64)?.lambda;
        let v = (r * r) as f64 * (1.0 - lambda);
        let rel = (v - mu).abs() / mu;
        rep.check(format!("r={r}"), rel <= 0.1, format!("r^2(1-λ) = {v:.5}, off by {:.2}%", 100.0 * rel));
        gaps.push((v - mu).abs());
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    rep.check("approaches", monotone, format!("gaps {:.4?}", gaps));
    let s = clock.elapsed().as_secs_f64();
    rep.check("runtime", s < 60.0, format!("{s:.1} s < 60 s"));
    Ok(rep)
}

/// Σ_{k<terms} λ^{-k} P^x(S_k = y, S_1..S_{k-1} ∈ A) for every x, by
/// propagating backwards from y.
fn green_series(lat: &Lattice, interior: &[bool], y: usize, lambda: f64, terms: usize) -> Vec<f64> {
    let w = 1.0 / lat.degree() as f64;
    let mut total = vec![0.0; lat.len()];
    // h[x] = λ^{-k} P^x(S_k = y, S_1..S_{k-1} ∈ A)
    let mut h = vec![0.0; lat.len()];
    h[y] = 1.0;
    let mut next = vec![0.0; lat.len()];
    for k in 0..terms {
        for (t, v) in total.iter_mut().zip(&h) {
            *t += v;
        }
        for x in 0..lat.len() {
            next[x] = lat.neighbors(x).filter(|&z| k == 0 || interior[z]).map(|z| h[z]).sum::<f64>() * w / lambda;
        }
        std::mem::swap(&mut h, &mut next);
    }
    total
}

fn green_oracle() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(3, "Green oracle");
    let (mut sets, mut worst_rel, mut worst_identity, mut pairs) = (0, 0.0f64, 0.0f64, 0);
    let mut identity_missing = 0;
    for k in 0..100u64 {
        let f = generate_field(2, &[12, 12], 0.7, derive_seed(3, k), Boundary::AbsorbingPad)?;
        let lat = f.lattice();
        let open = open_sites(&f);
        if open.is_empty() {
            continue;
        }
        sets += 1;
        let lambda_a = principal_eigenpair(&restricted_operator(&f, &open)?, DEFAULT_TOL, DEFAULT_MAX_ITERS)?.lambda;
        let lambda = lambda_a + 0.2 * (1.0 - lambda_a);
        let y = open[open.len() / 2];
        let col = green_column(&f, &open, y, lambda)?;
        let mut interior = vec![false; lat.len()];
        open.iter().for_each(|&s| interior[s] = true);
        let series = green_series(lat, &interior, y, lambda, 10_000);
        for (a, b) in col.values.iter().zip(&series) {
            let rel = if *b == 0.0 { a.abs() } else { (a - b).abs() / b.abs() };
            worst_rel = worst_rel.max(rel);
        }
        let cl = clusters(&f);
        let big = cl.members(cl.largest().expect("open sites"));
        if big.len() >= 2 {
            pairs += 1;
            match lwgf_phi(&f, big[0], big[big.len() - 1], lambda, None)?.identity_error {
                Some(e) => worst_identity = worst_identity.max(e),
                None => identity_missing += 1,
            }
        }
    }
    rep.check("series", worst_rel <= 1e-6, format!("{sets} sets, worst relative error {worst_rel:.1e}"));
    rep.check(
        "quotient identity",
        worst_identity <= 1e-8 && identity_missing == 0,
        format!("{pairs} pairs, worst {worst_identity:.1e}, {identity_missing} unavailable"),
    );
    Ok(rep)
}

/// First field of the seed sequence whose origin lies in the largest cluster.
fn conditioned_field(sides: &[usize], p: f64, seed: u64) -> Result<ObstacleField> {
    for attempt in 0..64 {
        let f = generate_field(2, sides, p, derive_seed(seed, attempt), Boundary::AbsorbingPad)?;
        let cl = clusters(&f);
        if cl.label(f.origin()).is_some() && cl.label(f.origin()) == cl.largest() {
            return Ok(f);
        }
    }
    Err(config_error("no field with the origin in the largest cluster"))
}

fn exact_vs_monte_carlo() -> Result<CriterionReport> {
    let clock = Instant::now();
    let mut rep = CriterionReport::new(4, "exact vs Monte Carlo");
    let f = generate_field(2, &[11, 11], 0.7, 0, Boundary::AbsorbingPad)?;
    let o = f.origin();
    let (n, t) = (50, 25);
    let cfg = McConfig { n, replicates: 1_000_000, seed: 4, start: o, snapshot_time: Some(t) };
    let mc = mc_killed_walk(&f, &cfg)?;
    let occ = conditioned_occupations(&f, n, &[t, n], o, None)?;
    let len = f.lattice().len();
    let exact_survival = occ[0].log_survival.exp();
    let survivors = mc.survivors as f64;
    let snapshot = mc.snapshot_counts.clone().expect("snapshot requested");
    for (o, counts) in occ.iter().zip([&snapshot, &mc.endpoint_counts]) {
        let p = o.dense(len);
        let tv = 0.5 * p.iter().zip(counts.iter()).map(|(a, &c)| (a - c as f64 / survivors).abs()).sum::<f64>();
        // Expected TV of an exact multinomial sample of this size.
        let floor = 0.5
            * p.iter().map(|&a| (2.0 * a * (1.0 - a) / (std::f64::consts::PI * survivors)).sqrt()).sum::<f64>();
        let joint = 0.5
            * p.iter()
                .zip(counts.iter())
                .map(|(a, &c)| (exact_survival * a - c as f64 / mc.replicates as f64).abs())
                .sum::<f64>();
        rep.check(format!("TV t={}", o.t), tv <= 0.01, format!("{tv:.4} vs 0.01"));
        rep.note(format!("t={}: sampling floor {floor:.4}, joint-law TV {joint:.1e}", o.t));
    }
    let z = (mc.survival - exact_survival).abs() / mc.std_error;
    rep.check("survival", z <= 4.0, format!("{:.3e} vs {exact_survival:.3e}, {z:.2} sigma", mc.survival));
    rep.note(format!("{} survivors of {}", mc.survivors, mc.replicates));
    let s = clock.elapsed().as_secs_f64();
    rep.check("runtime", s < 120.0, format!("{s:.1} s < 120 s"));
    Ok(rep)
}

fn phi_consistency(runs: &mut Runs) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(5, "phi consistency");
    let mut cfg = ExperimentConfig::new(ExperimentKind::PhiConsistency, 0.75, vec![1e3, 1e4, 1e5], vec![101, 101], 50);
    cfg.distances = vec![35];
    let rec = runs.run("phi-consistency", cfg.clone())?;
    for &n in &cfg.n {
        let p = n_label(n);
        let g0 = rec.derived(&format!("g0_replicates@{p}")).finite().unwrap_or(0.0);
        let frac = rec.derived(&format!("finite_fraction@{p}")).finite();
        rep.check(
            format!("finite gap {p}"),
            g0 > 0.0 && frac.is_some_and(|f| f >= 0.95),
            format!("{:.3} of {g0} G_0 replicates", frac.unwrap_or(f64::NAN)),
        );
        rep.note(format!(
            "{p}: gap q95 {:.3}, (log n)^C with C = {:.3}",
            rec.derived(&format!("gap_q95@{p}")).finite().unwrap_or(f64::NAN),
            rec.derived(&format!("polylog_exponent@{p}")).finite().unwrap_or(f64::NAN)
        ));
    }
    Ok(rep)
}

fn subadditivity(runs: &mut Runs) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(6, "subadditivity");
    let mut cfg = ExperimentConfig::new(ExperimentKind::LwgfSubadditivity, 0.7, vec![2e3], vec![101, 101], 200);
    cfg.distances = vec![20];
    cfg.lambda = Some(1.0);
    let rec = runs.run("lwgf-subadditivity", cfg)?;
    let g = |k: &str| rec.derived(k).finite().unwrap_or(f64::NAN);
    rep.check(
        "h(2x) <= 2h(x) + 3 SE + slack",
        rec.derived("subadditive").finite() == Some(1.0),
        format!(
            "h(x) {:.3}, h(2x) {:.3}, pooled SE {:.3}, slack {:.3}, margin {:.3}",
            g("h_x"),
            g("h_2x"),
            g("pooled_se"),
            g("slack"),
            g("margin")
        ),
    );
    rep.note(format!("h(2x) - 2h(x) = {:.3}, paired SE {:.3}", g("excess"), g("paired_se")));
    Ok(rep)
}

fn concentration(runs: &mut Runs) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(7, "concentration");
    let mut cfg = ExperimentConfig::new(ExperimentKind::LwgfConcentration, 0.7, vec![2e3], vec![101, 101], 200);
    cfg.distances = vec![10, 20, 40];
    cfg.lambda = Some(1.0);
    let rec = runs.run("lwgf-concentration", cfg)?;
    let e = rec.derived("variance_exponent");
    let e = e.finite().unwrap_or(f64::NAN);
    rep.check("exponent <= 1.3", e <= 1.3, format!("fitted {e:.3}"));
    let var: Vec<f64> =
        [10, 20, 40].iter().map(|x| rec.derived(&format!("variance@x={x}")).finite().unwrap_or(f64::NAN)).collect();
    rep.note(format!("Var at |x| = 10, 20, 40: {var:.3?}"));
    Ok(rep)
}

fn empty_box_bound(runs: &mut Runs) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(8, "empty-box bound");
    let n = 1e6;
    let rho_n = model_constants(2, 0.7, n)?.rho_n;
    let (iota, rho) = (0.1, 0.1);
    // The box side depends on ι and ρ_n only, so one environment shows what
    // every replicate would report.
    let f = conditioned_field(&[151, 151], 0.7, 8)?;
    match empty_boxes(&f, iota, rho, rho_n, f.origin(), 10.0) {
        Err(e) => rep.check(
            "iota=0.1",
            false,
            format!("box half-side floor({iota} * {rho_n}) = 0: {} in every environment", e.kind()),
        ),
        Ok(_) => {
            let mut cfg = island_config(ExperimentKind::BallShape, vec![n], vec![151, 151], 200);
            cfg.iota = Some(iota);
            cfg.rho = Some(rho);
            let rec = runs.run("empty-box", cfg)?;
            let frac = rec.derived(&format!("empty_within_bound_fraction@{}", n_label(n)));
            rep.check("iota=0.1", frac.finite().is_some_and(|f| f >= 0.95), format!("within bound {}", frac.render()));
        }
    }
    let mut cfg = island_config(ExperimentKind::BallShape, vec![n], vec![151, 151], 10);
    cfg.iota = Some(0.25);
    cfg.rho = Some(rho);
    let rec = runs.run("empty-box-diagnostic", cfg)?;
    let p = n_label(n);
    rep.note(format!(
        "iota=0.25 over 10 environments: within bound {}, mean |E| {:.1}, mean bound {:.1}",
        rec.derived(&format!("empty_within_bound_fraction@{p}")).render(),
        rec.mean(&p, "empty_sites").unwrap_or(f64::NAN),
        rec.mean(&p, "empty_bound").unwrap_or(f64::NAN)
    ));
    Ok(rep)
}

/// Random-field island run: ε = ρ_n^{-3}, so Ω_ε is not empty at desk scale.
fn island_config(kind: ExperimentKind, n: Vec<f64>, sides: Vec<usize>, replicates: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, 0.7, n, sides, replicates);
    cfg.eps_exponent = Some(3.0);
    cfg
}

/// Isolated vacancy ball of radius 20 at the origin.
fn single_ball_config(n: Vec<f64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::OneCity, 0.7, n, vec![301, 301], 1);
    cfg.field = FieldKind::SingleBall;
    cfg.ball_radius = Some(20.0);
    cfg.lambda_star = Some(0.9);
    cfg.r_local = Some(20.0);
    cfg.pocket_radius = Some(24.0);
    cfg.eps = Some(0.002);
    cfg
}

/// Criteria 9 and 10 share their runs; the checks of 10 are prefixed "10:".
fn one_city_and_ball_shape(runs: &mut Runs) -> Result<CriterionReport> {
    let clock = Instant::now();
    let mut rep = CriterionReport::new(9, "one-city localization");
    let ladder = vec![2e3, 2e4, 2e5];
    let cfg = island_config(ExperimentKind::OneCity, ladder.clone(), vec![301, 301], 3);
    let rec = runs.run("one-city", cfg)?;
    let ball = runs.run("one-city-single-ball", single_ball_config(ladder.clone()))?;

    let means = |r: &RunRecord, m: &str| -> Vec<f64> {
        ladder.iter().map(|&n| r.mean(&n_label(n), m).unwrap_or(f64::NAN)).collect()
    };
    let mass = means(&rec, "mass_b_hat");
    rep.check(
        "increasing in n",
        rec.derived("mass_b_hat_increasing").finite() == Some(1.0),
        format!("mean mass {:.4?}", mass),
    );
    let last = *mass.last().expect("ladder");
    rep.check("largest n >= 0.5", last >= 0.5, format!("{last:.4}"));
    let ball_mass = means(&ball, "mass_b_hat");
    rep.check("single ball >= 0.9", ball_mass.iter().all(|&m| m >= 0.9), format!("{:.4?}", ball_mass));
    rep.note(format!("v* distance {:.1?}", means(&rec, "v_star_distance")));
    let s = clock.elapsed().as_secs_f64();
    rep.check("runtime", s < 900.0, format!("{s:.0} s < 900 s"));

    let asym = means(&rec, "asymmetry");
    rep.check(
        "10:non-increasing asymmetry",
        rec.derived("asymmetry_non_increasing").finite() == Some(1.0),
        format!("mean asymmetry {:.4?}", asym),
    );
    let ball_asym = means(&ball, "asymmetry");
    rep.check("10:single ball asymmetry <= 0.05", ball_asym.iter().all(|&a| a <= 0.05), format!("{:.4?}", ball_asym));
    let ratio = means(&ball, "eigen_ratio");
    rep.check("10:single ball eigen ratio <= 1.25", ratio.iter().all(|&r| r <= 1.25), format!("{:.4?}", ratio));
    rep.note(format!("10:random-field eigen ratio {:.4?}", means(&rec, "eigen_ratio")));
    Ok(rep)
}

fn split_island_report(rep: CriterionReport) -> (CriterionReport, CriterionReport) {
    let mut nine = CriterionReport::new(9, rep.title);
    let mut ten = CriterionReport::new(10, "ball shape");
    nine.seconds = rep.seconds;
    ten.seconds = rep.seconds;
    for c in rep.checks {
        match c.name.strip_prefix("10:") {
            Some(name) => ten.checks.push(Check { name: name.to_string(), ..c }),
            None => nine.checks.push(c),
        }
    }
    for n in rep.notes {
        match n.strip_prefix("10:") {
            Some(rest) => ten.notes.push(rest.to_string()),
            None => nine.notes.push(n),
        }
    }
    ten.note("shares the runs of criterion 9");
    (nine, ten)
}

fn renorm_cuts(runs: &mut Runs) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(11, "renormalization cuts");
    let cut_run = |runs: &mut Runs, label: &'static str, p: f64, replicates: usize| -> Result<(usize, usize)> {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RenormCensus, p, vec![2e3], vec![691, 691], replicates);
        cfg.half_sides = vec![4];
        cfg.cut_radius = Some(130.0);
        let rec = runs.run(label, cfg)?;
        let count = |k: &str| rec.derived(&format!("{k}@L=4")).finite().unwrap_or(0.0) as usize;
        Ok((count("cuts_built"), count("cuts_verified")))
    };
    let (built, verified) = cut_run(runs, "renorm-cuts", 0.8, 100)?;
    rep.check("cuts separate at p=0.8", built == verified, format!("{verified} of {built} cuts over 100 fields"));
    let (built, verified) = cut_run(runs, "renorm-cuts-dense", 0.97, 20)?;
    rep.check(
        "cuts separate at p=0.97",
        built > 0 && built == verified,
        format!("{verified} of {built} cuts over 20 fields"),
    );
    let mut cfg = ExperimentConfig::new(ExperimentKind::RenormCensus, 0.8, vec![2e3], vec![151, 151], 100);
    cfg.half_sides = vec![4, 6, 8];
    let rec = runs.run("renorm-census", cfg)?;
    let fr: Vec<f64> = [4, 6, 8].iter().map(|l| rec.mean(&format!("L={l}"), "white_fraction").unwrap_or(f64::NAN)).collect();
    rep.check(
        "white fraction increasing in L",
        rec.derived("white_fraction_increasing").finite() == Some(1.0),
        format!("L=4,6,8: {:.4?}", fr),
    );
    Ok(rep)
}

fn determinism(runs: &Runs, opts: &SuiteOptions) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(12, "determinism");
    let pool = pool(opts.rerun_threads)?;
    for (label, cfg, bytes) in &runs.done {
        let again = pool.install(|| run_experiment(cfg))?;
        let same = csv_bytes(&again)? == *bytes;
        rep.check(
            *label,
            same,
            format!("{} bytes, {} vs {} threads", bytes.len(), opts.threads, opts.rerun_threads),
        );
    }
    Ok(rep)
}
