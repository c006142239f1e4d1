use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lwgf::lwgf_star_many;
use crate::env::{clusters, derive_seed, generate_field, Boundary, ClusterProxy, Lattice, ObstacleField};
use crate::error::{invalid, Error, Result};
use crate::numeric::Cost;
use crate::spectral::d_lambda;
use crate::stats::{mean_se, sample_variance};

/// Ensemble settings for the norming estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormingConfig {
    pub p: f64,
    pub sides: Vec<usize>,
    /// Coordinates of the walk origin inside the window.
    pub origin: Vec<i64>,
    pub lambda: f64,
    pub survival_horizon: usize,
    pub delta: f64,
    pub r_star: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Keep only environments satisfying the finite-window surrogate of G_0.
    pub condition_g0: bool,
    /// Radius around the origin that must be free of the high-survival set.
    pub g0_radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormingEstimate {
    pub direction: Vec<i64>,
    pub ladder: Vec<usize>,
    /// ĥ(m x) per ladder entry.
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub variances: Vec<f64>,
    /// ĥ(m x) / m per ladder entry.
    pub trend: Vec<f64>,
    /// ĥ(m_max x) / m_max.
    pub g_hat: f64,
    pub replicates: usize,
    /// Environments skipped because the G_0 surrogate failed.
    pub rejected: usize,
    /// Environments skipped because a computation failed, with the error kind.
    pub failures: Vec<(u64, &'static str)>,
    /// Truncated values, one row per accepted environment.
    pub samples: Vec<Vec<f64>>,
    /// Environment indices of the accepted rows.
    pub environments: Vec<u64>,
    /// Count of untruncated infinite values per ladder entry.
    pub raw_infinite: Vec<usize>,
}

/// Finite-window G_0 surrogate: the origin lies in the largest cluster (or one
/// touching every face) and no high-survival site is within `radius` of it.
pub fn g0_holds(field: &ObstacleField, origin: usize, d_set: &[bool], radius: f64) -> bool {
    let cl = clusters(field);
    cl.in_proxy(origin, field, ClusterProxy::LargestOrTouchesAllFaces)
        && field.lattice().ball(origin, radius).iter().all(|&s| !d_set[s])
}

pub fn estimate_h(x: &[i64], cfg: &NormingConfig) -> Result<NormingEstimate> {
    estimate_g(x, &[1], cfg)
}

/// One environment of a norming ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormingSample {
    /// Whether the G_0 surrogate holds; values are computed either way.
    pub g0: bool,
    /// Truncated φ_*(0, m x) per ladder entry.
    pub values: Vec<f64>,
    /// Whether the untruncated value was infinite, per ladder entry.
    pub raw_infinite: Vec<bool>,
}

fn ladder_targets(lat: &Lattice, direction: &[i64], ladder: &[usize], cfg: &NormingConfig) -> Result<(usize, Vec<usize>)> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[0] >= w[1]) || ladder[0] == 0 {
        return Err(invalid("ladder must be positive and strictly increasing"));
    }
    if direction.len() != cfg.sides.len() || cfg.origin.len() != cfg.sides.len() {
        return Err(invalid("direction and origin must match the window dimension"));
    }
    let origin = lat.index_of(&cfg.origin).ok_or_else(|| Error::PointOutsideWindow(cfg.origin.clone()))?;
    let targets = ladder
        .iter()
        .map(|&m| {
            let c: Vec<i64> = cfg.origin.iter().zip(direction).map(|(o, d)| o + m as i64 * d).collect();
            lat.index_of(&c).ok_or(Error::PointOutsideWindow(c))
        })
        .collect::<Result<_>>()?;
    Ok((origin, targets))
}

/// Truncated φ_*(0, m x) over the ladder in environment `k` (seed
/// `derive_seed(cfg.seed, k)`).
pub fn norming_sample(direction: &[i64], ladder: &[usize], cfg: &NormingConfig, k: u64) -> Result<NormingSample> {
    let lat = Lattice::new(&cfg.sides);
    let (origin, targets) = ladder_targets(&lat, direction, ladder, cfg)?;
    sample_at(&lat, origin, &targets, cfg, k, false).map(|s| s.expect("not skipped"))
}

/// `None` when `skip_rejected` is set and the G_0 surrogate fails.
fn sample_at(
    lat: &Lattice,
    origin: usize,
    targets: &[usize],
    cfg: &NormingConfig,
    k: u64,
    skip_rejected: bool,
) -> Result<Option<NormingSample>> {
    let field = generate_field(cfg.sides.len(), &cfg.sides, cfg.p, derive_seed(cfg.seed, k), Boundary::AbsorbingPad)?;
    let d = d_lambda(&field, cfg.lambda, cfg.survival_horizon, cfg.delta);
    let g0 = g0_holds(&field, origin, &d, cfg.g0_radius);
    if skip_rejected && !g0 {
        return Ok(None);
    }
    let res = lwgf_star_many(&field, origin, targets, cfg.lambda, Some(&d), cfg.r_star)?;
    let (values, raw_infinite) = res
        .iter()
        .zip(targets)
        .map(|(r, &t)| {
            let dist = lat.dist(origin, t);
            (r.value.clamp(cfg.c_low * dist, cfg.c_high * dist), r.value == Cost::Infinite)
        })
        .unzip();
    Ok(Some(NormingSample { g0, values, raw_infinite }))
}

/// Mean of the truncated φ_*(0, m x) over independent environments for every
/// m in the ladder; all ladder points share each environment.
pub fn estimate_g(direction: &[i64], ladder: &[usize], cfg: &NormingConfig) -> Result<NormingEstimate> {
    if cfg.replicates < 30 {
        return Err(Error::InsufficientSamples { needed: 30, got: cfg.replicates });
    }
    let lat = Lattice::new(&cfg.sides);
    let (origin, targets) = ladder_targets(&lat, direction, ladder, cfg)?;
    let run = |k: u64| sample_at(&lat, origin, &targets, cfg, k, cfg.condition_g0);

    let mut samples = Vec::new();
    let mut environments = Vec::new();
    let mut raw_infinite = vec![0usize; ladder.len()];
    let mut rejected = 0;
    let mut failures = Vec::new();
    let mut next = 0u64;
    let cap = 20 * cfg.replicates as u64;
    while samples.len() < cfg.replicates && next < cap {
        let batch = (cfg.replicates - samples.len()) as u64 + 4;
        let outcomes: Vec<(u64, Result<Option<NormingSample>>)> = (next..next + batch).into_par_iter().map(|k| (k, run(k))).collect();
        next += batch;
        for (k, o) in outcomes {
            if samples.len() == cfg.replicates {
                break;
            }
            match o {
                Ok(Some(s)) => {
                    for (i, inf) in s.raw_infinite.iter().enumerate() {
                        raw_infinite[i] += usize::from(*inf);
                    }
                    samples.push(s.values);
                    environments.push(k);
                }
                Ok(None) => rejected += 1,
                Err(e) => failures.push((k, e.kind())),
            }
        }
    }
    if samples.len() < cfg.replicates {
        return Err(Error::InsufficientSamples { needed: cfg.replicates, got: samples.len() });
    }
    let mut means = Vec::new();
    let mut std_errors = Vec::new();
    let mut variances = Vec::new();
    for i in 0..ladder.len() {
        let col: Vec<f64> = samples.iter().map(|row| row[i]).collect();
        let (m, se) = mean_se(&col).expect("at least 30 samples");
        means.push(m);
        std_errors.push(se);
        variances.push(sample_variance(&col).expect("at least 30 samples"));
    }
    let trend: Vec<f64> = means.iter().zip(ladder).map(|(m, &k)| m / k as f64).collect();
    Ok(NormingEstimate {
        direction: direction.to_vec(),
        ladder: ladder.to_vec(),
        g_hat: *trend.last().expect("non-empty ladder"),
        trend,
        means,
        std_errors,
        variances,
        replicates: samples.len(),
        rejected,
        failures,
        samples,
        environments,
        raw_infinite,
    })
}
