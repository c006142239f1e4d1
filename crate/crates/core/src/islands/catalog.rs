use rayon::prelude::*;
use serde::Serialize;

use crate::env::ObstacleField;
use crate::error::{Error, Result};
use crate::greens::phi_star_hitting;
use crate::numeric::Cost;
use crate::spectral::{d_lambda, local_eigenvalue};

use super::skeleton::SkeletalSet;

/// How the travel cost of an island is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum CostMode {
    /// Exact φ_⋆(start, v; λ(v)) with the high-survival set of λ(v).
    Hitting { survival_horizon: usize, delta: f64, hit_radius: f64 },
    /// ĝ · |v - start| from a norming estimate.
    Norming { g_hat: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Island {
    pub site: usize,
    pub lambda: f64,
    /// C_R(v), ascending.
    pub cluster: Vec<usize>,
    pub cost: Cost,
    /// n log λ(v) - cost; -∞ when the cost is infinite.
    pub score: f64,
}

impl Island {
    pub fn new(site: usize, lambda: f64, cost: Cost, n: usize) -> Self {
        let score = match cost {
            Cost::Finite(c) => n as f64 * lambda.ln() - c,
            Cost::Infinite => f64::NEG_INFINITY,
        };
        Island { site, lambda, cluster: Vec::new(), cost, score }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IslandCatalog {
    pub start: usize,
    pub n: usize,
    pub cost_mode: CostMode,
    pub skeleton: SkeletalSet,
    pub islands: Vec<Island>,
}

/// Scores every skeletal site as a destination for a walk from `start`.
pub fn island_catalog(
    field: &ObstacleField,
    start: usize,
    n: usize,
    skeleton: SkeletalSet,
    cost_mode: CostMode,
) -> Result<IslandCatalog> {
    let lat = field.lattice();
    let islands = skeleton
        .sites
        .par_iter()
        .zip(&skeleton.lambdas)
        .map(|(&v, &lambda)| {
            let cost = match cost_mode {
                CostMode::Hitting { survival_horizon, delta, hit_radius } => {
                    let d = d_lambda(field, lambda, survival_horizon, delta);
                    phi_star_hitting(field, start, v, lambda, Some(&d), n, hit_radius)?.value
                }
                CostMode::Norming { g_hat } => Cost::Finite(g_hat * lat.dist(start, v)),
            };
            let mut island = Island::new(v, lambda, cost, n);
            island.cluster = local_eigenvalue(field, v, skeleton.radius)?.cluster;
            Ok(island)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IslandCatalog { start, n, cost_mode, skeleton, islands })
}

#[derive(Clone, Debug, Serialize)]
pub struct Selection {
    pub v_star: usize,
    pub lambda: f64,
    pub score: f64,
    pub runner_up: Option<usize>,
    /// Score of the winner minus that of the runner-up.
    pub gap: Option<f64>,
}

/// Argmax of the scores; equal scores go to the smaller site.
pub fn select_v_star(islands: &[Island]) -> Result<Selection> {
    let mut order: Vec<&Island> = islands.iter().filter(|i| i.score > f64::NEG_INFINITY).collect();
    if order.is_empty() {
        return Err(Error::EmptySet("island catalog"));
    }
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.site.cmp(&b.site)));
    let best = order[0];
    let second = order.get(1);
    Ok(Selection {
        v_star: best.site,
        lambda: best.lambda,
        score: best.score,
        runner_up: second.map(|i| i.site),
        gap: second.map(|i| best.score - i.score),
    })
}

/// Component of `v` in the open part of B_radius(v), ascending.
pub fn pocket(field: &ObstacleField, v: usize, radius: f64) -> Vec<usize> {
    let lat = field.lattice();
    if field.is_obstacle(v) {
        return Vec::new();
    }
    let mut mask = vec![false; lat.len()];
    for s in lat.ball(v, radius) {
        mask[s] = field.is_open(s);
    }
    crate::greens::components_of(lat, &mask, &[v])
}
