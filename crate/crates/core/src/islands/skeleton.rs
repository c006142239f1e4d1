use rayon::prelude::*;
use serde::Serialize;

use crate::env::ObstacleField;
use crate::error::{invalid, Result};
use crate::spectral::local_eigenvalue_screened;

/// Greedy skeleton of the high-eigenvalue sites.
#[derive(Clone, Debug, Serialize)]
pub struct SkeletalSet {
    pub lambda_star: f64,
    pub radius: f64,
    pub separation: f64,
    /// Accepted sites in acceptance order (decreasing λ).
    pub sites: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Every scanned site with λ(v) ≥ λ_*, by decreasing λ then site.
    pub high: Vec<(usize, f64)>,
    /// High sites not within 3R of any accepted site.
    pub uncovered: Vec<usize>,
}

/// Scan the open sites of `scan` (all open sites when `None`) for λ(v) ≥ λ_*
/// and keep the B_{3R} local maxima whose separation balls are disjoint.
pub fn skeletal_set(
    field: &ObstacleField,
    lambda_star: f64,
    radius: f64,
    separation: f64,
    scan: Option<&[bool]>,
) -> Result<SkeletalSet> {
    if !(lambda_star > 0.0 && lambda_star < 1.0) {
        return Err(invalid(format!("lambda_star = {lambda_star} outside (0, 1)")));
    }
    if !(radius >= 1.0) {
        return Err(invalid(format!("radius = {radius} < 1")));
    }
    if !(separation >= 0.0) {
        return Err(invalid("negative separation"));
    }
    let lat = field.lattice();
    let candidates: Vec<usize> =
        (0..lat.len()).filter(|&s| field.is_open(s) && scan.is_none_or(|m| m[s])).collect();
    let screened: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|&v| local_eigenvalue_screened(field, v, radius, lambda_star))
        .collect::<Result<_>>()?;
    let mut high: Vec<(usize, f64)> =
        candidates.iter().zip(screened).filter_map(|(&v, l)| l.map(|l| (v, l))).collect();
    high.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut lambda_of = vec![f64::NAN; lat.len()];
    for &(v, l) in &high {
        lambda_of[v] = l;
    }
    // (λ, -site) order: larger wins, then the smaller site.
    let beats = |u: usize, v: usize| lambda_of[u] > lambda_of[v] || (lambda_of[u] == lambda_of[v] && u < v);
    let cover = 3.0 * radius;
    let mut sites: Vec<usize> = Vec::new();
    let mut lambdas = Vec::new();
    for &(v, l) in &high {
        let local_max = lat.ball(v, cover).into_iter().all(|u| u == v || lambda_of[u].is_nan() || !beats(u, v));
        if local_max && sites.iter().all(|&w| lat.dist(v, w) > 2.0 * separation) {
            sites.push(v);
            lambdas.push(l);
        }
    }
    let uncovered =
        high.iter().map(|&(u, _)| u).filter(|&u| sites.iter().all(|&w| lat.dist(u, w) > cover + 1e-9)).collect();
    Ok(SkeletalSet { lambda_star, radius, separation, sites, lambdas, high, uncovered })
}
