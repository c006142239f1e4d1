use serde::{Deserialize, Serialize};

use super::operator::RestrictedOperator;
use crate::env::{model_constants, ObstacleField};
use crate::error::{invalid, Error, Result};
use crate::stats::quantile;

/// `values[v] = P^v(walk stays on allowed sites for `horizon` steps)`.
#[derive(Clone, Debug)]
pub struct SurvivalVector {
    pub horizon: usize,
    /// One value per window site; zero on obstacles and avoided sites.
    pub values: Vec<f64>,
    /// Number of open sites excluded by the avoid set.
    pub avoided: usize,
}

fn allowed_sites(field: &ObstacleField, avoid: Option<&[bool]>) -> (Vec<usize>, usize) {
    let mut avoided = 0;
    let sites = (0..field.lattice().len())
        .filter(|&s| {
            let open = field.is_open(s);
            let skip = avoid.is_some_and(|a| a[s]);
            if open && skip {
                avoided += 1;
            }
            open && !skip
        })
        .collect();
    (sites, avoided)
}

pub fn survival_vector(field: &ObstacleField, t: usize, avoid: Option<&[bool]>) -> SurvivalVector {
    survival_vectors(field, &[t], avoid).pop().expect("one horizon requested")
}

/// Survival vectors for several horizons from a single backward sweep.
pub fn survival_vectors(field: &ObstacleField, horizons: &[usize], avoid: Option<&[bool]>) -> Vec<SurvivalVector> {
    let (sites, avoided) = allowed_sites(field, avoid);
    let op = RestrictedOperator::from_sites(field.lattice(), &sites);
    let tmax = horizons.iter().copied().max().unwrap_or(0);
    let mut cur = vec![1.0; op.len()];
    let mut next = vec![0.0; op.len()];
    let mut snaps: Vec<Option<Vec<f64>>> = vec![None; tmax + 1];
    for &h in horizons {
        snaps[h] = Some(Vec::new());
    }
    for t in 0..=tmax {
        if snaps[t].is_some() {
            snaps[t] = Some(cur.clone());
        }
        if t < tmax {
            op.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    horizons
        .iter()
        .map(|&h| {
            let local = snaps[h].as_ref().expect("snapshot recorded");
            let mut values = vec![0.0; field.lattice().len()];
            for (i, &s) in op.sites().iter().enumerate() {
                values[s] = local[i];
            }
            SurvivalVector { horizon: h, values, avoided }
        })
        .collect()
}

/// High-survival set: open sites with s_T(v) > ((1-δ)λ)^T.
pub fn d_lambda(field: &ObstacleField, lambda: f64, horizon: usize, delta: f64) -> Vec<bool> {
    d_lambda_from(&survival_vector(field, horizon, None), lambda, delta)
}

/// [`d_lambda`] from a precomputed survival vector.
pub fn d_lambda_from(sv: &SurvivalVector, lambda: f64, delta: f64) -> Vec<bool> {
    let thr = ((1.0 - delta) * lambda).powi(sv.horizon as i32);
    sv.values.iter().map(|&s| s > thr).collect()
}

/// How the eigenvalue threshold λ_* is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum LambdaStarMode {
    /// α-quantile of P^v(τ > k)^{1/k} over open sites of the supplied fields.
    Quantile { alpha: f64, horizon: usize },
    /// 1 - c_* (log n)^{-2/d}.
    KuttlerBound { d: usize, p: f64, n: f64 },
    Manual { value: f64 },
}

pub fn lambda_star(mode: &LambdaStarMode, fields: &[ObstacleField]) -> Result<f64> {
    match *mode {
        LambdaStarMode::Manual { value } => {
            if !(value > 0.0 && value <= 1.0) {
                return Err(invalid(format!("manual lambda_* = {value} outside (0, 1]")));
            }
            Ok(value)
        }
        LambdaStarMode::KuttlerBound { d, p, n } => {
            let mc = model_constants(d, p, n)?;
            Ok(1.0 - mc.c_star * n.ln().powf(-2.0 / d as f64))
        }
        LambdaStarMode::Quantile { alpha, horizon } => {
            if !(alpha > 0.0 && alpha < 1.0) || horizon == 0 {
                return Err(invalid("quantile mode needs alpha in (0,1) and a positive horizon"));
            }
            let mut samples = Vec::new();
            for f in fields {
                let sv = survival_vector(f, horizon, None);
                samples.extend(
                    (0..f.lattice().len())
                        .filter(|&s| f.is_open(s))
                        .map(|s| sv.values[s].powf(1.0 / horizon as f64)),
                );
            }
            let needed = (1.0 / (1.0 - alpha)).ceil() as usize;
            if samples.len() < needed {
                return Err(Error::InsufficientSamples { needed, got: samples.len() });
            }
            Ok(quantile(&samples, alpha).expect("non-empty sample"))
        }
    }
}
