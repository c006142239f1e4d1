use serde::Serialize;

use super::lwgf::{allowed_mask, components_of, lwgf_star, LwgfKind, LwgfResult};
use crate::env::ObstacleField;
use crate::error::{invalid, Result};
use crate::numeric::{log_add, Cost};
use crate::spectral::{d_lambda, RestrictedOperator};

/// Remaining weight below this fraction of the absorbed weight, while
/// shrinking, ends the propagation early.
const NEGLIGIBLE: f64 = 1e-16;

/// φ_⋆(start, v; λ) = -ln E[λ^{-T} ; T ≤ n, no kill before T], where T is the
/// hitting time of B_{ball_radius}(v). Entering the ball at any site counts,
/// and sites of the high-survival set outside the ball kill the walk.
pub fn phi_star_hitting(
    field: &ObstacleField,
    start: usize,
    v: usize,
    lambda: f64,
    d_set: Option<&[bool]>,
    n: usize,
    ball_radius: f64,
) -> Result<LwgfResult> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("lambda = {lambda} outside (0, 1]")));
    }
    if !(ball_radius >= 0.0) {
        return Err(invalid("negative ball radius"));
    }
    let lat = field.lattice();
    let mut in_ball = vec![false; lat.len()];
    for s in lat.ball(v, ball_radius) {
        in_ball[s] = true;
    }
    let mut res = LwgfResult::new(LwgfKind::PhiHit, Cost::Infinite, start, v, lambda);
    res.radius = Some(ball_radius);
    if in_ball[start] {
        res.value = Cost::Finite(0.0);
        return Ok(res);
    }
    let mut mask = allowed_mask(field, d_set);
    for (m, b) in mask.iter_mut().zip(&in_ball) {
        *m &= !b;
    }
    if !mask[start] {
        return Ok(res);
    }
    let comp = components_of(lat, &mask, &[start]);
    let op = RestrictedOperator::from_sites(lat, &comp);
    let step = op.weight() / lambda;
    let into_ball: Vec<f64> =
        comp.iter().map(|&s| lat.neighbors(s).filter(|&t| in_ball[t]).count() as f64 * step).collect();
    if into_ball.iter().all(|&w| w == 0.0) {
        return Ok(res);
    }
    let mut w = vec![0.0; op.len()];
    w[op.local_index(start).expect("start in its component")] = 1.0;
    let mut next = vec![0.0; op.len()];
    let mut log_scale = 0.0f64;
    let mut absorbed = f64::NEG_INFINITY;
    for t in 1..=n {
        let hit: f64 = w.iter().zip(&into_ball).map(|(a, b)| a * b).sum();
        if hit > 0.0 {
            absorbed = log_add(absorbed, hit.ln() + log_scale);
        }
        if t == n {
            break;
        }
        op.apply(&w, &mut next);
        let mut s = 0.0;
        for x in next.iter_mut() {
            *x /= lambda;
            s += *x;
        }
        if s <= 0.0 {
            break;
        }
        for x in next.iter_mut() {
            *x /= s;
        }
        log_scale += s.ln();
        std::mem::swap(&mut w, &mut next);
        if s < 1.0 && log_scale < absorbed + NEGLIGIBLE.ln() {
            res.truncated_at = Some(t);
            break;
        }
    }
    res.value = Cost::from_log_weight(absorbed);
    Ok(res)
}

/// Inputs of the φ_* versus φ_⋆ comparison.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyParams {
    pub n: usize,
    pub hit_radius: f64,
    pub r_star: f64,
    pub survival_horizon: usize,
    pub delta: f64,
    /// Allowed |φ_* - φ_⋆|.
    pub budget: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub phi_star: LwgfResult,
    pub phi_hit: LwgfResult,
    /// |φ_* - φ_⋆|; zero when both are infinite, `None` when exactly one is.
    pub gap: Option<f64>,
    pub within_budget: bool,
}

pub fn consistency_check_phi_star(
    field: &ObstacleField,
    start: usize,
    v: usize,
    lambda: f64,
    params: &ConsistencyParams,
) -> Result<ConsistencyReport> {
    let d = d_lambda(field, lambda, params.survival_horizon, params.delta);
    let phi_star = lwgf_star(field, start, v, lambda, Some(&d), Some(params.r_star))?;
    let phi_hit = phi_star_hitting(field, start, v, lambda, Some(&d), params.n, params.hit_radius)?;
    let gap = match (phi_star.value, phi_hit.value) {
        (Cost::Finite(a), Cost::Finite(b)) => Some((a - b).abs()),
        (Cost::Infinite, Cost::Infinite) => Some(0.0),
        _ => None,
    };
    Ok(ConsistencyReport { within_budget: gap.is_some_and(|g| g <= params.budget), phi_star, phi_hit, gap })
}
