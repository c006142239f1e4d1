use serde::Serialize;

use super::boxes::{empty_boxes, EmptyBoxes};
use super::shape::{fit_ball_and_asymmetry, omega_eps, BallFit, OmegaEps};
use crate::env::{model_constants, ObstacleField};
use crate::error::{invalid, Error, Result};
use crate::spectral::{principal_eigenpair, restricted_operator, DEFAULT_MAX_ITERS, DEFAULT_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntermittentParams {
    pub p: f64,
    pub n: f64,
    pub eps: f64,
    /// Empty-box scale ι; ε² when `None`.
    pub iota: Option<f64>,
    /// Empty-box obstacle fraction ρ; ε² when `None`.
    pub rho: Option<f64>,
    /// Radius of the ball around the island whose boxes are examined.
    pub region_radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntermittentIsland {
    pub eps: f64,
    pub rho_n: u64,
    /// d log_{1/p} n.
    pub island_volume: f64,
    pub v_star: usize,
    /// U, ascending.
    pub pocket: Vec<usize>,
    pub lambda_u: f64,
    /// Principal eigenfunction on U (Σ f = 1), aligned with `pocket`.
    pub eigenfunction: Vec<f64>,
    pub omega: OmegaEps,
    pub ball: BallFit,
    /// B_ε ∩ Ω_ε, ascending.
    pub omega_tilde: Vec<usize>,
    pub b_hat_radius: f64,
    /// Union of B_{ε^{1/10d} ρ_n}(x) over x in Ω̃_ε, ascending.
    pub b_hat: Vec<usize>,
    pub lambda_omega: f64,
    /// (1 - λ_{Ω_ε}) / (1 - λ_U).
    pub eigen_ratio: f64,
    /// Continuum prediction for 1 - λ of a ball with |Ω_ε| sites.
    pub ball_prediction: f64,
    pub empty: Option<EmptyBoxes>,
    /// Error kind when the empty boxes were unavailable.
    pub empty_error: Option<&'static str>,
    /// |B_ε ∩ E ∩ Ω_ε|.
    pub triple_intersection: Option<usize>,
    /// |B_ε ∪ E ∪ Ω_ε|.
    pub triple_union: Option<usize>,
}

/// Builds Ω_ε, B_ε, Ω̃_ε and B̂_n for the pocket `pocket` around `v_star`.
pub fn intermittent_sets(
    field: &ObstacleField,
    pocket: &[usize],
    v_star: usize,
    params: &IntermittentParams,
) -> Result<IntermittentIsland> {
    if !(params.eps > 0.0 && params.eps < 1.0) {
        return Err(invalid(format!("eps = {} outside (0, 1)", params.eps)));
    }
    if pocket.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let lat = field.lattice();
    let d = lat.dim();
    let mc = model_constants(d, params.p, params.n)?;
    if mc.rho_n == 0 {
        return Err(invalid("rho_n = 0; increase n"));
    }
    let op = restricted_operator(field, pocket)?;
    let spec = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    let sites = op.sites().to_vec();
    let omega = omega_eps(d, &sites, &spec.vector, params.eps, mc.rho_n)?;
    if omega.sites.is_empty() {
        return Err(Error::EmptySet("omega_eps"));
    }
    let ball = fit_ball_and_asymmetry(lat, &omega.sites)?;
    let omega_tilde: Vec<usize> =
        ball.ball_sites.iter().copied().filter(|s| omega.sites.binary_search(s).is_ok()).collect();
    let b_hat_radius = params.eps.powf(1.0 / (10.0 * d as f64)) * mc.rho_n as f64;
    let mut in_hat = vec![false; lat.len()];
    for &x in &omega_tilde {
        for s in lat.ball(x, b_hat_radius) {
            in_hat[s] = true;
        }
    }
    let b_hat: Vec<usize> = (0..lat.len()).filter(|&s| in_hat[s]).collect();

    let omega_op = restricted_operator(field, &omega.sites)?;
    let lambda_omega = principal_eigenpair(&omega_op, DEFAULT_TOL, DEFAULT_MAX_ITERS)?.lambda;
    let eigen_ratio = (1.0 - lambda_omega) / (1.0 - spec.lambda);
    let ball_prediction = mc.mu_ball * (mc.omega_d / omega.sites.len() as f64).powf(2.0 / d as f64);

    let iota = params.iota.unwrap_or(params.eps * params.eps);
    let rho = params.rho.unwrap_or(params.eps * params.eps);
    let (empty, empty_error) = match empty_boxes(field, iota, rho, mc.rho_n, v_star, params.region_radius) {
        Ok(e) => (Some(e), None),
        Err(e @ (Error::BoxSizeZero | Error::InvalidParameter(_))) => (None, Some(e.kind())),
        Err(e) => return Err(e),
    };
    let (triple_intersection, triple_union) = match &empty {
        Some(e) => {
            let mut all = vec![0u8; lat.len()];
            for &s in &ball.ball_sites {
                all[s] |= 1;
            }
            for &s in &e.sites {
                all[s] |= 2;
            }
            for &s in &omega.sites {
                all[s] |= 4;
            }
            (Some(all.iter().filter(|&&m| m == 7).count()), Some(all.iter().filter(|&&m| m != 0).count()))
        }
        None => (None, None),
    };
    Ok(IntermittentIsland {
        eps: params.eps,
        rho_n: mc.rho_n,
        island_volume: mc.island_volume,
        v_star,
        pocket: sites,
        lambda_u: spec.lambda,
        eigenfunction: spec.vector,
        omega,
        ball,
        omega_tilde,
        b_hat_radius,
        b_hat,
        lambda_omega,
        eigen_ratio,
        ball_prediction,
        empty,
        empty_error,
        triple_intersection,
        triple_union,
    })
}
