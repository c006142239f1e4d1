use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// First zero of the Bessel function J_0.
pub const BESSEL_J01: f64 = 2.404_825_557_695_773;

/// Constants of the one-city picture for given (d, p, n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub d: usize,
    pub p: f64,
    pub n: f64,
    /// Island radius scale.
    pub rho_n: u64,
    /// Volume of the unit ball.
    pub omega_d: f64,
    /// Principal Dirichlet eigenvalue of the unit ball, normalised by 1/(2d).
    pub mu_ball: f64,
    /// Survival exponent constant.
    pub c_star: f64,
    /// `d log_{1/p} n`, the predicted island volume.
    pub island_volume: f64,
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Ball eigenvalue for d = 2, 3.
pub fn ball_eigenvalue(d: usize) -> Result<f64> {
    match d {
        2 => Ok(BESSEL_J01 * BESSEL_J01 / 4.0),
        3 => Ok(PI * PI / 6.0),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

pub fn model_constants(d: usize, p: f64, n: f64) -> Result<ModelConstants> {
    model_constants_with(d, p, n, ball_eigenvalue(d)?)
}

/// As [`model_constants`], with the normalised ball eigenvalue supplied.
pub fn model_constants_with(d: usize, p: f64, n: f64, mu_ball: f64) -> Result<ModelConstants> {
    if d < 2 {
        return Err(invalid(format!("d = {d} < 2")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("p = {p} outside (0, 1)")));
    }
    if !(n >= 2.0) {
        return Err(invalid(format!("n = {n} < 2")));
    }
    let omega_d = unit_ball_volume(d);
    let log_inv_p = (1.0 / p).ln();
    let island_volume = d as f64 * n.ln() / log_inv_p;
    // The small guard keeps exact integer cases such as ρ_n = 1 from rounding down.
    let rho = (island_volume / omega_d).powf(1.0 / d as f64);
    let rho_n = (rho + 1e-9).floor() as u64;
    let c_star = mu_ball * (omega_d * log_inv_p / d as f64).powf(2.0 / d as f64);
    Ok(ModelConstants { d, p, n, rho_n, omega_d, mu_ball, c_star, island_volume })
}

/// Every scale parameter the algorithms need, as explicit numbers. The
/// asymptotic formulas are far larger than any window, so experiments run on
/// [`DeskScaleParams::desk`] values or explicit overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeskScaleParams {
    /// Horizon of the survival quantile that sets the eigenvalue threshold.
    pub k_n: f64,
    /// Radius of the balls on which local eigenvalues are computed.
    pub r_local: f64,
    /// Half-side of the renormalisation boxes.
    pub box_half_side: usize,
    pub kappa: f64,
    /// Scan radius factor for the skeletal set, in units of n / (log n)^{2/d}.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Renormalisation neighbourhood factor.
    pub c_d: f64,
    /// Exponent in the restriction radius |x-y| (log|x-y|)^{c_circ}.
    pub c_circ: f64,
    /// Lower truncation slope.
    pub c_low: f64,
    /// Upper truncation slope.
    pub c_high: f64,
    /// Horizon T of the high-survival set.
    pub survival_horizon: usize,
    /// Slack δ in the high-survival threshold ((1-δ)λ)^T.
    pub delta: f64,
    /// Radius of the target ball in the hitting functional.
    pub hit_radius: f64,
    /// Radius of the ball whose component around the selected island is U.
    pub pocket_radius: f64,
    /// Islands are kept only if their separation balls are disjoint.
    pub separation: f64,
    /// Radius of the minimisation balls around both endpoints.
    pub r_star: f64,
    /// ε = ρ_n^{-b}.
    pub eps_exponent: f64,
    /// Quantile level for the survival-quantile threshold.
    pub lambda_quantile: f64,
}

/// Smallest neighbourhood factor letting an obstacle-free box pass the
/// chemical-distance clause, with 25% slack for detours.
pub fn desk_c_d(d: usize, half_side: usize) -> f64 {
    let l = half_side as f64;
    1.25 * d as f64 * (6.0 * l + 2.0) / l
}

impl DeskScaleParams {
    /// The asymptotic formulas evaluated literally.
    pub fn asymptotic(d: usize, n: f64) -> Self {
        let ln = n.ln();
        let lnln = ln.ln().max(1.0);
        let df = d as f64;
        let k_n = ln.powf(4.0 - 2.0 / df) * if d == 2 { lnln * lnln } else { 1.0 };
        let kappa = 2.0 * df + 2.0;
        let c1 = 3.0;
        DeskScaleParams {
            k_n,
            r_local: k_n * ln * ln,
            box_half_side: (ln.floor() as usize).pow(2 * d as u32).max(3),
            kappa,
            c0: 1.0,
            c1,
            c2: 6.0 * df * df,
            c_d: 4.0,
            c_circ: c1 + 3.0,
            c_low: 0.05,
            c_high: 20.0 * (2.0 * df).ln(),
            survival_horizon: ln.powf(c1).ceil() as usize,
            delta: k_n.powf(-21.0 * df),
            hit_radius: ln.powf(kappa / 2.0),
            pocket_radius: ln.powf(kappa),
            separation: n * k_n.powf(-100.0 * df),
            r_star: ln.powf(2.0 * kappa + 10.0 * df),
            eps_exponent: 0.25,
            lambda_quantile: 0.99,
        }
    }

    /// Defaults that fit windows of a few hundred sites per axis.
    pub fn desk(d: usize, p: f64, n: f64) -> Result<Self> {
        let mc = model_constants(d, p, n)?;
        let rho = mc.rho_n.max(1) as f64;
        let ln = n.ln();
        let kappa = 1.3;
        let half = 4usize;
        let s = DeskScaleParams {
            k_n: 4.0 * rho,
            r_local: 4.0 * rho,
            box_half_side: half,
            kappa,
            c0: 1.0,
            c1: 1.5,
            c2: 6.0 * (d * d) as f64,
            c_d: desk_c_d(d, half),
            c_circ: 1.0,
            c_low: 0.05,
            c_high: 20.0 * (2.0 * d as f64).ln(),
            survival_horizon: ln.powf(1.5).ceil() as usize,
            delta: 0.01,
            hit_radius: ln.powf(kappa / 2.0),
            pocket_radius: ln.powf(kappa),
            separation: 2.0 * rho,
            r_star: 3.0,
            eps_exponent: 0.25,
            lambda_quantile: 0.99,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("k_n", self.k_n),
            ("r_local", self.r_local),
            ("kappa", self.kappa),
            ("c0", self.c0),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c_d", self.c_d),
            ("c_circ", self.c_circ),
            ("c_low", self.c_low),
            ("c_high", self.c_high),
            ("delta", self.delta),
            ("hit_radius", self.hit_radius),
            ("pocket_radius", self.pocket_radius),
            ("separation", self.separation),
            ("r_star", self.r_star),
            ("eps_exponent", self.eps_exponent),
            ("lambda_quantile", self.lambda_quantile),
        ];
        for (name, v) in reals {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} = {v} must be positive and finite")));
            }
        }
        if self.r_local < self.k_n {
            return Err(invalid("r_local must be at least k_n"));
        }
        if self.box_half_side < 3 {
            return Err(invalid("box_half_side must be at least 3"));
        }
        if self.c_d < 4.0 {
            return Err(invalid("c_d must be at least 4"));
        }
        if self.survival_horizon == 0 {
            return Err(invalid("survival_horizon must be positive"));
        }
        if self.c_low > self.c_high {
            return Err(invalid("c_low must not exceed c_high"));
        }
        if self.lambda_quantile >= 1.0 {
            return Err(invalid("lambda_quantile must be below 1"));
        }
        Ok(())
    }

    /// Restriction radius for the ball-restricted Green's function.
    pub fn restriction_radius(&self, dist: f64) -> f64 {
        dist * dist.ln().max(1.0).powf(self.c_circ)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn higher_dimension_needs_table() {
        assert!(matches!(model_constants(4, 0.5, 1e6), Err(Error::UnsupportedDimension(4))));
        assert!(model_constants_with(4, 0.5, 1e6, 1.0).is_ok());
    }

    #[test]
    fn desk_defaults_validate() {
        for n in [2e3, 2e4, 2e5, 1e6] {
            DeskScaleParams::desk(2, 0.7, n).unwrap();
        }
    }
}
