use std::path::{Path, PathBuf};

use rwo_core::env::DeskScaleParams;
use serde::{Deserialize, Serialize};

use crate::error::{config_error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SurvivalAsymptotics,
    OneCity,
    BallShape,
    LwgfSubadditivity,
    LwgfConcentration,
    RenormCensus,
    PhiConsistency,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SurvivalAsymptotics => "survival-asymptotics",
            ExperimentKind::OneCity => "one-city",
            ExperimentKind::BallShape => "ball-shape",
            ExperimentKind::LwgfSubadditivity => "lwgf-subadditivity",
            ExperimentKind::LwgfConcentration => "lwgf-concentration",
            ExperimentKind::RenormCensus => "renorm-census",
            ExperimentKind::PhiConsistency => "phi-consistency",
        }
    }
}

/// How each replicate environment is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    /// Bernoulli obstacles with an absorbing pad.
    #[default]
    Random,
    /// As `random`, with the ball of radius `ball_radius` around the origin cleared.
    VacancyBall,
    /// Every site closed except the ball of radius `ball_radius` around the origin.
    SingleBall,
}

/// A complete experiment description. Unset knobs fall back to the desk
/// defaults at each n of the ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_dim")]
    pub d: usize,
    pub p: f64,
    /// Walk lengths; one measurement point per entry for the walk experiments.
    pub n: Vec<f64>,
    pub sides: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub field: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    /// |x| values along the first axis for the Green's function experiments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distances: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Fixed eigenvalue threshold; the survival quantile is used otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    /// Occupation is measured at t = t_fraction * n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iota: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Box half-sides for the renormalisation census.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub half_sides: Vec<usize>,
    /// Radius r of the cut search B_r(x) versus B_2r(x)^c; no search when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_radius: Option<f64>,
    /// Additive slack in the subadditivity check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// Allowed |φ_* - φ_⋆| in the consistency experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    /// Condition every environment on the G_0 surrogate (norming experiments).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_g0: Option<bool>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_local: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_half_side: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_circ: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pocket_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_quantile: Option<f64>,
}

fn default_dim() -> usize {
    2
}

impl ExperimentConfig {
    /// Minimal configuration of the given kind; everything else at defaults.
    pub fn new(kind: ExperimentKind, p: f64, n: Vec<f64>, sides: Vec<usize>, replicates: usize) -> Self {
        let mut map = serde_json::Map::new();
        map.insert("kind".into(), serde_json::to_value(kind).expect("plain enum"));
        map.insert("p".into(), p.into());
        map.insert("n".into(), n.into());
        map.insert("sides".into(), sides.into());
        map.insert("replicates".into(), replicates.into());
        serde_json::from_value(map.into()).expect("required keys present")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(config_error(m));
        if self.d < 2 {
            return bad(format!("d = {} < 2", self.d));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if self.n.is_empty() {
            return bad("n ladder is empty".into());
        }
        if let Some(&n) = self.n.iter().find(|&&n| !(n >= 2.0) || n.fract() != 0.0 || n > 1e12) {
            return bad(format!("n = {n} must be an integer in [2, 1e12]"));
        }
        if self.sides.len() != self.d || self.sides.iter().any(|&s| s < 3) {
            return bad(format!("need {} sides of at least 3", self.d));
        }
        if self.field != FieldKind::Random && !self.ball_radius.is_some_and(|r| r > 0.0) {
            return bad("ball fields need a positive ball_radius".into());
        }
        if self.t_fraction.is_some_and(|t| !(0.0..=1.0).contains(&t)) {
            return bad("t_fraction outside [0, 1]".into());
        }
        if self.eps.is_some_and(|e| !(e > 0.0 && e < 1.0)) {
            return bad("eps outside (0, 1)".into());
        }
        if self.lambda.is_some_and(|l| !(l > 0.0 && l <= 1.0)) {
            return bad("lambda outside (0, 1]".into());
        }
        if self.lambda_star.is_some_and(|l| !(l > 0.0 && l < 1.0)) {
            return bad("lambda_star outside (0, 1)".into());
        }
        match self.kind {
            ExperimentKind::LwgfSubadditivity if self.distances.len() != 1 => {
                return bad("lwgf-subadditivity needs exactly one distance".into());
            }
            ExperimentKind::LwgfConcentration | ExperimentKind::PhiConsistency if self.distances.is_empty() => {
                return bad(format!("{} needs distances", self.kind.name()));
            }
            _ => {}
        }
        if self.distances.iter().any(|&x| x == 0) {
            return bad("distances must be positive".into());
        }
        for &n in &self.n {
            self.desk(n)?;
        }
        Ok(())
    }

    /// Desk defaults at `n` with this config's overrides applied.
    pub fn desk(&self, n: f64) -> Result<DeskScaleParams> {
        let p = if self.p > 0.0 && self.p < 1.0 { self.p } else { 0.5 };
        let mut s = DeskScaleParams::desk(self.d, p, n).map_err(|e| config_error(e.to_string()))?;
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { s.$f = v; } )* };
        }
        apply!(
            k_n, r_local, box_half_side, kappa, c0, c1, c2, c_d, c_circ, c_low, c_high, survival_horizon, delta,
            hit_radius, pocket_radius, separation, r_star, eps_exponent, lambda_quantile
        );
        s.validate().map_err(|e| config_error(e.to_string()))?;
        Ok(s)
    }
}
