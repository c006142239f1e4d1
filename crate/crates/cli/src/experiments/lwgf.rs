use std::collections::BTreeMap;

use rwo_core::env::{DeskScaleParams, Lattice};
use rwo_core::greens::{consistency_check_phi_star, g0_holds, norming_sample, ConsistencyParams, NormingConfig};
use rwo_core::numeric::Cost;
use rwo_core::spectral::d_lambda;
use rwo_core::stats::{linear_fit, mean_se, quantile, sample_variance};

use super::{flag, n_label, plain_field, x_label, Cell, Experiment, PointResult};
use crate::config::ExperimentConfig;
use crate::record::{RunRecord, Value};

fn lambda_of(cfg: &ExperimentConfig) -> f64 {
    cfg.lambda.unwrap_or(1.0)
}

fn desk(cfg: &ExperimentConfig) -> DeskScaleParams {
    cfg.desk(cfg.n[0]).expect("validated")
}

fn centre(cfg: &ExperimentConfig) -> Vec<i64> {
    let lat = Lattice::new(&cfg.sides);
    lat.coords(lat.center())
}

fn norming_config(cfg: &ExperimentConfig) -> NormingConfig {
    let desk = desk(cfg);
    NormingConfig {
        p: cfg.p,
        sides: cfg.sides.clone(),
        origin: centre(cfg),
        lambda: lambda_of(cfg),
        survival_horizon: desk.survival_horizon,
        delta: desk.delta,
        r_star: desk.r_star,
        c_low: desk.c_low,
        c_high: desk.c_high,
        replicates: cfg.replicates,
        seed: cfg.seed,
        condition_g0: cfg.condition_g0.unwrap_or(false),
        g0_radius: desk.r_star,
    }
}

fn first_axis(d: usize) -> Vec<i64> {
    let mut e = vec![0i64; d];
    e[0] = 1;
    e
}

/// Truncated φ_*(0, m e_1) for m in `ladder`, as (φ̄, raw infinite, G_0) cells.
fn ladder_cells(cfg: &ExperimentConfig, ladder: &[usize], r: usize) -> Vec<PointResult> {
    match norming_sample(&first_axis(cfg.d), ladder, &norming_config(cfg), r as u64) {
        Ok(s) => s
            .values
            .iter()
            .zip(&s.raw_infinite)
            .map(|(&v, &inf)| Ok(vec![v.into(), flag(inf), flag(s.g0)]))
            .collect(),
        Err(e) => vec![Err(e.kind()); ladder.len()],
    }
}

const LADDER_METRICS: &[&str] = &["phi_bar", "raw_infinite", "g0"];

/// φ̄ values at `point` from the replicates that count: all of them, or only
/// the G_0 ones when conditioning.
fn counted(cfg: &ExperimentConfig, rec: &RunRecord, point: &str) -> Vec<f64> {
    let keep = cfg.condition_g0.unwrap_or(false);
    rec.column(point, "phi_bar")
        .into_iter()
        .zip(rec.column(point, "g0"))
        .filter(|(_, g)| !keep || g.finite() == Some(1.0))
        .filter_map(|(v, _)| v.finite())
        .collect()
}

/// ĥ(x) and ĥ(2x) on shared environments.
pub(crate) struct Subadditivity;

impl Subadditivity {
    fn ladder(cfg: &ExperimentConfig) -> [usize; 2] {
        [cfg.distances[0], 2 * cfg.distances[0]]
    }
}

impl Experiment for Subadditivity {
    fn points(&self, cfg: &ExperimentConfig) -> Vec<String> {
        Self::ladder(cfg).iter().map(|&x| x_label(x)).collect()
    }

    fn metrics(&self) -> &'static [&'static str] {
        LADDER_METRICS
    }

    fn replicate(&self, cfg: &ExperimentConfig, r: usize) -> Vec<PointResult> {
        ladder_cells(cfg, &Self::ladder(cfg), r)
    }

    /// margin = 2ĥ(x) + 3 SE + slack - ĥ(2x), with SE pooled from the two
    /// standard errors; the paired SE of the difference is reported alongside.
    /// The default slack is the cost of a straight walk across the endpoint
    /// ball at x, which is what gluing the two halves there can cost.
    fn derive(&self, cfg: &ExperimentConfig, rec: &RunRecord) -> BTreeMap<String, Value> {
        let [x, x2] = Self::ladder(cfg);
        let a = counted(cfg, rec, &x_label(x));
        let b = counted(cfg, rec, &x_label(x2));
        let mut out = BTreeMap::new();
        let (Some((ha, sa)), Some((hb, sb))) = (mean_se(&a), mean_se(&b)) else {
            out.insert("subadditive".into(), Value::Na);
            return out;
        };
        let pooled = (4.0 * sa * sa + sb * sb).sqrt();
        let slack = cfg.slack.unwrap_or_else(|| 2.0 * desk(cfg).r_star * (2.0 * cfg.d as f64).ln());
        let margin = 2.0 * ha + 3.0 * pooled + slack - hb;
        out.insert("h_x".into(), ha.into());
        out.insert("h_2x".into(), hb.into());
        out.insert("excess".into(), (hb - 2.0 * ha).into());
        out.insert("pooled_se".into(), pooled.into());
        if a.len() == b.len() {
            let diffs: Vec<f64> = a.iter().zip(&b).map(|(p, q)| q - 2.0 * p).collect();
            out.insert("paired_se".into(), mean_se(&diffs).map(|m| m.1).into());
        }
        out.insert("slack".into(), slack.into());
        out.insert("margin".into(), margin.into());
        out.insert("subadditive".into(), flag(margin >= 0.0).value);
        out.insert("samples".into(), (a.len() as f64).into());
        out
    }
}

/// Var[φ̄_*(0, x)] along the first axis.
pub(crate) struct Concentration;

impl Concentration {
    fn ladder(cfg: &ExperimentConfig) -> Vec<usize> {
        let mut l = cfg.distances.clone();
        l.sort_unstable();
        l.dedup();
        l
    }
}

impl Experiment for Concentration {
    fn points(&self, cfg: &ExperimentConfig) -> Vec<String> {
        Self::ladder(cfg).iter().map(|&x| x_label(x)).collect()
    }

    fn metrics(&self) -> &'static [&'static str] {
        LADDER_METRICS
    }

    fn replicate(&self, cfg: &ExperimentConfig, r: usize) -> Vec<PointResult> {
        ladder_cells(cfg, &Self::ladder(cfg), r)
    }

    /// Variance per |x| and the slope of ln Var against ln |x|.
    fn derive(&self, cfg: &ExperimentConfig, rec: &RunRecord) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for x in Self::ladder(cfg) {
            let var = sample_variance(&counted(cfg, rec, &x_label(x)));
            out.insert(format!("variance@{}", x_label(x)), var.into());
            if let Some(v) = var.filter(|v| *v > 0.0) {
                xs.push((x as f64).ln());
                ys.push(v.ln());
            }
        }
        out.insert("variance_exponent".into(), linear_fit(&xs, &ys).map(|f| f.0).into());
        out
    }
}

/// |φ_*(0, v) - φ_⋆(0, v)| with v at the configured distance.
pub(crate) struct Consistency;

impl Experiment for Consistency {
    fn points(&self, cfg: &ExperimentConfig) -> Vec<String> {
        cfg.n.iter().map(|&n| n_label(n)).collect()
    }

    fn metrics(&self) -> &'static [&'static str] {
        &["g0", "phi_star", "phi_hit", "gap", "within_budget"]
    }

    fn replicate(&self, cfg: &ExperimentConfig, r: usize) -> Vec<PointResult> {
        let field = match plain_field(cfg, r) {
            Ok(f) => f,
            Err(e) => return vec![Err(e.kind()); cfg.n.len()],
        };
        let lat = field.lattice();
        let o = lat.center();
        let mut vc = lat.coords(o);
        vc[0] += cfg.distances[0] as i64;
        let Some(v) = lat.index_of(&vc) else {
            return vec![Err("point-outside-window"); cfg.n.len()];
        };
        let lambda = lambda_of(cfg);
        cfg.n
            .iter()
            .map(|&n| {
                let desk = cfg.desk(n).map_err(|_| "invalid-parameter")?;
                let d = d_lambda(&field, lambda, desk.survival_horizon, desk.delta);
                let g0 = g0_holds(&field, o, &d, desk.r_star);
                let params = ConsistencyParams {
                    n: n as usize,
                    hit_radius: desk.hit_radius,
                    r_star: desk.r_star,
                    survival_horizon: desk.survival_horizon,
                    delta: desk.delta,
                    budget: budget(cfg, n),
                };
                let rep = consistency_check_phi_star(&field, o, v, lambda, &params).map_err(|e| e.kind())?;
                let cost = |c: Cost| -> Cell { c.as_f64().into() };
                Ok(vec![
                    flag(g0),
                    cost(rep.phi_star.value),
                    cost(rep.phi_hit.value),
                    rep.gap.unwrap_or(f64::INFINITY).into(),
                    flag(rep.within_budget),
                ])
            })
            .collect()
    }

    /// Among G_0 replicates: fraction with a finite gap, its 95% quantile and
    /// the exponent C with (ln n)^C equal to that quantile.
    fn derive(&self, cfg: &ExperimentConfig, rec: &RunRecord) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        for &n in &cfg.n {
            let p = n_label(n);
            let gaps: Vec<Value> = rec
                .column(&p, "gap")
                .into_iter()
                .zip(rec.column(&p, "g0"))
                .filter(|(_, g)| g.finite() == Some(1.0))
                .map(|(v, _)| v)
                .collect();
            let finite: Vec<f64> = gaps.iter().filter_map(|v| v.finite()).collect();
            let frac = (!gaps.is_empty()).then(|| finite.len() as f64 / gaps.len() as f64);
            let q95 = quantile(&finite, 0.95);
            let exponent = q95.filter(|q| *q > 0.0).map(|q| q.ln() / n.ln().ln());
            out.insert(format!("g0_replicates@{p}"), (gaps.len() as f64).into());
            out.insert(format!("finite_fraction@{p}"), frac.into());
            out.insert(format!("gap_q95@{p}"), q95.into());
            out.insert(format!("polylog_exponent@{p}"), exponent.into());
            out.insert(format!("budget@{p}"), budget(cfg, n).into());
        }
        out
    }
}

/// Configured budget, else (ln n)^2.
fn budget(cfg: &ExperimentConfig, n: f64) -> f64 {
    cfg.budget.unwrap_or_else(|| n.ln().powi(2))
}
