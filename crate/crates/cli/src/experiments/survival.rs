use std::collections::BTreeMap;

use rwo_core::env::model_constants;
use rwo_core::spectral::conditioned_occupation;
use rwo_core::stats::linear_fit;

use super::{n_label, replicate_field, Experiment, PointResult};
use crate::config::ExperimentConfig;
use crate::record::{RunRecord, Value};

/// -ln P(τ > n) from the origin against c_* n (ln n)^{-2/d}.
pub(crate) struct SurvivalAsymptotics;

impl Experiment for SurvivalAsymptotics {
    fn points(&self, cfg: &ExperimentConfig) -> Vec<String> {
        cfg.n.iter().map(|&n| n_label(n)).collect()
    }

    fn metrics(&self) -> &'static [&'static str] {
        &["neg_log_survival", "prediction", "ratio", "field_attempts"]
    }

    fn replicate(&self, cfg: &ExperimentConfig, r: usize) -> Vec<PointResult> {
        let (field, attempts) = match replicate_field(cfg, r) {
            Ok(f) => f,
            Err(kind) => return vec![Err(kind); cfg.n.len()],
        };
        cfg.n
            .iter()
            .map(|&n| {
                let mc = model_constants(cfg.d, cfg.p, n).map_err(|e| e.kind())?;
                let occ = conditioned_occupation(&field, n as usize, 0, field.origin(), None).map_err(|e| e.kind())?;
                let prediction = mc.c_star * n * n.ln().powf(-2.0 / cfg.d as f64);
                let neg = -occ.log_survival;
                Ok(vec![neg.into(), prediction.into(), (neg / prediction).into(), (attempts as f64).into()])
            })
            .collect()
    }

    /// Slope of ln(-ln P) against ln(n (ln n)^{-2/d}); one when the
    /// prediction has the right shape.
    fn derive(&self, cfg: &ExperimentConfig, rec: &RunRecord) -> BTreeMap<String, Value> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in &cfg.n {
            if let Some(m) = super::column_mean(rec, &n_label(n), "neg_log_survival").finite().filter(|m| *m > 0.0) {
                xs.push((n * n.ln().powf(-2.0 / cfg.d as f64)).ln());
                ys.push(m.ln());
            }
        }
        let mut out = BTreeMap::new();
        out.insert("scaling_slope".into(), linear_fit(&xs, &ys).map(|f| f.0).into());
        out
    }
}
