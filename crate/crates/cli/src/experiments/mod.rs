//! One module per experiment kind. Each replicate yields one result per
//! measurement point; a failed point becomes NA rows tagged with its error kind.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use rwo_core::env::{clusters, derive_seed, generate_field, Boundary, ObstacleField};

use crate::config::{ExperimentConfig, ExperimentKind, FieldKind};
use crate::error::Result;
use crate::record::{Row, RunRecord, Value};

mod islands;
mod lwgf;
mod renorm;
mod survival;

/// Outcome of one measurement point: one cell per metric, or an error kind
/// for the whole point.
pub(crate) type PointResult = std::result::Result<Vec<Cell>, &'static str>;

/// A measured value, or NA with the reason it is missing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Cell {
    pub value: Value,
    pub error: &'static str,
}

impl Cell {
    pub fn missing(error: &'static str) -> Cell {
        Cell { value: Value::Na, error }
    }
}

impl From<Value> for Cell {
    fn from(value: Value) -> Cell {
        Cell { value, error: "" }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Value::of(x).into()
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Cell {
        Value::from(x).into()
    }
}

pub(crate) trait Experiment: Sync {
    fn points(&self, cfg: &ExperimentConfig) -> Vec<String>;
    fn metrics(&self) -> &'static [&'static str];
    /// One entry per point, in point order.
    fn replicate(&self, cfg: &ExperimentConfig, r: usize) -> Vec<PointResult>;
    fn derive(&self, _cfg: &ExperimentConfig, _rec: &RunRecord) -> BTreeMap<String, Value> {
        BTreeMap::new()
    }
}

fn experiment(kind: ExperimentKind) -> &'static dyn Experiment {
    match kind {
        ExperimentKind::SurvivalAsymptotics => &survival::SurvivalAsymptotics,
        ExperimentKind::OneCity => &islands::OneCity,
        ExperimentKind::BallShape => &islands::BallShape,
        ExperimentKind::LwgfSubadditivity => &lwgf::Subadditivity,
        ExperimentKind::LwgfConcentration => &lwgf::Concentration,
        ExperimentKind::RenormCensus => &renorm::Census,
        ExperimentKind::PhiConsistency => &lwgf::Consistency,
    }
}

/// Runs every replicate (in parallel) and assembles the record. Rows are in
/// replicate, point, metric order whatever the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let clock = Instant::now();
    let exp = experiment(cfg.kind);
    let desk = cfg.n.iter().map(|&n| Ok((n, cfg.desk(n)?))).collect::<Result<Vec<_>>>()?;
    let points = exp.points(cfg);
    let metrics = exp.metrics();
    let results: Vec<Vec<PointResult>> = (0..cfg.replicates).into_par_iter().map(|r| exp.replicate(cfg, r)).collect();

    let mut rows = Vec::with_capacity(cfg.replicates * points.len() * metrics.len());
    let mut failed_replicates = 0;
    for (r, per_point) in results.iter().enumerate() {
        assert_eq!(per_point.len(), points.len(), "one result per point");
        failed_replicates += usize::from(per_point.iter().any(|p| p.is_err()));
        for (point, res) in points.iter().zip(per_point) {
            for (k, metric) in metrics.iter().enumerate() {
                let (value, error_kind) = match res {
                    Ok(cells) => (cells[k].value, cells[k].error.to_string()),
                    Err(kind) => (Value::Na, kind.to_string()),
                };
                rows.push(Row {
                    experiment: cfg.kind.name().to_string(),
                    replicate: r,
                    point: point.clone(),
                    metric: metric.to_string(),
                    value,
                    error_kind,
                });
            }
        }
    }
    let mut rec = RunRecord {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: 0.0,
        desk,
        points,
        metrics: metrics.iter().map(|m| m.to_string()).collect(),
        rows,
        failed_replicates,
        summary: BTreeMap::new(),
        derived: BTreeMap::new(),
    };
    rec.summarize();
    rec.derived = exp.derive(cfg, &rec);
    rec.wall_time_s = clock.elapsed().as_secs_f64();
    Ok(rec)
}

pub(crate) fn n_label(n: f64) -> String {
    format!("n={}", n as u64)
}

pub(crate) fn x_label(x: usize) -> String {
    format!("x={x}")
}

/// Tries this many environments per replicate before giving up on the
/// origin lying in the largest cluster.
const FIELD_ATTEMPTS: u64 = 64;

/// Environment of replicate `r` and the number of draws it took. Random
/// fields are redrawn until the origin lies in the largest open cluster;
/// ball fields open the ball around the origin instead.
pub(crate) fn replicate_field(cfg: &ExperimentConfig, r: usize) -> std::result::Result<(ObstacleField, u64), &'static str> {
    let base = derive_seed(cfg.seed, r as u64);
    for attempt in 0..FIELD_ATTEMPTS {
        let seed = derive_seed(base, attempt);
        let mut field = generate_field(cfg.d, &cfg.sides, cfg.p, seed, Boundary::AbsorbingPad).map_err(|e| e.kind())?;
        let o = field.origin();
        if cfg.field != FieldKind::Random {
            let radius = cfg.ball_radius.expect("validated");
            if cfg.field == FieldKind::SingleBall {
                for s in 0..field.lattice().len() {
                    if !field.lattice().is_outer(s) {
                        field.set_obstacle(s, true);
                    }
                }
            }
            for s in field.lattice().ball(o, radius) {
                if !field.lattice().is_outer(s) {
                    field.set_obstacle(s, false);
                }
            }
            return Ok((field, attempt + 1));
        }
        let cl = clusters(&field);
        if cl.label(o).is_some() && cl.label(o) == cl.largest() {
            return Ok((field, attempt + 1));
        }
    }
    Err("origin-not-in-largest-cluster")
}

/// Plain environment of replicate `r` without conditioning.
pub(crate) fn plain_field(cfg: &ExperimentConfig, r: usize) -> rwo_core::Result<ObstacleField> {
    generate_field(cfg.d, &cfg.sides, cfg.p, derive_seed(cfg.seed, r as u64), Boundary::AbsorbingPad)
}

/// Mean of the finite values of a column, if any.
pub(crate) fn column_mean(rec: &RunRecord, point: &str, metric: &str) -> Value {
    rec.summary.get(point).and_then(|m| m.get(metric)).and_then(|s| s.mean).into()
}

pub(crate) fn flag(b: bool) -> Cell {
    Value::Num(if b { 1.0 } else { 0.0 }).into()
}
