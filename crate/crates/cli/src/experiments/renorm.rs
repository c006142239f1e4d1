use std::collections::BTreeMap;

use rwo_core::env::{desk_c_d, ObstacleField};
use rwo_core::renorm::{build_cut, classify_boxes, separates, BoxColouring, BoxState, CutParams, LazyBoxes};
use rwo_core::spectral::d_lambda;

use super::{column_mean, flag, plain_field, Cell, Experiment, PointResult};
use crate::config::ExperimentConfig;
use crate::record::{RunRecord, Value};

fn l_label(l: usize) -> String {
    format!("L={l}")
}

/// White/black census per box size and, with a cut radius, one separating
/// cut search around the origin.
///
/// Without a cut search every box of the window is classified. With one,
/// boxes are classified on demand and the census covers only the boxes the
/// search looked at.
pub(crate) struct Census;

impl Census {
    fn half_sides(cfg: &ExperimentConfig) -> Vec<usize> {
        if cfg.half_sides.is_empty() {
            vec![cfg.desk(cfg.n[0]).expect("validated").box_half_side]
        } else {
            cfg.half_sides.clone()
        }
    }
}

impl Experiment for Census {
    fn points(&self, cfg: &ExperimentConfig) -> Vec<String> {
        Self::half_sides(cfg).into_iter().map(l_label).collect()
    }

    fn metrics(&self) -> &'static [&'static str] {
        &["white", "black", "unknown", "white_fraction", "cut_built", "cut_verified", "cut_boxes"]
    }

    fn replicate(&self, cfg: &ExperimentConfig, r: usize) -> Vec<PointResult> {
        let ls = Self::half_sides(cfg);
        let field = match plain_field(cfg, r) {
            Ok(f) => f,
            Err(e) => return vec![Err(e.kind()); ls.len()],
        };
        let desk = cfg.desk(cfg.n[0]).expect("validated");
        let d_set = cfg.lambda_star.map(|l| d_lambda(&field, l, desk.survival_horizon, desk.delta));
        ls.iter()
            .map(|&l| {
                let c_d = cfg.c_d.unwrap_or_else(|| desk_c_d(cfg.d, l));
                census_point(cfg, &field, l, c_d, d_set.as_deref()).map_err(|e| e.kind())
            })
            .collect()
    }

    fn derive(&self, cfg: &ExperimentConfig, rec: &RunRecord) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        let ls = Self::half_sides(cfg);
        let fr: Option<Vec<f64>> = ls.iter().map(|&l| column_mean(rec, &l_label(l), "white_fraction").finite()).collect();
        out.insert(
            "white_fraction_increasing".into(),
            fr.map_or(Value::Na, |f| flag(f.windows(2).all(|w| w[1] > w[0])).value),
        );
        if cfg.cut_radius.is_some() {
            for &l in &ls {
                let p = l_label(l);
                let built = rec.finite_column(&p, "cut_built").iter().filter(|&&b| b == 1.0).count();
                let verified = rec.finite_column(&p, "cut_verified").iter().filter(|&&b| b == 1.0).count();
                out.insert(format!("cuts_built@{p}"), (built as f64).into());
                out.insert(format!("cuts_verified@{p}"), (verified as f64).into());
            }
        }
        out
    }
}

fn census_point(
    cfg: &ExperimentConfig,
    field: &ObstacleField,
    l: usize,
    c_d: f64,
    d_set: Option<&[bool]>,
) -> rwo_core::Result<Vec<Cell>> {
    let fraction = |w: usize, b: usize| if w + b > 0 { Some(w as f64 / (w + b) as f64) } else { None };
    let Some(r) = cfg.cut_radius else {
        let grid = classify_boxes(field, l, c_d, d_set)?;
        let (w, b, u) = (grid.count(BoxState::White), grid.count(BoxState::Black), grid.count(BoxState::Unknown));
        let none = Cell::missing("no-cut-search");
        return Ok(vec![
            (w as f64).into(),
            (b as f64).into(),
            (u as f64).into(),
            fraction(w, b).into(),
            none,
            none,
            none,
        ]);
    };
    let boxes = LazyBoxes::new(field, l, c_d, d_set)?;
    let lat = field.lattice();
    let x = field.origin();
    let cut = build_cut(&boxes, lat, x, r, CutParams::for_dim(cfg.d))?;
    let (w, b, u) = boxes.census();
    let (verified, size): (Cell, Cell) = match &cut {
        Some(c) => (flag(separates(&boxes.tiling(), &c.indices, &lat.coords(x), r)), (c.indices.len() as f64).into()),
        None => (Cell::missing("no-cut"), Cell::missing("no-cut")),
    };
    Ok(vec![
        (w as f64).into(),
        (b as f64).into(),
        (u as f64).into(),
        fraction(w, b).into(),
        flag(cut.is_some()),
        verified,
        size,
    ])
}
