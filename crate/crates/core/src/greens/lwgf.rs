use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::solver::GreenSolver;
use crate::env::{Lattice, ObstacleField};
use crate::error::{invalid, Error, Result};
use crate::numeric::Cost;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LwgfKind {
    Phi,
    PhiStar,
    PhiCirc,
    PhiCircStar,
    PhiBarStar,
    PhiBarCircStar,
    PhiHit,
}

#[derive(Clone, Debug, Serialize)]
pub struct LwgfResult {
    pub kind: LwgfKind,
    pub value: Cost,
    pub x: usize,
    pub y: usize,
    /// Minimising endpoints for the starred kinds.
    pub witness: Option<(usize, usize)>,
    pub lambda: f64,
    /// Minimisation radius, when one was used.
    pub radius: Option<f64>,
    /// Restriction ball radius, when one was used.
    pub restriction: Option<f64>,
    /// Relative mismatch between the direct value and the quotient form.
    pub identity_error: Option<f64>,
    /// Step at which the hitting propagation stopped early, if it did.
    pub truncated_at: Option<usize>,
}

impl LwgfResult {
    pub(crate) fn new(kind: LwgfKind, value: Cost, x: usize, y: usize, lambda: f64) -> Self {
        LwgfResult {
            kind,
            value,
            x,
            y,
            witness: None,
            lambda,
            radius: None,
            restriction: None,
            identity_error: None,
            truncated_at: None,
        }
    }
}

/// Open sites outside the high-survival set.
pub(crate) fn allowed_mask(field: &ObstacleField, d_set: Option<&[bool]>) -> Vec<bool> {
    (0..field.lattice().len()).map(|s| field.is_open(s) && !d_set.is_some_and(|d| d[s])).collect()
}

/// Union of the components of `mask` containing any of `seeds`, ascending.
pub(crate) fn components_of(lat: &Lattice, mask: &[bool], seeds: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; lat.len()];
    let mut out = Vec::new();
    for &s in seeds {
        if !mask[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let start = out.len();
        out.push(s);
        let mut head = start;
        while head < out.len() {
            let u = out[head];
            head += 1;
            for v in lat.neighbors(u) {
                if mask[v] && !seen[v] {
                    seen[v] = true;
                    out.push(v);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("lambda = {lambda} outside (0, 1]")))
    }
}

/// φ on the sites of `mask`: -ln G_{V∖{y}}(x, y), plus the quotient check.
fn phi_on_mask(field: &ObstacleField, mask: &[bool], x: usize, y: usize, lambda: f64) -> Result<(Cost, Option<f64>)> {
    if !mask[x] || !mask[y] {
        return Ok((Cost::Infinite, None));
    }
    if x == y {
        return Ok((Cost::Finite(0.0), None));
    }
    let lat = field.lattice();
    let comp = components_of(lat, mask, &[y]);
    if comp.binary_search(&x).is_err() {
        return Ok((Cost::Infinite, None));
    }
    let interior: Vec<usize> = comp.iter().copied().filter(|&s| s != y).collect();
    let solver = GreenSolver::new(lat, &interior, lambda)?;
    let u = solver.column(y)?;
    let g = solver.value(&u, x, y);
    let identity = match GreenSolver::new(lat, &comp, lambda) {
        Ok(full) => {
            let w = full.column(y)?;
            let q = full.value(&w, x, y) / full.value(&w, y, y);
            Some(((q - g) / g).abs())
        }
        Err(Error::DivergentSeries { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((Cost::from_weight(g), identity))
}

pub fn lwgf_phi(field: &ObstacleField, x: usize, y: usize, lambda: f64, d_set: Option<&[bool]>) -> Result<LwgfResult> {
    check_lambda(lambda)?;
    let mask = allowed_mask(field, d_set);
    let (value, identity) = phi_on_mask(field, &mask, x, y, lambda)?;
    let mut r = LwgfResult::new(LwgfKind::Phi, value, x, y, lambda);
    r.identity_error = identity;
    Ok(r)
}

/// Asymptotic minimisation radius (log|x-y|)^{2κ+10d}.
pub fn default_radius(lat: &Lattice, x: usize, y: usize, kappa: f64) -> Result<f64> {
    let dist = lat.dist(x, y);
    if dist < 2.0 {
        return Err(invalid("|x - y| < 2 leaves the default radius undefined"));
    }
    Ok(dist.ln().powf(2.0 * kappa + 10.0 * lat.dim() as f64))
}

pub fn lwgf_star(
    field: &ObstacleField,
    x: usize,
    y: usize,
    lambda: f64,
    d_set: Option<&[bool]>,
    r_override: Option<f64>,
) -> Result<LwgfResult> {
    let r = match r_override {
        Some(r) => r,
        None => default_radius(field.lattice(), x, y, 2.0 * field.dim() as f64 + 2.0)?,
    };
    Ok(lwgf_star_many(field, x, &[y], lambda, d_set, r)?.pop().expect("one target"))
}

/// φ_*(x, y) for several targets with one factorisation of V.
pub fn lwgf_star_many(
    field: &ObstacleField,
    x: usize,
    ys: &[usize],
    lambda: f64,
    d_set: Option<&[bool]>,
    r: f64,
) -> Result<Vec<LwgfResult>> {
    check_lambda(lambda)?;
    let lat = field.lattice();
    let mask = allowed_mask(field, d_set);
    let xs = lat.ball(x, r);
    let y_balls: Vec<Vec<usize>> = ys.iter().map(|&y| lat.ball(y, r)).collect();
    let mut targets: Vec<usize> = y_balls.iter().flatten().copied().filter(|&s| mask[s]).collect();
    targets.sort_unstable();
    targets.dedup();
    let comp = components_of(lat, &mask, &targets);
    let columns: BTreeMap<usize, Vec<(usize, Cost)>> = match GreenSolver::new(lat, &comp, lambda) {
        Ok(solver) => {
            let cols: Vec<Result<(usize, Vec<(usize, Cost)>)>> = targets
                .par_iter()
                .map(|&yp| {
                    let u = solver.column(yp)?;
                    let gyy = solver.value(&u, yp, yp);
                    let row = xs
                        .iter()
                        .map(|&xp| {
                            let c = if xp == yp {
                                Cost::Finite(0.0)
                            } else if !mask[xp] || comp.binary_search(&xp).is_err() {
                                Cost::Infinite
                            } else {
                                Cost::from_weight(solver.value(&u, xp, yp) / gyy)
                            };
                            (xp, c)
                        })
                        .collect();
                    Ok((yp, row))
                })
                .collect();
            cols.into_iter().collect::<Result<_>>()?
        }
        Err(Error::DivergentSeries { .. }) => {
            // λ below the spectrum of V: remove each target and solve directly.
            let cols: Vec<Result<(usize, Vec<(usize, Cost)>)>> = targets
                .par_iter()
                .map(|&yp| {
                    let row = xs
                        .iter()
                        .map(|&xp| Ok((xp, phi_on_mask(field, &mask, xp, yp, lambda)?.0)))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((yp, row))
                })
                .collect();
            cols.into_iter().collect::<Result<_>>()?
        }
        Err(e) => return Err(e),
    };
    Ok(ys
        .iter()
        .zip(&y_balls)
        .map(|(&y, ball)| {
            let mut best = Cost::Infinite;
            let mut witness = None;
            for yp in ball {
                let Some(row) = columns.get(yp) else { continue };
                for &(xp, c) in row {
                    if c.as_f64() < best.as_f64() {
                        best = c;
                        witness = Some((xp, *yp));
                    }
                }
            }
            let mut res = LwgfResult::new(LwgfKind::PhiStar, best, x, y, lambda);
            res.witness = witness;
            res.radius = Some(r);
            res
        })
        .collect())
}

/// φ° with the walk also confined to B_{R°}(x).
pub fn lwgf_circ(
    field: &ObstacleField,
    x: usize,
    y: usize,
    lambda: f64,
    d_set: Option<&[bool]>,
    r_circ: f64,
) -> Result<LwgfResult> {
    check_lambda(lambda)?;
    let lat = field.lattice();
    if r_circ < lat.dist(x, y) {
        return Err(invalid("restriction radius smaller than |x - y|"));
    }
    let mask = restricted_mask(field, d_set, x, r_circ);
    let (value, identity) = phi_on_mask(field, &mask, x, y, lambda)?;
    let mut r = LwgfResult::new(LwgfKind::PhiCirc, value, x, y, lambda);
    r.identity_error = identity;
    r.restriction = Some(r_circ);
    Ok(r)
}

fn restricted_mask(field: &ObstacleField, d_set: Option<&[bool]>, center: usize, r_circ: f64) -> Vec<bool> {
    let lat = field.lattice();
    let mut mask = vec![false; lat.len()];
    let base = allowed_mask(field, d_set);
    for s in lat.ball(center, r_circ) {
        mask[s] = base[s];
    }
    mask
}

/// φ°_*: minimum of φ°(x', y') over both balls; the restriction ball follows x'.
pub fn lwgf_circ_star(
    field: &ObstacleField,
    x: usize,
    y: usize,
    lambda: f64,
    d_set: Option<&[bool]>,
    r: f64,
    r_circ: f64,
) -> Result<LwgfResult> {
    check_lambda(lambda)?;
    let lat = field.lattice();
    if r_circ < lat.dist(x, y) {
        return Err(invalid("restriction radius smaller than |x - y|"));
    }
    let ys = lat.ball(y, r);
    let per_x: Vec<Result<(Cost, Option<(usize, usize)>)>> = lat
        .ball(x, r)
        .par_iter()
        .map(|&xp| {
            let mask = restricted_mask(field, d_set, xp, r_circ);
            let mut best = (Cost::Infinite, None);
            if !mask[xp] {
                return Ok(best);
            }
            let comp = components_of(lat, &mask, &[xp]);
            let solver = match GreenSolver::new(lat, &comp, lambda) {
                Ok(s) => Some(s),
                Err(Error::DivergentSeries { .. }) => None,
                Err(e) => return Err(e),
            };
            for &yp in &ys {
                let c = if xp == yp {
                    Cost::Finite(0.0)
                } else if !mask[yp] || comp.binary_search(&yp).is_err() {
                    Cost::Infinite
                } else if let Some(s) = &solver {
                    let u = s.column(yp)?;
                    Cost::from_weight(s.value(&u, xp, yp) / s.value(&u, yp, yp))
                } else {
                    phi_on_mask(field, &mask, xp, yp, lambda)?.0
                };
                if c.as_f64() < best.0.as_f64() {
                    best = (c, Some((xp, yp)));
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = (Cost::Infinite, None);
    for item in per_x {
        let item = item?;
        if item.0.as_f64() < best.0.as_f64() {
            best = item;
        }
    }
    let mut res = LwgfResult::new(LwgfKind::PhiCircStar, best.0, x, y, lambda);
    res.witness = best.1;
    res.radius = Some(r);
    res.restriction = Some(r_circ);
    Ok(res)
}

/// Clamp a starred value into [c_low |x-y|, c_high |x-y|].
pub fn truncate(lat: &Lattice, res: &LwgfResult, c_low: f64, c_high: f64) -> LwgfResult {
    let dist = lat.dist(res.x, res.y);
    let mut out = res.clone();
    out.value = Cost::Finite(res.value.clamp(c_low * dist, c_high * dist));
    out.kind = match res.kind {
        LwgfKind::PhiCirc | LwgfKind::PhiCircStar | LwgfKind::PhiBarCircStar => LwgfKind::PhiBarCircStar,
        _ => LwgfKind::PhiBarStar,
    };
    out
}
