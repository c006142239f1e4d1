use super::operator::RestrictedOperator;
use crate::env::ObstacleField;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, lane_sum};

/// Law of S_t given survival up to n.
#[derive(Clone, Debug)]
pub struct Occupation {
    pub n: usize,
    pub t: usize,
    /// Sites carrying mass, ascending.
    pub sites: Vec<usize>,
    /// Probabilities aligned with `sites`; they sum to one.
    pub probs: Vec<f64>,
    /// ln P(τ > n) for the start.
    pub log_survival: f64,
}

impl Occupation {
    /// Total probability of a site predicate.
    pub fn mass_where(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        compensated_sum(self.sites.iter().zip(&self.probs).filter(|(s, _)| pred(**s)).map(|(_, p)| *p))
    }

    /// Dense vector over the window.
    pub fn dense(&self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        for (s, p) in self.sites.iter().zip(&self.probs) {
            v[*s] = *p;
        }
        v
    }
}

pub fn conditioned_occupation(
    field: &ObstacleField,
    n: usize,
    t: usize,
    start: usize,
    confinement: Option<&[bool]>,
) -> Result<Occupation> {
    Ok(conditioned_occupations(field, n, &[t], start, confinement)?.pop().expect("one time requested"))
}

/// Operator on the component of `start` among allowed sites.
pub(crate) fn start_component(
    field: &ObstacleField,
    start: usize,
    confinement: Option<&[bool]>,
) -> Result<(RestrictedOperator, usize)> {
    let allowed = |s: usize| field.is_open(s) && confinement.is_none_or(|c| c[s]);
    if !allowed(start) {
        return Err(Error::ZeroSurvival);
    }
    let lat = field.lattice();
    let mut seen = std::collections::HashSet::from([start]);
    let mut comp = vec![start];
    let mut head = 0;
    while head < comp.len() {
        let u = comp[head];
        head += 1;
        for v in lat.neighbors(u) {
            if allowed(v) && seen.insert(v) {
                comp.push(v);
            }
        }
    }
    let op = RestrictedOperator::from_sites(lat, &comp);
    let i0 = op.local_index(start).expect("start in its component");
    Ok((op, i0))
}

/// Sup-norm change below which a normalised iterate is treated as the
/// principal vector, so later steps only rescale it.
const SETTLE_TOL: f64 = 1e-14;
/// Steps between settle checks.
pub(crate) const SETTLE_EVERY: usize = 64;

pub(crate) fn has_settled(prev: &[f64], next: &[f64]) -> bool {
    let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = prev.iter().zip(next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff <= SETTLE_TOL * scale
}

/// Forward vectors at the requested times, each normalised to sum one, with
/// the log of the dropped normaliser.
pub(crate) fn forward_snapshots(op: &RestrictedOperator, i0: usize, times: &[usize]) -> Result<Vec<(Vec<f64>, f64)>> {
    let tmax = times.iter().copied().max().unwrap_or(0);
    let mut cur = vec![0.0; op.len()];
    cur[i0] = 1.0;
    let mut next = vec![0.0; op.len()];
    let mut log_norm = 0.0;
    let mut settled = None;
    let mut out: Vec<Option<(Vec<f64>, f64)>> = vec![None; times.len()];
    for step in 0..=tmax {
        for (k, &t) in times.iter().enumerate() {
            if t == step {
                out[k] = Some((cur.clone(), log_norm));
            }
        }
        if step == tmax {
            break;
        }
        if let Some(g) = settled {
            log_norm += g;
            continue;
        }
        op.apply(&cur, &mut next);
        let s = lane_sum(&next);
        if s <= 0.0 {
            return Err(Error::ZeroSurvival);
        }
        let inv = 1.0 / s;
        for v in &mut next {
            *v *= inv;
        }
        log_norm += s.ln();
        if step % SETTLE_EVERY == 0 && has_settled(&cur, &next) {
            settled = Some(s.ln());
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(out.into_iter().map(|o| o.expect("all times recorded")).collect())
}

/// Survival vectors at the requested horizons, each scaled to max one, with
/// the log of the dropped scale.
pub(crate) fn backward_snapshots(op: &RestrictedOperator, horizons: &[usize]) -> Result<Vec<(Vec<f64>, f64)>> {
    let hmax = horizons.iter().copied().max().unwrap_or(0);
    let mut cur = vec![1.0; op.len()];
    let mut next = vec![0.0; op.len()];
    let mut log_norm = 0.0;
    let mut settled = None;
    let mut out: Vec<Option<(Vec<f64>, f64)>> = vec![None; horizons.len()];
    for step in 0..=hmax {
        for (k, &h) in horizons.iter().enumerate() {
            if h == step {
                out[k] = Some((cur.clone(), log_norm));
            }
        }
        if step == hmax {
            break;
        }
        if let Some(g) = settled {
            log_norm += g;
            continue;
        }
        op.apply(&cur, &mut next);
        let m = next.iter().copied().fold(0.0, f64::max);
        if m <= 0.0 {
            return Err(Error::ZeroSurvival);
        }
        let inv = 1.0 / m;
        for v in &mut next {
            *v *= inv;
        }
        log_norm += m.ln();
        if step % SETTLE_EVERY == 0 && has_settled(&cur, &next) {
            settled = Some(m.ln());
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(out.into_iter().map(|o| o.expect("all horizons recorded")).collect())
}

/// [`conditioned_occupation`] for several times sharing one forward and one
/// backward sweep.
pub fn conditioned_occupations(
    field: &ObstacleField,
    n: usize,
    ts: &[usize],
    start: usize,
    confinement: Option<&[bool]>,
) -> Result<Vec<Occupation>> {
    if let Some(&t) = ts.iter().find(|&&t| t > n) {
        return Err(crate::error::invalid(format!("time {t} exceeds horizon {n}")));
    }
    let (op, i0) = start_component(field, start, confinement)?;
    let fwd = forward_snapshots(&op, i0, ts)?;
    let rest: Vec<usize> = ts.iter().map(|&t| n - t).collect();
    let bwd = backward_snapshots(&op, &rest)?;
    ts.iter()
        .zip(fwd.iter().zip(&bwd))
        .map(|(&t, ((f, lf), (b, lb)))| {
            let prod: Vec<f64> = f.iter().zip(b).map(|(x, y)| x * y).collect();
            let z = compensated_sum(prod.iter().copied());
            if z <= 0.0 {
                return Err(Error::ZeroSurvival);
            }
            let mut sites = Vec::new();
            let mut probs = Vec::new();
            for (i, &w) in prod.iter().enumerate() {
                if w > 0.0 {
                    sites.push(op.sites()[i]);
                    probs.push(w / z);
                }
            }
            Ok(Occupation { n, t, sites, probs, log_survival: lf + lb + z.ln() })
        })
        .collect()
}
