use serde::Serialize;

use crate::env::ObstacleField;
use crate::error::{invalid, Error, Result};
use crate::numeric::{compensated_sum, lane_sum};
use crate::spectral::occupation::{backward_snapshots, forward_snapshots, has_settled, start_component, SETTLE_EVERY};
use crate::spectral::RestrictedOperator;

/// Regions whose conditioned mass is tracked.
#[derive(Clone, Copy, Debug)]
pub struct Regions<'a> {
    pub b_hat: &'a [usize],
    pub pocket: &'a [usize],
    pub omega_tilde: &'a [usize],
    pub v_star: usize,
    pub kappa_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationRow {
    pub t: usize,
    pub mass_b_hat: f64,
    pub mass_pocket: f64,
    pub mass_kappa_ball: f64,
    /// P(Ω̃_ε is hit by time t | τ > n).
    pub hit_cdf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizationReport {
    pub n: usize,
    pub start: usize,
    pub log_survival: f64,
    pub rows: Vec<LocalizationRow>,
}

/// Conditioned occupation masses of the island regions at each time in `ts`.
pub fn localization_report(
    field: &ObstacleField,
    start: usize,
    n: usize,
    ts: &[usize],
    regions: &Regions<'_>,
) -> Result<LocalizationReport> {
    if let Some(&t) = ts.iter().find(|&&t| t > n) {
        return Err(invalid(format!("time {t} exceeds horizon {n}")));
    }
    let lat = field.lattice();
    let mut tags = vec![0u8; lat.len()];
    for &s in regions.b_hat {
        tags[s] |= 1;
    }
    for &s in regions.pocket {
        tags[s] |= 2;
    }
    for s in lat.ball(regions.v_star, regions.kappa_radius) {
        tags[s] |= 4;
    }
    for &s in regions.omega_tilde {
        tags[s] |= 8;
    }
    let (op, i0) = start_component(field, start, None)?;
    let mut horizons: Vec<usize> = ts.iter().map(|&t| n - t).collect();
    horizons.push(n);
    let bwd = backward_snapshots(&op, &horizons)?;
    let (b_n, lb_n) = &bwd[ts.len()];
    let log_survival = b_n[i0].ln() + lb_n;
    if !log_survival.is_finite() {
        return Err(Error::ZeroSurvival);
    }
    let fwd = forward_snapshots(&op, i0, ts)?;
    let avoid = avoiding_snapshots(&op, i0, ts, |s| tags[s] & 8 != 0);
    let rows = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let ((f, lf), (b, lb)) = (&fwd[k], &bwd[k]);
            let prod: Vec<f64> = f.iter().zip(b).map(|(x, y)| x * y).collect();
            let z = compensated_sum(prod.iter().copied());
            let mass = |bit: u8| {
                compensated_sum(prod.iter().zip(op.sites()).filter(|(_, &s)| tags[s] & bit != 0).map(|(w, _)| *w)) / z
            };
            let hit_cdf = match &avoid[k] {
                Some((q, lq)) => {
                    let w = compensated_sum(q.iter().zip(b).map(|(x, y)| x * y));
                    let not_hit = if w > 0.0 { (w.ln() + lq + lb - log_survival).exp() } else { 0.0 };
                    (1.0 - not_hit).clamp(0.0, 1.0)
                }
                None => 1.0,
            };
            debug_assert!((lf + lb + z.ln() - log_survival).abs() < 1e-6 * log_survival.abs().max(1.0));
            LocalizationRow { t, mass_b_hat: mass(1), mass_pocket: mass(2), mass_kappa_ball: mass(4), hit_cdf }
        })
        .collect();
    Ok(LocalizationReport { n, start, log_survival, rows })
}

/// Forward snapshots of the walk also killed on entering `target`; `None`
/// once no mass is left.
fn avoiding_snapshots(
    op: &RestrictedOperator,
    i0: usize,
    times: &[usize],
    target: impl Fn(usize) -> bool,
) -> Vec<Option<(Vec<f64>, f64)>> {
    let sites = op.sites();
    let mut out = vec![None; times.len()];
    if target(sites[i0]) {
        return out;
    }
    let keep: Vec<bool> = sites.iter().map(|&s| !target(s)).collect();
    let tmax = times.iter().copied().max().unwrap_or(0);
    let mut cur = vec![0.0; op.len()];
    cur[i0] = 1.0;
    let mut next = vec![0.0; op.len()];
    let mut log_norm = 0.0;
    let mut settled = None;
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
        for (v, &k) in next.iter_mut().zip(&keep) {
            if !k {
                *v = 0.0;
            }
        }
        let s = lane_sum(&next);
        if s <= 0.0 {
            break;
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
    out
}
