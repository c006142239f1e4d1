use super::operator::RestrictedOperator;
use super::{DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::env::ObstacleField;
use crate::error::{BestIterate, Error, Result};

/// Perron pair of a restricted operator.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Nonnegative, sums to one, supported on the component attaining `lambda`.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Local indices of the attaining component.
    pub component: Vec<usize>,
}

/// Principal eigenpair by power iteration on the lazy operator (I + P)/2,
/// which removes the -λ eigenvalue that bipartite sets always carry.
/// Components are handled separately; the largest eigenvalue wins and ties go
/// to the component with the smallest site.
pub fn principal_eigenpair(op: &RestrictedOperator, tol: f64, max_iters: usize) -> Result<SpectralResult> {
    if op.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let comps = op.components();
    let mut best: Option<(f64, Vec<f64>, f64, usize, usize)> = None;
    let mut total_iters = 0;
    for (ci, comp) in comps.iter().enumerate() {
        let (lambda, f, res, it) = if comp.len() == 1 {
            (0.0, vec![1.0], 0.0, 0)
        } else if comps.len() == 1 {
            power_connected(op, tol, max_iters)?
        } else {
            let sub = restrict_local(op, comp);
            power_connected(&sub, tol, max_iters)?
        };
        total_iters += it;
        if best.as_ref().is_none_or(|b| lambda > b.0 + 1e-12) {
            best = Some((lambda, f, res, it, ci));
        }
    }
    let (lambda, f, residual, _, ci) = best.expect("at least one component");
    let mut vector = vec![0.0; op.len()];
    for (k, &i) in comps[ci].iter().enumerate() {
        vector[i] = f[k];
    }
    Ok(SpectralResult { lambda, vector, residual, iterations: total_iters, component: comps[ci].clone() })
}

fn restrict_local(op: &RestrictedOperator, comp: &[usize]) -> RestrictedOperator {
    // Rebuild with local indices; neighbour lists only need relative positions.
    let mut sub = Vec::with_capacity(comp.len());
    let map = |i: usize| comp.binary_search(&i).ok();
    for &i in comp {
        let nbrs: Vec<u32> = op.neighbors(i).iter().filter_map(|&j| map(j as usize).map(|k| k as u32)).collect();
        sub.push(nbrs);
    }
    let sites: Vec<usize> = comp.iter().map(|&i| op.sites()[i]).collect();
    RestrictedOperator::from_lists(op.dim(), sites, sub)
}

/// Power iteration on one connected operator.
fn power_connected(op: &RestrictedOperator, tol: f64, max_iters: usize) -> Result<(f64, Vec<f64>, f64, usize)> {
    let n = op.len();
    let mut x = vec![1.0 / n as f64; n];
    let mut px = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        op.apply(&x, &mut px);
        let (mut num, mut den, mut xmax) = (0.0, 0.0, 0.0f64);
        for i in 0..n {
            num += x[i] * px[i];
            den += x[i] * x[i];
            xmax = xmax.max(x[i]);
        }
        lambda = num / den;
        residual = (0..n).map(|i| (px[i] - lambda * x[i]).abs()).fold(0.0, f64::max) / xmax;
        if residual <= tol && (lambda - prev).abs() <= 1e-12 {
            return Ok((lambda, x, residual, it));
        }
        prev = lambda;
        let mut s = 0.0;
        for i in 0..n {
            x[i] = 0.5 * (x[i] + px[i]);
            s += x[i];
        }
        for v in &mut x {
            *v /= s;
        }
    }
    Err(Error::NoConvergence(Box::new(BestIterate { iterations: max_iters, residual, lambda, vector: x })))
}

/// Local eigenvalue of the component of `v` in the open part of B_R(v).
#[derive(Clone, Debug)]
pub struct LocalEigen {
    pub lambda: f64,
    /// Sites of the component, ascending; empty when `v` is an obstacle.
    pub cluster: Vec<usize>,
}

pub fn local_eigenvalue(field: &ObstacleField, v: usize, r: f64) -> Result<LocalEigen> {
    if field.is_obstacle(v) {
        return Ok(LocalEigen { lambda: 0.0, cluster: Vec::new() });
    }
    let cluster = local_cluster(field, v, r);
    let op = RestrictedOperator::from_sites(field.lattice(), &cluster);
    let res = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    Ok(LocalEigen { lambda: res.lambda, cluster })
}

/// Like [`local_eigenvalue`], but returns `None` as soon as a Collatz-Wielandt
/// bound certifies the eigenvalue is below `threshold`.
pub fn local_eigenvalue_screened(field: &ObstacleField, v: usize, r: f64, threshold: f64) -> Result<Option<f64>> {
    if field.is_obstacle(v) {
        return Ok((0.0 >= threshold).then_some(0.0));
    }
    let cluster = local_cluster(field, v, r);
    let op = RestrictedOperator::from_sites(field.lattice(), &cluster);
    let n = op.len();
    if n == 1 {
        return Ok((0.0 >= threshold).then_some(0.0));
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut px = vec![0.0; n];
    let mut prev = f64::NAN;
    for _ in 0..DEFAULT_MAX_ITERS {
        op.apply(&x, &mut px);
        let (mut num, mut den, mut xmax) = (0.0, 0.0, 0.0f64);
        let mut upper = 0.0f64;
        for i in 0..n {
            num += x[i] * px[i];
            den += x[i] * x[i];
            xmax = xmax.max(x[i]);
            upper = upper.max(px[i] / x[i]);
        }
        if upper < threshold {
            return Ok(None);
        }
        let lambda = num / den;
        let residual = (0..n).map(|i| (px[i] - lambda * x[i]).abs()).fold(0.0, f64::max) / xmax;
        if residual <= DEFAULT_TOL && (lambda - prev).abs() <= 1e-12 {
            return Ok((lambda >= threshold).then_some(lambda));
        }
        prev = lambda;
        let mut s = 0.0;
        for i in 0..n {
            x[i] = 0.5 * (x[i] + px[i]);
            s += x[i];
        }
        for val in &mut x {
            *val /= s;
        }
    }
    Err(Error::NoConvergence(Box::new(BestIterate {
        iterations: DEFAULT_MAX_ITERS,
        residual: f64::NAN,
        lambda: prev,
        vector: x,
    })))
}

/// Component of open `v` inside the open part of the Euclidean ball B_r(v).
pub(crate) fn local_cluster(field: &ObstacleField, v: usize, r: f64) -> Vec<usize> {
    let lat = field.lattice();
    let d = lat.dim();
    let m = r.max(0.0).floor() as i64;
    let side = (2 * m + 1) as usize;
    let r2 = r * r + 1e-9;
    let vc = lat.coords(v);
    let local = |s: usize| -> Option<usize> {
        let mut idx = 0usize;
        let mut n2 = 0i64;
        for a in 0..d {
            let off = lat.coord(s, a) as i64 - vc[a];
            if off.abs() > m {
                return None;
            }
            n2 += off * off;
            idx = idx * side + (off + m) as usize;
        }
        ((n2 as f64) <= r2).then_some(idx)
    };
    let mut seen = vec![false; side.pow(d as u32)];
    seen[local(v).expect("centre lies in its own ball")] = true;
    let mut out = vec![v];
    let mut head = 0;
    while head < out.len() {
        let u = out[head];
        head += 1;
        for nb in lat.neighbors(u) {
            if field.is_obstacle(nb) {
                continue;
            }
            if let Some(k) = local(nb) {
                if !seen[k] {
                    seen[k] = true;
                    out.push(nb);
                }
            }
        }
    }
    out.sort_unstable();
    out
}
