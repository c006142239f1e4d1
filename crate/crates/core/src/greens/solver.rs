use serde::Serialize;

use super::banded::BandLdl;
use crate::env::{Lattice, ObstacleField};
use crate::error::{invalid, Error, Result};
use crate::spectral::{principal_eigenpair, RestrictedOperator};

/// Above this many stored band entries the solver switches to conjugate gradients.
const BAND_STORAGE_LIMIT: usize = 30_000_000;
const REL_RESIDUAL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    BandedLdl { band: usize, min_pivot: f64 },
    ConjugateGradient,
    Trivial,
}

/// Factorised system (I - P_A / λ) u = rhs, reusable across targets.
///
/// For a target y, u(z) = G_A(z, y; λ) on A. Sites outside A are one step
/// away from A or y and are evaluated from the first-step decomposition.
#[derive(Clone, Debug)]
pub struct GreenSolver {
    lattice: Lattice,
    op: RestrictedOperator,
    lambda: f64,
    factor: Option<BandLdl>,
    method: SolveMethod,
}

impl GreenSolver {
    /// Factor for interior set `interior`. Fails with divergent-series when
    /// λ does not exceed the principal eigenvalue of the interior.
    pub fn new(lattice: &Lattice, interior: &[usize], lambda: f64) -> Result<GreenSolver> {
        if !(lambda > 0.0) {
            return Err(invalid(format!("lambda = {lambda} must be positive")));
        }
        let op = RestrictedOperator::from_sites(lattice, interior);
        let n = op.len();
        if n == 0 {
            return Ok(GreenSolver { lattice: lattice.clone(), op, lambda, factor: None, method: SolveMethod::Trivial });
        }
        let band = (0..n)
            .map(|i| op.neighbors(i).iter().map(|&j| i.saturating_sub(j as usize)).max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        let c = op.weight() / lambda;
        if n.saturating_mul(band.max(1)) <= BAND_STORAGE_LIMIT {
            let factor = BandLdl::factor(n, band, |i| {
                let lower = op.neighbors(i).iter().filter(|&&j| (j as usize) < i).map(|&j| (j as usize, -c)).collect();
                (1.0, lower)
            })
            .ok_or(Error::DivergentSeries { lambda })?;
            let method = SolveMethod::BandedLdl { band, min_pivot: factor.min_pivot() };
            Ok(GreenSolver { lattice: lattice.clone(), op, lambda, factor: Some(factor), method })
        } else {
            let la = principal_eigenpair(&op, 1e-9, crate::spectral::DEFAULT_MAX_ITERS)?.lambda;
            if lambda <= la {
                return Err(Error::DivergentSeries { lambda });
            }
            Ok(GreenSolver { lattice: lattice.clone(), op, lambda, factor: None, method: SolveMethod::ConjugateGradient })
        }
    }

    pub fn method(&self) -> SolveMethod {
        self.method
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn interior(&self) -> &[usize] {
        self.op.sites()
    }

    pub fn operator(&self) -> &RestrictedOperator {
        &self.op
    }

    /// u = G_A(., y) on the interior, in interior order.
    pub fn column(&self, y: usize) -> Result<Vec<f64>> {
        let n = self.op.len();
        let c = self.op.weight() / self.lambda;
        let mut rhs = vec![0.0; n];
        match self.op.local_index(y) {
            Some(iy) => rhs[iy] = 1.0,
            None => {
                for nb in self.lattice.neighbors(y) {
                    if let Some(i) = self.op.local_index(nb) {
                        rhs[i] += c;
                    }
                }
            }
        }
        if n == 0 || rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; n]);
        }
        let mut u = match &self.factor {
            Some(f) => {
                let mut u = rhs.clone();
                f.solve_in_place(&mut u);
                u
            }
            None => self.cg(&rhs)?,
        };
        let mut res = self.residual(&u, &rhs);
        if res.1 > REL_RESIDUAL {
            if let Some(f) = &self.factor {
                let mut corr = res.0.clone();
                f.solve_in_place(&mut corr);
                u.iter_mut().zip(&corr).for_each(|(a, b)| *a += b);
                res = self.residual(&u, &rhs);
            }
        }
        if res.1 > REL_RESIDUAL {
            return Err(Error::SolverBreakdown { residual: res.1 });
        }
        Ok(u)
    }

    /// G_A(x, y) given the column `u` for target y.
    pub fn value(&self, u: &[f64], x: usize, y: usize) -> f64 {
        if let Some(i) = self.op.local_index(x) {
            return u[i];
        }
        let c = self.op.weight() / self.lambda;
        let mut s = 0.0;
        for nb in self.lattice.neighbors(x) {
            s += match self.op.local_index(nb) {
                Some(j) => u[j],
                None => f64::from(u8::from(nb == y)),
            };
        }
        f64::from(u8::from(x == y)) + c * s
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply(x, out);
        let inv = 1.0 / self.lambda;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi - inv * *o;
        }
    }

    /// (rhs - M u, relative sup-norm residual).
    fn residual(&self, u: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
        let mut mu = vec![0.0; u.len()];
        self.matvec(u, &mut mu);
        let r: Vec<f64> = rhs.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (r, rn / bn)
    }

    fn cg(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        for _ in 0..20 * n + 1000 {
            if rr.sqrt() <= 1e-3 * REL_RESIDUAL * bnorm {
                return Ok(x);
            }
            self.matvec(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(Error::DivergentSeries { lambda: self.lambda });
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        Err(Error::SolverBreakdown { residual: rr.sqrt() / bnorm })
    }
}

/// G_A(., y; λ) over the whole window.
#[derive(Clone, Debug)]
pub struct GreenColumn {
    pub lambda: f64,
    /// Interior set, ascending.
    pub interior: Vec<usize>,
    pub target: usize,
    /// One value per window site.
    pub values: Vec<f64>,
    /// λ_A / λ; below one exactly when the series converges.
    pub spectral_ratio: f64,
    pub method: SolveMethod,
}

pub fn green_column(field: &ObstacleField, interior: &[usize], y: usize, lambda: f64) -> Result<GreenColumn> {
    let lat = field.lattice();
    if y >= lat.len() {
        return Err(Error::PointOutsideWindow(vec![y as i64]));
    }
    if let Some(&s) = interior.iter().find(|&&s| s >= lat.len()) {
        return Err(Error::PointOutsideWindow(vec![s as i64]));
    }
    let op = RestrictedOperator::from_sites(lat, interior);
    let lambda_a = if op.is_empty() {
        0.0
    } else {
        principal_eigenpair(&op, 1e-12, crate::spectral::DEFAULT_MAX_ITERS)?.lambda
    };
    if lambda <= lambda_a {
        return Err(Error::DivergentSeries { lambda });
    }
    let solver = GreenSolver::new(lat, interior, lambda)?;
    let u = solver.column(y)?;
    let values = (0..lat.len()).map(|x| solver.value(&u, x, y)).collect();
    Ok(GreenColumn {
        lambda,
        interior: solver.interior().to_vec(),
        target: y,
        values,
        spectral_ratio: lambda_a / lambda,
        method: solver.method(),
    })
}
