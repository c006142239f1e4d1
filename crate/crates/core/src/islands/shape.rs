use serde::Serialize;

use crate::env::{unit_ball_volume, Lattice};
use crate::error::{invalid, Error, Result};
use crate::numeric::compensated_sum;

/// Superlevel set {f ≥ ε ρ_n^{-d}} of an eigenfunction given on `sites`.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaEps {
    pub eps: f64,
    pub threshold: f64,
    /// Members, ascending.
    pub sites: Vec<usize>,
    /// Σ f over the input sites outside the set.
    pub outside_mass: f64,
}

pub fn omega_eps(d: usize, sites: &[usize], f: &[f64], eps: f64, rho_n: u64) -> Result<OmegaEps> {
    if sites.len() != f.len() {
        return Err(invalid("eigenfunction length differs from its site list"));
    }
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps = {eps} is negative")));
    }
    if rho_n == 0 {
        return Err(invalid("rho_n = 0"));
    }
    let threshold = eps * (rho_n as f64).powi(-(d as i32));
    let inside = |v: f64| v > 0.0 && v >= threshold;
    let mut members: Vec<usize> = sites.iter().zip(f).filter(|(_, &v)| inside(v)).map(|(&s, _)| s).collect();
    members.sort_unstable();
    let outside_mass = compensated_sum(f.iter().copied().filter(|&v| !inside(v)));
    Ok(OmegaEps { eps, threshold, sites: members, outside_mass })
}

/// Best-fitting ball of the same volume as a site set viewed as unit cubes.
#[derive(Clone, Debug, Serialize)]
pub struct BallFit {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Number of input sites, which is also the ball volume.
    pub volume: usize,
    /// Volume of the input cubes inside the ball.
    pub overlap: f64,
    /// |Ω △ B| / |B| at the fitted centre.
    pub asymmetry: f64,
    /// The `volume` window sites nearest the centre (ties to the smaller
    /// site), ascending.
    pub ball_sites: Vec<usize>,
}

/// Area of the rectangle [x0, x1] × [y0, y1] inside the disk of radius `r`
/// centred at the origin.
pub fn disk_square_overlap(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let a = x0.max(-r);
    let b = x1.min(r);
    if a >= b || y0 >= y1 {
        return 0.0;
    }
    let h = |u: f64| (r * r - u * u).max(0.0).sqrt();
    // Antiderivative of h.
    let big_h = |u: f64| 0.5 * (u * h(u) + r * r * (u / r).clamp(-1.0, 1.0).asin());
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let u = (r * r - y * y).sqrt();
            cuts.extend([-u, u].into_iter().filter(|&u| u > a && u < b));
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if e <= s {
            continue;
        }
        let m = 0.5 * (s + e);
        let hm = h(m);
        let top_is_h = hm < y1;
        let bottom_is_h = -hm > y0;
        let top = if top_is_h { hm } else { y1 };
        let bottom = if bottom_is_h { -hm } else { y0 };
        if top <= bottom {
            continue;
        }
        let top_int = if top_is_h { big_h(e) - big_h(s) } else { y1 * (e - s) };
        let bottom_int = if bottom_is_h { -(big_h(e) - big_h(s)) } else { y0 * (e - s) };
        area += top_int - bottom_int;
    }
    area
}

/// Volume of the unit cube centred at `c` inside the ball B(center, r).
fn cube_overlap(c: &[f64], center: &[f64], r: f64) -> f64 {
    let d = c.len();
    let (mut near2, mut far2) = (0.0, 0.0);
    for (x, z) in c.iter().zip(center) {
        let g = (x - z).abs();
        near2 += (g - 0.5).max(0.0).powi(2);
        far2 += (g + 0.5).powi(2);
    }
    if far2 <= r * r {
        return 1.0;
    }
    if near2 >= r * r {
        return 0.0;
    }
    if d == 2 {
        let (x, y) = (c[0] - center[0], c[1] - center[1]);
        return disk_square_overlap(r, x - 0.5, x + 0.5, y - 0.5, y + 0.5);
    }
    // Midpoint rule on an 8^d subgrid.
    const K: usize = 8;
    let total = K.pow(d as u32);
    let mut inside = 0usize;
    for idx in 0..total {
        let mut rem = idx;
        let mut q2 = 0.0;
        for a in 0..d {
            let k = rem % K;
            rem /= K;
            let off = (k as f64 + 0.5) / K as f64 - 0.5;
            q2 += (c[a] + off - center[a]).powi(2);
        }
        if q2 <= r * r {
            inside += 1;
        }
    }
    inside as f64 / total as f64
}

fn overlap_at(points: &[Vec<f64>], center: &[f64], r: f64) -> f64 {
    compensated_sum(points.iter().map(|c| cube_overlap(c, center, r)))
}

const GOLDEN: f64 = 0.618_033_988_749_895;

/// Fraenkel asymmetry of `sites` with the minimising ball: a half-unit grid
/// of centres over the bounding box, then golden-section sweeps per axis.
pub fn fit_ball_and_asymmetry(lat: &Lattice, sites: &[usize]) -> Result<BallFit> {
    if sites.is_empty() {
        return Err(Error::EmptySet("ball-fit input"));
    }
    let d = lat.dim();
    let points: Vec<Vec<f64>> =
        sites.iter().map(|&s| (0..d).map(|a| lat.coord(s, a) as f64).collect()).collect();
    let volume = sites.len();
    let radius = (volume as f64 / unit_ball_volume(d)).powf(1.0 / d as f64);
    let lo: Vec<f64> = (0..d).map(|a| points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|a| points.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let steps: Vec<usize> = (0..d).map(|a| ((hi[a] - lo[a]) * 2.0).round() as usize + 1).collect();

    let mut best_center = lo.clone();
    let mut best = f64::NEG_INFINITY;
    let total: usize = steps.iter().product();
    let mut center = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for a in (0..d).rev() {
            center[a] = lo[a] + 0.5 * (rem % steps[a]) as f64;
            rem /= steps[a];
        }
        let v = overlap_at(&points, &center, radius);
        if v > best {
            best = v;
            best_center.clone_from(&center);
        }
    }
    for _ in 0..3 {
        for a in 0..d {
            let (mut l, mut h) = (best_center[a] - 0.5, best_center[a] + 0.5);
            let mut probe = best_center.clone();
            let mut eval = |x: f64| {
                probe[a] = x;
                overlap_at(&points, &probe, radius)
            };
            let mut m1 = h - GOLDEN * (h - l);
            let mut m2 = l + GOLDEN * (h - l);
            let (mut f1, mut f2) = (eval(m1), eval(m2));
            while h - l > 1e-4 {
                if f1 >= f2 {
                    h = m2;
                    m2 = m1;
                    f2 = f1;
                    m1 = h - GOLDEN * (h - l);
                    f1 = eval(m1);
                } else {
                    l = m1;
                    m1 = m2;
                    f1 = f2;
                    m2 = l + GOLDEN * (h - l);
                    f2 = eval(m2);
                }
            }
            let (x, v) = if f1 >= f2 { (m1, f1) } else { (m2, f2) };
            if v > best {
                best = v;
                best_center[a] = x;
            }
        }
    }
    let ball_sites = nearest_sites(lat, &best_center, radius, volume);
    Ok(BallFit {
        asymmetry: (2.0 * (1.0 - best / volume as f64)).max(0.0),
        center: best_center,
        radius,
        volume,
        overlap: best,
        ball_sites,
    })
}

/// The `count` window sites closest to a real centre, ascending.
fn nearest_sites(lat: &Lattice, center: &[f64], radius: f64, count: usize) -> Vec<usize> {
    let d = lat.dim();
    let reach = radius.ceil() as i64 + 2;
    let base: Vec<i64> = center.iter().map(|c| c.round() as i64).collect();
    let mut cand: Vec<(f64, usize)> = Vec::new();
    let side = (2 * reach + 1) as usize;
    for idx in 0..side.pow(d as u32) {
        let mut rem = idx;
        let mut p = vec![0i64; d];
        for a in 0..d {
            p[a] = base[a] + (rem % side) as i64 - reach;
            rem /= side;
        }
        if let Some(s) = lat.index_of(&p) {
            let d2: f64 = p.iter().zip(center).map(|(&x, c)| (x as f64 - c).powi(2)).sum();
            cand.push((d2, s));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = cand.into_iter().take(count).map(|(_, s)| s).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_of_whole_disk_is_its_area() {
        let r = 3.3;
        let mut total = 0.0;
        for i in -5..5 {
            for j in -5..5 {
                total += disk_square_overlap(r, i as f64, i as f64 + 1.0, j as f64, j as f64 + 1.0);
            }
        }
        assert!((total - std::f64::consts::PI * r * r).abs() < 1e-10);
    }

    #[test]
    fn quarter_disk() {
        let a = disk_square_overlap(1.0, 0.0, 1.0, 0.0, 1.0);
        assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert_eq!(disk_square_overlap(1.0, 2.0, 3.0, 0.0, 1.0), 0.0);
    }
}
