use serde::Serialize;

use crate::env::ObstacleField;
use crate::error::{invalid, Error, Result};

/// Union of the nearly obstacle-free boxes of the partition into cubes of
/// half-side ⌊ι ρ_n⌋ centred on (2⌊ι ρ_n⌋ + 1) Z^d, around a region.
#[derive(Clone, Debug, Serialize)]
pub struct EmptyBoxes {
    pub half_side: usize,
    /// Boxes meeting the region.
    pub scanned: usize,
    /// Centres of the qualifying boxes, as window coordinates.
    pub centers: Vec<Vec<i64>>,
    /// Window sites in the union, ascending.
    pub sites: Vec<usize>,
}

/// Boxes meeting B_radius(center) with at most ρ|K| obstacles; sites outside
/// the window count as obstacles. The partition is anchored at the field
/// origin.
pub fn empty_boxes(
    field: &ObstacleField,
    iota: f64,
    rho: f64,
    rho_n: u64,
    center: usize,
    radius: f64,
) -> Result<EmptyBoxes> {
    if !(iota > 0.0 && iota < 1.0) || !(rho >= 0.0 && rho < 1.0) {
        return Err(invalid(format!("iota = {iota}, rho = {rho} outside (0, 1)")));
    }
    let half = (iota * rho_n as f64).floor() as i64;
    if half == 0 {
        return Err(Error::BoxSizeZero);
    }
    let lat = field.lattice();
    let d = lat.dim();
    let side = 2 * half + 1;
    let origin = lat.coords(field.origin());
    let c = lat.coords(center);
    // Box index range meeting the bounding cube of the region.
    let reach = radius.max(0.0).floor() as i64;
    let lo: Vec<i64> = (0..d).map(|a| (c[a] - reach - origin[a] + half).div_euclid(side) - 1).collect();
    let hi: Vec<i64> = (0..d).map(|a| (c[a] + reach - origin[a] + half).div_euclid(side) + 1).collect();
    let box_len = side.pow(d as u32) as usize;
    let mut centers = Vec::new();
    let mut sites = Vec::new();
    let mut scanned = 0;
    let mut idx = lo.clone();
    loop {
        let bc: Vec<i64> = (0..d).map(|a| origin[a] + idx[a] * side).collect();
        // Squared distance from the region centre to the nearest box point.
        let near2: i64 = (0..d)
            .map(|a| {
                let g = ((c[a] - bc[a]).abs() - half).max(0);
                g * g
            })
            .sum();
        if near2 as f64 <= radius * radius + 1e-9 {
            scanned += 1;
            let mut members = Vec::with_capacity(box_len);
            let mut obstacles = 0usize;
            for k in 0..box_len {
                let mut rem = k;
                let p: Vec<i64> = (0..d)
                    .map(|a| {
                        let off = (rem % side as usize) as i64 - half;
                        rem /= side as usize;
                        bc[a] + off
                    })
                    .collect();
                match lat.index_of(&p) {
                    Some(s) if field.is_open(s) => members.push(s),
                    Some(s) => {
                        obstacles += 1;
                        members.push(s);
                    }
                    None => obstacles += 1,
                }
            }
            if obstacles as f64 <= rho * box_len as f64 {
                centers.push(bc);
                sites.extend(members);
            }
        }
        let mut a = d;
        loop {
            if a == 0 {
                sites.sort_unstable();
                return Ok(EmptyBoxes { half_side: half as usize, scanned, centers, sites });
            }
            a -= 1;
            if idx[a] < hi[a] {
                idx[a] += 1;
                break;
            }
            idx[a] = lo[a];
        }
    }
}
