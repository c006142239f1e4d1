use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use std::collections::BinaryHeap;

use super::grid::{BoxColouring, Tiling};
use crate::env::Lattice;
use crate::error::{invalid, Result};

/// Radii of the enclosure construction on the box lattice.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutParams {
    /// ℓ1 reach used to grow black components around the inner cube.
    pub sharp: usize,
    /// ℓ∞ thickening applied before taking the outer boundary.
    pub thicken: usize,
}

impl CutParams {
    pub fn for_dim(d: usize) -> Self {
        CutParams { sharp: 3 * d, thicken: d }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparatingCut {
    /// Box indices of the cut, ascending.
    pub indices: Vec<Vec<i64>>,
    /// ℓ∞ index radius around the box of x that lies inside the cut.
    pub inner_radius: f64,
    /// Index radius around the box of x that the cut must stay within.
    pub outer_radius: f64,
}

/// Index-space cube of radius `radius` around `center`.
struct Cube {
    center: Vec<i64>,
    radius: i64,
}

impl Cube {
    fn width(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    fn len(&self) -> usize {
        self.width().pow(self.center.len() as u32)
    }

    fn index(&self, slot: usize) -> Vec<i64> {
        let w = self.width();
        let mut rem = slot;
        let mut out = vec![0i64; self.center.len()];
        for a in (0..out.len()).rev() {
            out[a] = self.center[a] - self.radius + (rem % w) as i64;
            rem /= w;
        }
        out
    }

    fn slot(&self, i: &[i64]) -> Option<usize> {
        let w = self.width();
        let mut s = 0usize;
        for a in 0..i.len() {
            let k = i[a] - self.center[a] + self.radius;
            if k < 0 || k >= w as i64 {
                return None;
            }
            s = s * w + k as usize;
        }
        Some(s)
    }

    fn on_face(&self, slot: usize) -> bool {
        self.index(slot).iter().zip(&self.center).any(|(k, c)| (k - c).abs() == self.radius)
    }

    fn norm2(&self, slot: usize) -> f64 {
        self.index(slot).iter().zip(&self.center).map(|(k, c)| ((k - c) * (k - c)) as f64).sum::<f64>().sqrt()
    }

    fn shifted(&self, slot: usize, off: &[i64]) -> Option<usize> {
        let i: Vec<i64> = self.index(slot).iter().zip(off).map(|(k, o)| k + o).collect();
        self.slot(&i)
    }
}

fn offsets(d: usize, keep: impl Fn(&[i64]) -> bool, reach: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-reach; d];
    loop {
        if cur.iter().any(|&c| c != 0) && keep(&cur) {
            out.push(cur.clone());
        }
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if cur[a] < reach {
                cur[a] += 1;
                break;
            }
            cur[a] = -reach;
        }
    }
}

pub(crate) fn l1_offsets(d: usize, r: usize) -> Vec<Vec<i64>> {
    offsets(d, |o| o.iter().map(|x| x.abs()).sum::<i64>() <= r as i64, r as i64)
}

fn star_offsets(d: usize) -> Vec<Vec<i64>> {
    offsets(d, |_| true, 1)
}

fn nn_offsets(d: usize) -> Vec<Vec<i64>> {
    l1_offsets(d, 1)
}

fn dilate(cube: &Cube, set: &[bool], offs: &[Vec<i64>]) -> Vec<bool> {
    let mut out = set.to_vec();
    for s in (0..set.len()).filter(|&s| set[s]) {
        for o in offs {
            if let Some(t) = cube.shifted(s, o) {
                out[t] = true;
            }
        }
    }
    out
}

/// Flood fill over `allowed` from `seeds` with the given adjacency.
fn flood(cube: &Cube, allowed: &[bool], seeds: impl IntoIterator<Item = usize>, offs: &[Vec<i64>]) -> Vec<bool> {
    let mut seen = vec![false; allowed.len()];
    let mut queue = VecDeque::new();
    for s in seeds {
        if allowed[s] && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for o in offs {
            if let Some(v) = cube.shifted(u, o) {
                if allowed[v] && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    seen
}

/// Looks for a *-connected set of white boxes whose union separates B_r(x)
/// from the complement of B_2r(x). Only cuts that pass [`separates`] are
/// returned.
pub fn find_separating_cut(
    boxes: &impl BoxColouring,
    lat: &Lattice,
    x: usize,
    r: f64,
    params: CutParams,
) -> Result<Option<SeparatingCut>> {
    let cut = build_cut(boxes, lat, x, r, params)?;
    Ok(cut.filter(|c| separates(&boxes.tiling(), &c.indices, &lat.coords(x), r)))
}

/// Index radii (inner ℓ∞, outer Euclidean) used for a cut of radius `r`.
pub fn cut_radii(tiling: &Tiling, d: usize, r: f64) -> (i64, f64) {
    let l = tiling.half_side as f64;
    let side = tiling.side() as f64;
    let diag = l * (d as f64).sqrt();
    (((r + 2.0 * l) / side).ceil() as i64, (2.0 * r - 2.0 * diag) / side)
}

/// The enclosure construction without the final separation check.
pub fn build_cut(
    boxes: &impl BoxColouring,
    lat: &Lattice,
    x: usize,
    r: f64,
    params: CutParams,
) -> Result<Option<SeparatingCut>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!("cut radius {r} must be positive")));
    }
    let tiling = boxes.tiling();
    if lat.dim() != tiling.anchor.len() {
        return Err(invalid("lattice and box tiling dimensions differ"));
    }
    let d = lat.dim();
    let ix = tiling.index_of_coords(&lat.coords(x));
    let (inner_radius, outer_radius) = cut_radii(&tiling, d, r);
    let cube = Cube { center: ix.clone(), radius: outer_radius.ceil() as i64 + (params.sharp + params.thicken) as i64 + 3 };
    let n = cube.len();
    let black = |s: usize| !boxes.is_white(&cube.index(s));
    let inner: Vec<bool> = (0..n)
        .map(|s| cube.index(s).iter().zip(&ix).all(|(k, c)| (k - c).abs() <= inner_radius))
        .collect();

    // Black ♯-components within ℓ1 distance `sharp` of the inner cube, grown
    // outermost first so that an escape is found early.
    let sharp = l1_offsets(d, params.sharp);
    let near_inner = dilate(&cube, &inner, &sharp);
    let norm_key = |s: usize| cube.index(s).iter().zip(&ix).map(|(k, c)| (k - c) * (k - c)).sum::<i64>();
    let mut queued: Vec<bool> = inner.clone();
    let mut heap: BinaryHeap<(i64, usize)> = BinaryHeap::new();
    for s in (0..n).filter(|&s| near_inner[s] && !inner[s]) {
        queued[s] = true;
        heap.push((norm_key(s), s));
    }
    let mut grown = vec![false; n];
    while let Some((_, s)) = heap.pop() {
        if !black(s) {
            continue;
        }
        if cube.norm2(s) > outer_radius {
            return Ok(None);
        }
        grown[s] = true;
        for o in &sharp {
            if let Some(t) = cube.shifted(s, o) {
                if !queued[t] {
                    queued[t] = true;
                    heap.push((norm_key(t), t));
                }
            }
        }
    }
    let a: Vec<bool> = (0..n).map(|s| inner[s] || grown[s]).collect();
    let star = star_offsets(d);
    let thick_offsets = offsets(d, |_| true, params.thicken as i64);
    let thick = dilate(&cube, &a, &thick_offsets);
    let nn = nn_offsets(d);
    let origin = cube.slot(&ix).expect("centre in cube");
    let core = flood(&cube, &thick, [origin], &nn);

    // External outer boundary: *-neighbours of the core reachable from the cube faces.
    let outside: Vec<bool> = core.iter().map(|&c| !c).collect();
    let exterior = flood(&cube, &outside, (0..n).filter(|&s| cube.on_face(s)), &nn);
    let cut: Vec<bool> =
        (0..n).map(|s| exterior[s] && star.iter().any(|o| cube.shifted(s, o).is_some_and(|t| core[t]))).collect();
    let members: Vec<usize> = (0..n).filter(|&s| cut[s]).collect();
    if members.is_empty() || members.iter().any(|&s| cube.norm2(s) > outer_radius || cube.on_face(s)) {
        return Ok(None);
    }
    if members.iter().any(|&s| black(s)) {
        return Ok(None);
    }
    let linked = flood(&cube, &cut, [members[0]], &star);
    if members.iter().any(|&s| !linked[s]) {
        return Ok(None);
    }
    let indices: Vec<Vec<i64>> = members.iter().map(|&s| cube.index(s)).collect();
    Ok(Some(SeparatingCut { indices, inner_radius: inner_radius as f64, outer_radius }))
}

/// Breadth-first check on Z^d coordinates: no nearest-neighbour path from
/// B_r(x) to the complement of B_2r(x) avoids the boxes of `indices`.
pub fn separates(tiling: &Tiling, indices: &[Vec<i64>], x: &[i64], r: f64) -> bool {
    let d = x.len();
    let blocked: HashSet<Vec<i64>> = indices.iter().cloned().collect();
    let reach = (2.0 * r).floor() as i64 + 1;
    let width = (2 * reach + 1) as usize;
    let total = width.pow(d as u32);
    let coords = |k: usize| {
        let mut rem = k;
        let mut c = vec![0i64; d];
        for a in (0..d).rev() {
            c[a] = x[a] - reach + (rem % width) as i64;
            rem /= width;
        }
        c
    };
    let dist2 = |c: &[i64]| c.iter().zip(x).map(|(a, b)| ((a - b) * (a - b)) as f64).sum::<f64>();
    let free = |c: &[i64]| !blocked.contains(&tiling.index_of_coords(c));
    let mut seen = vec![false; total];
    let mut queue = VecDeque::new();
    for k in 0..total {
        let c = coords(k);
        if dist2(&c) <= r * r && free(&c) {
            seen[k] = true;
            queue.push_back(k);
        }
    }
    let mut strides = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * width;
    }
    while let Some(k) = queue.pop_front() {
        let c = coords(k);
        if dist2(&c) > 4.0 * r * r {
            return false;
        }
        for a in 0..d {
            let rel = c[a] - (x[a] - reach);
            for (ok, next) in [(rel > 0, k.wrapping_sub(strides[a])), (rel + 1 < width as i64, k + strides[a])] {
                if ok && !seen[next] {
                    let nc = coords(next);
                    if free(&nc) {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    true
}
