use std::collections::VecDeque;

use super::field::ObstacleField;
use super::lattice::Lattice;
use crate::error::{Error, Result};

/// Graph distance between `x` and `y` through `active` sites. `None` means
/// the two are not joined inside the active set.
pub fn chemical_distance(
    field: &ObstacleField,
    active: &[bool],
    x: &[i64],
    y: &[i64],
) -> Result<Option<u32>> {
    let lat = field.lattice();
    let xs = lat.index_of(x).ok_or_else(|| Error::PointOutsideWindow(x.to_vec()))?;
    let ys = lat.index_of(y).ok_or_else(|| Error::PointOutsideWindow(y.to_vec()))?;
    if !active[xs] || !active[ys] {
        return Ok(None);
    }
    let dist = hop_distances(lat, active, xs, Some(ys));
    Ok((dist[ys] != u32::MAX).then_some(dist[ys]))
}

/// Breadth-first hop counts from `src` inside `active`; `u32::MAX` marks
/// unreachable sites. Stops early once `stop` is settled.
pub fn hop_distances(lattice: &Lattice, active: &[bool], src: usize, stop: Option<usize>) -> Vec<u32> {
    let mut dist = vec![u32::MAX; lattice.len()];
    if !active[src] {
        return dist;
    }
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        if Some(u) == stop {
            break;
        }
        for v in lattice.neighbors(u) {
            if active[v] && dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}
