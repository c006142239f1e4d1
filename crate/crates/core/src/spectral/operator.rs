use rayon::prelude::*;

use crate::env::{Lattice, ObstacleField};
use crate::error::{Error, Result};

const PAR_THRESHOLD: usize = 1 << 15;
const PAR_CHUNK: usize = 4096;

/// Transition matrix of simple random walk killed on leaving the active set,
/// stored as neighbour lists over the active sites (ascending site order).
#[derive(Clone, Debug)]
pub struct RestrictedOperator {
    d: usize,
    sites: Vec<usize>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    /// Fixed-width copy of the neighbour lists: `width` slots per site, a
    /// missing neighbour points back at the site with coefficient zero.
    width: usize,
    slots: Vec<u32>,
    coeffs: Vec<f64>,
    weight: f64,
}

/// Operator for `active`, which must consist of open sites.
pub fn restricted_operator(field: &ObstacleField, active: &[usize]) -> Result<RestrictedOperator> {
    if let Some(&s) = active.iter().find(|&&s| s >= field.lattice().len() || field.is_obstacle(s)) {
        return Err(Error::ActiveSiteIsObstacle(s));
    }
    Ok(RestrictedOperator::from_sites(field.lattice(), active))
}

impl RestrictedOperator {
    /// Operator over an arbitrary site set (duplicates are removed).
    pub fn from_sites(lattice: &Lattice, sites: &[usize]) -> Self {
        let mut sites = sites.to_vec();
        sites.sort_unstable();
        sites.dedup();
        let mut offsets = Vec::with_capacity(sites.len() + 1);
        let mut targets = Vec::with_capacity(sites.len() * 2 * lattice.dim());
        offsets.push(0);
        for &s in &sites {
            for nb in lattice.neighbors(s) {
                if let Ok(j) = sites.binary_search(&nb) {
                    targets.push(j as u32);
                }
            }
            offsets.push(targets.len());
        }
        Self::assemble(lattice.dim(), sites, offsets, targets)
    }

    fn assemble(d: usize, sites: Vec<usize>, offsets: Vec<usize>, targets: Vec<u32>) -> Self {
        let width = offsets.windows(2).map(|b| b[1] - b[0]).max().unwrap_or(0).max(1);
        let mut slots = Vec::with_capacity(sites.len() * width);
        let mut coeffs = Vec::with_capacity(sites.len() * width);
        for (i, b) in offsets.windows(2).enumerate() {
            let row = &targets[b[0]..b[1]];
            for k in 0..width {
                slots.push(row.get(k).copied().unwrap_or(i as u32));
                coeffs.push(if k < row.len() { 1.0 } else { 0.0 });
            }
        }
        RestrictedOperator { d, sites, offsets, targets, width, slots, coeffs, weight: 1.0 / (2 * d) as f64 }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Active sites, ascending.
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn local_index(&self, site: usize) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }

    /// Active neighbours of local index `i`.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Per-step transition weight 1/(2d).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `out = P x`. Each row is summed in a fixed order, so the result does not
    /// depend on the thread count.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let w = self.weight;
        let deg = self.width;
        let x = &x[..self.len()];
        let rows = |out: &mut [f64], first: usize| {
            let span = first * deg..(first + out.len()) * deg;
            let (slots, coeffs) = (&self.slots[span.clone()], &self.coeffs[span]);
            for ((o, js), cs) in out.iter_mut().zip(slots.chunks_exact(deg)).zip(coeffs.chunks_exact(deg)) {
                let mut s = 0.0;
                for (&j, &c) in js.iter().zip(cs) {
                    s += c * x[j as usize];
                }
                *o = w * s;
            }
        };
        if self.len() >= PAR_THRESHOLD && rayon::current_num_threads() > 1 {
            out.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(c, o)| rows(o, c * PAR_CHUNK));
        } else {
            rows(out, 0);
        }
    }

    /// Connected components as lists of local indices, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in self.neighbors(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        comp.push(v as usize);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Sub-operator on a subset of local indices.
    pub fn restrict(&self, lattice: &Lattice, local: &[usize]) -> RestrictedOperator {
        let sites: Vec<usize> = local.iter().map(|&i| self.sites[i]).collect();
        RestrictedOperator::from_sites(lattice, &sites)
    }

    /// Number of active-neighbour links of local index `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }
}

impl RestrictedOperator {
    /// Assemble from explicit neighbour lists (local indices).
    pub(crate) fn from_lists(d: usize, sites: Vec<usize>, lists: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(sites.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for l in lists {
            targets.extend(l);
            offsets.push(targets.len());
        }
        Self::assemble(d, sites, offsets, targets)
    }
}
