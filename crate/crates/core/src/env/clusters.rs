use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::field::{Boundary, ObstacleField};
use super::lattice::Lattice;

/// Nearest-neighbour cluster labels. Labels are numbered in order of each
/// cluster's smallest site index, so they do not depend on traversal order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterLabeling {
    labels: Vec<i64>,
    sizes: Vec<usize>,
}

/// Finite-window stand-in for "the origin lies in the infinite cluster".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterProxy {
    Largest,
    TouchesAllFaces,
    LargestOrTouchesAllFaces,
}

pub fn clusters(field: &ObstacleField) -> ClusterLabeling {
    clusters_of_mask(field.lattice(), &field.open_mask())
}

/// Label the connected components of `active`.
pub fn clusters_of_mask(lattice: &Lattice, active: &[bool]) -> ClusterLabeling {
    let n = lattice.len();
    let mut uf = UnionFind::<usize>::new(n);
    for site in 0..n {
        if !active[site] {
            continue;
        }
        for a in 0..lattice.dim() {
            if lattice.coord(site, a) + 1 < lattice.sides()[a] {
                let nb = site + lattice.strides()[a];
                if active[nb] {
                    uf.union(site, nb);
                }
            }
        }
    }
    let mut root_label = vec![-1i64; n];
    let mut labels = vec![-1i64; n];
    let mut sizes = Vec::new();
    for site in 0..n {
        if !active[site] {
            continue;
        }
        let r = uf.find(site);
        if root_label[r] < 0 {
            root_label[r] = sizes.len() as i64;
            sizes.push(0);
        }
        labels[site] = root_label[r];
        sizes[root_label[r] as usize] += 1;
    }
    ClusterLabeling { labels, sizes }
}

impl ClusterLabeling {
    /// Raw labels, `-1` for inactive sites.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn label(&self, site: usize) -> Option<usize> {
        let l = self.labels[site];
        (l >= 0).then_some(l as usize)
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Largest cluster; ties go to the smaller label.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (l, &s) in self.sizes.iter().enumerate() {
            if best.is_none_or(|b| s > self.sizes[b]) {
                best = Some(l);
            }
        }
        best
    }

    pub fn members(&self, label: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&s| self.labels[s] == label as i64).collect()
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.labels[a] >= 0 && self.labels[a] == self.labels[b]
    }

    /// Whether the cluster reaches every face of the window (for a padded
    /// field, the layer just inside the pad).
    pub fn touches_all_faces(&self, label: usize, lattice: &Lattice, boundary: Boundary) -> bool {
        let inset = usize::from(boundary == Boundary::AbsorbingPad);
        let d = lattice.dim();
        let mut lo = vec![false; d];
        let mut hi = vec![false; d];
        for (site, &l) in self.labels.iter().enumerate() {
            if l != label as i64 {
                continue;
            }
            for a in 0..d {
                let c = lattice.coord(site, a);
                lo[a] |= c == inset;
                hi[a] |= c + 1 + inset == lattice.sides()[a];
            }
        }
        lo.iter().chain(&hi).all(|&b| b)
    }

    /// Evaluate the configured infinite-cluster proxy at `site`.
    pub fn in_proxy(&self, site: usize, field: &ObstacleField, proxy: ClusterProxy) -> bool {
        let Some(l) = self.label(site) else { return false };
        let largest = self.largest() == Some(l);
        let faces = || self.touches_all_faces(l, field.lattice(), field.boundary());
        match proxy {
            ClusterProxy::Largest => largest,
            ClusterProxy::TouchesAllFaces => faces(),
            ClusterProxy::LargestOrTouchesAllFaces => largest || faces(),
        }
    }
}
