use serde::{Deserialize, Serialize};

/// A rectangular window of Z^d. Sites are indexed row-major with axis 0
/// slowest, so the last axis has stride 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    sides: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Lattice {
    pub fn new(sides: &[usize]) -> Self {
        let d = sides.len();
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * sides[a + 1];
        }
        let len = sides.iter().product();
        Lattice { sides: sides.to_vec(), strides, len }
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coordinate of `site` along `axis`.
    #[inline]
    pub fn coord(&self, site: usize, axis: usize) -> usize {
        (site / self.strides[axis]) % self.sides[axis]
    }

    pub fn coords(&self, site: usize) -> Vec<i64> {
        (0..self.dim()).map(|a| self.coord(site, a) as i64).collect()
    }

    pub fn index_of(&self, c: &[i64]) -> Option<usize> {
        if c.len() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for (a, &x) in c.iter().enumerate() {
            if x < 0 || x as usize >= self.sides[a] {
                return None;
            }
            idx += x as usize * self.strides[a];
        }
        Some(idx)
    }

    /// Nearest neighbours inside the window, in the fixed order
    /// (axis 0, -), (axis 0, +), (axis 1, -), ...
    #[inline]
    pub fn neighbors(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        (0..2 * self.dim()).filter_map(move |k| {
            let a = k / 2;
            let c = self.coord(site, a);
            if k % 2 == 0 {
                (c > 0).then(|| site - self.strides[a])
            } else {
                (c + 1 < self.sides[a]).then(|| site + self.strides[a])
            }
        })
    }

    /// Number of lattice neighbours in Z^d (not clipped to the window).
    pub fn degree(&self) -> usize {
        2 * self.dim()
    }

    /// The site with coordinates `floor(side / 2)` on every axis.
    pub fn center(&self) -> usize {
        self.sides.iter().zip(&self.strides).map(|(s, st)| (s / 2) * st).sum()
    }

    pub fn dist2(&self, a: usize, b: usize) -> i64 {
        (0..self.dim())
            .map(|ax| {
                let d = self.coord(a, ax) as i64 - self.coord(b, ax) as i64;
                d * d
            })
            .sum()
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        (self.dist2(a, b) as f64).sqrt()
    }

    /// Sup-norm distance.
    pub fn dist_inf(&self, a: usize, b: usize) -> i64 {
        (0..self.dim())
            .map(|ax| (self.coord(a, ax) as i64 - self.coord(b, ax) as i64).abs())
            .max()
            .unwrap_or(0)
    }

    /// Sites of the window within Euclidean distance `r` of `center`, ascending.
    pub fn ball(&self, center: usize, r: f64) -> Vec<usize> {
        if r < 0.0 {
            return Vec::new();
        }
        let c = self.coords(center);
        let r2 = r * r + 1e-9;
        let reach = r.max(0.0).floor();
        let lo: Vec<i64> = c.iter().map(|&x| (x as f64 - reach).max(0.0) as i64).collect();
        let hi: Vec<i64> = c
            .iter()
            .zip(&self.sides)
            .map(|(&x, &n)| (x as f64 + reach).min(n as f64 - 1.0) as i64)
            .collect();
        let mut out = Vec::new();
        let mut p = lo.clone();
        loop {
            let d2: f64 = p.iter().zip(&c).map(|(a, b)| ((a - b) * (a - b)) as f64).sum();
            if d2 <= r2 {
                out.push(self.index_of(&p).expect("clipped to window"));
            }
            // Odometer with the last axis fastest keeps the output ascending.
            let mut ax = self.dim();
            loop {
                if ax == 0 {
                    return out;
                }
                ax -= 1;
                if p[ax] < hi[ax] {
                    p[ax] += 1;
                    break;
                }
                p[ax] = lo[ax];
            }
        }
    }

    /// Whether `site` lies on the outermost layer of the window.
    pub fn is_outer(&self, site: usize) -> bool {
        (0..self.dim()).any(|a| {
            let c = self.coord(site, a);
            c == 0 || c + 1 == self.sides[a]
        })
    }

    /// Offset vector from `a` to `b`.
    pub fn offset(&self, a: usize, b: usize) -> Vec<i64> {
        (0..self.dim())
            .map(|ax| self.coord(b, ax) as i64 - self.coord(a, ax) as i64)
            .collect()
    }

    /// `site + off`, if it stays inside the window.
    pub fn shifted(&self, site: usize, off: &[i64]) -> Option<usize> {
        let p: Vec<i64> = (0..self.dim()).map(|a| self.coord(site, a) as i64 + off[a]).collect();
        self.index_of(&p)
    }
}

/// Integer offsets with Euclidean norm at most `r`, in lexicographic order.
pub fn ball_offsets(d: usize, r: f64) -> Vec<Vec<i64>> {
    let m = r.max(0.0).floor() as i64;
    let r2 = r * r;
    let mut out = Vec::new();
    let mut cur = vec![-m; d];
    if d == 0 {
        return vec![vec![]];
    }
    loop {
        let n2: i64 = cur.iter().map(|x| x * x).sum();
        if (n2 as f64) <= r2 + 1e-9 {
            out.push(cur.clone());
        }
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if cur[a] < m {
                cur[a] += 1;
                for b in cur.iter_mut().skip(a + 1) {
                    *b = -m;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_axis_zero_slowest() {
        let l = Lattice::new(&[3, 4]);
        assert_eq!(l.strides(), &[4, 1]);
        assert_eq!(l.index_of(&[1, 2]), Some(6));
        assert_eq!(l.coords(6), vec![1, 2]);
        assert_eq!(l.index_of(&[3, 0]), None);
    }

    #[test]
    fn neighbors_are_clipped() {
        let l = Lattice::new(&[3, 3]);
        let corner: Vec<_> = l.neighbors(0).collect();
        assert_eq!(corner, vec![3, 1]);
        assert_eq!(l.neighbors(4).count(), 4);
    }

    #[test]
    fn ball_offsets_counts() {
        assert_eq!(ball_offsets(2, 1.0).len(), 5);
        assert_eq!(ball_offsets(2, 1.5).len(), 9);
        assert_eq!(ball_offsets(3, 1.0).len(), 7);
        assert_eq!(ball_offsets(2, 0.0), vec![vec![0, 0]]);
    }
}
