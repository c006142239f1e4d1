//! LDL^T factorisation of symmetric banded matrices.

/// Factor of a symmetric matrix with lower bandwidth `band`.
#[derive(Clone, Debug)]
pub struct BandLdl {
    n: usize,
    band: usize,
    /// Strictly lower part, row `i` at `rows[i * band ..]`; slot `k - (i - band)` holds L[i][k].
    rows: Vec<f64>,
    diag: Vec<f64>,
}

impl BandLdl {
    /// Factor the matrix whose entries are produced by `entries(i)` as
    /// `(diagonal, [(j, value) for j < i])`. Returns `None` if a pivot is not
    /// positive, which for a symmetric matrix means it is not positive definite.
    pub fn factor<F>(n: usize, band: usize, mut entries: F) -> Option<BandLdl>
    where
        F: FnMut(usize) -> (f64, Vec<(usize, f64)>),
    {
        let band = band.max(1);
        let mut rows = vec![0.0; n * band];
        let mut diag = vec![0.0; n];
        let mut scaled = vec![0.0; band];
        for i in 0..n {
            let (aii, lower) = entries(i);
            let base = i * band;
            // Row i of A into the strictly lower slots.
            for (j, v) in lower {
                debug_assert!(j < i && i - j <= band);
                rows[base + j + band - i] = v;
            }
            let lo = i.saturating_sub(band);
            for j in lo..i {
                // L[i][j] = (A[i][j] - sum_{k<j} L[i][k] D[k] L[j][k]) / D[j]
                let kstart = lo.max(j.saturating_sub(band));
                let mut s = rows[base + j + band - i];
                let jb = j * band;
                for k in kstart..j {
                    s -= scaled[k + band - i] * rows[jb + k + band - j];
                }
                let lij = s / diag[j];
                rows[base + j + band - i] = lij;
                scaled[j + band - i] = lij * diag[j];
            }
            let mut d = aii;
            for k in lo..i {
                d -= rows[base + k + band - i] * scaled[k + band - i];
            }
            if !(d > 1e-13 * aii.abs().max(1.0)) {
                return None;
            }
            diag[i] = d;
        }
        Some(BandLdl { n, band, rows, diag })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Smallest pivot of D.
    pub fn min_pivot(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Solve `A x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b) = (self.n, self.band);
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let base = i * b;
            let mut s = x[i];
            for k in lo..i {
                s -= self.rows[base + k + b - i] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.diag[i];
        }
        for j in (0..n).rev() {
            let lo = j.saturating_sub(b);
            let base = j * b;
            let xj = x[j];
            for k in lo..j {
                x[k] -= self.rows[base + k + b - j] * xj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        // A = tridiag(-1, 4, -1)
        let n = 6;
        let f = BandLdl::factor(n, 1, |i| (4.0, if i > 0 { vec![(i - 1, -1.0)] } else { vec![] })).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 4.0 * x_true[i];
                if i > 0 {
                    s -= x_true[i - 1];
                }
                if i + 1 < n {
                    s -= x_true[i + 1];
                }
                s
            })
            .collect();
        f.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        // [[1, 2], [2, 1]] has eigenvalue -1.
        assert!(BandLdl::factor(2, 1, |i| (1.0, if i == 1 { vec![(0, 2.0)] } else { vec![] })).is_none());
    }
}
