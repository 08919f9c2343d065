//! Row-sparse matrices and the direct solvers used by the Newton loops: the
//! Thomas algorithm for tridiagonal (1D) systems, banded LU with partial
//! pivoting for 2D grids, dense LU when the band is nearly full.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular linear system (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },
    #[error("dimension mismatch: matrix {rows}, right-hand side {rhs}")]
    Dimension { rows: usize, rhs: usize },
}

/// Square matrix stored as one list of `(column, value)` pairs per row.
#[derive(Debug, Clone, Default)]
pub struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(n: usize) -> Self {
        SparseRows { rows: vec![Vec::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let r = &mut self.rows[row];
        match r.iter_mut().find(|(c, _)| *c == col) {
            Some(e) => e.1 += v,
            None => r.push((col, v)),
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(c, v)| v * x[c]).sum()).collect()
    }

    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                if v != 0.0 {
                    bw = bw.max(i.abs_diff(c));
                }
            }
        }
        bw
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                m[(i, c)] += v;
            }
        }
        m
    }

    /// Solves `A x = b`, picking the tridiagonal solver when the bandwidth allows.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.dim() {
            return Err(LinalgError::Dimension { rows: self.dim(), rhs: b.len() });
        }
        let bw = self.bandwidth();
        if bw <= 1 {
            self.solve_tridiagonal(b)
        } else if 3 * bw < self.dim() {
            self.solve_banded(b, bw)
        } else {
            self.solve_dense(b)
        }
    }

    fn solve_tridiagonal(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim();
        let (mut lo, mut di, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                if c + 1 == i {
                    lo[i] += v;
                } else if c == i {
                    di[i] += v;
                } else if c == i + 1 {
                    up[i] += v;
                }
            }
        }
        thomas(&lo, &di, &up, b)
    }

    /// Gaussian elimination with partial pivoting inside the band. Row `i`
    /// stores columns `i - bw ..= i + 2 bw` to hold the pivoting fill.
    fn solve_banded(&self, b: &[f64], bw: usize) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim();
        let width = 3 * bw + 1;
        let at = |i: usize, c: usize| i * width + c + bw - i;
        let mut a = vec![0.0; n * width];
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                a[at(i, c)] += v;
            }
        }
        let mut x = b.to_vec();
        for k in 0..n {
            let last = (k + bw).min(n - 1);
            let right = (k + 2 * bw).min(n - 1);
            let mut p = k;
            for i in k + 1..=last {
                if a[at(i, k)].abs() > a[at(p, k)].abs() {
                    p = i;
                }
            }
            let pivot = a[at(p, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(LinalgError::Singular { row: k, pivot });
            }
            if p != k {
                for c in k..=right {
                    a.swap(at(p, c), at(k, c));
                }
                x.swap(p, k);
            }
            for i in k + 1..=last {
                let f = a[at(i, k)] / pivot;
                if f == 0.0 {
                    continue;
                }
                a[at(i, k)] = 0.0;
                for c in k + 1..=right {
                    a[at(i, c)] -= f * a[at(k, c)];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let right = (k + 2 * bw).min(n - 1);
            let mut s = x[k];
            for c in k + 1..=right {
                s -= a[at(k, c)] * x[c];
            }
            x[k] = s / a[at(k, k)];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::Singular { row: 0, pivot: f64::NAN });
        }
        Ok(x)
    }

    fn solve_dense(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let lu = self.to_dense().lu();
        let x = lu
            .solve(&DVector::from_column_slice(b))
            .ok_or(LinalgError::Singular { row: 0, pivot: 0.0 })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::Singular { row: 0, pivot: f64::NAN });
        }
        Ok(x.as_slice().to_vec())
    }
}

/// Thomas algorithm; `lo[0]` and `up[n-1]` are ignored.
pub fn thomas(lo: &[f64], di: &[f64], up: &[f64], b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let m = di[i] - if i > 0 { lo[i] * c[i - 1] } else { 0.0 };
        if m == 0.0 || !m.is_finite() {
            return Err(LinalgError::Singular { row: i, pivot: m });
        }
        c[i] = if i + 1 < n { up[i] / m } else { 0.0 };
        d[i] = (b[i] - if i > 0 { lo[i] * d[i - 1] } else { 0.0 }) / m;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_and_dense_agree() {
        let n = 6;
        let mut a = SparseRows::new(n);
        for i in 0..n {
            a.add(i, i, 2.5 + i as f64 * 0.1);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -0.7);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let x1 = a.solve(&b).unwrap();
        let x2 = a.solve_dense(&b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-13);
        }
        let r = a.mul_vec(&x1);
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_matches_dense_with_pivoting() {
        let n = 40;
        let bw = 5;
        let mut a = SparseRows::new(n);
        for i in 0..n {
            // weak diagonal forces row swaps
            a.add(i, i, 0.01 * (i as f64 + 1.0));
            for d in 1..=bw {
                if i >= d {
                    a.add(i, i - d, ((i * 7 + d * 3) % 11) as f64 - 5.0);
                }
                if i + d < n {
                    a.add(i, i + d, ((i * 5 + d) % 7) as f64 - 3.0);
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let x1 = a.solve_banded(&b, bw).unwrap();
        let x2 = a.solve_dense(&b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-8 * (1.0 + q.abs()), "{p} {q}");
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut a = SparseRows::new(2);
        a.add(0, 0, 1.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        assert!(a.solve(&[1.0, 2.0]).is_err());
    }
}
