//! Dense least squares by Householder QR with column pivoting.
//!
//! Pivoting follows Businger-Golub: at each step the remaining column of
//! largest norm (restricted to the active rows) is moved to the front.
//! With this order `|R_kk|` is nonincreasing, so the first small diagonal
//! entry marks the numerical rank.

use crate::error::{Error, Result};

/// Column-major `rows x cols` matrix.
#[derive(Debug, Clone)]
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn set_row(&mut self, i: usize, row: &[f64]) {
        debug_assert_eq!(row.len(), self.cols);
        for (j, &v) in row.iter().enumerate() {
            self.data[j * self.rows + i] = v;
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let r = self.rows;
        for i in 0..r {
            self.data.swap(a * r + i, b * r + i);
        }
    }
}

/// Minimizes `||A x - b||_2`. The error names the column (basis degree)
/// at which the factorization loses rank.
pub(crate) fn least_squares(mut a: Matrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let (m, n) = (a.rows, a.cols);
    assert_eq!(b.len(), m, "right-hand side length must match row count");
    if m < n {
        return Err(Error::Underdetermined { rows: m, unknowns: n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diag = vec![0.0; n];
    let tol_factor = f64::EPSILON * m.max(n) as f64;

    for k in 0..n {
        let (p, _) = (k..n)
            .map(|j| (j, a.col(j)[k..].iter().map(|v| v * v).sum::<f64>()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        a.swap_cols(k, p);
        perm.swap(k, p);

        let col = &a.col(k)[k..];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if col[0] >= 0.0 { -norm } else { norm };
        diag[k] = alpha;
        if norm == 0.0 || norm <= tol_factor * diag[0].abs() {
            return Err(Error::RankDeficient { degree: perm[k] });
        }
        let mut v: Vec<f64> = col.to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();

        for j in k + 1..n {
            let c = &mut a.col_mut(j)[k..];
            let s = 2.0 * c.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() / vv;
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        }
        let bk = &mut b[k..];
        let s = 2.0 * bk.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() / vv;
        for (bi, vi) in bk.iter_mut().zip(&v) {
            *bi -= s * vi;
        }
    }

    // Back substitution with R_kk = diag[k], R_kj = a[k, j] for j > k.
    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a.col(j)[k] * y[j];
        }
        y[k] = s / diag[k];
    }
    let mut x = vec![0.0; n];
    for (k, &pk) in perm.iter().enumerate() {
        x[pk] = y[k];
    }
    Ok(x)
}
