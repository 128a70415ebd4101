use super::{CsrMatrix, LinalgError, Preconditioner};
use std::collections::BTreeMap;

/// Diagonal scaling. Zero diagonal entries are treated as one.
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
        Self { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

/// Incomplete Cholesky with zero fill on a symmetric matrix.
///
/// A non-positive pivot switches the factorisation to Jacobi and sets
/// `fell_back`.
pub struct Ic0 {
    n: usize,
    /// Lower factor, row-wise, diagonal last in each row.
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    fallback: Option<Jacobi>,
}

impl Ic0 {
    pub fn new(a: &CsrMatrix) -> Self {
        let n = a.n();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            if col_idx.last() != Some(&i) {
                col_idx.push(i);
                values.push(0.0);
            }
            row_ptr.push(col_idx.len());
        }
        let mut ok = true;
        'rows: for i in 0..n {
            let (ri0, ri1) = (row_ptr[i], row_ptr[i + 1]);
            for p in ri0..ri1 {
                let k = col_idx[p];
                // Sparse dot of rows i and k over columns < k.
                let (rk0, rk1) = (row_ptr[k], row_ptr[k + 1]);
                let (mut a_, mut b_) = (ri0, rk0);
                let mut s = 0.0;
                while a_ < p && b_ < rk1 - 1 {
                    match col_idx[a_].cmp(&col_idx[b_]) {
                        std::cmp::Ordering::Less => a_ += 1,
                        std::cmp::Ordering::Greater => b_ += 1,
                        std::cmp::Ordering::Equal => {
                            s += values[a_] * values[b_];
                            a_ += 1;
                            b_ += 1;
                        }
                    }
                }
                if k < i {
                    values[p] = (values[p] - s) / values[rk1 - 1];
                } else {
                    let d = values[p] - s;
                    if !(d > 0.0) {
                        ok = false;
                        break 'rows;
                    }
                    values[p] = d.sqrt();
                }
            }
        }
        let fallback = if ok { None } else { Some(Jacobi::new(a)) };
        Self { n, row_ptr, col_idx, values, fallback }
    }

    pub fn fell_back(&self) -> bool {
        self.fallback.is_some()
    }
}

impl Preconditioner for Ic0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        if let Some(j) = &self.fallback {
            return j.apply(r, z);
        }
        let n = self.n;
        for i in 0..n {
            let (p0, p1) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = r[i];
            for p in p0..p1 - 1 {
                s -= self.values[p] * z[self.col_idx[p]];
            }
            z[i] = s / self.values[p1 - 1];
        }
        for i in (0..n).rev() {
            let (p0, p1) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.values[p1 - 1];
            let zi = z[i];
            for p in p0..p1 - 1 {
                z[self.col_idx[p]] -= self.values[p] * zi;
            }
        }
    }
}

/// Incomplete LU with level-of-fill `k`.
///
/// The level of an original entry is 0; a fill entry created through pivot
/// `m` has level `lev(i,m) + lev(m,j) + 1`, minimised over all paths. Entries
/// above level `k` are dropped.
pub struct Iluk {
    n: usize,
    /// Strict lower part (unit diagonal implied).
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    /// Upper part, diagonal first in each row.
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_lev: Vec<usize>,
}

impl Iluk {
    pub fn new(a: &CsrMatrix, k: usize) -> Result<Self, LinalgError> {
        Self::with_shift(a, k, 0.0)
    }

    /// Factorises `a + shift·I`.
    pub fn with_shift(a: &CsrMatrix, k: usize, shift: f64) -> Result<Self, LinalgError> {
        let n = a.n();
        let mut f = Self {
            n,
            l_ptr: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_ptr: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_lev: Vec::new(),
        };
        let mut row: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for i in 0..n {
            row.clear();
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row.insert(c, (v, 0));
            }
            row.entry(i).or_insert((0.0, 0)).0 += shift;
            let mut cursor = 0;
            while let Some((&m, &(v, lev_im))) = row.range(cursor..i).next() {
                cursor = m + 1;
                let pivot = f.u_val[f.u_ptr[m]];
                let lmul = v / pivot;
                row.insert(m, (lmul, lev_im));
                for p in f.u_ptr[m] + 1..f.u_ptr[m + 1] {
                    let j = f.u_idx[p];
                    let lev = lev_im + f.u_lev[p] + 1;
                    match row.get_mut(&j) {
                        Some(e) => {
                            e.0 -= lmul * f.u_val[p];
                            e.1 = e.1.min(lev);
                        }
                        None if lev <= k => {
                            row.insert(j, (-lmul * f.u_val[p], lev));
                        }
                        None => {}
                    }
                }
            }
            for (&j, &(v, lev)) in row.iter() {
                if j < i {
                    f.l_idx.push(j);
                    f.l_val.push(v);
                } else if j == i {
                    if v == 0.0 || !v.is_finite() {
                        return Err(LinalgError::IluBreakdown(i));
                    }
                    // Diagonal goes first in the U row.
                    f.u_idx.push(j);
                    f.u_val.push(v);
                    f.u_lev.push(lev);
                } else {
                    f.u_idx.push(j);
                    f.u_val.push(v);
                    f.u_lev.push(lev);
                }
            }
            if f.u_idx.len() == f.u_ptr[i] || f.u_idx[f.u_ptr[i]] != i {
                return Err(LinalgError::IluBreakdown(i));
            }
            f.l_ptr.push(f.l_idx.len());
            f.u_ptr.push(f.u_idx.len());
        }
        Ok(f)
    }

    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }
}

impl Preconditioner for Iluk {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for i in 0..self.n {
            let mut s = r[i];
            for p in self.l_ptr[i]..self.l_ptr[i + 1] {
                s -= self.l_val[p] * z[self.l_idx[p]];
            }
            z[i] = s;
        }
        for i in (0..self.n).rev() {
            let d = self.u_ptr[i];
            let mut s = z[i];
            for p in d + 1..self.u_ptr[i + 1] {
                s -= self.u_val[p] * z[self.u_idx[p]];
            }
            z[i] = s / self.u_val[d];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5 + i as f64 * 0.1));
            if i > 0 {
                t.push((i, i - 1, -1.0 + 0.05 * i as f64));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.2));
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul(x);
        norm(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm(b)
    }

    #[test]
    fn ilu0_exact_on_tridiagonal() {
        let a = tridiag(30);
        let f = Iluk::new(&a, 0).unwrap();
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 30];
        f.apply(&b, &mut x);
        assert!(residual(&a, &x, &b) < 1e-12);
    }

    #[test]
    fn high_fill_is_exact() {
        let n = 12;
        let mut dense = vec![vec![0.0; n]; n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if (i * 7 + j * 3) % 5 == 0 || i == j {
                    *v = if i == j { 10.0 } else { ((i + 2 * j) as f64).cos() };
                }
            }
        }
        let a = CsrMatrix::from_dense(&dense);
        let f = Iluk::new(&a, n).unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut x = vec![0.0; n];
        f.apply(&b, &mut x);
        assert!(residual(&a, &x, &b) < 1e-12);
    }

    #[test]
    fn ilu_fill_grows_with_level() {
        let m = 8;
        let id = |i: usize, j: usize| i + m * j;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                t.push((id(i, j), id(i, j), 4.0));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.0));
                    t.push((id(i - 1, j), id(i, j), -1.0));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.0));
                    t.push((id(i, j - 1), id(i, j), -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(m * m, &t).unwrap();
        let f0 = Iluk::new(&a, 0).unwrap();
        let f1 = Iluk::new(&a, 1).unwrap();
        assert_eq!(f0.nnz(), a.nnz());
        assert!(f1.nnz() > f0.nnz());
    }

    #[test]
    fn ilu_zero_pivot() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(Iluk::new(&a, 0), Err(LinalgError::IluBreakdown(0))));
    }

    #[test]
    fn ic0_exact_on_tridiagonal_spd() {
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, &t).unwrap();
        let f = Ic0::new(&a);
        assert!(!f.fell_back());
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut x = vec![0.0; n];
        f.apply(&b, &mut x);
        assert!(residual(&a, &x, &b) < 1e-12);
    }

    #[test]
    fn ic0_falls_back_on_indefinite() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let f = Ic0::new(&a);
        assert!(f.fell_back());
        let mut z = vec![0.0; 2];
        f.apply(&[2.0, 4.0], &mut z);
        assert_eq!(z, vec![2.0, 4.0]);
    }
}
