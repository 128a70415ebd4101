use super::LinalgError;
use crate::Tensor;
use std::io::{self, Write};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square `n×n` matrix from `(row, col, value)` triplets; duplicates are
    /// summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        let mut sorted = triplets.to_vec();
        if let Some(&(r, c, _)) = sorted.iter().find(|&&(r, c, _)| r >= n || c >= n) {
            return Err(LinalgError::Dimension(format!("entry ({r}, {c}) outside {n}x{n}")));
        }
        sorted.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    /// Builds from raw arrays; columns within a row must be sorted and unique.
    pub fn from_raw(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self, LinalgError> {
        if row_ptr.len() != n + 1 || row_ptr[n] != col_idx.len() || col_idx.len() != values.len() {
            return Err(LinalgError::Dimension("inconsistent CSR arrays".into()));
        }
        for i in 0..n {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n) {
                return Err(LinalgError::Dimension(format!("row {i} has unsorted or invalid columns")));
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut t = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t).expect("square dense input")
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }
    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                t.push((c, i, v));
            }
        }
        Self::from_triplets(self.n, &t).expect("transpose of a valid matrix")
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).0.iter().all(|&j| self.row(j).0.binary_search(&i).is_ok()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    /// `P A Pᵀ` where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                t.push((inv[i], inv[c], v));
            }
        }
        Self::from_triplets(self.n, &t).expect("permutation of a valid matrix")
    }

    /// Coordinate text dump, one `row col value` line per stored entry
    /// (0-based indices).
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse matrix of `dim×dim` blocks over a cell-adjacency pattern.
///
/// Unknowns are interleaved per cell: scalar index `cell * dim + component`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseMatrix {
    dim: usize,
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    blocks: Vec<Tensor>,
}

impl BlockSparseMatrix {
    /// Zero matrix with the given symmetric pattern (from a list of
    /// `(i, j)` off-diagonal couplings; diagonals are always present).
    pub fn with_pattern(dim: usize, n: usize, couplings: &[(usize, usize)]) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j) in couplings {
            rows[i].push(j);
            rows[j].push(i);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let blocks = vec![Tensor::zeros(); col_idx.len()];
        Self { dim, n, row_ptr, col_idx, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n_blocks(&self) -> usize {
        self.n
    }
    pub fn n_scalar(&self) -> usize {
        self.n * self.dim
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn block(&self, i: usize, j: usize) -> Tensor {
        self.slot(i, j).map_or(Tensor::zeros(), |s| self.blocks[s])
    }

    /// Adds to block `(i, j)`; the entry must be in the pattern.
    pub fn add_block(&mut self, i: usize, j: usize, b: &Tensor) {
        let s = self.slot(i, j).unwrap_or_else(|| panic!("block ({i}, {j}) outside the pattern"));
        self.blocks[s] += b;
    }

    pub fn row_blocks(&self, i: usize) -> impl Iterator<Item = (usize, &Tensor)> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.blocks[r].iter())
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let d = self.dim;
        for i in 0..self.n {
            let mut acc = [0.0; 3];
            for (j, b) in self.row_blocks(i) {
                for a in 0..d {
                    for c in 0..d {
                        acc[a] += b[(a, c)] * x[j * d + c];
                    }
                }
            }
            y[i * d..i * d + d].copy_from_slice(&acc[..d]);
        }
    }

    /// Interleaved scalar expansion (lossless).
    pub fn to_scalar(&self) -> CsrMatrix {
        let d = self.dim;
        let mut t = Vec::with_capacity(self.blocks.len() * d * d);
        for i in 0..self.n {
            for (j, b) in self.row_blocks(i) {
                for a in 0..d {
                    for c in 0..d {
                        if b[(a, c)] != 0.0 || (i == j && a == c) {
                            t.push((i * d + a, j * d + c, b[(a, c)]));
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.n * d, &t).expect("valid block pattern")
    }

    /// The `c`-th diagonal entries of every block, as an `n×n` matrix.
    pub fn component(&self, c: usize) -> CsrMatrix {
        let values = self.blocks.iter().map(|b| b[(c, c)]).collect();
        CsrMatrix { n: self.n, row_ptr: self.row_ptr.clone(), col_idx: self.col_idx.clone(), values }
    }

    pub fn components(&self) -> Vec<CsrMatrix> {
        (0..self.dim).map(|c| self.component(c)).collect()
    }

    /// Block-diagonal-coefficient matrix from per-component scalar matrices
    /// sharing one pattern.
    pub fn from_components(parts: &[CsrMatrix]) -> Result<Self, LinalgError> {
        let first = parts.first().ok_or_else(|| LinalgError::Dimension("no components".into()))?;
        if parts.iter().any(|p| p.row_ptr != first.row_ptr || p.col_idx != first.col_idx) {
            return Err(LinalgError::Dimension("component patterns differ".into()));
        }
        let mut blocks = vec![Tensor::zeros(); first.nnz()];
        for (c, p) in parts.iter().enumerate() {
            for (b, &v) in blocks.iter_mut().zip(&p.values) {
                b[(c, c)] = v;
            }
        }
        Ok(Self {
            dim: parts.len(),
            n: first.n,
            row_ptr: first.row_ptr.clone(),
            col_idx: first.col_idx.clone(),
            blocks,
        })
    }
}
