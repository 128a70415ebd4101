use super::{CsrMatrix, LinalgError, Preconditioner};
use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of the symmetrised pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>]) -> usize {
    let mut root = seed;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (depth, last_level) = bfs_levels(root, adj);
        if depth <= best_depth {
            break;
        }
        best_depth = depth;
        root = *last_level.iter().min_by_key(|&&v| (adj[v].len(), v)).unwrap();
    }
    root
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in &adj[v] {
                if level[u] == usize::MAX {
                    level[u] = depth + 1;
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Banded LU with partial pivoting after RCM reordering.
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<f64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn new(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let n = a.n();
        let perm = rcm_ordering(a);
        let pa = a.permuted(&perm);
        let (mut kl, mut ku) = (0, 0);
        let mut amax = 0.0f64;
        for i in 0..n {
            let (cols, vals) = pa.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
                amax = amax.max(v.abs());
            }
        }
        // Row i stores columns i−kl ..= i+kl+ku (fill from pivoting).
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for i in 0..n {
            let (cols, vals) = pa.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                band[i * width + j + kl - i] = v;
            }
        }
        let mut lu = Self { n, kl, ku, width, band, pivots: vec![0; n], perm };
        lu.factor(amax)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn factor(&mut self, amax: f64) -> Result<(), LinalgError> {
        let (n, kl, reach) = (self.n, self.kl, self.kl + self.ku);
        let tol = 1e-13 * amax.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut pmax = self.band[self.at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.band[self.at(i, k)].abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if !(pmax > tol) {
                return Err(LinalgError::LuSingular(k));
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.at(k, j), self.at(p, j));
                    self.band.swap(a, b);
                }
            }
            let inv = 1.0 / self.band[self.at(k, k)];
            for i in k + 1..=last_row {
                let ik = self.at(i, k);
                let l = self.band[ik] * inv;
                self.band[ik] = l;
                if l != 0.0 {
                    let (ri, rk) = (self.at(i, k + 1), self.at(k, k + 1));
                    let len = last_col - k;
                    for t in 0..len {
                        self.band[ri + t] -= l * self.band[rk + t];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.apply(b, &mut x);
        x
    }
}

impl Preconditioner for BandLu {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let (n, kl, reach) = (self.n, self.kl, self.kl + self.ku);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| r[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    y[i] -= self.band[self.at(i, k)] * yk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= self.band[self.at(i, j)] * y[j];
            }
            y[i] = s / self.band[self.at(i, i)];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            z[old] = y[new];
        }
    }
}
