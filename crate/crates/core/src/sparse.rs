//! Compressed row storage shared by games, chains and row families.

use std::fmt;

/// Rows of sparse `(column, value)` entries stored back to back.
#[derive(Clone, Default, PartialEq)]
pub struct RowStore {
    start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl RowStore {
    pub fn new() -> Self {
        RowStore { start: vec![0], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn with_capacity(rows: usize, entries: usize) -> Self {
        let mut start = Vec::with_capacity(rows + 1);
        start.push(0);
        RowStore { start, cols: Vec::with_capacity(entries), vals: Vec::with_capacity(entries) }
    }

    pub fn push_row<I: IntoIterator<Item = (usize, f64)>>(&mut self, entries: I) {
        for (j, p) in entries {
            self.cols.push(j as u32);
            self.vals.push(p);
        }
        self.start.push(self.cols.len());
    }

    pub fn len(&self) -> usize {
        self.start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row(&self, k: usize) -> Row<'_> {
        let (a, b) = (self.start[k], self.start[k + 1]);
        Row { cols: &self.cols[a..b], vals: &self.vals[a..b] }
    }

    pub fn shrink_to_fit(&mut self) {
        self.start.shrink_to_fit();
        self.cols.shrink_to_fit();
        self.vals.shrink_to_fit();
    }
}

impl fmt::Debug for RowStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.len()).map(|k| self.row(k))).finish()
    }
}

/// A borrowed sparse row.
#[derive(Clone, Copy)]
pub struct Row<'a> {
    cols: &'a [u32],
    vals: &'a [f64],
}

impl<'a> Row<'a> {
    #[inline]
    pub fn dot(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for (&j, &p) in self.cols.iter().zip(self.vals) {
            s += p * v[j as usize];
        }
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.cols.iter().zip(self.vals).map(|(&j, &p)| (j as usize, p))
    }

    pub fn cols(&self) -> impl Iterator<Item = usize> + 'a {
        self.cols.iter().map(|&j| j as usize)
    }

    pub fn sum(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn to_vec(&self) -> Vec<(usize, f64)> {
        self.iter().collect()
    }
}

impl fmt::Debug for Row<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

/// Square substochastic matrix in row-compressed form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: RowStore,
}

impl SparseMatrix {
    pub fn from_store(rows: RowStore) -> Self {
        SparseMatrix { rows }
    }

    /// Builds a matrix from per-row entry lists. Zero entries are dropped.
    pub fn from_rows<R, I>(rows: R) -> Self
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut store = RowStore::new();
        for r in rows {
            store.push_row(r.into_iter().filter(|&(_, p)| p != 0.0));
        }
        SparseMatrix { rows: store }
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        Self::from_rows(a.iter().map(|r| r.iter().copied().enumerate()))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| [(i, 1.0)]))
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        self.rows.row(i)
    }

    pub fn nnz(&self) -> usize {
        self.rows.nnz()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.row(i).dot(x)).collect()
    }

    pub fn is_stochastic(&self) -> bool {
        (0..self.n()).all(|i| (self.row(i).sum() - 1.0).abs() <= 1e-9)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                for (j, p) in self.row(i).iter() {
                    r[j] += p;
                }
                r
            })
            .collect()
    }

    /// Principal submatrix on `states` (in the given order), with local indices.
    pub fn submatrix(&self, states: &[usize]) -> SparseMatrix {
        let mut local = vec![usize::MAX; self.n()];
        for (k, &s) in states.iter().enumerate() {
            local[s] = k;
        }
        let mut store = RowStore::with_capacity(states.len(), 0);
        for &s in states {
            store.push_row(self.row(s).iter().filter(|&(j, _)| local[j] != usize::MAX).map(|(j, p)| (local[j], p)));
        }
        SparseMatrix { rows: store }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let n = self.n();
        let mut count = vec![0usize; n + 1];
        for i in 0..n {
            for j in self.row(i).cols() {
                count[j + 1] += 1;
            }
        }
        for k in 0..n {
            count[k + 1] += count[k];
        }
        let nnz = count[n];
        let mut cols = vec![0u32; nnz];
        let mut vals = vec![0.0; nnz];
        let mut next = count.clone();
        for i in 0..n {
            for (j, p) in self.row(i).iter() {
                cols[next[j]] = i as u32;
                vals[next[j]] = p;
                next[j] += 1;
            }
        }
        SparseMatrix { rows: RowStore { start: count, cols, vals } }
    }
}
