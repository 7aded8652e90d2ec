//! LU factorizations for the linear systems met in chain analysis.
//!
//! The chain systems are nonsingular M-matrices `I - P_TT`, for which Gaussian
//! elimination with diagonal pivots in any order is stable. Both factorizations
//! for them take the mass each row loses outside the block (its leak) and
//! recompute every pivot as leak plus off-diagonal mass, so no pivot is formed
//! by cancellation: a block that is left with probability `1e-20` per step
//! still factors to full relative accuracy. The sparse factorization only
//! chooses a symmetric ordering (by Markowitz count). A dense factorization
//! with partial pivoting serves general matrices.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::ChainError;

pub trait Factorization {
    fn dim(&self) -> usize;
    /// Overwrites `b` with the solution of `A x = b`.
    fn solve(&self, b: &mut [f64]);
    /// Overwrites `b` with the solution of `A^T x = b`.
    fn solve_transpose(&self, b: &mut [f64]);
}

/// Dense LU with partial pivoting, `P A = L U`.
pub struct DenseLu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factors the row-major `n x n` matrix `a`.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self, ChainError> {
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).fold(k, |p, i| if a[i * n + k].abs() > a[p * n + k].abs() { i } else { p });
            if a[p * n + k].abs() <= 1e-14 * scale {
                return Err(ChainError::Singular { size: n });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                if l != 0.0 {
                    a[i * n + k] = l;
                    for j in k + 1..n {
                        a[i * n + j] -= l * a[k * n + j];
                    }
                } else {
                    a[i * n + k] = 0.0;
                }
            }
        }
        Ok(DenseLu { n, a, perm })
    }

    fn dense(rows: &[Vec<(usize, f64)>]) -> Vec<f64> {
        let n = rows.len();
        let mut a = vec![0.0; n * n];
        for (i, r) in rows.iter().enumerate() {
            for &(j, x) in r {
                a[i * n + j] += x;
            }
        }
        a
    }

    pub fn from_rows(rows: &[Vec<(usize, f64)>]) -> Result<Self, ChainError> {
        Self::factor(Self::dense(rows), rows.len())
    }

    /// Factors the M-matrix with off-diagonal part taken from `rows` and row
    /// sums `leak`, without pivoting.
    pub fn factor_m(rows: &[Vec<(usize, f64)>], mut leak: Vec<f64>) -> Result<Self, ChainError> {
        let n = rows.len();
        let mut a = Self::dense(rows);
        for k in 0..n {
            let d = leak[k] - (k + 1..n).map(|j| a[k * n + j]).sum::<f64>();
            if !(d > 0.0 && d.is_finite()) {
                return Err(ChainError::Singular { size: n });
            }
            a[k * n + k] = d;
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                a[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        if j != i {
                            a[i * n + j] -= l * a[k * n + j];
                        }
                    }
                    leak[i] -= l * leak[k];
                }
            }
        }
        Ok(DenseLu { n, a, perm: (0..n).collect() })
    }
}

impl Factorization for DenseLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.a[i * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.a[i * n + j] * y[j];
            }
            y[i] = s / self.a[i * n + i];
        }
        b.copy_from_slice(&y);
    }

    fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.a[j * n + i] * w[j];
            }
            w[i] = s / self.a[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in i + 1..n {
                s -= self.a[j * n + i] * w[j];
            }
            w[i] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = w[k];
        }
    }
}

/// Sparse LU with diagonal pivots chosen by minimum Markowitz count.
pub struct SparseLu {
    n: usize,
    order: Vec<u32>,
    diag: Vec<f64>,
    /// Entries of the eliminated pivot row, excluding the diagonal.
    upper: Vec<Vec<(u32, f64)>>,
    /// Multipliers `(row, l)` applied when eliminating each pivot.
    lower: Vec<Vec<(u32, f64)>>,
}

impl SparseLu {
    /// Factors the matrix given by rows. Fails when the stored fill would
    /// exceed `budget` entries or a pivot vanishes.
    pub fn factor(rows: Vec<Vec<(usize, f64)>>, budget: usize) -> Result<Self, ChainError> {
        Self::factor_with(rows, None, budget)
    }

    /// Factors an M-matrix whose row sums are `leak`, recomputing each pivot
    /// from the leak and the off-diagonal mass.
    pub fn factor_m(rows: Vec<Vec<(usize, f64)>>, leak: Vec<f64>, budget: usize) -> Result<Self, ChainError> {
        Self::factor_with(rows, Some(leak), budget)
    }

    fn factor_with(rows: Vec<Vec<(usize, f64)>>, mut leak: Option<Vec<f64>>, budget: usize) -> Result<Self, ChainError> {
        let n = rows.len();
        let mut active: Vec<Vec<(u32, f64)>> =
            rows.into_iter().map(|r| r.into_iter().map(|(j, x)| (j as u32, x)).collect()).collect();
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut col_count = vec![0usize; n];
        for (i, r) in active.iter().enumerate() {
            for &(j, _) in r {
                cols[j as usize].push(i as u32);
                col_count[j as usize] += 1;
            }
        }
        let cost = |active: &Vec<Vec<(u32, f64)>>, col_count: &[usize], k: usize| {
            active[k].len().saturating_sub(1) * col_count[k].saturating_sub(1)
        };
        let mut heap = BinaryHeap::with_capacity(n);
        for k in 0..n {
            heap.push(Reverse((cost(&active, &col_count, k), k)));
        }
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut diag = vec![0.0; n];
        let mut upper = vec![Vec::new(); n];
        let mut lower = vec![Vec::new(); n];
        let mut stored = active.iter().map(Vec::len).sum::<usize>();
        let mut touched = Vec::new();

        while let Some(Reverse((c, k))) = heap.pop() {
            if done[k] || c != cost(&active, &col_count, k) {
                continue;
            }
            done[k] = true;
            order.push(k as u32);
            let mut prow = std::mem::take(&mut active[k]);
            let dpos = prow.iter().position(|&(j, _)| j as usize == k).ok_or(ChainError::Singular { size: n })?;
            let mut d = prow.swap_remove(dpos).1;
            if let Some(leak) = &leak {
                d = leak[k] - prow.iter().map(|e| e.1).sum::<f64>();
            }
            if d.abs() < 1e-300 || !d.is_finite() {
                return Err(ChainError::Singular { size: n });
            }
            for &(j, _) in &prow {
                col_count[j as usize] -= 1;
            }
            col_count[k] -= 1;
            touched.clear();
            let col = std::mem::take(&mut cols[k]);
            for &i in &col {
                let i = i as usize;
                if done[i] {
                    continue;
                }
                let row = &mut active[i];
                let Some(pos) = row.iter().position(|&(j, _)| j as usize == k) else { continue };
                let a_ik = row.swap_remove(pos).1;
                col_count[k] -= 1;
                let l = a_ik / d;
                lower[k].push((i as u32, l));
                if let Some(leak) = &mut leak {
                    leak[i] -= l * leak[k];
                }
                for &(j, u) in &prow {
                    if leak.is_some() && j as usize == i {
                        continue;
                    }
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 -= l * u,
                        None => {
                            row.push((j, -l * u));
                            cols[j as usize].push(i as u32);
                            col_count[j as usize] += 1;
                            stored += 1;
                        }
                    }
                }
                touched.push(i);
            }
            stored += lower[k].len();
            if stored > budget {
                return Err(ChainError::FillBudget);
            }
            for &i in &touched {
                heap.push(Reverse((cost(&active, &col_count, i), i)));
            }
            for &(j, _) in &prow {
                let j = j as usize;
                if !done[j] {
                    heap.push(Reverse((cost(&active, &col_count, j), j)));
                }
            }
            diag[k] = d;
            upper[k] = prow;
        }
        Ok(SparseLu { n, order, diag, upper, lower })
    }

    pub fn nnz(&self) -> usize {
        self.n + self.upper.iter().map(Vec::len).sum::<usize>() + self.lower.iter().map(Vec::len).sum::<usize>()
    }
}

impl Factorization for SparseLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve(&self, b: &mut [f64]) {
        for &k in &self.order {
            let bk = b[k as usize];
            if bk != 0.0 {
                for &(i, l) in &self.lower[k as usize] {
                    b[i as usize] -= l * bk;
                }
            }
        }
        for &k in self.order.iter().rev() {
            let k = k as usize;
            let mut s = b[k];
            for &(j, u) in &self.upper[k] {
                s -= u * b[j as usize];
            }
            b[k] = s / self.diag[k];
        }
    }

    fn solve_transpose(&self, b: &mut [f64]) {
        for &k in &self.order {
            let k = k as usize;
            let y = b[k] / self.diag[k];
            b[k] = y;
            if y != 0.0 {
                for &(j, u) in &self.upper[k] {
                    b[j as usize] -= u * y;
                }
            }
        }
        for &k in self.order.iter().rev() {
            let k = k as usize;
            let mut s = b[k];
            for &(i, l) in &self.lower[k] {
                s -= l * b[i as usize];
            }
            b[k] = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matvec(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
        rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()).collect()
    }

    fn matvec_t(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (i, r) in rows.iter().enumerate() {
            for &(j, a) in r {
                y[j] += a * x[i];
            }
        }
        y
    }

    /// `I - P` for a random substochastic `P` whose rows lose at least `leak`.
    fn m_matrix(n: usize, seed: &[(usize, usize, f64)], leak: f64) -> Vec<Vec<(usize, f64)>> {
        let mut p = vec![vec![0.0; n]; n];
        for &(i, j, x) in seed {
            p[i % n][j % n] += x;
        }
        p.iter()
            .enumerate()
            .map(|(i, r)| {
                let s: f64 = r.iter().sum();
                let scale = if s > 0.0 { (1.0 - leak) / s } else { 0.0 };
                (0..n)
                    .filter_map(|j| {
                        let a = if i == j { 1.0 } else { 0.0 } - r[j] * scale;
                        (a != 0.0).then_some((j, a))
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn dense_pivots() {
        let lu = DenseLu::from_rows(&[vec![(1, 1.0)], vec![(0, 2.0), (1, 1.0)]]).unwrap();
        let mut b = vec![3.0, 4.0];
        lu.solve(&mut b);
        assert_eq!(b, vec![0.5, 3.0]);
        let mut c = vec![4.0, 3.0];
        lu.solve_transpose(&mut c);
        assert_eq!(c, vec![1.0, 2.0]);
        assert!(DenseLu::from_rows(&[vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]).is_err());
    }

    #[test]
    fn sparse_budget() {
        let rows = m_matrix(30, &(0..200).map(|k| (k * 7, k * 13 + 1, 1.0)).collect::<Vec<_>>(), 0.1);
        assert!(matches!(SparseLu::factor(rows, 10), Err(ChainError::FillBudget)));
    }

    /// A cycle of `n` states leaking `delta` at state 0 only.
    fn leaky_cycle(n: usize, delta: f64) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
        let rows = (0..n)
            .map(|i| {
                let p = if i == 0 { 1.0 - delta } else { 1.0 };
                vec![(i, 1.0), ((i + 1) % n, -p)]
            })
            .collect();
        let mut leak = vec![0.0; n];
        leak[0] = delta;
        (rows, leak)
    }

    #[test]
    fn nearly_closed_cycle_keeps_relative_accuracy() {
        for &delta in &[1e-8, 1e-14, 1e-20] {
            for n in [2usize, 3, 7] {
                let (rows, leak) = leaky_cycle(n, delta);
                let exact = (1.0 + (1.0 - delta) * (n as f64 - 1.0)) / delta;
                let sparse = SparseLu::factor_m(rows.clone(), leak.clone(), usize::MAX).unwrap();
                let dense = DenseLu::factor_m(&rows, leak).unwrap();
                for f in [&sparse as &dyn Factorization, &dense] {
                    let mut x = vec![1.0; n];
                    f.solve(&mut x);
                    assert!((x[0] - exact).abs() <= 1e-12 * exact, "n {n}, delta {delta}: {} vs {exact}", x[0]);
                }
            }
        }
        let (rows, _) = leaky_cycle(3, 1e-20);
        assert!(DenseLu::from_rows(&rows).is_err() || {
            let mut x = vec![1.0; 3];
            DenseLu::from_rows(&rows).unwrap().solve(&mut x);
            (x[0] - 3e20).abs() > 1e-12 * 3e20
        });
    }

    proptest! {
        #[test]
        fn sparse_and_dense_solve(
            n in 1usize..25,
            seed in prop::collection::vec((0usize..100, 0usize..100, 0.01f64..1.0), 0..80),
            leak in 0.01f64..0.5,
            b in prop::collection::vec(-5.0f64..5.0, 25),
        ) {
            let rows = m_matrix(n, &seed, leak);
            let b = &b[..n];
            let sparse = SparseLu::factor(rows.clone(), usize::MAX).unwrap();
            let dense = DenseLu::from_rows(&rows).unwrap();
            for f in [&sparse as &dyn Factorization, &dense] {
                let mut x = b.to_vec();
                f.solve(&mut x);
                let ax = matvec(&rows, &x);
                for k in 0..n { prop_assert!((ax[k] - b[k]).abs() < 1e-9); }
                let mut y = b.to_vec();
                f.solve_transpose(&mut y);
                let aty = matvec_t(&rows, &y);
                for k in 0..n { prop_assert!((aty[k] - b[k]).abs() < 1e-9); }
            }
        }
    }
}
