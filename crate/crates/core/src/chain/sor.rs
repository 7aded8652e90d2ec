//! Successive over-relaxation for the chain systems.

use super::ChainError;
use crate::sparse::SparseMatrix;

/// SOR parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SorParams {
    pub omega: f64,
    /// Threshold on the sup norm between successive iterates.
    pub tol: f64,
    /// Maximum sweeps per state.
    pub sweeps_per_state: usize,
}

impl Default for SorParams {
    fn default() -> Self {
        SorParams { omega: 1.0, tol: 1e-13, sweeps_per_state: 100 }
    }
}

impl SorParams {
    fn max_sweeps(&self, n: usize) -> usize {
        self.sweeps_per_state.saturating_mul(n.max(1))
    }
}

const STATIONARY_CHECK: f64 = 1e-12;
const BIAS_CHECK: f64 = 1e-10;

fn split_diag(p: &SparseMatrix, i: usize) -> f64 {
    p.row(i).iter().filter(|&(j, _)| j == i).map(|(_, x)| x).sum()
}

/// Solves `x = P x + c` for a block with spectral radius below one.
pub fn transient(p: &SparseMatrix, c: &[f64], params: &SorParams) -> Result<Vec<f64>, ChainError> {
    let n = p.n();
    let diag: Vec<f64> = (0..n).map(|i| 1.0 - split_diag(p, i)).collect();
    let mut x = c.to_vec();
    for _ in 0..params.max_sweeps(n) {
        let mut change = 0.0f64;
        for i in 0..n {
            let mut s = c[i];
            for (j, a) in p.row(i).iter() {
                if j != i {
                    s += a * x[j];
                }
            }
            let new = (1.0 - params.omega) * x[i] + params.omega * s / diag[i];
            change = change.max((new - x[i]).abs());
            x[i] = new;
        }
        if !change.is_finite() {
            break;
        }
        if change <= params.tol {
            return Ok(x);
        }
    }
    Err(ChainError::NotConverged { size: n })
}

/// Stationary distribution of an irreducible stochastic block, given `P^T`.
pub fn stationary(pt: &SparseMatrix, params: &SorParams) -> Result<Vec<f64>, ChainError> {
    let n = pt.n();
    let diag: Vec<f64> = (0..n).map(|i| 1.0 - split_diag(pt, i)).collect();
    let mut pi = vec![1.0 / n as f64; n];
    let mut prev = pi.clone();
    for _ in 0..params.max_sweeps(n) {
        for i in 0..n {
            let mut s = 0.0;
            for (j, a) in pt.row(i).iter() {
                if j != i {
                    s += a * pi[j];
                }
            }
            pi[i] = (1.0 - params.omega) * pi[i] + params.omega * s / diag[i];
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
        let change = pi.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if !change.is_finite() {
            break;
        }
        if change <= params.tol {
            // renormalized SOR can lock onto a spurious eigenvector when it diverges
            let ok = (0..n).all(|i| (pt.row(i).dot(&pi) - pi[i]).abs() <= STATIONARY_CHECK);
            return if ok { Ok(pi) } else { Err(ChainError::NotConverged { size: n }) };
        }
        prev.copy_from_slice(&pi);
    }
    Err(ChainError::NotConverged { size: n })
}

/// Solves `(I - P) v = b` on an irreducible stochastic block with `v_s = 0`,
/// projecting each sweep by `v <- v - v_s`. `b` must be orthogonal to the
/// stationary distribution.
pub fn pinned_bias(p: &SparseMatrix, b: &[f64], s: usize, params: &SorParams) -> Result<Vec<f64>, ChainError> {
    let n = p.n();
    let diag: Vec<f64> = (0..n).map(|i| 1.0 - split_diag(p, i)).collect();
    let mut v = vec![0.0; n];
    let mut prev = v.clone();
    for _ in 0..params.max_sweeps(n) {
        for i in 0..n {
            let mut acc = b[i];
            for (j, a) in p.row(i).iter() {
                if j != i {
                    acc += a * v[j];
                }
            }
            v[i] = (1.0 - params.omega) * v[i] + params.omega * acc / diag[i];
        }
        let shift = v[s];
        v.iter_mut().for_each(|x| *x -= shift);
        let change = v.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if !change.is_finite() {
            break;
        }
        if change <= params.tol {
            let ok = (0..n).all(|i| (v[i] - p.row(i).dot(&v) - b[i]).abs() <= BIAS_CHECK);
            return if ok { Ok(v) } else { Err(ChainError::NotConverged { size: n }) };
        }
        prev.copy_from_slice(&v);
    }
    Err(ChainError::NotConverged { size: n })
}
