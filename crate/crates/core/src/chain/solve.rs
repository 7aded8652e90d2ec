use log::debug;

use super::lu::{DenseLu, Factorization, SparseLu};
use super::{decompose, sor, Backend, ChainError, ClassDecomposition, FinalMethod, LinearOptions, Method};
use crate::sparse::SparseMatrix;

/// Rows of `I - P`, optionally with row and column `skip` removed.
/// Rows of `I - P` without state `skip`, and their sums. `leak` is the mass
/// each row of `P` already loses; the mass sent to `skip` is added to it and
/// each diagonal is recomputed as leak plus off-diagonal mass.
fn i_minus(p: &SparseMatrix, skip: Option<usize>, leak: &[f64]) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let idx = |j: usize| match skip {
        Some(s) if j > s => j - 1,
        _ => j,
    };
    let mut sums = Vec::with_capacity(p.n());
    let rows = (0..p.n())
        .filter(|&i| Some(i) != skip)
        .map(|i| {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(p.row(i).len() + 1);
            let (mut out, mut off) = (leak[i], 0.0);
            for (j, x) in p.row(i).iter() {
                if Some(j) == skip {
                    out += x;
                } else if j != i {
                    off += x;
                    row.push((idx(j), -x));
                }
            }
            row.push((idx(i), out + off));
            sums.push(out);
            row
        })
        .collect();
    (rows, sums)
}

/// `1 - sum_j P_ij`, or zero when the row is stochastic up to rounding.
fn deficit(p: &SparseMatrix, i: usize) -> f64 {
    let d = 1.0 - p.row(i).sum();
    if d > 1e-14 {
        d
    } else {
        0.0
    }
}

/// Mass leaving `states` from each of its rows.
fn block_leak(p: &SparseMatrix, states: &[usize], inside: impl Fn(usize) -> bool) -> Vec<f64> {
    states.iter().map(|&i| deficit(p, i) + p.row(i).iter().filter(|&(j, _)| !inside(j)).map(|(_, a)| a).sum::<f64>()).collect()
}

/// Iterative refinement steps after each direct solve.
const REFINE_STEPS: usize = 2;

/// A factorization together with its matrix, refining every solve.
struct Refined {
    rows: Vec<Vec<(usize, f64)>>,
    inner: Box<dyn Factorization>,
}

impl Refined {
    /// `rhs - A x` with compensated products and sums, so the residual keeps
    /// its digits when `A x` nearly cancels `rhs`.
    fn residual(&self, rhs: &[f64], x: &[f64], transpose: bool) -> Vec<f64> {
        let mut sum = rhs.to_vec();
        let mut comp = vec![0.0; rhs.len()];
        let mut add = |k: usize, a: f64, y: f64| {
            let p = -a * y;
            let e = (-a).mul_add(y, -p);
            let t = sum[k] + p;
            let z = t - sum[k];
            comp[k] += (sum[k] - (t - z)) + (p - z) + e;
            sum[k] = t;
        };
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                if transpose {
                    add(j, a, x[i]);
                } else {
                    add(i, a, x[j]);
                }
            }
        }
        sum.iter().zip(&comp).map(|(s, c)| s + c).collect()
    }

    /// Solves, then applies corrections while they reduce the residual. On
    /// badly conditioned blocks a correction can amplify rounding instead.
    fn refine(&self, b: &mut [f64], transpose: bool) {
        let rhs = b.to_vec();
        let solve = |x: &mut [f64]| if transpose { self.inner.solve_transpose(x) } else { self.inner.solve(x) };
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        solve(b);
        let mut res = self.residual(&rhs, b, transpose);
        for _ in 0..REFINE_STEPS {
            let before = norm(&res);
            if before == 0.0 {
                break;
            }
            let mut d = res;
            solve(&mut d);
            let next: Vec<f64> = b.iter().zip(&d).map(|(x, d)| x + d).collect();
            res = self.residual(&rhs, &next, transpose);
            if !(norm(&res) < before) {
                break;
            }
            b.copy_from_slice(&next);
        }
    }
}

impl Factorization for Refined {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn solve(&self, b: &mut [f64]) {
        self.refine(b, false);
    }

    fn solve_transpose(&self, b: &mut [f64]) {
        self.refine(b, true);
    }
}

fn factor((rows, leak): (Vec<Vec<(usize, f64)>>, Vec<f64>), opts: &LinearOptions) -> Result<Box<dyn Factorization>, ChainError> {
    let inner: Box<dyn Factorization> = if rows.len() <= opts.dense_limit {
        Box::new(DenseLu::factor_m(&rows, leak)?)
    } else {
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let budget = opts.fill_factor.saturating_mul(nnz).max(200_000);
        Box::new(SparseLu::factor_m(rows.clone(), leak, budget)?)
    };
    Ok(Box::new(Refined { rows, inner }))
}

/// Stationary distribution of an irreducible stochastic matrix.
pub fn stationary(p: &SparseMatrix, method: Method, opts: &LinearOptions) -> Result<Vec<f64>, ChainError> {
    let m = p.n();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    if method == Method::Sor {
        return sor::stationary(&p.transpose(), &opts.sor);
    }
    let f = factor(i_minus(p, Some(0), &vec![0.0; m]), opts)?;
    stationary_from(p, f.as_ref())
}

/// `pi` from a factorization of `(I - P)` without row and column 0.
fn stationary_from(p: &SparseMatrix, f: &dyn Factorization) -> Result<Vec<f64>, ChainError> {
    let m = p.n();
    let mut x = vec![0.0; m - 1];
    for (j, a) in p.row(0).iter() {
        if j != 0 {
            x[j - 1] += a;
        }
    }
    f.solve_transpose(&mut x);
    let mut pi = Vec::with_capacity(m);
    pi.push(1.0);
    pi.extend_from_slice(&x);
    let total: f64 = pi.iter().sum();
    if !(total.is_finite() && total > 0.0) || pi.iter().any(|&x| x < -1e-9) {
        return Err(ChainError::Singular { size: m });
    }
    pi.iter_mut().for_each(|x| *x = x.max(0.0) / total);
    Ok(pi)
}

/// Solves `x = P x + c` where no class of `P` is closed.
pub fn solve_transient(p: &SparseMatrix, c: &[f64], method: Method, opts: &LinearOptions) -> Result<Vec<f64>, ChainError> {
    match method {
        Method::Sor => sor::transient(p, c, &opts.sor),
        Method::Direct => {
            let mut x = c.to_vec();
            let leak: Vec<f64> = (0..p.n()).map(|i| deficit(p, i)).collect();
            factor(i_minus(p, None, &leak), opts)?.solve(&mut x);
            if x.iter().all(|v| v.is_finite()) {
                Ok(x)
            } else {
                Err(ChainError::NotTransient { size: p.n() })
            }
        }
    }
}

/// Solves `x = P x + c` on one transient class whose rows lose `leak`.
fn transient_block(p: &SparseMatrix, leak: &[f64], rhs: &[Vec<f64>], opts: &LinearOptions) -> Result<Vec<Vec<f64>>, ChainError> {
    let fac = if p.n() <= opts.dense_limit { factor(i_minus(p, None, leak), opts).map(Some) } else {
        match factor(i_minus(p, None, leak), opts) {
            Ok(f) => Ok(Some(f)),
            Err(ChainError::FillBudget) => {
                debug!("fill budget exceeded on transient block of size {}, using SOR", p.n());
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }?;
    let mut out = Vec::with_capacity(rhs.len());
    for c in rhs {
        let x = match &fac {
            Some(f) => {
                let mut x = c.clone();
                f.solve(&mut x);
                x
            }
            None => sor::transient(p, c, &opts.sor)?,
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(ChainError::NotTransient { size: p.n() });
        }
        out.push(x);
    }
    Ok(out)
}

/// The rows of `states` restricted to `states`, with any lost mass put back on
/// the diagonal.
fn closed_submatrix(p: &SparseMatrix, states: &[usize]) -> SparseMatrix {
    let local = p.submatrix(states);
    SparseMatrix::from_rows(states.iter().enumerate().map(|(k, &i)| {
        let lost = p.row(i).sum() - local.row(k).sum();
        let mut row: Vec<(usize, f64)> = local.row(k).iter().collect();
        match row.iter_mut().find(|e| e.0 == k) {
            Some(e) => e.1 += lost,
            None if lost > 0.0 => row.push((k, lost)),
            None => {}
        }
        row.sort_by_key(|e| e.0);
        row
    }))
}

/// Mean payoff and pinned bias on one final class (local indices).
fn solve_final(p: &SparseMatrix, r: &[f64], s: usize, opts: &LinearOptions) -> Result<(f64, Vec<f64>), ChainError> {
    let m = p.n();
    if m == 1 {
        return Ok((r[0], vec![0.0]));
    }
    let method = match opts.final_method {
        FinalMethod::Auto if m > opts.dense_limit => FinalMethod::Stationary,
        FinalMethod::Auto => FinalMethod::Bordered,
        other => other,
    };
    let use_sor = opts.backend == Backend::Sor && m > opts.dense_limit;

    if method == FinalMethod::Bordered && m <= opts.dense_limit {
        // (I - P) with column s replaced by ones: unknowns v_{-s} and eta
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = 1.0;
            for (j, x) in p.row(i).iter() {
                a[i * m + j] -= x;
            }
            a[i * m + s] = 1.0;
        }
        let lu = DenseLu::factor(a, m)?;
        let mut z = r.to_vec();
        lu.solve(&mut z);
        let eta = z[s];
        z[s] = 0.0;
        return Ok((eta, z));
    }

    let mut fac: Option<Box<dyn Factorization>> = None;
    let direct = |fac: &mut Option<Box<dyn Factorization>>| -> Result<(), ChainError> {
        if fac.is_none() {
            *fac = Some(factor(i_minus(p, Some(s), &vec![0.0; m]), opts)?);
        }
        Ok(())
    };
    let drop_s = |x: &[f64]| -> Vec<f64> { x.iter().enumerate().filter(|&(k, _)| k != s).map(|(_, &v)| v).collect() };
    let insert_s = |x: Vec<f64>| -> Vec<f64> {
        let mut v = x;
        v.insert(s, 0.0);
        v
    };

    if method == FinalMethod::Bordered {
        direct(&mut fac)?;
        let f = fac.as_ref().expect("factorization");
        let mut x = drop_s(r);
        f.solve(&mut x);
        let mut y = vec![1.0; m - 1];
        f.solve(&mut y);
        let (mut px, mut py) = (0.0, 0.0);
        for (j, a) in p.row(s).iter() {
            if j != s {
                let k = if j > s { j - 1 } else { j };
                px += a * x[k];
                py += a * y[k];
            }
        }
        let eta = (r[s] + px) / (1.0 + py);
        let v = x.iter().zip(&y).map(|(x, y)| x - eta * y).collect();
        return Ok((eta, insert_s(v)));
    }

    let pi = if use_sor {
        match sor::stationary(&p.transpose(), &opts.sor) {
            Ok(pi) => pi,
            Err(e) => {
                debug!("{e}; falling back to a direct stationary solve");
                direct(&mut fac)?;
                stationary_pinned(p, s, fac.as_deref().expect("factorization"))?
            }
        }
    } else {
        direct(&mut fac)?;
        stationary_pinned(p, s, fac.as_deref().expect("factorization"))?
    };
    let eta: f64 = pi.iter().zip(r).map(|(a, b)| a * b).sum();
    let b: Vec<f64> = r.iter().map(|x| x - eta).collect();
    if use_sor && fac.is_none() {
        match sor::pinned_bias(p, &b, s, &opts.sor) {
            Ok(v) => return Ok((eta, v)),
            Err(e) => debug!("{e}; falling back to a direct bias solve"),
        }
    }
    direct(&mut fac)?;
    let mut x = drop_s(&b);
    fac.as_ref().expect("factorization").solve(&mut x);
    Ok((eta, insert_s(x)))
}

/// Stationary distribution from a factorization of `(I - P)` without row and column `s`.
fn stationary_pinned(p: &SparseMatrix, s: usize, f: &dyn Factorization) -> Result<Vec<f64>, ChainError> {
    if s == 0 {
        return stationary_from(p, f);
    }
    let m = p.n();
    let mut x = vec![0.0; m - 1];
    for (j, a) in p.row(s).iter() {
        if j != s {
            x[if j > s { j - 1 } else { j }] += a;
        }
    }
    f.solve_transpose(&mut x);
    x.insert(s, 1.0);
    let total: f64 = x.iter().sum();
    if !(total.is_finite() && total > 0.0) || x.iter().any(|&v| v < -1e-9) {
        return Err(ChainError::Singular { size: m });
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0) / total);
    Ok(x)
}

/// Solves `eta = P eta`, `eta + v = P v + r`, `v_S = 0` for a stochastic `P`.
pub fn solve_eta_v(p: &SparseMatrix, r: &[f64], pins: &[usize], opts: &LinearOptions) -> Result<(Vec<f64>, Vec<f64>), ChainError> {
    solve_eta_v_with(p, r, &decompose(p), pins, opts)
}

fn check_pins(d: &ClassDecomposition, pins: &[usize]) -> Result<Vec<usize>, ChainError> {
    let mut pin_of = vec![usize::MAX; d.classes.len()];
    for &s in pins {
        let c = *d.class_of.get(s).ok_or_else(|| ChainError::InvalidPins(format!("state {s} out of range")))?;
        if !d.is_final[c] {
            return Err(ChainError::InvalidPins(format!("state {s} is not in a final class")));
        }
        if pin_of[c] != usize::MAX {
            return Err(ChainError::InvalidPins(format!("two pins in the class of state {s}")));
        }
        pin_of[c] = s;
    }
    if let Some(c) = (0..d.classes.len()).find(|&c| d.is_final[c] && pin_of[c] == usize::MAX) {
        return Err(ChainError::InvalidPins(format!("final class of state {} has no pin", d.classes[c][0])));
    }
    Ok(pin_of)
}

/// As [`solve_eta_v`], reusing a decomposition of `p`.
pub fn solve_eta_v_with(
    p: &SparseMatrix,
    r: &[f64],
    d: &ClassDecomposition,
    pins: &[usize],
    opts: &LinearOptions,
) -> Result<(Vec<f64>, Vec<f64>), ChainError> {
    let pin_of = check_pins(d, pins)?;
    let n = p.n();
    let mut eta = vec![0.0; n];
    let mut v = vec![0.0; n];
    for (c, states) in d.classes.iter().enumerate().rev() {
        let as_final = |s: usize, eta: &mut [f64], v: &mut [f64]| -> Result<(), ChainError> {
            let rl: Vec<f64> = states.iter().map(|&i| r[i]).collect();
            let (e, vl) = solve_final(&closed_submatrix(p, states), &rl, s, opts)?;
            for (k, &i) in states.iter().enumerate() {
                eta[i] = e;
                v[i] = vl[k];
            }
            Ok(())
        };
        if d.is_final[c] {
            as_final(states.binary_search(&pin_of[c]).expect("pin inside class"), &mut eta, &mut v)?;
            continue;
        }
        if let [i] = states[..] {
            let (mut pe, mut pv, mut diag) = (0.0, 0.0, 0.0);
            for (j, x) in p.row(i).iter() {
                if j == i {
                    diag += x;
                } else {
                    pe += x * eta[j];
                    pv += x * v[j];
                }
            }
            let e = pe / (1.0 - diag);
            eta[i] = e;
            v[i] = (pv + r[i] - e) / (1.0 - diag);
            continue;
        }
        let local = p.submatrix(states);
        let outside = |x: &[f64], i: usize| -> f64 {
            p.row(i).iter().filter(|&(j, _)| d.class_of[j] != c).map(|(j, a)| a * x[j]).sum()
        };
        let ce: Vec<f64> = states.iter().map(|&i| outside(&eta, i)).collect();
        let cv0: Vec<f64> = states.iter().map(|&i| outside(&v, i) + r[i]).collect();
        let leak = block_leak(p, states, |j| d.class_of[j] == c);
        let fac_rhs = match transient_block(&local, &leak, &[ce], opts) {
            Err(ChainError::Singular { size }) => {
                debug!("transient class of size {size} is numerically closed, solving it as final");
                as_final(0, &mut eta, &mut v)?;
                continue;
            }
            other => other?,
        };
        let el = &fac_rhs[0];
        let cv: Vec<f64> = cv0.iter().zip(el).map(|(a, b)| a - b).collect();
        let vl = transient_block(&local, &leak, &[cv], opts)?;
        for (k, &i) in states.iter().enumerate() {
            eta[i] = el[k];
            v[i] = vl[0][k];
        }
    }
    Ok((eta, v))
}

/// Solves `x = P x + r` for a substochastic `P` without closed classes.
pub fn solve_substochastic(p: &SparseMatrix, r: &[f64], opts: &LinearOptions) -> Result<Vec<f64>, ChainError> {
    let d = decompose(p);
    let mut x = vec![0.0; p.n()];
    for (c, states) in d.classes.iter().enumerate().rev() {
        if d.is_final[c] {
            return Err(ChainError::NotTransient { size: states.len() });
        }
        if let [i] = states[..] {
            let (mut acc, mut diag) = (r[i], 0.0);
            for (j, a) in p.row(i).iter() {
                if j == i {
                    diag += a;
                } else {
                    acc += a * x[j];
                }
            }
            x[i] = acc / (1.0 - diag);
            continue;
        }
        let local = p.submatrix(states);
        let rhs: Vec<f64> = states
            .iter()
            .map(|&i| r[i] + p.row(i).iter().filter(|&(j, _)| d.class_of[j] != c).map(|(j, a)| a * x[j]).sum::<f64>())
            .collect();
        let y = transient_block(&local, &block_leak(p, states, |j| d.class_of[j] == c), &[rhs], opts)?;
        for (k, &i) in states.iter().enumerate() {
            x[i] = y[0][k];
        }
    }
    Ok(x)
}

/// Mean payoff of the chain `(P, r)`.
pub fn mean_payoff_fixed_pair(p: &SparseMatrix, r: &[f64], opts: &LinearOptions) -> Result<Vec<f64>, ChainError> {
    let d = decompose(p);
    let n = p.n();
    let mut eta = vec![0.0; n];
    for (c, states) in d.classes.iter().enumerate().rev() {
        if d.is_final[c] {
            let local = p.submatrix(states);
            let pi = if opts.backend == Backend::Sor && states.len() > opts.dense_limit {
                stationary(&local, Method::Sor, opts).or_else(|e| {
                    debug!("{e}; falling back to a direct stationary solve");
                    stationary(&local, Method::Direct, opts)
                })?
            } else {
                stationary(&local, Method::Direct, opts)?
            };
            let e: f64 = pi.iter().zip(states).map(|(a, &i)| a * r[i]).sum();
            states.iter().for_each(|&i| eta[i] = e);
        } else {
            let local = p.submatrix(states);
            let c_out: Vec<f64> = states
                .iter()
                .map(|&i| p.row(i).iter().filter(|&(j, _)| d.class_of[j] != c).map(|(j, a)| a * eta[j]).sum())
                .collect();
            let x = transient_block(&local, &block_leak(p, states, |j| d.class_of[j] == c), &[c_out], opts)?;
            for (k, &i) in states.iter().enumerate() {
                eta[i] = x[0][k];
            }
        }
    }
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residuals(p: &SparseMatrix, r: &[f64], eta: &[f64], v: &[f64]) -> (f64, f64) {
        let pe = p.mul_vec(eta);
        let pv = p.mul_vec(v);
        let mut a = 0.0f64;
        let mut b = 0.0f64;
        for i in 0..p.n() {
            a = a.max((eta[i] - pe[i]).abs());
            b = b.max((eta[i] + v[i] - pv[i] - r[i]).abs());
        }
        (a, b)
    }

    fn all_options() -> Vec<LinearOptions> {
        let mut out = Vec::new();
        for backend in [Backend::Lu, Backend::Sor] {
            for final_method in [FinalMethod::Auto, FinalMethod::Stationary, FinalMethod::Bordered] {
                for dense_limit in [0, 64] {
                    out.push(LinearOptions { backend, final_method, dense_limit, ..Default::default() });
                }
            }
        }
        out
    }

    #[test]
    fn identity_chain() {
        let (eta, v) = solve_eta_v(&SparseMatrix::identity(2), &[1.0, 2.0], &[0, 1], &LinearOptions::default()).unwrap();
        assert_eq!(eta, vec![1.0, 2.0]);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn two_cycle() {
        let p = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        for opts in all_options() {
            let (eta, v) = solve_eta_v(&p, &[0.0, 2.0], &[0], &opts).unwrap();
            assert!((eta[0] - 1.0).abs() < 1e-12 && (eta[1] - 1.0).abs() < 1e-12);
            assert_eq!(v[0], 0.0);
            assert!((v[1] - 1.0).abs() < 1e-12, "{opts:?} {v:?}");
        }
    }

    #[test]
    fn bad_pins() {
        let p = SparseMatrix::from_dense(&[vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert!(solve_eta_v(&p, &[0.0, 0.0], &[0], &LinearOptions::default()).is_err());
        assert!(solve_eta_v(&p, &[0.0, 0.0], &[], &LinearOptions::default()).is_err());
        assert!(solve_eta_v(&p, &[0.0, 0.0], &[1, 1], &LinearOptions::default()).is_err());
        assert!(solve_eta_v(&p, &[0.0, 0.0], &[1], &LinearOptions::default()).is_ok());
    }

    #[test]
    fn stationary_small() {
        let opts = LinearOptions::default();
        assert_eq!(stationary(&SparseMatrix::identity(1), Method::Direct, &opts).unwrap(), vec![1.0]);
        let p = SparseMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        for m in [Method::Direct, Method::Sor] {
            let pi = stationary(&p, m, &opts).unwrap();
            assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn transient_small() {
        let opts = LinearOptions::default();
        let zero = SparseMatrix::from_rows(vec![Vec::<(usize, f64)>::new(); 2]);
        assert_eq!(solve_transient(&zero, &[3.0, -1.0], Method::Direct, &opts).unwrap(), vec![3.0, -1.0]);
        let half = SparseMatrix::from_dense(&[vec![0.5]]);
        for m in [Method::Direct, Method::Sor] {
            assert!((solve_transient(&half, &[1.0], m, &opts).unwrap()[0] - 2.0).abs() < 1e-12);
        }
    }

    /// Random stochastic matrix with a few closed groups and transient states feeding them.
    fn random_chain(n: usize, entries: &[(usize, usize, f64)]) -> SparseMatrix {
        let mut a = vec![vec![0.0; n]; n];
        for &(i, j, x) in entries {
            let (i, j) = (i % n, j % n);
            // states below n/2 only reach states below n/2 in their group of four
            let j = if i < n / 2 { (i / 4) * 4 + j % 4 } else { j };
            a[i][j.min(n - 1)] += x;
        }
        for (i, row) in a.iter_mut().enumerate() {
            let s: f64 = row.iter().sum();
            if s == 0.0 {
                row[i] = 1.0;
            } else {
                row.iter_mut().for_each(|x| *x /= s);
            }
        }
        SparseMatrix::from_dense(&a)
    }

    proptest! {
        #[test]
        fn methods_agree(
            n in 1usize..40,
            entries in prop::collection::vec((0usize..200, 0usize..200, 0.05f64..1.0), 0..160),
            r in prop::collection::vec(-3.0f64..3.0, 40),
        ) {
            let p = random_chain(n, &entries);
            let r = &r[..n];
            let d = decompose(&p);
            let pins = d.min_pins();
            let mut first: Option<(Vec<f64>, Vec<f64>)> = None;
            for opts in all_options() {
                let (eta, v) = solve_eta_v_with(&p, r, &d, &pins, &opts).unwrap();
                let (a, b) = residuals(&p, r, &eta, &v);
                prop_assert!(a <= 1e-10 && b <= 1e-10, "{:?} residuals {} {}", opts, a, b);
                for &s in &pins { prop_assert_eq!(v[s], 0.0); }
                let mp = mean_payoff_fixed_pair(&p, r, &opts).unwrap();
                for i in 0..n { prop_assert!((mp[i] - eta[i]).abs() <= 1e-9); }
                match &first {
                    None => first = Some((eta, v)),
                    Some((e0, v0)) => for i in 0..n {
                        prop_assert!((e0[i] - eta[i]).abs() <= 1e-8 && (v0[i] - v[i]).abs() <= 1e-8);
                    }
                }
            }
        }

        #[test]
        fn kernel_has_one_dimension_per_final_class(
            n in 2usize..30,
            entries in prop::collection::vec((0usize..200, 0usize..200, 0.05f64..1.0), 0..120),
            r in prop::collection::vec(-3.0f64..3.0, 30),
        ) {
            let p = random_chain(n, &entries);
            let r = &r[..n];
            let opts = LinearOptions::default();
            let d = decompose(&p);
            let (eta, v) = solve_eta_v_with(&p, r, &d, &d.min_pins(), &opts).unwrap();
            // shifting one final class and propagating through the transient part stays a solution
            let cls = d.final_classes().next().unwrap().clone();
            let mut w = v.clone();
            for &i in &cls { w[i] += 1.0; }
            for (c, states) in d.classes.iter().enumerate().rev() {
                if d.is_final[c] { continue; }
                let local = p.submatrix(states);
                let rhs: Vec<f64> = states.iter().map(|&i| {
                    p.row(i).iter().filter(|&(j, _)| d.class_of[j] != c).map(|(j, a)| a * w[j]).sum::<f64>() + r[i] - eta[i]
                }).collect();
                let x = solve_transient(&local, &rhs, Method::Direct, &opts).unwrap();
                for (k, &i) in states.iter().enumerate() { w[i] = x[k]; }
            }
            let (a, b) = residuals(&p, r, &eta, &w);
            prop_assert!(a <= 1e-10 && b <= 1e-10);
        }
    }
}
