use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest deck for which a dense matrix is materialized.
pub const DENSE_LIMIT: usize = 4096;

/// Nonzero entries `(column, probability)` of row `i` of the renewal matrix.
///
/// Row 0 is uniform. Row `i >= 1` moves to state 1 with probability `1/n`
/// and to state `i + 1 (mod n)` otherwise.
pub fn renewal_row(n: usize, i: usize) -> Result<Vec<(usize, f64)>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("renewal chain needs n >= 2, got {n}")));
    }
    if i >= n {
        return Err(Error::LocationOutOfRange { location: i, n });
    }
    let p = 1.0 / n as f64;
    if i == 0 {
        return Ok((0..n).map(|j| (j, p)).collect());
    }
    let next = (i + 1) % n;
    let mut row = vec![(1, p), (next, 1.0 - p)];
    row.sort_by_key(|&(j, _)| j);
    Ok(row)
}

/// The renewal matrix of one card, represented by its size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenewalMatrix {
    n: usize,
}

impl RenewalMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("renewal chain needs n >= 2, got {n}")));
        }
        Ok(RenewalMatrix { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        renewal_row(self.n, i)
    }

    pub fn dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "dense view limited to n <= {DENSE_LIMIT}"
            )));
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, p) in self.row(i)? {
                m[(i, j)] += p;
            }
        }
        Ok(m)
    }

    /// Right action `(M f)_i = sum_j M_ij f_j`, in O(n).
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(f.len(), n);
        let p = 1.0 / n as f64;
        let q = 1.0 - p;
        let mean = kahan_sum(f.iter().copied()) * p;
        let mut out = Vec::with_capacity(n);
        out.push(mean);
        for i in 1..n {
            out.push(f[1] * p + f[(i + 1) % n] * q);
        }
        out
    }

    /// Left action `(p M)_j`, i.e. one step of a distribution over states.
    pub fn step_distribution(&self, dist: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(dist.len(), n);
        let p = 1.0 / n as f64;
        let q = 1.0 - p;
        let mut out = vec![dist[0] * p; n];
        for (i, &mass) in dist.iter().enumerate().skip(1) {
            out[1] += mass * p;
            out[(i + 1) % n] += mass * q;
        }
        out
    }

    /// All eigenvalues from a dense eigensolve. Used as an oracle for small n.
    pub fn dense_eigenvalues(&self) -> Result<Vec<Complex64>> {
        let m = self.dense()?;
        Ok(m.complex_eigenvalues().iter().copied().collect())
    }
}

pub(crate) fn kahan_sum<I: IntoIterator<Item = Complex64>>(it: I) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for x in it {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rows_for_n4() {
        assert_eq!(
            renewal_row(4, 0).unwrap(),
            vec![(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]
        );
        assert_eq!(renewal_row(4, 2).unwrap(), vec![(1, 0.25), (3, 0.75)]);
        assert_eq!(renewal_row(4, 3).unwrap(), vec![(0, 0.75), (1, 0.25)]);
        assert!(renewal_row(4, 4).is_err());
    }

    #[test]
    fn doubly_stochastic() {
        for n in [2, 3, 5, 17, 64] {
            let m = RenewalMatrix::new(n).unwrap().dense().unwrap();
            for i in 0..n {
                assert_abs_diff_eq!(m.row(i).sum(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(m.column(i).sum(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sparse_actions_match_dense() {
        let n = 9;
        let rm = RenewalMatrix::new(n).unwrap();
        let m = rm.dense().unwrap();
        let f: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64, (k * k) as f64 * 0.1)).collect();
        let got = rm.apply(&f);
        for i in 0..n {
            let want: Complex64 = (0..n).map(|j| f[j] * m[(i, j)]).sum();
            assert_abs_diff_eq!((got[i] - want).norm(), 0.0, epsilon = 1e-12);
        }
        let p: Vec<f64> = (0..n).map(|k| (k + 1) as f64 / 45.0).collect();
        let got = rm.step_distribution(&p);
        for j in 0..n {
            let want: f64 = (0..n).map(|i| p[i] * m[(i, j)]).sum();
            assert_abs_diff_eq!(got[j], want, epsilon = 1e-14);
        }
    }
}
